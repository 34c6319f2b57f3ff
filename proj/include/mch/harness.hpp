#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mch/cells.hpp"
#include "mch/config.hpp"
#include "mch/effective.hpp"
#include "mch/fem.hpp"
#include "mch/fields.hpp"
#include "mch/grid.hpp"
#include "mch/macro.hpp"

namespace mch {

enum class FieldType { Layered, Circular, Uniform };

/// Macro load: per-block constants g_i(K)·∫Q, or ∫_K g φ_i Q per corner.
enum class MacroSource { BlockConstant, Projected };
/// Initial C_i: node average of block-continuum averages, or the γ̂-mass projection.
enum class MacroInitial { Averaged, Projected };

struct ExperimentConfig {
  std::string name = "experiment";
  FieldType field = FieldType::Layered;
  double kappa_low = 1e-4;
  double kappa_high = 1.0;
  double diffusion_low = 1e-4;
  double diffusion_high = 1.0;
  double porosity = 1.0;
  std::vector<Interval> stripes;
  std::vector<Disk> disks;
  BoundaryCase bc;
  int fine_cells = 200;
  int blocks = 20;
  int layers = -1;  // -1: layers_for(H)
  RegionBoundary regions = RegionBoundary::Mirrored;
  double tau = 0.001;
  double t_end = 2.0;
  std::vector<double> output_times{0.02, 0.1, 0.5, 1.0, 2.0};
  SourceSpec g{1.0, {0.5, 0.5}, 40.0};
  SourceSpec h{0.1, {0.5, 0.5}, 40.0};
  bool initial_zero = false;
  SourceSpec initial{1.0, {0.5, 0.5}, 40.0};
  MacroSource source_mode = MacroSource::Projected;
  MacroInitial initial_mode = MacroInitial::Projected;
  bool paper_scale = false;
  std::string canonical;  // canonical text of the source config

  [[nodiscard]] int effective_layers() const;
  [[nodiscard]] std::uint64_t hash() const;
};

ExperimentConfig parse_experiment(const Config& cfg);
ExperimentConfig load_experiment(const std::filesystem::path& file);

/// Grids, coefficient fields and sampled sources of one configuration.
struct Problem {
  CoarseGrid coarse;
  FineGrid fine;
  ContinuumMap continua;
  CellField kappa;
  CellField diffusion;
  CellField porosity;
  std::vector<double> g;   // per fine cell
  std::vector<double> h;   // per fine cell
  std::vector<double> c0;  // per fine node
  int layers = 0;
};

Problem build_problem(const ExperimentConfig& cfg);

struct FineReference {
  std::vector<double> pressure;
  std::vector<double> times;
  std::vector<std::vector<double>> snapshots;  // fine nodal c per output time
  double seconds = 0.0;
};

FineReference compute_fine_reference(const ExperimentConfig& cfg, const Problem& problem);

struct RunOptions {
  int threads = 1;
  std::optional<std::filesystem::path> cache;
  bool fine = true;       // compute the fine reference and errors
  bool transport = true;  // false stops after the effective flow tensors
  bool macro_transport = true;  // false stops after the transport tensors
  bool paper_scale = false;
  std::function<void(const std::string&)> log;
};

struct ErrorReport {
  std::vector<double> times;
  std::vector<std::vector<double>> errors;  // [time][continuum]
  std::uint64_t config_hash = 0;
  std::map<std::string, double> seconds;
};

struct ExperimentResult {
  ExperimentConfig config;
  Problem problem;
  std::optional<FineReference> fine;
  std::vector<CellBasisSet> sets;
  std::vector<FlowEffective> flow_raw;
  std::vector<FlowEffective> flow_hat;
  std::vector<TransportEffective> transport_raw;
  std::vector<TransportEffective> transport_hat;
  std::vector<CombinedTransport> combined;
  std::vector<double> g_blocks;  // [block·N + i]
  std::vector<double> h_blocks;
  MacroState state;
  std::vector<double> times;
  std::vector<std::vector<double>> macro_c;  // coarse C per output time
  std::vector<std::vector<double>> center_of_mass;  // [time][continuum]
  ErrorReport report;
  std::array<double, 4> max_residual{};  // per BasisFamily over all blocks
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts,
                                const FineReference* reference = nullptr);

/// e^{(i)} for every continuum: block averages of the coarse interpolant of C_i
/// against fine block-continuum averages.
std::vector<double> relative_errors(const CoarseGrid& coarse, const ContinuumMap& continua,
                                    std::span<const double> macro_c, std::span<const double> fine_c);

struct RefinementRow {
  double t = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> ratio;  // b / a
};

/// Throws unless the configs differ only in blocks and layers.
void check_refinement_pair(const ExperimentConfig& a, const ExperimentConfig& b);
std::vector<RefinementRow> compare_refinement(const ErrorReport& a, const ErrorReport& b);

/// Error CSV, snapshot grids, tensor CSV and manifest.
void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir);
void write_error_csv(const ErrorReport& report, const std::filesystem::path& file);
void write_tensors_csv(const ExperimentResult& r, const std::filesystem::path& file);
void write_grid(const std::filesystem::path& file, int nx, int ny, double t, const std::string& name,
                std::span<const double> values);
void write_manifest(const std::filesystem::path& dir, const ExperimentResult& r);
ErrorReport read_error_csv(const std::filesystem::path& file);

/// Runs fn(0..n-1) on up to `threads` workers; results must go to disjoint slots.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

std::string format_double(double v);
std::string hex64(std::uint64_t v);
std::uint64_t file_hash(const std::filesystem::path& file);

}  // namespace mch

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mch/fields.hpp"
#include "mch/grid.hpp"
#include "mch/linalg.hpp"

namespace mch {

/// Averaging functionals of one oversampled region: row k·N + j maps a
/// nodal vector w to ∫_{R^k} w ψ_j, computed as h²/4 per touching cell.
struct ConstraintSet {
  OversampleRegion region;
  int continua = 1;
  std::vector<int> label;         // continuum of each local cell
  SparseMatrix rows;              // (members·N) × region nodes
  std::vector<double> area;       // ∫_{R^k} ψ_j, index k·N + j
  std::vector<double> moment;     // ∫_{R^k} x_m ψ_j, index (k·N + j)·2 + m
  std::vector<double> shift;      // x̃_m of continuum j on the central block, index j·2 + m

  [[nodiscard]] int member_count() const { return static_cast<int>(region.member_blocks.size()); }
  [[nodiscard]] double average_target(int i, int k, int j) const;
  [[nodiscard]] double gradient_target(int i, int m, int k, int j) const;
};

ConstraintSet build_constraints(const CoarseGrid& coarse, const ContinuumMap& continua, BlockId block, int layers,
                                RegionBoundary boundary = RegionBoundary::Mirrored);

/// ψ_j-weighted centroid coordinate m of the central block of `region`.
double centroid_shift(const OversampleRegion& region, const ContinuumMap& continua, int j, int m);

/// Values of a global cell field on the local cells of the region.
std::vector<double> restrict_cells(const OversampleRegion& region, std::span<const double> global);

/// Basis vectors on all region nodes: average[i], gradient[i·2 + m].
struct RegionBasis {
  std::vector<std::vector<double>> average;
  std::vector<std::vector<double>> gradient;
  std::vector<std::vector<double>> average_dual;   // multipliers per constraint row
  std::vector<std::vector<double>> gradient_dual;
};

/// KKT system [A Bᵀ; B 0] of one region, factorized once and solved for the
/// N average and 2N gradient targets.
class ConstrainedCellSolver {
 public:
  ConstrainedCellSolver(const ConstraintSet& cs, const SparseMatrix& op);
  [[nodiscard]] RegionBasis solve() const;
  [[nodiscard]] double rcond_estimate() const { return lu_.rcond_estimate(); }

 private:
  const ConstraintSet* cs_;
  double row_scale_;
  LuFactorization lu_;
};

/// Average basis φ_i^p on the region (natural boundary on its outer edge).
RegionBasis solve_flow_cells(const ConstraintSet& cs, std::span<const double> kappa_local);

/// u_ω = −κ∇(Σ_s φ_s^p P_s + Σ_{s,l} φ_s^{l,p} ∇_l P_s) at every quadrature point,
/// indexed [cell·4 + q].
std::vector<Vec2> local_darcy_velocity(const RectMesh& mesh, const RegionBasis& flow, std::span<const double> p_vals,
                                       std::span<const Vec2> grad_p_vals, std::span<const double> kappa_local);

/// Transport bases with the operator A_D + C(u_ω).
RegionBasis solve_transport_cells(const ConstraintSet& cs, std::span<const double> diffusion_local,
                                  std::span<const Vec2> velocity);

enum class BasisFamily { FlowAverage, FlowGradient, TransportAverage, TransportGradient };

/// Largest constraint violation over all (k, j) rows and all bases of a family,
/// relative to ∫_{R^k}ψ_j (average) or H·∫_{R^k}ψ_j (gradient). Integrals are
/// evaluated by Gauss quadrature of the Q1 interpolant, independently of `rows`.
double constraint_residual(const ConstraintSet& cs, const std::vector<std::vector<double>>& basis, bool gradient,
                           double H);

/// The four basis families of one block restricted to its central RVE.
struct CellBasisSet {
  BlockId block = 0;
  int continua = 1;
  RectMesh mesh;  // fine mesh of the central block
  std::vector<std::vector<double>> flow_average;        // [i]
  std::vector<std::vector<double>> flow_gradient;       // [i·2 + m]
  std::vector<std::vector<double>> transport_average;
  std::vector<std::vector<double>> transport_gradient;
  std::vector<double> shift;                            // [j·2 + m]
  std::vector<double> flow_dual;                        // average multipliers, [i·rows + r]
  std::array<double, 4> residual{};                     // per BasisFamily
};

/// Copies region-wide vectors onto the central-block nodes.
std::vector<std::vector<double>> restrict_to_central(const OversampleRegion& region,
                                                     const std::vector<std::vector<double>>& v);

/// Inputs shared by every block of one run.
struct CellInputs {
  const CoarseGrid& coarse;
  const ContinuumMap& continua;
  const CellField& kappa;
  const CellField& diffusion;
  int layers;
  RegionBoundary boundary;
};

/// Flow phase of one block: fills the flow members of a CellBasisSet.
CellBasisSet solve_block_flow(const CellInputs& in, BlockId block);

/// Transport phase for frozen P_s(x_ω), ∇P_s(x_ω): the flow basis is
/// recomputed on the region to build u_ω, then the transport bases are solved.
void solve_block_transport(const CellInputs& in, CellBasisSet& set, std::span<const double> p_vals,
                           std::span<const Vec2> grad_p_vals);

/// FNV-1a 64 over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed = 14695981039346656037ULL);

/// Binary cache of flow bases, one file per (inputs, block).
std::uint64_t cell_cache_key(const CellInputs& in);
void write_cell_cache(const std::filesystem::path& file, const CellBasisSet& set, std::uint64_t key);
/// nullopt for a missing file, another key, or a truncated or malformed file.
std::optional<CellBasisSet> read_cell_cache(const std::filesystem::path& file, std::uint64_t key);

}  // namespace mch

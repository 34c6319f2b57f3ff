#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mch/grid.hpp"

namespace mch {

/// Piecewise-constant coefficient sampled at fine-cell centers (κ, D or φ).
struct CellField {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double operator[](std::size_t c) const { return values[c]; }
  void scale(double s);
};

/// Continuum label per fine cell. Labels are 0-based: continuum j of the
/// N continua is stored as j - 1, so the low-valued matrix is 0 and the
/// high-valued inclusions are 1 in the two-continuum experiments.
struct ContinuumMap {
  std::vector<int> label;
  int continua = 1;

  [[nodiscard]] std::size_t size() const { return label.size(); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Disk {
  Point center;
  double radius = 0.0;
};

struct SourceSpec {
  double amplitude = 1.0;
  Point center{0.5, 0.5};
  double decay = 40.0;
};

enum class PressureBc { DirichletZero, DirichletLinearX };
enum class ConcentrationBc { DirichletZero, NeumannZero };

struct BoundaryCase {
  PressureBc pressure = PressureBc::DirichletZero;
  ConcentrationBc concentration = ConcentrationBc::DirichletZero;

  /// Case 1: p = 0, c = 0. Case 2: p = x, c = 0. Case 3: p = x, ∇c·ν = 0.
  static BoundaryCase numbered(int case_number);
  [[nodiscard]] int number() const;
};

/// Dirichlet pressure value prescribed at a boundary point.
double pressure_boundary_value(PressureBc bc, Point x);

struct Medium {
  CellField field;
  ContinuumMap continua;
};

/// Horizontal stripes: cells whose center y lies in some [lo, hi) get `high`
/// and continuum 1, all others `low` and continuum 0.
Medium layered_field(int fine_cells_per_side, double low, double high, std::vector<Interval> stripes);

/// Disk inclusions: cells whose center lies strictly inside a disk get `high`.
Medium circular_field(int fine_cells_per_side, double low, double high, std::span<const Disk> disks);

/// Constant field with a single continuum.
Medium uniform_field(int fine_cells_per_side, double value);

/// Stripes [k·period + offset, k·period + offset + width) clipped to [0, 1].
std::vector<Interval> periodic_stripes(double period, double offset, double width);

/// per_side × per_side lattice of equal disks centered at ((i+½)/n, (j+½)/n).
std::vector<Disk> disk_lattice(int per_side, double radius);

double gaussian_value(const SourceSpec& spec, Point x);

/// Gaussian sampled at fine-cell centers.
std::vector<double> gaussian_source(const FineGrid& grid, const SourceSpec& spec);

/// Gaussian sampled at fine nodes (nodal interpolant).
std::vector<double> gaussian_nodal(const FineGrid& grid, const SourceSpec& spec);

/// Throws std::invalid_argument naming the first block that lacks a continuum.
void validate_continua(const CoarseGrid& coarse, const ContinuumMap& continua);

/// Area of each continuum inside a block, indexed [block * N + j].
std::vector<double> continuum_areas(const CoarseGrid& coarse, const ContinuumMap& continua);

}  // namespace mch

#include "mch/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mch {

void CellField::scale(double s) {
  for (auto& v : values) {
    v *= s;
  }
}

BoundaryCase BoundaryCase::numbered(int case_number) {
  switch (case_number) {
    case 1:
      return {PressureBc::DirichletZero, ConcentrationBc::DirichletZero};
    case 2:
      return {PressureBc::DirichletLinearX, ConcentrationBc::DirichletZero};
    case 3:
      return {PressureBc::DirichletLinearX, ConcentrationBc::NeumannZero};
    default:
      throw std::invalid_argument("boundary case must be 1, 2 or 3, got " + std::to_string(case_number));
  }
}

int BoundaryCase::number() const {
  if (pressure == PressureBc::DirichletZero) {
    if (concentration != ConcentrationBc::DirichletZero) {
      throw std::invalid_argument("boundary combination p = 0 with Neumann c is not a numbered case");
    }
    return 1;
  }
  return concentration == ConcentrationBc::DirichletZero ? 2 : 3;
}

double pressure_boundary_value(PressureBc bc, Point x) {
  return bc == PressureBc::DirichletLinearX ? x.x : 0.0;
}

Medium layered_field(int n, double low, double high, std::vector<Interval> stripes) {
  for (const auto& s : stripes) {
    if (!(s.lo < s.hi) || s.lo < 0.0 || s.hi > 1.0) {
      throw std::invalid_argument("layered_field: stripe [" + std::to_string(s.lo) + ", " +
                                  std::to_string(s.hi) + ") is empty or leaves [0, 1]");
    }
  }
  std::sort(stripes.begin(), stripes.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t k = 1; k < stripes.size(); ++k) {
    if (stripes[k].lo < stripes[k - 1].hi) {
      throw std::invalid_argument("layered_field: stripes overlap near y = " + std::to_string(stripes[k].lo));
    }
  }

  Medium m;
  const auto cells = static_cast<std::size_t>(n) * n;
  m.field.values.assign(cells, low);
  m.continua.label.assign(cells, 0);
  m.continua.continua = 2;
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j) {
    const double y = (j + 0.5) * h;
    const bool inside = std::any_of(stripes.begin(), stripes.end(),
                                    [y](const Interval& s) { return y >= s.lo && y < s.hi; });
    if (!inside) {
      continue;
    }
    for (int i = 0; i < n; ++i) {
      m.field.values[j * n + i] = high;
      m.continua.label[j * n + i] = 1;
    }
  }
  if (stripes.empty()) {
    m.continua.continua = 1;
  }
  return m;
}

Medium circular_field(int n, double low, double high, std::span<const Disk> disks) {
  for (const auto& d : disks) {
    if (!(d.radius > 0.0)) {
      throw std::invalid_argument("circular_field: disk radius must be positive");
    }
  }
  Medium m;
  const auto cells = static_cast<std::size_t>(n) * n;
  m.field.values.assign(cells, low);
  m.continua.label.assign(cells, 0);
  m.continua.continua = disks.empty() ? 1 : 2;
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const bool inside = std::any_of(disks.begin(), disks.end(), [&](const Disk& d) {
        const double dx = std::abs((i + 0.5) * h - d.center.x);
        const double dy = std::abs((j + 0.5) * h - d.center.y);
        return dx * dx + dy * dy < d.radius * d.radius;
      });
      if (inside) {
        m.field.values[j * n + i] = high;
        m.continua.label[j * n + i] = 1;
      }
    }
  }
  return m;
}

Medium uniform_field(int n, double value) {
  Medium m;
  const auto cells = static_cast<std::size_t>(n) * n;
  m.field.values.assign(cells, value);
  m.continua.label.assign(cells, 0);
  m.continua.continua = 1;
  return m;
}

std::vector<Interval> periodic_stripes(double period, double offset, double width) {
  if (!(period > 0.0) || !(width > 0.0) || width >= period) {
    throw std::invalid_argument("periodic_stripes: need 0 < width < period");
  }
  std::vector<Interval> out;
  for (int k = 0;; ++k) {
    const double lo = k * period + offset;
    if (lo >= 1.0) {
      break;
    }
    const double hi = std::min(1.0, lo + width);
    if (hi > std::max(lo, 0.0)) {
      out.push_back({std::max(lo, 0.0), hi});
    }
  }
  return out;
}

std::vector<Disk> disk_lattice(int per_side, double radius) {
  std::vector<Disk> out;
  out.reserve(static_cast<std::size_t>(per_side) * per_side);
  for (int j = 0; j < per_side; ++j) {
    for (int i = 0; i < per_side; ++i) {
      out.push_back({{(i + 0.5) / per_side, (j + 0.5) / per_side}, radius});
    }
  }
  return out;
}

double gaussian_value(const SourceSpec& spec, Point x) {
  if (!(spec.decay > 0.0)) {
    throw std::invalid_argument("gaussian source decay must be positive");
  }
  const double dx = x.x - spec.center.x;
  const double dy = x.y - spec.center.y;
  return spec.amplitude * std::exp(-spec.decay * (dx * dx + dy * dy));
}

std::vector<double> gaussian_source(const FineGrid& grid, const SourceSpec& spec) {
  std::vector<double> out(grid.cell_count());
  for (int c = 0; c < grid.cell_count(); ++c) {
    out[c] = gaussian_value(spec, grid.mesh.cell_center(c));
  }
  return out;
}

std::vector<double> gaussian_nodal(const FineGrid& grid, const SourceSpec& spec) {
  std::vector<double> out(grid.node_count());
  for (int n = 0; n < grid.node_count(); ++n) {
    out[n] = gaussian_value(spec, grid.mesh.node_point(n));
  }
  return out;
}

std::vector<double> continuum_areas(const CoarseGrid& coarse, const ContinuumMap& continua) {
  const int N = continua.continua;
  const double h = 1.0 / coarse.fine_cells_per_side;
  std::vector<double> area(static_cast<std::size_t>(coarse.block_count()) * N, 0.0);
  for (std::size_t c = 0; c < continua.label.size(); ++c) {
    area[coarse.block_of_cell(static_cast<int>(c)) * N + continua.label[c]] += h * h;
  }
  return area;
}

void validate_continua(const CoarseGrid& coarse, const ContinuumMap& continua) {
  const auto expected = static_cast<std::size_t>(coarse.fine_cells_per_side) * coarse.fine_cells_per_side;
  if (continua.label.size() != expected) {
    throw std::invalid_argument("continuum map has " + std::to_string(continua.label.size()) +
                                " labels, expected " + std::to_string(expected));
  }
  for (int l : continua.label) {
    if (l < 0 || l >= continua.continua) {
      throw std::invalid_argument("continuum label " + std::to_string(l) + " out of range");
    }
  }
  const auto area = continuum_areas(coarse, continua);
  const int N = continua.continua;
  for (int b = 0; b < coarse.block_count(); ++b) {
    for (int j = 0; j < N; ++j) {
      if (area[b * N + j] <= 0.0) {
        throw std::invalid_argument("coarse block " + std::to_string(b) + " (" + std::to_string(coarse.block_i(b)) +
                                    ", " + std::to_string(coarse.block_j(b)) + ") contains no cell of continuum " +
                                    std::to_string(j + 1) + "; its cell-problem constraints are undefined");
      }
    }
  }
}

}  // namespace mch

#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mch/cells.hpp"
#include "mch/effective.hpp"
#include "mch/fem.hpp"
#include "mch/fields.hpp"
#include "mch/grid.hpp"
#include "mch/linalg.hpp"

namespace mch::tools {

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(a[k] - b[k]));
  }
  return m;
}

double check_triplets() {
  const auto a = assemble_from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 4.0}, {0, 0, 2.0}});
  return std::abs(a.coeff(0, 0) - 3.0) + std::abs(a.coeff(1, 1) - 4.0) + (a.nnz() == 2 ? 0.0 : 1.0);
}

double check_saddle() {
  const auto a = assemble_from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}});
  const std::vector<double> b{3.0, 1.0};
  const auto s = solve_direct(a, b);
  return std::abs(s.x[0] - 1.0) + std::abs(s.x[1] - 1.0);
}

double check_singular() {
  const auto a = assemble_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  try {
    (void)solve_direct(a, std::vector<double>{1.0, 2.0});
  } catch (const SingularMatrixError&) {
    return 0.0;
  }
  return 1.0;
}

double check_linear_pressure() {
  const auto [coarse, fine] = build_grids(4, 16);
  CellField kappa{std::vector<double>(fine.cell_count(), 1.0)};
  const std::vector<double> g(fine.cell_count(), 0.0);
  const auto p = solve_flow_fine(fine, kappa, g, PressureBc::DirichletLinearX);
  double err = 0.0;
  for (int n = 0; n < fine.node_count(); ++n) {
    err = std::max(err, std::abs(p.nodal[n] - fine.mesh.node_point(n).x));
  }
  return err;
}

double check_homogeneous_basis() {
  const auto [coarse, fine] = build_grids(4, 16);
  const auto medium = uniform_field(16, 1.0);
  const CellInputs in{coarse, medium.continua, medium.field, medium.field, 1, RegionBoundary::Mirrored};
  const auto set = solve_block_flow(in, coarse.block(1, 1));
  double err = 0.0;
  for (double v : set.flow_average[0]) {
    err = std::max(err, std::abs(v - 1.0));
  }
  return err;
}

double check_hat_roundtrip() {
  const auto [coarse, fine] = build_grids(4, 16);
  auto medium = layered_field(16, 1e-2, 1.0, periodic_stripes(0.125, 0.0, 0.0625));
  const CellInputs in{coarse, medium.continua, medium.field, medium.field, 1, RegionBoundary::Mirrored};
  const auto set = solve_block_flow(in, 5);
  const auto raw = flow_effective(set, block_cells(coarse, 5, medium.field.values));
  const auto ctx = ScalingContext::for_block_size(coarse.H);
  const auto back = unhat(hat(raw, ctx), ctx);
  double rel = 0.0;
  for (std::size_t k = 0; k < raw.alpha.size(); ++k) {
    rel = std::max(rel, std::abs(back.alpha[k] - raw.alpha[k]) / (std::abs(raw.alpha[k]) + 1e-300));
  }
  return rel;
}

double check_neumann_mass() {
  const auto [coarse, fine] = build_grids(4, 16);
  CellField one{std::vector<double>(fine.cell_count(), 1.0)};
  const std::vector<double> p(fine.node_count(), 0.0);
  const std::vector<double> h(fine.cell_count(), 0.0);
  const FineTransport op(fine, one, one, one, p, h, ConcentrationBc::NeumannZero, 0.01);
  SourceSpec bump;
  auto c0 = gaussian_nodal(fine, bump);
  const auto c1 = op.step(c0);
  const auto m0 = op.mass().multiply(c0);
  const auto m1 = op.mass().multiply(c1);
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t k = 0; k < m0.size(); ++k) {
    s0 += m0[k];
    s1 += m1[k];
  }
  return std::abs(s1 - s0) / std::abs(s0);
}

double check_determinism() {
  const auto [coarse, fine] = build_grids(4, 16);
  SourceSpec g;
  CellField kappa{std::vector<double>(fine.cell_count(), 1.0)};
  const auto src = gaussian_source(fine, g);
  const auto a = solve_flow_fine(fine, kappa, src, PressureBc::DirichletZero);
  const auto b = solve_flow_fine(fine, kappa, src, PressureBc::DirichletZero);
  return max_abs_diff(a.nodal, b.nodal);
}

}  // namespace

bool run_selftest(std::ostream& os) {
  struct Check {
    const char* name;
    std::function<double()> fn;
    double tol;
  };
  const std::vector<Check> checks{
      {"triplet summation", check_triplets, 0.0},
      {"saddle-point solve", check_saddle, 1e-12},
      {"singular matrix detected", check_singular, 0.0},
      {"linear pressure reproduced", check_linear_pressure, 1e-10},
      {"homogeneous average basis is constant", check_homogeneous_basis, 1e-10},
      {"hat/unhat round trip", check_hat_roundtrip, 1e-14},
      {"mass conserved under zero flux", check_neumann_mass, 1e-10},
      {"repeated solves identical", check_determinism, 0.0},
  };
  bool ok = true;
  for (const auto& c : checks) {
    double v = 0.0;
    std::string note;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v = INFINITY;
      note = std::string(" (") + e.what() + ")";
    }
    const bool pass = v <= c.tol;
    ok = ok && pass;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    os << (pass ? "PASS " : "FAIL ") << c.name << ": " << buf << note << '\n';
  }
  return ok;
}

}  // namespace mch::tools

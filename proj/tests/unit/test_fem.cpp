#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mch/fem.hpp"

using namespace mch;

namespace {

constexpr double kPi = std::numbers::pi;

FineGrid fine(int n) { return build_grids(2, n).second; }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("element matrices match the closed-form bilinear element") {
  const RectMesh one{1, 1, 0.0, 0.0, 0.5, 0.5};
  const std::vector<double> c{3.0};
  const auto k = assemble_stiffness(one, c).matrix;
  const auto m = assemble_mass(one, c).matrix;
  // counterclockwise ordering: 0 and 2 are opposite
  const double K[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
  const double Mref[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
  const auto nodes = one.cell_nodes(0);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      CHECK(k.coeff(nodes[a], nodes[b]) == doctest::Approx(3.0 * K[a][b] / 6.0).epsilon(1e-14));
      CHECK(m.coeff(nodes[a], nodes[b]) == doctest::Approx(3.0 * 0.25 * Mref[a][b] / 36.0).epsilon(1e-14));
    }
  }
  CHECK(k.asymmetry() == 0.0);
}

TEST_CASE("global operator invariants") {
  const auto g = fine(8);
  std::vector<double> c(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i) {
    c[i] = 1.0 + (i % 3);
  }
  const auto k = assemble_stiffness(g.mesh, c).matrix;
  const auto m = assemble_mass(g.mesh, c).matrix;
  const std::vector<double> ones(g.node_count(), 1.0);
  const auto k1 = k.multiply(ones);
  for (double v : k1) {
    CHECK(std::abs(v) < 1e-13);
  }
  double total = 0.0;
  for (double v : m.multiply(ones)) {
    total += v;
  }
  double integral = 0.0;
  for (double v : c) {
    integral += v * g.mesh.cell_area();
  }
  CHECK(total == doctest::Approx(integral).epsilon(1e-13));
  CHECK(k.asymmetry() < 1e-15);
  CHECK(m.asymmetry() < 1e-15);

  // ∫ c ∇x·∇x = ∫ c
  std::vector<double> x(g.node_count());
  for (int n = 0; n < g.node_count(); ++n) {
    x[n] = g.mesh.node_point(n).x;
  }
  const auto kx = k.multiply(x);
  double energy = 0.0;
  for (int n = 0; n < g.node_count(); ++n) {
    energy += x[n] * kx[n];
  }
  CHECK(energy == doctest::Approx(integral).epsilon(1e-12));

  const auto load = assemble_load(g.mesh, c);
  double lsum = 0.0;
  for (double v : load) {
    lsum += v;
  }
  CHECK(lsum == doctest::Approx(integral).epsilon(1e-13));
}

TEST_CASE("convection with a constant velocity") {
  const auto g = fine(6);
  const std::vector<Vec2> u(static_cast<std::size_t>(g.cell_count()) * 4, Vec2{2.0, -1.0});
  const auto c = assemble_convection(g.mesh, u).matrix;
  const std::vector<double> ones(g.node_count(), 1.0);
  for (double v : c.multiply(ones)) {
    CHECK(std::abs(v) < 1e-13);
  }
  // row a tests, column b trials: Σ_a C_ab = ∫ u·∇N_b = ∮ (u·n) N_b
  const auto ct1 = c.transpose().multiply(ones);
  for (int n = 0; n < g.node_count(); ++n) {
    if (!g.mesh.is_boundary_node(n)) {
      CHECK(std::abs(ct1[n]) < 1e-13);
    }
  }
  // (u·∇x) tested against 1 gives 2·|Ω|
  std::vector<double> x(g.node_count());
  for (int n = 0; n < g.node_count(); ++n) {
    x[n] = g.mesh.node_point(n).x;
  }
  double s = 0.0;
  for (double v : c.multiply(x)) {
    s += v;
  }
  CHECK(s == doctest::Approx(2.0).epsilon(1e-13));
  // skew part: C + Cᵀ vanishes on interior rows for divergence-free u
  const auto sym = linear_combination(1.0, c, 1.0, c.transpose());
  for (int r = 0; r < sym.rows(); ++r) {
    if (g.mesh.is_boundary_node(r)) {
      continue;
    }
    for (int k = sym.row_ptr()[r]; k < sym.row_ptr()[r + 1]; ++k) {
      CHECK(std::abs(sym.values()[k]) < 1e-13);
    }
  }
}

TEST_CASE("darcy velocity of a linear pressure") {
  const auto g = fine(4);
  const std::vector<double> kappa(g.cell_count(), 5.0);
  std::vector<double> p(g.node_count());
  for (int n = 0; n < g.node_count(); ++n) {
    const auto pt = g.mesh.node_point(n);
    p[n] = 2.0 * pt.x - 3.0 * pt.y;
  }
  for (const auto& u : darcy_velocity(g.mesh, kappa, p)) {
    CHECK(u[0] == doctest::Approx(-10.0));
    CHECK(u[1] == doctest::Approx(15.0));
  }
}

TEST_CASE("dirichlet elimination and lifting") {
  const auto g = fine(4);
  const std::vector<double> c(g.cell_count(), 1.0);
  const auto k = assemble_stiffness(g.mesh, c).matrix;
  const auto fixed = boundary_mask(g.mesh);
  int nfixed = 0;
  for (char f : fixed) {
    nfixed += f;
  }
  CHECK(nfixed == 16);
  const auto e = eliminate_dirichlet(k, fixed);
  CHECK(e.asymmetry() == 0.0);
  for (int n = 0; n < g.node_count(); ++n) {
    if (fixed[n]) {
      for (int m = 0; m < g.node_count(); ++m) {
        CHECK(e.coeff(n, m) == (n == m ? 1.0 : 0.0));
        CHECK(e.coeff(m, n) == (n == m ? 1.0 : 0.0));
      }
    }
  }
  std::vector<double> values(g.node_count(), 0.0);
  for (int n = 0; n < g.node_count(); ++n) {
    values[n] = g.mesh.node_point(n).x + 2.0 * g.mesh.node_point(n).y;
  }
  const std::vector<double> zero(g.node_count(), 0.0);
  const auto rhs = lift_rhs(k, fixed, values, zero);
  const auto x = solve_direct(e, rhs).x;
  CHECK(max_abs_diff(x, values) < 1e-13);
}

TEST_CASE("linear pressure is reproduced exactly") {
  const auto g = fine(16);
  CellField kappa;
  kappa.values.assign(g.cell_count(), 7.0);
  const std::vector<double> zero(g.cell_count(), 0.0);
  const auto s = solve_flow_fine(g, kappa, zero, PressureBc::DirichletLinearX);
  for (int n = 0; n < g.node_count(); ++n) {
    CHECK(s.nodal[n] == doctest::Approx(g.mesh.node_point(n).x).epsilon(1e-12));
  }
  const auto s0 = solve_flow_fine(g, kappa, zero, PressureBc::DirichletZero);
  for (double v : s0.nodal) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("Poisson with a manufactured solution converges at second order") {
  auto err = [](int n) {
    const auto g = fine(n);
    CellField kappa;
    kappa.values.assign(g.cell_count(), 1.0);
    std::vector<double> f(g.cell_count());
    for (int c = 0; c < g.cell_count(); ++c) {
      const auto pt = g.mesh.cell_center(c);
      f[c] = 2.0 * kPi * kPi * std::sin(kPi * pt.x) * std::sin(kPi * pt.y);
    }
    const auto s = solve_flow_fine(g, kappa, f, PressureBc::DirichletZero);
    return l2_error(g.mesh, s.nodal, [](Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); });
  };
  const double e16 = err(16);
  const double e32 = err(32);
  const double e64 = err(64);
  CHECK(e16 < 5e-3);
  CHECK(std::log2(e16 / e32) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log2(e32 / e64) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("interpolation is exact for bilinear functions") {
  const RectMesh mesh{5, 3, 0.25, -1.0, 0.2, 0.5};
  auto f = [](Point p) { return 1.0 + 2.0 * p.x - 3.0 * p.y + 4.0 * p.x * p.y; };
  std::vector<double> nodal(mesh.node_count());
  for (int n = 0; n < mesh.node_count(); ++n) {
    nodal[n] = f(mesh.node_point(n));
  }
  for (const Point p : {Point{0.3, -0.9}, Point{1.1, 0.4}, Point{0.25, -1.0}, Point{1.25, 0.5}, Point{0.71, 0.0}}) {
    CHECK(interpolate(mesh, nodal, p) == doctest::Approx(f(p)).epsilon(1e-13));
    const auto gr = interpolate_gradient(mesh, nodal, p);
    CHECK(gr[0] == doctest::Approx(2.0 + 4.0 * p.y).epsilon(1e-12));
    CHECK(gr[1] == doctest::Approx(-3.0 + 4.0 * p.x).epsilon(1e-12));
  }
  CHECK(l2_error(mesh, nodal, f) < 1e-13);
  CHECK_THROWS(interpolate(mesh, nodal, Point{2.0, 0.0}));
}

TEST_CASE("block averages") {
  auto [coarse, g] = build_grids(4, 16);
  auto field = layered_field(16, 1.0, 2.0, {{0.0, 0.125}, {0.25, 0.3125}, {0.5, 0.6875}, {0.75, 0.8125}});
  std::vector<double> nodal(g.node_count());
  for (int n = 0; n < g.node_count(); ++n) {
    nodal[n] = g.mesh.node_point(n).y;
  }
  for (int cont = 0; cont < 2; ++cont) {
    const auto avg = block_average(nodal, coarse, field.continua, cont);
    for (int b = 0; b < coarse.block_count(); ++b) {
      double s = 0.0;
      int cnt = 0;
      for (int c : coarse.cells_in_block(b)) {
        if (field.continua.label[c] == cont) {
          s += g.mesh.cell_center(c).y;
          ++cnt;
        }
      }
      if (cnt > 0) {
        CHECK(avg[b] == doctest::Approx(s / cnt).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("time stepping") {
  CHECK(steps_to(0.1, 0.001) == 100);
  CHECK(steps_to(2.0, 0.001) == 2000);
  CHECK(steps_to(0.0, 0.01) == 0);
  CHECK_THROWS(steps_to(0.0015, 0.001));
  CHECK_THROWS(steps_to(-0.1, 0.01));
}

TEST_CASE("pure diffusion decays the first mode at the implicit Euler rate") {
  const int n = 32;
  const auto g = fine(n);
  CellField one;
  one.values.assign(g.cell_count(), 1.0);
  const std::vector<double> p(g.node_count(), 0.0);
  const std::vector<double> h(g.cell_count(), 0.0);
  const double tau = 1e-3;
  const FineTransport op(g, one, one, one, p, h, ConcentrationBc::DirichletZero, tau);
  std::vector<double> c0(g.node_count());
  for (int k = 0; k < g.node_count(); ++k) {
    const auto pt = g.mesh.node_point(k);
    c0[k] = std::sin(kPi * pt.x) * std::sin(kPi * pt.y);
  }
  const std::vector<double> times{0.05};
  const auto s = run_transport_fine(op, c0, times);
  REQUIRE(s.snapshots.size() == 1);
  const double lambda = 2.0 * kPi * kPi;
  const double expected = std::pow(1.0 + tau * lambda, -50);
  const double center = interpolate(g.mesh, s.snapshots[0], Point{0.5, 0.5});
  CHECK(center == doctest::Approx(expected).epsilon(5e-3));
  CHECK(s.times == times);
}

TEST_CASE("Neumann transport conserves mass in a divergence-free flow") {
  const auto g = fine(16);
  CellField kappa;
  kappa.values.assign(g.cell_count(), 1.0);
  CellField d = kappa;
  d.scale(0.01);
  CellField phi;
  phi.values.assign(g.cell_count(), 0.4);
  std::vector<double> p(g.node_count(), 0.0);
  const std::vector<double> h(g.cell_count(), 0.0);
  const FineTransport op(g, kappa, d, phi, p, h, ConcentrationBc::NeumannZero, 0.01);
  auto c = gaussian_nodal(g, SourceSpec{1.0, {0.4, 0.5}, 40.0});
  const std::vector<double> ones(g.node_count(), 1.0);
  auto mass = [&](const std::vector<double>& v) {
    double s = 0.0;
    const auto mv = op.mass().multiply(v);
    for (double x : mv) {
      s += x;
    }
    return s;
  };
  const double m0 = mass(c);
  for (int k = 0; k < 20; ++k) {
    c = step_transport_fine(op, c);
  }
  CHECK(mass(c) == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("steady state of the transport step solves the stationary problem") {
  const auto g = fine(12);
  CellField one;
  one.values.assign(g.cell_count(), 1.0);
  const std::vector<double> p(g.node_count(), 0.0);
  const std::vector<double> h(g.cell_count(), 1.0);
  const FineTransport op(g, one, one, one, p, h, ConcentrationBc::DirichletZero, 10.0);
  std::vector<double> c(g.node_count(), 0.0);
  for (int k = 0; k < 200; ++k) {
    c = op.step(c);
  }
  const auto fixed = boundary_mask(g.mesh);
  const std::vector<double> zero(g.node_count(), 0.0);
  const auto rhs = lift_rhs(op.diffusion(), fixed, zero, assemble_load(g.mesh, h));
  const auto ref = solve_direct(eliminate_dirichlet(op.diffusion(), fixed), rhs).x;
  CHECK(max_abs_diff(c, ref) < 1e-10);
}

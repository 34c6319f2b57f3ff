#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mch/effective.hpp"

using namespace mch;

namespace {

std::vector<double> nodal(const RectMesh& mesh, double (*f)(Point)) {
  std::vector<double> v(mesh.node_count());
  for (int n = 0; n < mesh.node_count(); ++n) {
    v[n] = f(mesh.node_point(n));
  }
  return v;
}

/// One block [0.2, 0.4]² of 4×4 cells with linear gradient bases and a constant average basis.
CellBasisSet linear_set() {
  CellBasisSet s;
  s.continua = 1;
  s.mesh = {4, 4, 0.2, 0.2, 0.05, 0.05};
  s.flow_average = {std::vector<double>(s.mesh.node_count(), 1.0)};
  s.flow_gradient = {nodal(s.mesh, [](Point p) { return p.x - 0.3; }), nodal(s.mesh, [](Point p) { return p.y - 0.3; })};
  s.transport_average = s.flow_average;
  s.transport_gradient = s.flow_gradient;
  s.shift = {0.3, 0.3};
  return s;
}

bool within_ulps(double a, double b, int ulps) {
  if (a == b) {
    return true;
  }
  double x = a;
  for (int k = 0; k < ulps; ++k) {
    x = std::nextafter(x, b);
    if (x == b) {
      return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("tensors of linear bases in a constant medium") {
  const auto s = linear_set();
  const std::vector<double> kappa(16, 3.0);
  const std::vector<double> phi(16, 0.4);
  const std::vector<double> d(16, 0.5);
  const double R = 0.04;
  const auto f = flow_effective(s, kappa);
  CHECK(f.a(0, 0, 0, 0) == doctest::Approx(3.0 * R).epsilon(1e-13));
  CHECK(f.a(0, 0, 1, 1) == doctest::Approx(3.0 * R).epsilon(1e-13));
  CHECK(std::abs(f.a(0, 0, 0, 1)) < 1e-16);
  CHECK(std::abs(f.beta[0]) < 1e-16);
  CHECK(std::abs(f.beta_m[0]) < 1e-16);
  CHECK(std::abs(f.beta_m[1]) < 1e-16);

  const auto t = transport_effective(s, d, kappa, phi);
  CHECK(t.eta[0] == doctest::Approx(0.5 * R).epsilon(1e-13));
  CHECK(t.eta[3] == doctest::Approx(0.5 * R).epsilon(1e-13));
  CHECK(t.gamma[0] == doctest::Approx(0.4 * R).epsilon(1e-13));
  CHECK(std::abs(t.zeta[0]) < 1e-16);
  for (int m = 0; m < 2; ++m) {
    CHECK(std::abs(t.chi[m]) < 1e-16);
    CHECK(std::abs(t.upsilon[m]) < 1e-16);
  }
  // ι^{lm} = ∫ −κ ∇(x_l − x̃_l)·∇(x_m − x̃_m)
  CHECK(t.iota[0] == doctest::Approx(-3.0 * R).epsilon(1e-13));
  CHECK(t.iota[3] == doctest::Approx(-3.0 * R).epsilon(1e-13));
  CHECK(std::abs(t.iota[1]) < 1e-16);
}

TEST_CASE("tensors of bilinear bases against closed-form integrals") {
  auto s = linear_set();
  // φ^{x} = xy on [0.2, 0.4]²: ∫|∇(xy)|² = ∫ (x² + y²) = 2·0.2·(0.4³ − 0.2³)/3
  s.flow_gradient[0] = nodal(s.mesh, [](Point p) { return p.x * p.y; });
  s.flow_average[0] = nodal(s.mesh, [](Point p) { return p.x; });
  const std::vector<double> kappa(16, 2.0);
  const auto f = flow_effective(s, kappa);
  const double ix2 = (0.4 * 0.4 * 0.4 - 0.2 * 0.2 * 0.2) / 3.0;
  CHECK(f.a(0, 0, 0, 0) == doctest::Approx(2.0 * 2.0 * 0.2 * ix2).epsilon(1e-12));
  // β = ∫κ |∇x|² = κ|R|; β^x = ∫κ ∇x·∇(xy) = κ ∫ y
  CHECK(f.beta[0] == doctest::Approx(2.0 * 0.04).epsilon(1e-13));
  CHECK(f.beta_m[0] == doctest::Approx(2.0 * 0.2 * (0.4 * 0.4 - 0.2 * 0.2) / 2.0).epsilon(1e-13));
  // β^y = ∫κ ∇x·∇(y − 0.3) = 0
  CHECK(std::abs(f.beta_m[1]) < 1e-16);
}

TEST_CASE("hat scalings") {
  for (double H : {0.1, 0.05, 0.025, 1.0 / 3.0}) {
    const auto ctx = ScalingContext::for_block_size(H);
    CHECK(ctx.eps == H);
    CHECK(ctx.area == H * H);
    FlowEffective raw;
    raw.continua = 2;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    raw.alpha.resize(16);
    raw.beta_m.resize(8);
    raw.beta.resize(4);
    for (auto* v : {&raw.alpha, &raw.beta_m, &raw.beta}) {
      for (auto& x : *v) {
        x = u(rng);
      }
    }
    const auto h = hat(raw, ctx);
    for (int k = 0; k < 16; ++k) {
      CHECK(h.alpha[k] == doctest::Approx(raw.alpha[k] / (H * H)).epsilon(1e-14));
    }
    for (int k = 0; k < 8; ++k) {
      CHECK(h.beta_m[k] == doctest::Approx(raw.beta_m[k] * H / (H * H)).epsilon(1e-14));
    }
    for (int k = 0; k < 4; ++k) {
      CHECK(h.beta[k] == doctest::Approx(raw.beta[k]).epsilon(1e-14));
    }
    const auto back = unhat(h, ctx);
    for (int k = 0; k < 16; ++k) {
      CHECK(within_ulps(back.alpha[k], raw.alpha[k], 4));
    }
    for (int k = 0; k < 8; ++k) {
      CHECK(within_ulps(back.beta_m[k], raw.beta_m[k], 4));
    }
    for (int k = 0; k < 4; ++k) {
      CHECK(within_ulps(back.beta[k], raw.beta[k], 4));
    }

    TransportEffective tr;
    tr.continua = 2;
    for (auto* v : {&tr.eta, &tr.theta_m, &tr.theta, &tr.gamma, &tr.zeta, &tr.chi, &tr.upsilon, &tr.iota}) {
      v->resize(32);
      for (auto& x : *v) {
        x = u(rng);
      }
    }
    const auto th = hat(tr, ctx);
    CHECK(th.gamma[3] == doctest::Approx(tr.gamma[3] / (H * H)).epsilon(1e-14));
    CHECK(th.iota[5] == doctest::Approx(tr.iota[5] / (H * H)).epsilon(1e-14));
    CHECK(th.zeta[7] == doctest::Approx(tr.zeta[7]).epsilon(1e-14));
    CHECK(th.chi[2] == doctest::Approx(tr.chi[2] / H).epsilon(1e-14));
    CHECK(th.upsilon[2] == doctest::Approx(tr.upsilon[2] / H).epsilon(1e-14));
    CHECK(th.theta_m[1] == doctest::Approx(tr.theta_m[1] / H).epsilon(1e-14));
    CHECK(th.theta[1] == doctest::Approx(tr.theta[1]).epsilon(1e-14));
    CHECK(th.eta[9] == doctest::Approx(tr.eta[9] / (H * H)).epsilon(1e-14));
    const auto tb = unhat(th, ctx);
    for (int k = 0; k < 32; ++k) {
      CHECK(within_ulps(tb.eta[k], tr.eta[k], 4));
      CHECK(within_ulps(tb.theta_m[k], tr.theta_m[k], 4));
      CHECK(within_ulps(tb.theta[k], tr.theta[k], 4));
      CHECK(within_ulps(tb.gamma[k], tr.gamma[k], 4));
      CHECK(within_ulps(tb.zeta[k], tr.zeta[k], 4));
      CHECK(within_ulps(tb.chi[k], tr.chi[k], 4));
      CHECK(within_ulps(tb.upsilon[k], tr.upsilon[k], 4));
      CHECK(within_ulps(tb.iota[k], tr.iota[k], 4));
    }
  }
  CHECK_THROWS(ScalingContext::for_block_size(0.0));
}

TEST_CASE("combined transport coefficients") {
  const int N = 2;
  const double eps = 0.05;
  TransportEffective t;
  t.continua = N;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) {
      x = u(rng);
    }
  };
  fill(t.theta, 4);
  fill(t.zeta, 8);
  fill(t.chi, 16);
  fill(t.upsilon, 16);
  fill(t.iota, 32);
  const std::vector<double> p{0.7, -0.2};
  const std::vector<Vec2> g{Vec2{1.5, -0.5}, Vec2{0.25, 2.0}};
  const auto c = combine_transport(t, p, g, ScalingContext::for_block_size(eps));
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      double th = t.theta[i * N + j];
      for (int s = 0; s < N; ++s) {
        th += p[s] * t.zeta[(s * N + i) * N + j];
        for (int l = 0; l < 2; ++l) {
          th += eps * g[s][l] * t.upsilon[((s * N + i) * N + j) * 2 + l];
        }
      }
      CHECK(c.big_theta[i * N + j] == doctest::Approx(th).epsilon(1e-13));
      for (int m = 0; m < 2; ++m) {
        double x = 0.0;
        for (int s = 0; s < N; ++s) {
          x += p[s] * t.chi[((s * N + i) * N + j) * 2 + m];
          for (int l = 0; l < 2; ++l) {
            x += eps * g[s][l] * t.iota[(((s * N + i) * N + j) * 2 + l) * 2 + m];
          }
        }
        CHECK(c.xi[(i * N + j) * 2 + m] == doctest::Approx(x).epsilon(1e-13));
      }
    }
  }
  CHECK_THROWS(combine_transport(t, std::vector<double>{1.0}, g, ScalingContext::for_block_size(eps)));
}

TEST_CASE("block source and corner moments") {
  const auto s = linear_set();
  const double H = 0.2;
  const auto ctx = ScalingContext::for_block_size(H);
  std::vector<double> f(16);
  for (int c = 0; c < 16; ++c) {
    f[c] = 1.0 + c;
  }
  const auto src = block_source(s, s.flow_average, f, ctx);
  CHECK(src[0] == doctest::Approx(8.5).epsilon(1e-14));

  const std::vector<double> one(16, 1.0);
  const auto m1 = block_corner_moments(s, s.flow_average, one);
  for (int a = 0; a < 4; ++a) {
    CHECK(m1[a] == doctest::Approx(H * H / 4).epsilon(1e-13));
  }
  // ∫ (x − 0.2) N_a: corners 0 and 3 get H³/12, corners 1 and 2 get H³/6
  const auto w = nodal(s.mesh, [](Point p) { return p.x - 0.2; });
  const auto mx = block_corner_moments(s, s.flow_average, one, w);
  CHECK(mx[0] == doctest::Approx(H * H * H / 12).epsilon(1e-13));
  CHECK(mx[1] == doctest::Approx(H * H * H / 6).epsilon(1e-13));
  CHECK(mx[2] == doctest::Approx(H * H * H / 6).epsilon(1e-13));
  CHECK(mx[3] == doctest::Approx(H * H * H / 12).epsilon(1e-13));
  CHECK_THROWS(block_corner_moments(s, s.flow_average, std::vector<double>(3, 1.0)));
}

TEST_CASE("block_cells and block_nodes") {
  auto [coarse, fine] = build_grids(2, 4);
  std::vector<double> cells(16);
  std::vector<double> nodes(25);
  for (int k = 0; k < 16; ++k) {
    cells[k] = k;
  }
  for (int k = 0; k < 25; ++k) {
    nodes[k] = k;
  }
  CHECK(block_cells(coarse, 3, cells) == std::vector<double>{10, 11, 14, 15});
  CHECK(block_nodes(coarse, 1, nodes) == std::vector<double>{2, 3, 4, 7, 8, 9, 12, 13, 14});
}

TEST_CASE("scaling report fits exponents") {
  std::vector<ScalingSample> samples;
  for (double H : {0.1, 0.05, 0.025}) {
    ScalingSample s;
    s.H = H;
    s.raw.continua = 2;
    s.raw.alpha.assign(16, 0.3 * H * H);
    s.raw.beta_m.assign(8, 2.0 * H);
    s.raw.beta.assign(4, 5.0);
    samples.push_back(s);
  }
  const auto rep = scaling_report(samples);
  REQUIRE(rep.size() == 3);
  CHECK(rep[0].tensor == "beta");
  CHECK(rep[0].fitted == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep[1].fitted == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep[2].fitted == doctest::Approx(2.0).epsilon(1e-12));
  for (const auto& e : rep) {
    CHECK(e.ok);
    CHECK_FALSE(e.degenerate);
  }
  for (auto& s : samples) {
    s.raw.beta_m.assign(8, 0.0);
    s.raw.beta.assign(4, 7.0 * s.H * s.H * s.H);
  }
  const auto bad = scaling_report(samples);
  CHECK(bad[0].fitted == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_FALSE(bad[0].ok);
  CHECK(bad[1].degenerate);
  CHECK_FALSE(bad[1].ok);
  CHECK_THROWS(scaling_report(std::span<const ScalingSample>(samples.data(), 1)));
}

TEST_CASE("tensors of real cell bases") {
  auto [coarse, fine] = build_grids(4, 32);
  auto medium = layered_field(32, 1.0, 40.0, periodic_stripes(0.25, 0.0625, 0.09375));
  CellField d = medium.field;
  d.scale(0.2);
  const CellInputs in{coarse, medium.continua, medium.field, d, 1, RegionBoundary::Mirrored};
  auto set = solve_block_flow(in, 5);
  const auto kb = block_cells(coarse, 5, medium.field.values);
  const auto f = flow_effective(set, kb);
  const int N = 2;
  // α symmetric, positive diagonal
  for (int a = 0; a < 2 * N; ++a) {
    CHECK(f.alpha[a * 2 * N + a] > 0.0);
    for (int b = 0; b < 2 * N; ++b) {
      CHECK(f.alpha[a * 2 * N + b] == doctest::Approx(f.alpha[b * 2 * N + a]).epsilon(1e-12));
    }
  }
  // Σ_k φ_k^p = 1 annihilates the energy form
  const double scale = f.beta[0] + f.beta[3];
  for (int i = 0; i < N; ++i) {
    CHECK(std::abs(f.beta[i * N] + f.beta[i * N + 1]) < 1e-8 * scale);
    for (int m = 0; m < 2; ++m) {
      CHECK(std::abs(f.beta_m[(0 * N + i) * 2 + m] + f.beta_m[(1 * N + i) * 2 + m]) < 1e-8 * scale);
    }
  }

  const std::vector<double> pv{0.2, 0.1};
  const std::vector<Vec2> gv{Vec2{0.3, -0.1}, Vec2{0.3, -0.1}};
  solve_block_transport(in, set, pv, gv);
  const std::vector<double> phi(kb.size(), 1.0);
  const auto t = transport_effective(set, block_cells(coarse, 5, d.values), kb, phi);
  double gsum = 0.0;
  for (double g : t.gamma) {
    gsum += g;
  }
  // Σ_ij ∫ φ φ_i φ_j = |R| when the transport averages sum to one
  CHECK(gsum == doctest::Approx(coarse.H * coarse.H).epsilon(1e-6));

  std::ostringstream os;
  write_tensor_csv_header(os);
  write_tensor_csv(os, 5, hat(f, ScalingContext::for_block_size(coarse.H)), nullptr, "");
  const auto text = os.str();
  CHECK(text.rfind("block,tensor,index,value\n", 0) == 0);
  CHECK(text.find("\n5,alpha,") != std::string::npos);
}

#include "mch/effective.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "mch/fem.hpp"

namespace mch {

ScalingContext ScalingContext::for_block_size(double H) {
  if (!(H > 0.0)) {
    throw std::invalid_argument("scaling context needs a positive block size");
  }
  return {H, H * H};
}

namespace {

/// Value and gradient of each basis vector at every quadrature point.
struct Tabulated {
  int points = 0;
  std::vector<std::vector<double>> value;  // [basis][cell·4 + q]
  std::vector<std::vector<Vec2>> grad;
};

Tabulated tabulate(const RectMesh& mesh, const std::vector<std::vector<double>>& basis) {
  const auto& t = q1::tables();
  Tabulated out;
  out.points = mesh.cell_count() * q1::kQuadPoints;
  for (const auto& v : basis) {
    if (v.size() != static_cast<std::size_t>(mesh.node_count())) {
      throw std::invalid_argument("basis vector does not match the central mesh");
    }
    std::vector<double> val(out.points, 0.0);
    std::vector<Vec2> grad(out.points, Vec2{0.0, 0.0});
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto nodes = mesh.cell_nodes(c);
      for (int q = 0; q < q1::kQuadPoints; ++q) {
        const int p = c * q1::kQuadPoints + q;
        for (int a = 0; a < 4; ++a) {
          const Vec2 g = q1::shape_gradient(mesh, q, a);
          val[p] += t.value[q][a] * v[nodes[a]];
          grad[p][0] += g[0] * v[nodes[a]];
          grad[p][1] += g[1] * v[nodes[a]];
        }
      }
    }
    out.value.push_back(std::move(val));
    out.grad.push_back(std::move(grad));
  }
  return out;
}

std::vector<double> point_weights(const RectMesh& mesh, std::span<const double> coeff) {
  if (coeff.size() != static_cast<std::size_t>(mesh.cell_count())) {
    throw std::invalid_argument("block coefficient does not match the central mesh");
  }
  const auto& t = q1::tables();
  std::vector<double> w(static_cast<std::size_t>(mesh.cell_count()) * q1::kQuadPoints);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    for (int q = 0; q < q1::kQuadPoints; ++q) {
      w[c * q1::kQuadPoints + q] = coeff[c] * t.weight[q] * mesh.cell_area();
    }
  }
  return w;
}

double dot(const std::vector<double>& w, const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double s = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    s += w[p] * (a[p][0] * b[p][0] + a[p][1] * b[p][1]);
  }
  return s;
}

double triple(const std::vector<double>& w, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
              const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    s += w[p] * (a[p][0] * b[p][0] + a[p][1] * b[p][1]) * v[p];
  }
  return s;
}

/// Energy tensors shared by flow (κ) and transport (D).
void energy_tensors(const Tabulated& avg, const Tabulated& grad, const std::vector<double>& w, int N,
                    std::vector<double>& big, std::vector<double>& mixed, std::vector<double>& plain) {
  big.assign(static_cast<std::size_t>(4) * N * N, 0.0);
  mixed.assign(static_cast<std::size_t>(2) * N * N, 0.0);
  plain.assign(static_cast<std::size_t>(N) * N, 0.0);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      plain[i * N + k] = dot(w, avg.grad[i], avg.grad[k]);
      for (int m = 0; m < 2; ++m) {
        mixed[(i * N + k) * 2 + m] = dot(w, avg.grad[i], grad.grad[k * 2 + m]);
      }
    }
  }
  for (int a = 0; a < 2 * N; ++a) {
    for (int b = 0; b < 2 * N; ++b) {
      big[a * 2 * N + b] = dot(w, grad.grad[a], grad.grad[b]);
    }
  }
}

void scale(std::vector<double>& v, double f) {
  for (auto& x : v) {
    x *= f;
  }
}

void unscale(std::vector<double>& v, double f) {
  for (auto& x : v) {
    x /= f;
  }
}

}  // namespace

FlowEffective flow_effective(const CellBasisSet& set, std::span<const double> kappa_block) {
  const int N = set.continua;
  const auto avg = tabulate(set.mesh, set.flow_average);
  const auto grad = tabulate(set.mesh, set.flow_gradient);
  const auto w = point_weights(set.mesh, kappa_block);
  FlowEffective f;
  f.continua = N;
  energy_tensors(avg, grad, w, N, f.alpha, f.beta_m, f.beta);
  return f;
}

TransportEffective transport_effective(const CellBasisSet& set, std::span<const double> diffusion_block,
                                       std::span<const double> kappa_block, std::span<const double> porosity_block) {
  const int N = set.continua;
  if (set.transport_average.size() != static_cast<std::size_t>(N)) {
    throw std::invalid_argument("transport_effective: transport basis of block " + std::to_string(set.block) +
                                " is missing");
  }
  const auto pa = tabulate(set.mesh, set.flow_average);
  const auto pg = tabulate(set.mesh, set.flow_gradient);
  const auto ca = tabulate(set.mesh, set.transport_average);
  const auto cg = tabulate(set.mesh, set.transport_gradient);
  const auto wd = point_weights(set.mesh, diffusion_block);
  const auto wphi = point_weights(set.mesh, porosity_block);
  auto wk = point_weights(set.mesh, kappa_block);
  scale(wk, -1.0);

  TransportEffective t;
  t.continua = N;
  energy_tensors(ca, cg, wd, N, t.eta, t.theta_m, t.theta);
  const auto NN = static_cast<std::size_t>(N) * N;
  t.gamma.assign(NN, 0.0);
  t.zeta.assign(NN * N, 0.0);
  t.chi.assign(NN * N * 2, 0.0);
  t.upsilon.assign(NN * N * 2, 0.0);
  t.iota.assign(NN * N * 4, 0.0);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int p = 0; p < ca.points; ++p) {
        s += wphi[p] * ca.value[i][p] * ca.value[j][p];
      }
      t.gamma[i * N + j] = s;
    }
  }
  for (int s = 0; s < N; ++s) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const int sij = (s * N + i) * N + j;
        t.zeta[sij] = triple(wk, pa.grad[s], ca.grad[i], ca.value[j]);
        for (int m = 0; m < 2; ++m) {
          t.chi[sij * 2 + m] = triple(wk, pa.grad[s], cg.grad[i * 2 + m], ca.value[j]);
          t.upsilon[sij * 2 + m] = triple(wk, pg.grad[s * 2 + m], ca.grad[i], ca.value[j]);
        }
        for (int l = 0; l < 2; ++l) {
          for (int m = 0; m < 2; ++m) {
            t.iota[(sij * 2 + l) * 2 + m] = triple(wk, pg.grad[s * 2 + l], cg.grad[i * 2 + m], ca.value[j]);
          }
        }
      }
    }
  }
  return t;
}

namespace {

struct Factors {
  double eps2_r;
  double eps_r;
  double inv_r;
};

Factors factors(const ScalingContext& ctx) {
  if (!(ctx.eps > 0.0) || !(ctx.area > 0.0)) {
    throw std::invalid_argument("scaling context needs positive eps and area");
  }
  return {ctx.eps * ctx.eps / ctx.area, ctx.eps / ctx.area, 1.0 / ctx.area};
}

}  // namespace

FlowEffective hat(const FlowEffective& raw, const ScalingContext& ctx) {
  const auto f = factors(ctx);
  FlowEffective h = raw;
  unscale(h.alpha, ctx.area);
  scale(h.beta_m, f.eps_r);
  scale(h.beta, f.eps2_r);
  return h;
}

FlowEffective unhat(const FlowEffective& hatted, const ScalingContext& ctx) {
  const auto f = factors(ctx);
  FlowEffective r = hatted;
  scale(r.alpha, ctx.area);
  unscale(r.beta_m, f.eps_r);
  unscale(r.beta, f.eps2_r);
  return r;
}

TransportEffective hat(const TransportEffective& raw, const ScalingContext& ctx) {
  const auto f = factors(ctx);
  TransportEffective h = raw;
  unscale(h.eta, ctx.area);
  scale(h.theta_m, f.eps_r);
  scale(h.theta, f.eps2_r);
  unscale(h.gamma, ctx.area);
  scale(h.zeta, f.eps2_r);
  scale(h.chi, f.eps_r);
  scale(h.upsilon, f.eps_r);
  unscale(h.iota, ctx.area);
  return h;
}

TransportEffective unhat(const TransportEffective& hatted, const ScalingContext& ctx) {
  const auto f = factors(ctx);
  TransportEffective r = hatted;
  scale(r.eta, ctx.area);
  unscale(r.theta_m, f.eps_r);
  unscale(r.theta, f.eps2_r);
  scale(r.gamma, ctx.area);
  unscale(r.zeta, f.eps2_r);
  unscale(r.chi, f.eps_r);
  unscale(r.upsilon, f.eps_r);
  scale(r.iota, ctx.area);
  return r;
}

CombinedTransport combine_transport(const TransportEffective& hatted, std::span<const double> p_vals,
                                    std::span<const Vec2> grad_p_vals, const ScalingContext& ctx) {
  const int N = hatted.continua;
  if (p_vals.size() != static_cast<std::size_t>(N) || grad_p_vals.size() != static_cast<std::size_t>(N)) {
    throw std::invalid_argument("combine_transport: expected " + std::to_string(N) + " frozen pressure values");
  }
  CombinedTransport out;
  out.continua = N;
  out.xi.assign(static_cast<std::size_t>(N) * N * 2, 0.0);
  out.big_theta = hatted.theta;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      for (int s = 0; s < N; ++s) {
        const int sij = (s * N + i) * N + j;
        double th = p_vals[s] * hatted.zeta[sij];
        for (int l = 0; l < 2; ++l) {
          th += ctx.eps * grad_p_vals[s][l] * hatted.upsilon[sij * 2 + l];
        }
        out.big_theta[i * N + j] += th;
        for (int m = 0; m < 2; ++m) {
          double x = p_vals[s] * hatted.chi[sij * 2 + m];
          for (int l = 0; l < 2; ++l) {
            x += ctx.eps * grad_p_vals[s][l] * hatted.iota[(sij * 2 + l) * 2 + m];
          }
          out.xi[(i * N + j) * 2 + m] += x;
        }
      }
    }
  }
  return out;
}

std::vector<double> block_source(const CellBasisSet& set, const std::vector<std::vector<double>>& basis,
                                 std::span<const double> f_block, const ScalingContext& ctx) {
  const auto& mesh = set.mesh;
  if (f_block.size() != static_cast<std::size_t>(mesh.cell_count())) {
    throw std::invalid_argument("block_source: source does not match the central mesh");
  }
  std::vector<double> out;
  for (const auto& v : basis) {
    double s = 0.0;
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto n = mesh.cell_nodes(c);
      s += f_block[c] * 0.25 * mesh.cell_area() * (v[n[0]] + v[n[1]] + v[n[2]] + v[n[3]]);
    }
    out.push_back(s / ctx.area);
  }
  return out;
}

std::vector<double> block_corner_moments(const CellBasisSet& set, const std::vector<std::vector<double>>& basis,
                                         std::span<const double> cell_coef, std::span<const double> w) {
  const auto& mesh = set.mesh;
  if (cell_coef.size() != static_cast<std::size_t>(mesh.cell_count())) {
    throw std::invalid_argument("block_corner_moments: coefficient does not match the central mesh");
  }
  if (!w.empty() && w.size() != static_cast<std::size_t>(mesh.node_count())) {
    throw std::invalid_argument("block_corner_moments: nodal field does not match the central mesh");
  }
  const auto& t = q1::tables();
  const double W = mesh.width();
  const double Hh = mesh.height();
  std::vector<double> out(basis.size() * 4, 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto n = mesh.cell_nodes(c);
    for (int q = 0; q < q1::kQuadPoints; ++q) {
      const Point x = q1::quad_point(mesh, c, q);
      const double xi = (x.x - mesh.x0) / W;
      const double eta = (x.y - mesh.y0) / Hh;
      const std::array<double, 4> corner{(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
      double wq = 1.0;
      if (!w.empty()) {
        wq = 0.0;
        for (int a = 0; a < 4; ++a) {
          wq += t.value[q][a] * w[n[a]];
        }
      }
      const double dx = t.weight[q] * mesh.cell_area() * cell_coef[c] * wq;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        double phi = 0.0;
        for (int a = 0; a < 4; ++a) {
          phi += t.value[q][a] * basis[i][n[a]];
        }
        for (int a = 0; a < 4; ++a) {
          out[i * 4 + a] += dx * phi * corner[a];
        }
      }
    }
  }
  return out;
}

std::vector<double> block_cells(const CoarseGrid& coarse, BlockId block, std::span<const double> global) {
  const auto cells = coarse.cells_in_block(block);
  std::vector<double> out(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out[k] = global[cells[k]];
  }
  return out;
}

std::vector<double> block_nodes(const CoarseGrid& coarse, BlockId block, std::span<const double> global) {
  const int c = coarse.cells_per_block;
  const int n = coarse.fine_cells_per_side + 1;
  const int i0 = coarse.block_i(block) * c;
  const int j0 = coarse.block_j(block) * c;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(c + 1) * (c + 1));
  for (int j = j0; j <= j0 + c; ++j) {
    for (int i = i0; i <= i0 + c; ++i) {
      out.push_back(global[static_cast<std::size_t>(j) * n + i]);
    }
  }
  return out;
}

std::vector<ScalingEntry> scaling_report(std::span<const ScalingSample> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("scaling_report needs tensors for at least two block sizes");
  }
  auto fro = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
      s += x * x;
    }
    return std::sqrt(s);
  };
  struct Pick {
    const char* name;
    double expected;
    const std::vector<double>& (*get)(const FlowEffective&);
  };
  const Pick picks[] = {
      {"beta", 0.0, [](const FlowEffective& f) -> const std::vector<double>& { return f.beta; }},
      {"beta_m", 1.0, [](const FlowEffective& f) -> const std::vector<double>& { return f.beta_m; }},
      {"alpha", 2.0, [](const FlowEffective& f) -> const std::vector<double>& { return f.alpha; }},
  };
  std::vector<ScalingEntry> out;
  for (const auto& p : picks) {
    ScalingEntry e;
    e.tensor = p.name;
    e.expected = p.expected;
    double reference = 0.0;
    for (const auto& s : samples) {
      reference = std::max(reference, fro(s.raw.alpha) / (s.H * s.H));
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
      const double norm = fro(p.get(s.raw));
      // Relative to α/|R|, which is O(1) for any medium.
      if (norm <= 1e-12 * reference * s.H * s.H) {
        e.degenerate = true;
        break;
      }
      const double x = std::log(s.H);
      const double y = std::log(norm);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    if (!e.degenerate) {
      const double n = static_cast<double>(samples.size());
      const double denom = n * sxx - sx * sx;
      if (denom == 0.0) {
        throw std::invalid_argument("scaling_report needs distinct block sizes");
      }
      e.fitted = (n * sxy - sx * sy) / denom;
      e.ok = std::abs(e.fitted - e.expected) <= 0.5;
    }
    out.push_back(e);
  }
  return out;
}

void write_tensor_csv_header(std::ostream& os) { os << "block,tensor,index,value\n"; }

namespace {

void row(std::ostream& os, BlockId block, const std::string& name, std::initializer_list<int> idx, double v) {
  os << block << ',' << name << ',';
  bool first = true;
  for (int k : idx) {
    os << (first ? "" : ".") << k + 1;
    first = false;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << ',' << buf << '\n';
}

}  // namespace

void write_tensor_csv(std::ostream& os, BlockId block, const FlowEffective& f, const TransportEffective* t,
                      const std::string& suffix) {
  const int N = f.continua;
  for (int i = 0; i < N; ++i) {
    for (int s = 0; s < N; ++s) {
      row(os, block, "beta" + suffix, {i, s}, f.beta[i * N + s]);
      for (int m = 0; m < 2; ++m) {
        row(os, block, "beta_m" + suffix, {i, s, m}, f.beta_m[(i * N + s) * 2 + m]);
      }
      for (int k = 0; k < 2; ++k) {
        for (int m = 0; m < 2; ++m) {
          row(os, block, "alpha" + suffix, {i, s, k, m}, f.a(i, s, k, m));
        }
      }
    }
  }
  if (t == nullptr) {
    return;
  }
  for (int i = 0; i < N; ++i) {
    for (int s = 0; s < N; ++s) {
      row(os, block, "gamma" + suffix, {i, s}, t->gamma[i * N + s]);
      row(os, block, "theta" + suffix, {i, s}, t->theta[i * N + s]);
      for (int m = 0; m < 2; ++m) {
        row(os, block, "theta_m" + suffix, {i, s, m}, t->theta_m[(i * N + s) * 2 + m]);
      }
      for (int k = 0; k < 2; ++k) {
        for (int m = 0; m < 2; ++m) {
          row(os, block, "eta" + suffix, {i, s, k, m}, t->eta[(i * 2 + m) * 2 * N + s * 2 + k]);
        }
      }
    }
  }
  for (int s = 0; s < N; ++s) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const int sij = (s * N + i) * N + j;
        row(os, block, "zeta" + suffix, {s, i, j}, t->zeta[sij]);
        for (int m = 0; m < 2; ++m) {
          row(os, block, "chi" + suffix, {s, i, j, m}, t->chi[sij * 2 + m]);
          row(os, block, "upsilon" + suffix, {s, i, j, m}, t->upsilon[sij * 2 + m]);
          for (int l = 0; l < 2; ++l) {
            row(os, block, "iota" + suffix, {s, i, j, l, m}, t->iota[(sij * 2 + l) * 2 + m]);
          }
        }
      }
    }
  }
}

}  // namespace mch

#include "mch/macro.hpp"

#include <array>
#include <stdexcept>

#include "mch/fem.hpp"

namespace mch {

namespace {

using Local = std::array<std::array<double, 4>, 4>;

/// Reference integrals on one coarse block.
struct Element {
  Local mass{};
  std::array<std::array<Local, 2>, 2> stiff{};  // [m][k]: ∫ ∂_m N_b ∂_k N_a
  std::array<Local, 2> conv{};                  // [m]:    ∫ ∂_m N_b N_a
};

Element coarse_element(const RectMesh& mesh) {
  const auto& t = q1::tables();
  Element e;
  for (int q = 0; q < q1::kQuadPoints; ++q) {
    const double w = t.weight[q] * mesh.cell_area();
    for (int a = 0; a < 4; ++a) {
      const Vec2 ga = q1::shape_gradient(mesh, q, a);
      for (int b = 0; b < 4; ++b) {
        const Vec2 gb = q1::shape_gradient(mesh, q, b);
        e.mass[a][b] += w * t.value[q][a] * t.value[q][b];
        for (int m = 0; m < 2; ++m) {
          e.conv[m][a][b] += w * gb[m] * t.value[q][a];
          for (int k = 0; k < 2; ++k) {
            e.stiff[m][k][a][b] += w * gb[m] * ga[k];
          }
        }
      }
    }
  }
  return e;
}

void check_blocks(const CoarseGrid& coarse, std::size_t n, const char* what) {
  if (n != static_cast<std::size_t>(coarse.block_count())) {
    throw std::invalid_argument(std::string(what) + ": tensors for " + std::to_string(n) + " of " +
                                std::to_string(coarse.block_count()) + " blocks");
  }
}

/// Adds coefficient·local to the (test s, trial i) block of every coarse element.
template <class Coef>
SparseMatrix assemble_blocks(const CoarseGrid& coarse, int N, Coef&& coef) {
  const auto& mesh = coarse.mesh;
  const int nn = mesh.node_count();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16 * N * N);
  Local k{};
  for (int b = 0; b < mesh.cell_count(); ++b) {
    const auto nodes = mesh.cell_nodes(b);
    for (int s = 0; s < N; ++s) {
      for (int i = 0; i < N; ++i) {
        coef(b, i, s, k);
        for (int a = 0; a < 4; ++a) {
          for (int c = 0; c < 4; ++c) {
            trip.push_back({s * nn + nodes[a], i * nn + nodes[c], k[a][c]});
          }
        }
      }
    }
  }
  return assemble_from_triplets(N * nn, N * nn, std::move(trip));
}

std::vector<char> all_boundaries(const CoarseGrid& coarse, int N) {
  const auto one = boundary_mask(coarse.mesh);
  std::vector<char> fixed;
  for (int i = 0; i < N; ++i) {
    fixed.insert(fixed.end(), one.begin(), one.end());
  }
  return fixed;
}

}  // namespace

std::vector<double> block_constant_load(const CoarseGrid& coarse, std::span<const double> per_block, int N) {
  check_blocks(coarse, per_block.size() / static_cast<std::size_t>(N), "macro source");
  const auto& mesh = coarse.mesh;
  const int nn = mesh.node_count();
  std::vector<double> b(static_cast<std::size_t>(N) * nn, 0.0);
  const double quarter = 0.25 * mesh.cell_area();
  for (int k = 0; k < mesh.cell_count(); ++k) {
    for (int n : mesh.cell_nodes(k)) {
      for (int i = 0; i < N; ++i) {
        b[i * nn + n] += quarter * per_block[k * N + i];
      }
    }
  }
  return b;
}

std::vector<double> corner_load(const CoarseGrid& coarse, std::span<const double> per_corner, int N) {
  check_blocks(coarse, per_corner.size() / (4 * static_cast<std::size_t>(N)), "macro source");
  const auto& mesh = coarse.mesh;
  const int nn = mesh.node_count();
  std::vector<double> b(static_cast<std::size_t>(N) * nn, 0.0);
  for (int k = 0; k < mesh.cell_count(); ++k) {
    const auto nodes = mesh.cell_nodes(k);
    for (int i = 0; i < N; ++i) {
      for (int a = 0; a < 4; ++a) {
        b[i * nn + nodes[a]] += per_corner[(k * N + i) * 4 + a];
      }
    }
  }
  return b;
}

MacroFlowSystem assemble_macro_flow(const CoarseGrid& coarse, std::span<const FlowEffective> eff,
                                    std::span<const double> load, PressureBc bc, TensorRoute route) {
  check_blocks(coarse, eff.size(), "assemble_macro_flow");
  const int N = eff.front().continua;
  if (load.size() != static_cast<std::size_t>(N) * coarse.node_count()) {
    throw std::invalid_argument("assemble_macro_flow: load vector does not match the coarse unknowns");
  }
  const auto el = coarse_element(coarse.mesh);
  const auto ctx = ScalingContext::for_block_size(coarse.H);
  const double inv_eps2 = 1.0 / (ctx.eps * ctx.eps);
  MacroFlowSystem sys;
  sys.full = assemble_blocks(coarse, N, [&](int b, int i, int s, Local& k) {
    const auto& f = eff[b];
    double beta = 0.0;
    std::array<std::array<double, 2>, 2> alpha{};
    if (route == TensorRoute::Hatted) {
      beta = inv_eps2 * f.beta[i * N + s];
      for (int kk = 0; kk < 2; ++kk) {
        for (int m = 0; m < 2; ++m) {
          alpha[m][kk] = f.a(i, s, kk, m);
        }
      }
    } else {
      // `f` holds raw integrals; ε⁻²·ε²/|R| and 1/|R| collapse to 1/|R|.
      beta = f.beta[i * N + s] / ctx.area;
      for (int kk = 0; kk < 2; ++kk) {
        for (int m = 0; m < 2; ++m) {
          alpha[m][kk] = f.a(i, s, kk, m) / ctx.area;
        }
      }
    }
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        double v = beta * el.mass[a][c];
        for (int m = 0; m < 2; ++m) {
          for (int kk = 0; kk < 2; ++kk) {
            v += alpha[m][kk] * el.stiff[m][kk][a][c];
          }
        }
        k[a][c] = v;
      }
    }
  });
  sys.fixed = all_boundaries(coarse, N);
  const int nn = coarse.node_count();
  std::vector<double> values(sys.fixed.size(), 0.0);
  for (int i = 0; i < N; ++i) {
    for (int n = 0; n < nn; ++n) {
      if (sys.fixed[i * nn + n]) {
        values[i * nn + n] = pressure_boundary_value(bc, coarse.mesh.node_point(n));
      }
    }
  }
  sys.rhs = lift_rhs(sys.full, sys.fixed, values, load);
  sys.matrix = eliminate_dirichlet(sys.full, sys.fixed);
  return sys;
}

double block_center_value(const CoarseGrid& coarse, std::span<const double> nodal, BlockId b) {
  const auto n = coarse.mesh.cell_nodes(b);
  return 0.25 * (nodal[n[0]] + nodal[n[1]] + nodal[n[2]] + nodal[n[3]]);
}

Vec2 block_center_gradient(const CoarseGrid& coarse, std::span<const double> nodal, BlockId b) {
  const auto n = coarse.mesh.cell_nodes(b);
  const double H = coarse.H;
  return {0.5 * ((nodal[n[1]] - nodal[n[0]]) + (nodal[n[2]] - nodal[n[3]])) / H,
          0.5 * ((nodal[n[3]] - nodal[n[0]]) + (nodal[n[2]] - nodal[n[1]])) / H};
}

void freeze_pressure(const CoarseGrid& coarse, MacroState& state) {
  const int N = state.continua;
  state.frozen_p.assign(static_cast<std::size_t>(coarse.block_count()) * N, 0.0);
  state.frozen_grad_p.assign(static_cast<std::size_t>(coarse.block_count()) * N, Vec2{0.0, 0.0});
  for (int b = 0; b < coarse.block_count(); ++b) {
    for (int s = 0; s < N; ++s) {
      state.frozen_p[b * N + s] = block_center_value(coarse, state.p(s), b);
      state.frozen_grad_p[b * N + s] = block_center_gradient(coarse, state.p(s), b);
    }
  }
}

MacroState solve_macro_flow(const CoarseGrid& coarse, const MacroFlowSystem& sys, int continua) {
  MacroState state;
  state.continua = continua;
  state.nodes = coarse.node_count();
  state.P = solve_direct(sys.matrix, sys.rhs).x;
  state.C.assign(state.P.size(), 0.0);
  freeze_pressure(coarse, state);
  return state;
}

std::vector<CombinedTransport> combine_all(const MacroState& state, std::span<const TransportEffective> hatted,
                                           const ScalingContext& ctx) {
  const int N = state.continua;
  std::vector<CombinedTransport> out;
  out.reserve(hatted.size());
  for (std::size_t b = 0; b < hatted.size(); ++b) {
    out.push_back(combine_transport(hatted[b], std::span(state.frozen_p).subspan(b * N, N),
                                    std::span(state.frozen_grad_p).subspan(b * N, N), ctx));
  }
  return out;
}

SparseMatrix assemble_macro_transport_mass(const CoarseGrid& coarse, std::span<const TransportEffective> hatted) {
  check_blocks(coarse, hatted.size(), "macro mass");
  const int N = hatted.front().continua;
  const auto el = coarse_element(coarse.mesh);
  return assemble_blocks(coarse, N, [&](int b, int i, int s, Local& k) {
    const double g = hatted[b].gamma[i * N + s];
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        k[a][c] = g * el.mass[a][c];
      }
    }
  });
}

MacroTransportParts assemble_macro_transport(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                                             std::span<const CombinedTransport> combined) {
  check_blocks(coarse, hatted.size(), "assemble_macro_transport");
  check_blocks(coarse, combined.size(), "assemble_macro_transport");
  const int N = hatted.front().continua;
  const auto el = coarse_element(coarse.mesh);
  const double eps = coarse.H;
  const double inv_eps = 1.0 / eps;
  const double inv_eps2 = 1.0 / (eps * eps);
  MacroTransportParts parts;
  parts.mass = assemble_macro_transport_mass(coarse, hatted);
  parts.stiffness = assemble_blocks(coarse, N, [&](int b, int i, int s, Local& k) {
    const auto& eta = hatted[b].eta;
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        double v = 0.0;
        for (int m = 0; m < 2; ++m) {
          for (int kk = 0; kk < 2; ++kk) {
            v += eta[(i * 2 + m) * 2 * N + s * 2 + kk] * el.stiff[m][kk][a][c];
          }
        }
        k[a][c] = v;
      }
    }
  });
  parts.convection = assemble_blocks(coarse, N, [&](int b, int i, int s, Local& k) {
    const auto& xi = combined[b].xi;
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        k[a][c] = inv_eps * (xi[(i * N + s) * 2] * el.conv[0][a][c] + xi[(i * N + s) * 2 + 1] * el.conv[1][a][c]);
      }
    }
  });
  parts.reaction = assemble_blocks(coarse, N, [&](int b, int i, int s, Local& k) {
    const double th = inv_eps2 * combined[b].big_theta[i * N + s];
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        k[a][c] = th * el.mass[a][c];
      }
    }
  });
  return parts;
}

namespace {

SparseMatrix transport_system(const MacroTransportParts& parts, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("macro transport time step must be positive");
  }
  auto a = linear_combination(1.0, parts.stiffness, 1.0, parts.convection);
  a = linear_combination(1.0, a, 1.0, parts.reaction);
  return linear_combination(1.0 / tau, parts.mass, 1.0, a);
}

}  // namespace

MacroTransport::MacroTransport(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                               std::span<const CombinedTransport> combined, std::span<const double> load,
                               ConcentrationBc bc, double tau)
    : tau_(tau), bc_(bc), lu_([&] {
        const auto parts = assemble_macro_transport(coarse, hatted, combined);
        mass_ = parts.mass;
        system_ = transport_system(parts, tau);
        if (load.size() != static_cast<std::size_t>(hatted.front().continua) * coarse.node_count()) {
          throw std::invalid_argument("macro transport: load vector does not match the coarse unknowns");
        }
        load_.assign(load.begin(), load.end());
        fixed_ = all_boundaries(coarse, hatted.front().continua);
        return LuFactorization(bc == ConcentrationBc::DirichletZero ? eliminate_dirichlet(system_, fixed_)
                                                                    : system_);
      }()) {}

void MacroTransport::step(MacroState& state) const {
  auto rhs = mass_.multiply(state.C);
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    rhs[k] = rhs[k] / tau_ + load_[k];
    if (bc_ == ConcentrationBc::DirichletZero && fixed_[k]) {
      rhs[k] = 0.0;
    }
  }
  state.C = lu_.solve(rhs).x;
  state.t += tau_;
}

void step_macro_transport(MacroState& state, const MacroTransport& op) { op.step(state); }

std::vector<double> initial_macro_concentration(const CoarseGrid& coarse, const ContinuumMap& continua,
                                                std::span<const double> fine_nodal) {
  const int N = continua.continua;
  const int M = coarse.blocks_per_side;
  const int nn = coarse.node_count();
  std::vector<double> out(static_cast<std::size_t>(N) * nn, 0.0);
  for (int i = 0; i < N; ++i) {
    const auto avg = block_average(fine_nodal, coarse, continua, i);
    for (int J = 0; J <= M; ++J) {
      for (int I = 0; I <= M; ++I) {
        double s = 0.0;
        int count = 0;
        for (int bj = J - 1; bj <= J; ++bj) {
          for (int bi = I - 1; bi <= I; ++bi) {
            if (bi >= 0 && bj >= 0 && bi < M && bj < M) {
              s += avg[coarse.block(bi, bj)];
              ++count;
            }
          }
        }
        out[i * nn + coarse.mesh.node(I, J)] = s / count;
      }
    }
  }
  return out;
}

std::vector<double> project_macro_concentration(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                                                std::span<const double> moments, ConcentrationBc bc) {
  const auto mass = assemble_macro_transport_mass(coarse, hatted);
  if (moments.size() != static_cast<std::size_t>(mass.rows())) {
    throw std::invalid_argument("project_macro_concentration: moments do not match the coarse unknowns");
  }
  if (bc == ConcentrationBc::NeumannZero) {
    return solve_direct(mass, moments).x;
  }
  const auto fixed = all_boundaries(coarse, hatted.front().continua);
  const std::vector<double> zero(fixed.size(), 0.0);
  return solve_direct(eliminate_dirichlet(mass, fixed), lift_rhs(mass, fixed, zero, moments)).x;
}

std::vector<double> macro_block_average(const CoarseGrid& coarse, std::span<const double> nodal) {
  std::vector<double> out(coarse.block_count());
  for (int b = 0; b < coarse.block_count(); ++b) {
    out[b] = block_center_value(coarse, nodal, b);
  }
  return out;
}

std::vector<std::vector<double>> downscale(const CoarseGrid& coarse, std::span<const CellBasisSet> sets,
                                           std::span<const double> U, int continua, bool transport) {
  check_blocks(coarse, sets.size(), "downscale");
  const int N = continua;
  const int nn = coarse.node_count();
  std::vector<std::vector<double>> out;
  out.reserve(sets.size());
  for (const auto& set : sets) {
    const auto& avg = transport ? set.transport_average : set.flow_average;
    const auto& grad = transport ? set.transport_gradient : set.flow_gradient;
    if (avg.size() != static_cast<std::size_t>(N) || grad.size() != static_cast<std::size_t>(2 * N)) {
      throw std::invalid_argument("downscale: basis of block " + std::to_string(set.block) + " is missing");
    }
    std::vector<double> v(avg.front().size(), 0.0);
    for (int i = 0; i < N; ++i) {
      const auto ui = U.subspan(static_cast<std::size_t>(i) * nn, nn);
      const double val = block_center_value(coarse, ui, set.block);
      const Vec2 g = block_center_gradient(coarse, ui, set.block);
      for (std::size_t n = 0; n < v.size(); ++n) {
        v[n] += avg[i][n] * val + grad[i * 2][n] * g[0] + grad[i * 2 + 1][n] * g[1];
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> patches_to_cells(const CoarseGrid& coarse, const std::vector<std::vector<double>>& patches) {
  const int c = coarse.cells_per_block;
  const RectMesh local{c, c, 0.0, 0.0, 1.0, 1.0};
  std::vector<double> out(static_cast<std::size_t>(coarse.fine_cells_per_side) * coarse.fine_cells_per_side);
  for (int b = 0; b < coarse.block_count(); ++b) {
    const auto cells = coarse.cells_in_block(b);
    for (int k = 0; k < local.cell_count(); ++k) {
      const auto n = local.cell_nodes(k);
      const auto& p = patches[b];
      out[cells[k]] = 0.25 * (p[n[0]] + p[n[1]] + p[n[2]] + p[n[3]]);
    }
  }
  return out;
}

double center_of_mass_x(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                        std::span<const double> C, int continuum) {
  check_blocks(coarse, hatted.size(), "center_of_mass_x");
  const int N = hatted.front().continua;
  const int nn = coarse.node_count();
  const auto ci = C.subspan(static_cast<std::size_t>(continuum) * nn, nn);
  const auto& mesh = coarse.mesh;
  const auto& t = q1::tables();
  double mass = 0.0;
  double first = 0.0;
  for (int b = 0; b < mesh.cell_count(); ++b) {
    const double g = hatted[b].gamma[continuum * N + continuum];
    const auto n = mesh.cell_nodes(b);
    for (int q = 0; q < q1::kQuadPoints; ++q) {
      double v = 0.0;
      for (int a = 0; a < 4; ++a) {
        v += t.value[q][a] * ci[n[a]];
      }
      const double w = g * t.weight[q] * mesh.cell_area() * v;
      mass += w;
      first += w * q1::quad_point(mesh, b, q).x;
    }
  }
  if (mass == 0.0) {
    throw std::invalid_argument("center_of_mass_x: zero total mass");
  }
  return first / mass;
}

}  // namespace mch

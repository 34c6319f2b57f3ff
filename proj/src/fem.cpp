#include "mch/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mch {

namespace {

using Local = std::array<std::array<double, 4>, 4>;

void check_cells(const RectMesh& mesh, std::size_t n, const char* what) {
  if (n != static_cast<std::size_t>(mesh.cell_count())) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(n) + " cell values for " +
                                std::to_string(mesh.cell_count()) + " cells");
  }
}

void check_nodes(const RectMesh& mesh, std::size_t n, const char* what) {
  if (n != static_cast<std::size_t>(mesh.node_count())) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(n) + " nodal values for " +
                                std::to_string(mesh.node_count()) + " nodes");
  }
}

void scatter(std::vector<Triplet>& out, const std::array<int, 4>& nodes, const Local& k) {
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      out.push_back({nodes[a], nodes[b], k[a][b]});
    }
  }
}

Local reference_stiffness(const RectMesh& mesh) {
  const auto& t = q1::tables();
  Local k{};
  for (int q = 0; q < q1::kQuadPoints; ++q) {
    const double w = t.weight[q] * mesh.cell_area();
    for (int a = 0; a < 4; ++a) {
      const Vec2 ga = q1::shape_gradient(mesh, q, a);
      for (int b = 0; b < 4; ++b) {
        const Vec2 gb = q1::shape_gradient(mesh, q, b);
        k[a][b] += w * (ga[0] * gb[0] + ga[1] * gb[1]);
      }
    }
  }
  return k;
}

Local reference_mass(const RectMesh& mesh) {
  const auto& t = q1::tables();
  Local k{};
  for (int q = 0; q < q1::kQuadPoints; ++q) {
    const double w = t.weight[q] * mesh.cell_area();
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        k[a][b] += w * t.value[q][a] * t.value[q][b];
      }
    }
  }
  return k;
}

AssembledOperator scaled_reference(const RectMesh& mesh, std::span<const double> coeff, const Local& ref,
                                   OperatorKind kind, std::string name) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    Local k = ref;
    for (auto& row : k) {
      for (auto& v : row) {
        v *= coeff[c];
      }
    }
    scatter(trip, mesh.cell_nodes(c), k);
  }
  return {assemble_from_triplets(mesh.node_count(), mesh.node_count(), std::move(trip)), kind, std::move(name)};
}

int locate(double x, double x0, double h, int n) {
  const double r = (x - x0) / h;
  if (!(r >= -1e-9 && r <= n + 1e-9)) {
    throw std::out_of_range("point outside the mesh at coordinate " + std::to_string(x));
  }
  return std::clamp(static_cast<int>(std::floor(r)), 0, n - 1);
}

}  // namespace

AssembledOperator assemble_stiffness(const RectMesh& mesh, std::span<const double> coeff, std::string name) {
  check_cells(mesh, coeff.size(), "assemble_stiffness");
  return scaled_reference(mesh, coeff, reference_stiffness(mesh), OperatorKind::Stiffness, std::move(name));
}

AssembledOperator assemble_mass(const RectMesh& mesh, std::span<const double> coeff, std::string name) {
  check_cells(mesh, coeff.size(), "assemble_mass");
  return scaled_reference(mesh, coeff, reference_mass(mesh), OperatorKind::Mass, std::move(name));
}

std::vector<Vec2> darcy_velocity(const RectMesh& mesh, std::span<const double> kappa,
                                 std::span<const double> pressure) {
  check_cells(mesh, kappa.size(), "darcy_velocity");
  check_nodes(mesh, pressure.size(), "darcy_velocity");
  std::vector<Vec2> u(static_cast<std::size_t>(mesh.cell_count()) * q1::kQuadPoints);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell_nodes(c);
    for (int q = 0; q < q1::kQuadPoints; ++q) {
      Vec2 g{0.0, 0.0};
      for (int a = 0; a < 4; ++a) {
        const Vec2 ga = q1::shape_gradient(mesh, q, a);
        g[0] += ga[0] * pressure[nodes[a]];
        g[1] += ga[1] * pressure[nodes[a]];
      }
      u[c * q1::kQuadPoints + q] = {-kappa[c] * g[0], -kappa[c] * g[1]};
    }
  }
  return u;
}

AssembledOperator assemble_convection(const RectMesh& mesh, std::span<const Vec2> velocity) {
  if (velocity.size() != static_cast<std::size_t>(mesh.cell_count()) * q1::kQuadPoints) {
    throw std::invalid_argument("assemble_convection: velocity must be tabulated at 4 points per cell");
  }
  const auto& t = q1::tables();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    Local k{};
    for (int q = 0; q < q1::kQuadPoints; ++q) {
      const Vec2 u = velocity[c * q1::kQuadPoints + q];
      const double w = t.weight[q] * mesh.cell_area();
      for (int b = 0; b < 4; ++b) {
        const Vec2 gb = q1::shape_gradient(mesh, q, b);
        const double adv = w * (u[0] * gb[0] + u[1] * gb[1]);
        for (int a = 0; a < 4; ++a) {
          k[a][b] += adv * t.value[q][a];
        }
      }
    }
    scatter(trip, mesh.cell_nodes(c), k);
  }
  return {assemble_from_triplets(mesh.node_count(), mesh.node_count(), std::move(trip)), OperatorKind::Convection,
          "velocity"};
}

AssembledOperator assemble_convection(const RectMesh& mesh, std::span<const double> kappa,
                                      std::span<const double> pressure) {
  auto op = assemble_convection(mesh, darcy_velocity(mesh, kappa, pressure));
  op.coefficient = "kappa";
  return op;
}

std::vector<double> assemble_load(const RectMesh& mesh, std::span<const double> cell_values) {
  check_cells(mesh, cell_values.size(), "assemble_load");
  std::vector<double> b(mesh.node_count(), 0.0);
  const double quarter = 0.25 * mesh.cell_area();
  for (int c = 0; c < mesh.cell_count(); ++c) {
    for (int n : mesh.cell_nodes(c)) {
      b[n] += quarter * cell_values[c];
    }
  }
  return b;
}

std::vector<char> boundary_mask(const RectMesh& mesh) {
  std::vector<char> fixed(mesh.node_count(), 0);
  for (int n = 0; n < mesh.node_count(); ++n) {
    fixed[n] = mesh.is_boundary_node(n) ? 1 : 0;
  }
  return fixed;
}

SparseMatrix eliminate_dirichlet(const SparseMatrix& a, std::span<const char> fixed) {
  if (a.rows() != a.cols() || fixed.size() != static_cast<std::size_t>(a.rows())) {
    throw std::invalid_argument("eliminate_dirichlet: mask does not match the square matrix");
  }
  std::vector<int> ptr(a.rows() + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(a.nnz());
  val.reserve(a.nnz());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto av = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    if (fixed[r]) {
      idx.push_back(r);
      val.push_back(1.0);
    } else {
      for (int k = rp[r]; k < rp[r + 1]; ++k) {
        if (!fixed[ci[k]]) {
          idx.push_back(ci[k]);
          val.push_back(av[k]);
        }
      }
    }
    ptr[r + 1] = static_cast<int>(idx.size());
  }
  return {a.rows(), a.cols(), std::move(ptr), std::move(idx), std::move(val)};
}

std::vector<double> lift_rhs(const SparseMatrix& a, std::span<const char> fixed, std::span<const double> values,
                             std::span<const double> b) {
  const auto n = static_cast<std::size_t>(a.rows());
  if (fixed.size() != n || values.size() != n || b.size() != n) {
    throw std::invalid_argument("lift_rhs: dimension mismatch");
  }
  std::vector<double> g(n, 0.0);
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (fixed[k]) {
      g[k] = values[k];
      any = any || values[k] != 0.0;
    }
  }
  std::vector<double> out(b.begin(), b.end());
  if (any) {
    const auto ag = a.multiply(g);
    for (std::size_t k = 0; k < n; ++k) {
      out[k] -= ag[k];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (fixed[k]) {
      out[k] = g[k];
    }
  }
  return out;
}

FineSolution solve_flow_fine(const FineGrid& grid, const CellField& kappa, std::span<const double> g,
                             PressureBc bc) {
  const auto& mesh = grid.mesh;
  const auto a = assemble_stiffness(mesh, kappa.values).matrix;
  const auto fixed = boundary_mask(mesh);
  std::vector<double> values(mesh.node_count(), 0.0);
  for (int n = 0; n < mesh.node_count(); ++n) {
    if (fixed[n]) {
      values[n] = pressure_boundary_value(bc, mesh.node_point(n));
    }
  }
  const auto rhs = lift_rhs(a, fixed, values, assemble_load(mesh, g));
  auto sol = solve_direct(eliminate_dirichlet(a, fixed), rhs);
  FineSolution out;
  out.nodal = std::move(sol.x);
  out.residual_norm = sol.residual_norm;
  return out;
}

namespace {

SparseMatrix transport_matrix(const SparseMatrix& mass, const SparseMatrix& conv, const SparseMatrix& diff,
                              double tau, std::span<const char> fixed, ConcentrationBc bc) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("transport time step must be positive");
  }
  auto a = linear_combination(1.0 / tau, mass, 1.0, linear_combination(1.0, conv, 1.0, diff));
  return bc == ConcentrationBc::DirichletZero ? eliminate_dirichlet(a, fixed) : a;
}

}  // namespace

FineTransport::FineTransport(const FineGrid& grid, const CellField& kappa, const CellField& diffusion,
                             const CellField& porosity, std::span<const double> pressure, std::span<const double> h,
                             ConcentrationBc bc, double tau)
    : tau_(tau),
      bc_(bc),
      mass_(assemble_mass(grid.mesh, porosity.values).matrix),
      convection_(assemble_convection(grid.mesh, kappa.values, pressure).matrix),
      diffusion_(assemble_stiffness(grid.mesh, diffusion.values, "D").matrix),
      load_(assemble_load(grid.mesh, h)),
      fixed_(boundary_mask(grid.mesh)),
      lu_(transport_matrix(mass_, convection_, diffusion_, tau, fixed_, bc)) {}

std::vector<double> FineTransport::step(std::span<const double> c) const {
  auto rhs = mass_.multiply(c);
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    rhs[k] = rhs[k] / tau_ + load_[k];
    if (bc_ == ConcentrationBc::DirichletZero && fixed_[k]) {
      rhs[k] = 0.0;
    }
  }
  return lu_.solve(rhs).x;
}

std::vector<double> step_transport_fine(const FineTransport& op, std::span<const double> c) { return op.step(c); }

int steps_to(double t, double tau) {
  if (t < 0.0) {
    throw std::invalid_argument("negative output time");
  }
  const double r = t / tau;
  const long n = std::lround(r);
  if (std::abs(r - static_cast<double>(n)) > 1e-6) {
    throw std::invalid_argument("output time " + std::to_string(t) + " is not a multiple of tau = " +
                                std::to_string(tau));
  }
  return static_cast<int>(n);
}

FineSolution run_transport_fine(const FineTransport& op, std::vector<double> c0,
                                std::span<const double> output_times) {
  FineSolution out;
  int done = 0;
  auto c = std::move(c0);
  for (double t : output_times) {
    const int target = steps_to(t, op.tau());
    if (target < done) {
      throw std::invalid_argument("output times must be nondecreasing");
    }
    for (; done < target; ++done) {
      c = op.step(c);
    }
    out.times.push_back(t);
    out.snapshots.push_back(c);
  }
  out.nodal = std::move(c);
  return out;
}

std::vector<double> block_average(std::span<const double> nodal, const CoarseGrid& coarse,
                                  const ContinuumMap& continua, int continuum) {
  const int n = coarse.fine_cells_per_side;
  const RectMesh mesh{n, n, 0.0, 0.0, 1.0 / n, 1.0 / n};
  check_nodes(mesh, nodal.size(), "block_average");
  check_cells(mesh, continua.label.size(), "block_average");
  std::vector<double> sum(coarse.block_count(), 0.0);
  std::vector<int> count(coarse.block_count(), 0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    if (continua.label[c] != continuum) {
      continue;
    }
    const auto nodes = mesh.cell_nodes(c);
    const double mean = 0.25 * (nodal[nodes[0]] + nodal[nodes[1]] + nodal[nodes[2]] + nodal[nodes[3]]);
    const int b = coarse.block_of_cell(c);
    sum[b] += mean;
    ++count[b];
  }
  for (int b = 0; b < coarse.block_count(); ++b) {
    if (count[b] == 0) {
      throw std::invalid_argument("block_average: block " + std::to_string(b) + " has no cell of continuum " +
                                  std::to_string(continuum + 1));
    }
    sum[b] /= count[b];
  }
  return sum;
}

double interpolate(const RectMesh& mesh, std::span<const double> nodal, Point x) {
  const int i = locate(x.x, mesh.x0, mesh.hx, mesh.nx);
  const int j = locate(x.y, mesh.y0, mesh.hy, mesh.ny);
  const double s = (x.x - mesh.x0) / mesh.hx - i;
  const double t = (x.y - mesh.y0) / mesh.hy - j;
  const auto nodes = mesh.cell_nodes(mesh.cell(i, j));
  return (1 - s) * (1 - t) * nodal[nodes[0]] + s * (1 - t) * nodal[nodes[1]] + s * t * nodal[nodes[2]] +
         (1 - s) * t * nodal[nodes[3]];
}

Vec2 interpolate_gradient(const RectMesh& mesh, std::span<const double> nodal, Point x) {
  const int i = locate(x.x, mesh.x0, mesh.hx, mesh.nx);
  const int j = locate(x.y, mesh.y0, mesh.hy, mesh.ny);
  const double s = (x.x - mesh.x0) / mesh.hx - i;
  const double t = (x.y - mesh.y0) / mesh.hy - j;
  const auto n = mesh.cell_nodes(mesh.cell(i, j));
  const double dx = ((1 - t) * (nodal[n[1]] - nodal[n[0]]) + t * (nodal[n[2]] - nodal[n[3]])) / mesh.hx;
  const double dy = ((1 - s) * (nodal[n[3]] - nodal[n[0]]) + s * (nodal[n[2]] - nodal[n[1]])) / mesh.hy;
  return {dx, dy};
}

double l2_error(const RectMesh& mesh, std::span<const double> nodal, const std::function<double(Point)>& exact) {
  check_nodes(mesh, nodal.size(), "l2_error");
  const double r = std::sqrt(0.6);
  const std::array<double, 3> gp{0.5 * (1 - r), 0.5, 0.5 * (1 + r)};
  const std::array<double, 3> gw{5.0 / 18, 8.0 / 18, 5.0 / 18};
  double sum = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto n = mesh.cell_nodes(c);
    const int i = c % mesh.nx;
    const int j = c / mesh.nx;
    for (int qj = 0; qj < 3; ++qj) {
      for (int qi = 0; qi < 3; ++qi) {
        const double s = gp[qi];
        const double t = gp[qj];
        const double uh = (1 - s) * (1 - t) * nodal[n[0]] + s * (1 - t) * nodal[n[1]] + s * t * nodal[n[2]] +
                          (1 - s) * t * nodal[n[3]];
        const double e = uh - exact({mesh.x0 + (i + s) * mesh.hx, mesh.y0 + (j + t) * mesh.hy});
        sum += gw[qi] * gw[qj] * mesh.cell_area() * e * e;
      }
    }
  }
  return std::sqrt(sum);
}

}  // namespace mch

#include "mch/cells.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mch/fem.hpp"

namespace mch {

double ConstraintSet::average_target(int i, int k, int j) const { return i == j ? area[k * continua + j] : 0.0; }

double ConstraintSet::gradient_target(int i, int m, int k, int j) const {
  if (i != j) {
    return 0.0;
  }
  const int r = k * continua + j;
  return moment[r * 2 + m] - shift[j * 2 + m] * area[r];
}

std::vector<double> restrict_cells(const OversampleRegion& region, std::span<const double> global) {
  std::vector<double> out(region.mesh.cell_count());
  for (int c = 0; c < region.mesh.cell_count(); ++c) {
    out[c] = global[region.global_cell(c)];
  }
  return out;
}

double centroid_shift(const OversampleRegion& region, const ContinuumMap& continua, int j, int m) {
  double area = 0.0;
  double first = 0.0;
  for (int c : region.central_cells()) {
    if (continua.label[region.global_cell(c)] != j) {
      continue;
    }
    const Point p = region.mesh.cell_center(c);
    area += 1.0;
    first += m == 0 ? p.x : p.y;
  }
  if (area == 0.0) {
    throw std::invalid_argument("centroid_shift: continuum " + std::to_string(j + 1) + " is empty in block " +
                                std::to_string(region.center_block));
  }
  return first / area;
}

ConstraintSet build_constraints(const CoarseGrid& coarse, const ContinuumMap& continua, BlockId block, int layers,
                                RegionBoundary boundary) {
  ConstraintSet cs;
  cs.region = oversample_region(coarse, block, layers, boundary);
  cs.continua = continua.continua;
  const auto& mesh = cs.region.mesh;
  const int N = cs.continua;
  const int K = cs.member_count();
  const double cell = mesh.cell_area();

  cs.label = std::vector<int>(mesh.cell_count());
  cs.area.assign(static_cast<std::size_t>(K) * N, 0.0);
  cs.moment.assign(static_cast<std::size_t>(K) * N * 2, 0.0);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.cell_count()) * 4);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const int j = continua.label[cs.region.global_cell(c)];
    cs.label[c] = j;
    const int r = cs.region.member_of_cell(c) * N + j;
    for (int n : mesh.cell_nodes(c)) {
      trip.push_back({r, n, 0.25 * cell});
    }
    const Point p = mesh.cell_center(c);
    cs.area[r] += cell;
    cs.moment[r * 2] += p.x * cell;
    cs.moment[r * 2 + 1] += p.y * cell;
  }
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < N; ++j) {
      if (cs.area[k * N + j] <= 0.0) {
        throw std::invalid_argument("cell problem of block " + std::to_string(block) + ": member block " +
                                    std::to_string(cs.region.member_blocks[k]) + " contains no cell of continuum " +
                                    std::to_string(j + 1));
      }
    }
  }
  cs.rows = assemble_from_triplets(K * N, mesh.node_count(), std::move(trip));
  cs.shift.resize(static_cast<std::size_t>(N) * 2);
  for (int j = 0; j < N; ++j) {
    for (int m = 0; m < 2; ++m) {
      cs.shift[j * 2 + m] = centroid_shift(cs.region, continua, j, m);
    }
  }
  return cs;
}

namespace {

SparseMatrix kkt_matrix(const ConstraintSet& cs, const SparseMatrix& op, double s) {
  const int n = op.rows();
  const int r = cs.rows.rows();
  auto trip = op.triplets();
  trip.reserve(trip.size() + 2 * static_cast<std::size_t>(cs.rows.nnz()));
  for (const auto& t : cs.rows.triplets()) {
    trip.push_back({n + t.row, t.col, s * t.value});
    trip.push_back({t.col, n + t.row, s * t.value});
  }
  return assemble_from_triplets(n + r, n + r, std::move(trip));
}

}  // namespace

ConstrainedCellSolver::ConstrainedCellSolver(const ConstraintSet& cs, const SparseMatrix& op)
    : cs_(&cs),
      row_scale_(1.0 / cs.region.mesh.cell_area()),
      lu_([&] {
        try {
          return LuFactorization(kkt_matrix(cs, op, 1.0 / cs.region.mesh.cell_area()));
        } catch (const SingularMatrixError& e) {
          throw SingularMatrixError("cell problem of block " + std::to_string(cs.region.center_block) + ": " +
                                        e.what(),
                                    e.pivot_index());
        }
      }()) {}

RegionBasis ConstrainedCellSolver::solve() const {
  const auto& cs = *cs_;
  const int n = cs.region.mesh.node_count();
  const int N = cs.continua;
  const int K = cs.member_count();
  RegionBasis out;
  auto run = [&](auto target, std::vector<std::vector<double>>& primal, std::vector<std::vector<double>>& dual) {
    std::vector<double> rhs(static_cast<std::size_t>(n) + K * N, 0.0);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < N; ++j) {
        rhs[n + k * N + j] = row_scale_ * target(k, j);
      }
    }
    auto x = lu_.solve(rhs).x;
    std::vector<double> lambda(x.begin() + n, x.end());
    for (auto& v : lambda) {
      v *= row_scale_;
    }
    x.resize(n);
    primal.push_back(std::move(x));
    dual.push_back(std::move(lambda));
  };
  for (int i = 0; i < N; ++i) {
    run([&](int k, int j) { return cs.average_target(i, k, j); }, out.average, out.average_dual);
  }
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < 2; ++m) {
      run([&](int k, int j) { return cs.gradient_target(i, m, k, j); }, out.gradient, out.gradient_dual);
    }
  }
  return out;
}

RegionBasis solve_flow_cells(const ConstraintSet& cs, std::span<const double> kappa_local) {
  const auto a = assemble_stiffness(cs.region.mesh, kappa_local).matrix;
  return ConstrainedCellSolver(cs, a).solve();
}

std::vector<Vec2> local_darcy_velocity(const RectMesh& mesh, const RegionBasis& flow, std::span<const double> p_vals,
                                       std::span<const Vec2> grad_p_vals, std::span<const double> kappa_local) {
  const std::size_t N = flow.average.size();
  if (p_vals.size() != N || grad_p_vals.size() != N || flow.gradient.size() != 2 * N) {
    throw std::invalid_argument("local_darcy_velocity: flow basis and frozen pressure values disagree in N");
  }
  std::vector<double> p(mesh.node_count(), 0.0);
  for (std::size_t s = 0; s < N; ++s) {
    for (int n = 0; n < mesh.node_count(); ++n) {
      p[n] += flow.average[s][n] * p_vals[s] + flow.gradient[s * 2][n] * grad_p_vals[s][0] +
              flow.gradient[s * 2 + 1][n] * grad_p_vals[s][1];
    }
  }
  return darcy_velocity(mesh, kappa_local, p);
}

RegionBasis solve_transport_cells(const ConstraintSet& cs, std::span<const double> diffusion_local,
                                  std::span<const Vec2> velocity) {
  const auto& mesh = cs.region.mesh;
  const auto op = linear_combination(1.0, assemble_stiffness(mesh, diffusion_local, "D").matrix, 1.0,
                                     assemble_convection(mesh, velocity).matrix);
  return ConstrainedCellSolver(cs, op).solve();
}

double constraint_residual(const ConstraintSet& cs, const std::vector<std::vector<double>>& basis, bool gradient,
                           double H) {
  const auto& mesh = cs.region.mesh;
  const auto& t = q1::tables();
  const int N = cs.continua;
  const int K = cs.member_count();
  double worst = 0.0;
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const int i = gradient ? static_cast<int>(b / 2) : static_cast<int>(b);
    const int m = gradient ? static_cast<int>(b % 2) : 0;
    std::vector<double> integral(static_cast<std::size_t>(K) * N, 0.0);
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto nodes = mesh.cell_nodes(c);
      double s = 0.0;
      for (int q = 0; q < q1::kQuadPoints; ++q) {
        double w = 0.0;
        for (int a = 0; a < 4; ++a) {
          w += t.value[q][a] * basis[b][nodes[a]];
        }
        s += t.weight[q] * w;
      }
      integral[cs.region.member_of_cell(c) * N + cs.label[c]] += s * mesh.cell_area();
    }
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < N; ++j) {
        const double target = gradient ? cs.gradient_target(i, m, k, j) : cs.average_target(i, k, j);
        const double scale = cs.area[k * N + j] * (gradient ? H : 1.0);
        worst = std::max(worst, std::abs(integral[k * N + j] - target) / scale);
      }
    }
  }
  return worst;
}

std::vector<std::vector<double>> restrict_to_central(const OversampleRegion& region,
                                                     const std::vector<std::vector<double>>& v) {
  const auto nodes = region.central_nodes();
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (const auto& full : v) {
    std::vector<double> r(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      r[k] = full[nodes[k]];
    }
    out.push_back(std::move(r));
  }
  return out;
}

CellBasisSet solve_block_flow(const CellInputs& in, BlockId block) {
  const auto cs = build_constraints(in.coarse, in.continua, block, in.layers, in.boundary);
  const auto kappa = restrict_cells(cs.region, in.kappa.values);
  const auto flow = solve_flow_cells(cs, kappa);

  CellBasisSet set;
  set.block = block;
  set.continua = cs.continua;
  set.mesh = cs.region.central_mesh();
  set.shift = cs.shift;
  set.flow_average = restrict_to_central(cs.region, flow.average);
  set.flow_gradient = restrict_to_central(cs.region, flow.gradient);
  for (const auto& d : flow.average_dual) {
    set.flow_dual.insert(set.flow_dual.end(), d.begin(), d.end());
  }
  set.residual[0] = constraint_residual(cs, flow.average, false, in.coarse.H);
  set.residual[1] = constraint_residual(cs, flow.gradient, true, in.coarse.H);
  return set;
}

void solve_block_transport(const CellInputs& in, CellBasisSet& set, std::span<const double> p_vals,
                           std::span<const Vec2> grad_p_vals) {
  const auto cs = build_constraints(in.coarse, in.continua, set.block, in.layers, in.boundary);
  const auto kappa = restrict_cells(cs.region, in.kappa.values);
  const auto flow = solve_flow_cells(cs, kappa);
  const auto u = local_darcy_velocity(cs.region.mesh, flow, p_vals, grad_p_vals, kappa);
  const auto diffusion = restrict_cells(cs.region, in.diffusion.values);
  const auto tr = solve_transport_cells(cs, diffusion, u);
  set.transport_average = restrict_to_central(cs.region, tr.average);
  set.transport_gradient = restrict_to_central(cs.region, tr.gradient);
  set.residual[2] = constraint_residual(cs, tr.average, false, in.coarse.H);
  set.residual[3] = constraint_residual(cs, tr.gradient, true, in.coarse.H);
}

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t k = 0; k < bytes; ++k) {
    h ^= p[k];
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

static_assert(std::endian::native == std::endian::little, "cell cache is written in host order");

constexpr char kMagic[8] = {'M', 'C', 'H', 'C', 'E', 'L', 'L', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw std::runtime_error("truncated cell cache");
  }
  return v;
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vec(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (static_cast<std::streamsize>(n) * static_cast<std::streamsize>(sizeof(double)) > is.rdbuf()->in_avail()) {
    throw std::runtime_error("truncated cell cache");
  }
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) {
    throw std::runtime_error("truncated cell cache");
  }
  return v;
}

void put_family(std::ostream& os, const std::vector<std::vector<double>>& f) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.size()));
  for (const auto& v : f) {
    put_vec(os, v);
  }
}

std::vector<std::vector<double>> get_family(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (static_cast<std::streamsize>(n) * 4 > is.rdbuf()->in_avail()) {
    throw std::runtime_error("truncated cell cache");
  }
  std::vector<std::vector<double>> f(n);
  for (auto& v : f) {
    v = get_vec(is);
  }
  return f;
}

}  // namespace

std::uint64_t cell_cache_key(const CellInputs& in) {
  std::uint64_t h = fnv1a64(in.kappa.values.data(), in.kappa.values.size() * sizeof(double));
  h = fnv1a64(in.diffusion.values.data(), in.diffusion.values.size() * sizeof(double), h);
  h = fnv1a64(in.continua.label.data(), in.continua.label.size() * sizeof(int), h);
  const std::int32_t dims[5] = {in.coarse.blocks_per_side, in.coarse.fine_cells_per_side, in.layers,
                                in.continua.continua, static_cast<std::int32_t>(in.boundary)};
  return fnv1a64(dims, sizeof(dims), h);
}

void write_cell_cache(const std::filesystem::path& file, const CellBasisSet& set, std::uint64_t key) {
  std::filesystem::create_directories(file.parent_path());
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw std::runtime_error("cannot write cell cache " + tmp);
    }
    os.write(kMagic, sizeof(kMagic));
    put(os, kCacheVersion);
    put(os, key);
    put<std::int32_t>(os, set.block);
    put<std::int32_t>(os, set.continua);
    put<std::int32_t>(os, set.mesh.nx);
    put<std::int32_t>(os, set.mesh.ny);
    put(os, set.mesh.x0);
    put(os, set.mesh.y0);
    put(os, set.mesh.hx);
    put(os, set.mesh.hy);
    put_family(os, set.flow_average);
    put_family(os, set.flow_gradient);
    put_family(os, set.transport_average);
    put_family(os, set.transport_gradient);
    put_vec(os, set.shift);
    put_vec(os, set.flow_dual);
    for (double r : set.residual) {
      put(os, r);
    }
  }
  std::filesystem::rename(tmp, file);
}

std::optional<CellBasisSet> read_cell_cache(const std::filesystem::path& file, std::uint64_t key) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  std::istringstream is(std::string(std::istreambuf_iterator<char>(in), {}));
  try {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || get<std::uint32_t>(is) != kCacheVersion ||
        get<std::uint64_t>(is) != key) {
      return std::nullopt;
    }
    CellBasisSet set;
    set.block = get<std::int32_t>(is);
    set.continua = get<std::int32_t>(is);
    set.mesh.nx = get<std::int32_t>(is);
    set.mesh.ny = get<std::int32_t>(is);
    set.mesh.x0 = get<double>(is);
    set.mesh.y0 = get<double>(is);
    set.mesh.hx = get<double>(is);
    set.mesh.hy = get<double>(is);
    set.flow_average = get_family(is);
    set.flow_gradient = get_family(is);
    set.transport_average = get_family(is);
    set.transport_gradient = get_family(is);
    set.shift = get_vec(is);
    set.flow_dual = get_vec(is);
    for (double& r : set.residual) {
      r = get<double>(is);
    }
    if (is.rdbuf()->in_avail() != 0) {
      return std::nullopt;
    }
    return set;
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

}  // namespace mch

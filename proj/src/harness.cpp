#include "mch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mch {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Runs fn and prefixes any error with the stage name.
template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

Point point_of(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 2) {
    throw std::invalid_argument("config key " + key + " needs two coordinates");
  }
  return {v[0], v[1]};
}

SourceSpec read_source(const Config& c, const std::string& prefix, SourceSpec fallback) {
  SourceSpec s = fallback;
  s.amplitude = c.number(prefix + "amplitude", s.amplitude);
  s.decay = c.number(prefix + "decay", s.decay);
  if (c.has(prefix + "center")) {
    s.center = point_of(c.numbers(prefix + "center", {}), prefix + "center");
  }
  if (!(s.decay > 0.0)) {
    throw std::invalid_argument("config key " + prefix + "decay must be positive");
  }
  return s;
}

}  // namespace

int ExperimentConfig::effective_layers() const { return layers >= 0 ? layers : layers_for(1.0 / blocks); }

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical.data(), canonical.size()); }

ExperimentConfig parse_experiment(const Config& c) {
  ExperimentConfig e;
  e.name = c.text("experiment.name", e.name);
  e.paper_scale = c.flag("experiment.paper_scale", false);

  e.fine_cells = c.integer("grid.fine_cells", e.fine_cells);
  e.blocks = c.integer("grid.blocks", e.blocks);
  if (e.blocks < 2 || e.fine_cells < 2 * e.blocks || e.fine_cells % e.blocks != 0) {
    throw std::invalid_argument("config keys grid.blocks and grid.fine_cells: need blocks >= 2 dividing fine_cells >= 2 blocks");
  }
  const auto layers = c.text("grid.layers", "auto");
  e.layers = layers == "auto" ? -1 : c.integer("grid.layers", -1);
  if (layers != "auto" && e.layers < 0) {
    throw std::invalid_argument("config key grid.layers must be 'auto' or a nonnegative integer");
  }
  const auto regions = c.text("grid.regions", "mirrored");
  if (regions != "mirrored" && regions != "clipped") {
    throw std::invalid_argument("config key grid.regions: expected mirrored or clipped");
  }
  e.regions = regions == "mirrored" ? RegionBoundary::Mirrored : RegionBoundary::Clipped;

  const auto type = c.text("field.type", "layered");
  if (type == "layered") {
    e.field = FieldType::Layered;
  } else if (type == "circular") {
    e.field = FieldType::Circular;
  } else if (type == "uniform") {
    e.field = FieldType::Uniform;
  } else {
    throw std::invalid_argument("config key field.type: unknown field '" + type + "'");
  }
  e.kappa_low = c.number("field.kappa_low", e.kappa_low);
  e.kappa_high = c.number("field.kappa_high", e.kappa_high);
  e.diffusion_low = c.number("field.diffusion_low", e.kappa_low);
  e.diffusion_high = c.number("field.diffusion_high", e.kappa_high);
  e.porosity = c.number("field.porosity", e.porosity);
  for (double v : {e.kappa_low, e.kappa_high, e.diffusion_low, e.diffusion_high, e.porosity}) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("field coefficients must be strictly positive");
    }
  }
  if (e.field == FieldType::Layered) {
    if (c.has("field.stripes")) {
      const auto v = c.numbers("field.stripes", {});
      if (v.size() % 2 != 0) {
        throw std::invalid_argument("config key field.stripes needs lo hi pairs");
      }
      for (std::size_t k = 0; k < v.size(); k += 2) {
        e.stripes.push_back({v[k], v[k + 1]});
      }
    } else {
      e.stripes = periodic_stripes(c.number("field.stripe_period", 0.025), c.number("field.stripe_offset", 0.01),
                                   c.number("field.stripe_width", 0.01));
    }
  } else if (e.field == FieldType::Circular) {
    if (c.has("field.disks")) {
      const auto v = c.numbers("field.disks", {});
      if (v.size() % 3 != 0) {
        throw std::invalid_argument("config key field.disks needs x y r triples");
      }
      for (std::size_t k = 0; k < v.size(); k += 3) {
        e.disks.push_back({{v[k], v[k + 1]}, v[k + 2]});
      }
    } else {
      e.disks = disk_lattice(c.integer("field.disk_lattice", 20), c.number("field.disk_radius", 0.0155));
    }
  }

  e.bc = BoundaryCase::numbered(c.integer("boundary.case", 1));

  e.tau = c.number("time.tau", e.tau);
  e.t_end = c.number("time.t_end", e.t_end);
  e.output_times = c.numbers("time.output_times", e.output_times);
  if (!(e.tau > 0.0) || e.t_end < 0.0) {
    throw std::invalid_argument("time.tau must be positive and time.t_end nonnegative");
  }
  if (e.output_times.empty()) {
    throw std::invalid_argument("time.output_times is empty");
  }
  double last = -1.0;
  for (double t : e.output_times) {
    if (t < 0.0 || t > e.t_end + 1e-12 || t < last) {
      throw std::invalid_argument("time.output_times must be nondecreasing and inside [0, t_end]");
    }
    steps_to(t, e.tau);
    last = t;
  }

  e.g = read_source(c, "source.g_", e.g);
  e.h = read_source(c, "source.h_", e.h);
  const auto init = c.text("initial.type", "gaussian");
  if (init != "gaussian" && init != "zero") {
    throw std::invalid_argument("config key initial.type: expected gaussian or zero");
  }
  e.initial_zero = init == "zero";
  e.initial = read_source(c, "initial.", e.initial);

  const auto source = c.text("macro.source", "projected");
  if (source != "projected" && source != "block") {
    throw std::invalid_argument("config key macro.source: expected projected or block");
  }
  e.source_mode = source == "projected" ? MacroSource::Projected : MacroSource::BlockConstant;
  const auto initial = c.text("macro.initial", "projected");
  if (initial != "projected" && initial != "averaged") {
    throw std::invalid_argument("config key macro.initial: expected projected or averaged");
  }
  e.initial_mode = initial == "projected" ? MacroInitial::Projected : MacroInitial::Averaged;

  const auto unused = c.unused();
  if (!unused.empty()) {
    throw std::invalid_argument(c.source() + ": unknown config key " + unused.front());
  }
  e.canonical = c.canonical();
  return e;
}

ExperimentConfig load_experiment(const std::filesystem::path& file) { return parse_experiment(Config::load(file)); }

Problem build_problem(const ExperimentConfig& cfg) {
  Problem p;
  auto [coarse, fine] = build_grids(cfg.blocks, cfg.fine_cells);
  p.coarse = coarse;
  p.fine = fine;
  const int n = cfg.fine_cells;
  Medium kappa;
  Medium diffusion;
  switch (cfg.field) {
    case FieldType::Layered:
      kappa = layered_field(n, cfg.kappa_low, cfg.kappa_high, cfg.stripes);
      diffusion = layered_field(n, cfg.diffusion_low, cfg.diffusion_high, cfg.stripes);
      break;
    case FieldType::Circular:
      kappa = circular_field(n, cfg.kappa_low, cfg.kappa_high, cfg.disks);
      diffusion = circular_field(n, cfg.diffusion_low, cfg.diffusion_high, cfg.disks);
      break;
    case FieldType::Uniform:
      kappa = uniform_field(n, cfg.kappa_low);
      diffusion = uniform_field(n, cfg.diffusion_low);
      break;
  }
  p.continua = kappa.continua;
  validate_continua(p.coarse, p.continua);
  p.kappa = kappa.field;
  p.diffusion = diffusion.field;
  p.porosity.values.assign(static_cast<std::size_t>(n) * n, cfg.porosity);
  p.g = gaussian_source(p.fine, cfg.g);
  p.h = gaussian_source(p.fine, cfg.h);
  p.c0 = cfg.initial_zero ? std::vector<double>(p.fine.node_count(), 0.0) : gaussian_nodal(p.fine, cfg.initial);
  p.layers = cfg.effective_layers();
  return p;
}

FineReference compute_fine_reference(const ExperimentConfig& cfg, const Problem& p) {
  const auto t0 = Clock::now();
  FineReference ref;
  ref.pressure = stage("fine flow", [&] { return solve_flow_fine(p.fine, p.kappa, p.g, cfg.bc.pressure).nodal; });
  auto sol = stage("fine transport", [&] {
    const FineTransport op(p.fine, p.kappa, p.diffusion, p.porosity, ref.pressure, p.h, cfg.bc.concentration,
                           cfg.tau);
    return run_transport_fine(op, p.c0, cfg.output_times);
  });
  ref.times = std::move(sol.times);
  ref.snapshots = std::move(sol.snapshots);
  ref.seconds = since(t0);
  return ref;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) {
      fn(k);
    }
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

std::vector<double> relative_errors(const CoarseGrid& coarse, const ContinuumMap& continua,
                                    std::span<const double> macro_c, std::span<const double> fine_c) {
  const int N = continua.continua;
  const int nn = coarse.node_count();
  if (macro_c.size() != static_cast<std::size_t>(N) * nn) {
    throw std::invalid_argument("relative_errors: macro state does not match the coarse grid");
  }
  std::vector<double> out;
  for (int i = 0; i < N; ++i) {
    const auto macro = macro_block_average(coarse, macro_c.subspan(static_cast<std::size_t>(i) * nn, nn));
    const auto fine = block_average(fine_c, coarse, continua, i);
    double num = 0.0;
    double den = 0.0;
    for (int b = 0; b < coarse.block_count(); ++b) {
      num += (macro[b] - fine[b]) * (macro[b] - fine[b]);
      den += fine[b] * fine[b];
    }
    if (den == 0.0) {
      throw std::domain_error("relative_errors: reference block averages of continuum " + std::to_string(i + 1) +
                              " are all zero");
    }
    out.push_back(std::sqrt(num / den));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts, const FineReference* reference) {
  if (cfg.paper_scale && !opts.paper_scale) {
    throw std::runtime_error("config '" + cfg.name + "' is paper-scale; pass --paper-scale to run it");
  }
  auto log = [&](const std::string& s) {
    if (opts.log) {
      opts.log(s);
    }
  };
  ExperimentResult r;
  r.config = cfg;
  r.report.config_hash = cfg.hash();
  r.problem = stage("setup", [&] { return build_problem(cfg); });
  const auto& p = r.problem;
  const auto& coarse = p.coarse;
  const int B = coarse.block_count();
  const int N = p.continua.continua;
  const auto ctx = ScalingContext::for_block_size(coarse.H);

  if (opts.fine) {
    if (reference != nullptr) {
      r.fine = *reference;
    } else {
      log("fine reference");
      r.fine = compute_fine_reference(cfg, p);
    }
    r.report.seconds["fine"] = r.fine->seconds;
  }

  const CellInputs in{coarse, p.continua, p.kappa, p.diffusion, p.layers, cfg.regions};
  const auto key = cell_cache_key(in);
  auto cache_file = [&](const char* kind, BlockId b, std::uint64_t k) {
    return *opts.cache / (std::string(kind) + "_" + hex64(k) + "_b" + std::to_string(b) + ".bin");
  };

  log("flow cell problems: " + std::to_string(B) + " blocks, l = " + std::to_string(p.layers));
  auto t0 = Clock::now();
  r.sets.resize(B);
  stage("flow cells", [&] {
    parallel_for(B, opts.threads, [&](int b) {
      if (opts.cache) {
        if (auto hit = read_cell_cache(cache_file("flow", b, key), key)) {
          r.sets[b] = std::move(*hit);
          return;
        }
      }
      r.sets[b] = solve_block_flow(in, b);
      if (opts.cache) {
        write_cell_cache(cache_file("flow", b, key), r.sets[b], key);
      }
    });
  });
  r.report.seconds["flow_cells"] = since(t0);

  stage("flow tensors", [&] {
    r.flow_raw.resize(B);
    r.flow_hat.resize(B);
    r.g_blocks.resize(static_cast<std::size_t>(B) * N);
    for (int b = 0; b < B; ++b) {
      r.flow_raw[b] = flow_effective(r.sets[b], block_cells(coarse, b, p.kappa.values));
      r.flow_hat[b] = hat(r.flow_raw[b], ctx);
      const auto g = block_source(r.sets[b], r.sets[b].flow_average, block_cells(coarse, b, p.g), ctx);
      std::copy(g.begin(), g.end(), r.g_blocks.begin() + static_cast<std::ptrdiff_t>(b) * N);
    }
  });

  r.state = stage("macro flow", [&] {
    std::vector<double> load;
    if (cfg.source_mode == MacroSource::Projected) {
      std::vector<double> corners;
      for (int b = 0; b < B; ++b) {
        const auto m = block_corner_moments(r.sets[b], r.sets[b].flow_average, block_cells(coarse, b, p.g));
        corners.insert(corners.end(), m.begin(), m.end());
      }
      load = corner_load(coarse, corners, N);
    } else {
      load = block_constant_load(coarse, r.g_blocks, N);
    }
    const auto sys = assemble_macro_flow(coarse, r.flow_hat, load, cfg.bc.pressure);
    return solve_macro_flow(coarse, sys, N);
  });
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < 2; ++f) {
      r.max_residual[f] = std::max(r.max_residual[f], r.sets[b].residual[f]);
    }
  }
  if (!opts.transport) {
    return r;
  }

  log("transport cell problems");
  t0 = Clock::now();
  stage("transport cells", [&] {
    parallel_for(B, opts.threads, [&](int b) {
      const auto pv = std::span(r.state.frozen_p).subspan(static_cast<std::size_t>(b) * N, N);
      const auto gv = std::span(r.state.frozen_grad_p).subspan(static_cast<std::size_t>(b) * N, N);
      std::uint64_t tkey = fnv1a64(pv.data(), pv.size_bytes(), key);
      tkey = fnv1a64(gv.data(), gv.size_bytes(), tkey);
      if (opts.cache) {
        if (auto hit = read_cell_cache(cache_file("transport", b, tkey), tkey)) {
          r.sets[b] = std::move(*hit);
          return;
        }
      }
      solve_block_transport(in, r.sets[b], pv, gv);
      if (opts.cache) {
        write_cell_cache(cache_file("transport", b, tkey), r.sets[b], tkey);
      }
    });
  });
  r.report.seconds["transport_cells"] = since(t0);
  for (int b = 0; b < B; ++b) {
    for (int f = 2; f < 4; ++f) {
      r.max_residual[f] = std::max(r.max_residual[f], r.sets[b].residual[f]);
    }
  }

  stage("transport tensors", [&] {
    r.transport_raw.resize(B);
    r.transport_hat.resize(B);
    r.h_blocks.resize(static_cast<std::size_t>(B) * N);
    for (int b = 0; b < B; ++b) {
      r.transport_raw[b] = transport_effective(r.sets[b], block_cells(coarse, b, p.diffusion.values),
                                               block_cells(coarse, b, p.kappa.values),
                                               block_cells(coarse, b, p.porosity.values));
      r.transport_hat[b] = hat(r.transport_raw[b], ctx);
      const auto h = block_source(r.sets[b], r.sets[b].transport_average, block_cells(coarse, b, p.h), ctx);
      std::copy(h.begin(), h.end(), r.h_blocks.begin() + static_cast<std::ptrdiff_t>(b) * N);
    }
    r.combined = combine_all(r.state, r.transport_hat, ctx);
  });
  if (!opts.macro_transport) {
    return r;
  }

  log("macro transport");
  t0 = Clock::now();
  stage("macro transport", [&] {
    std::vector<double> load;
    std::vector<double> moments;
    if (cfg.source_mode == MacroSource::Projected || cfg.initial_mode == MacroInitial::Projected) {
      std::vector<double> h_corners;
      std::vector<double> c_corners;
      for (int b = 0; b < B; ++b) {
        const auto& basis = r.sets[b].transport_average;
        const auto h = block_corner_moments(r.sets[b], basis, block_cells(coarse, b, p.h));
        const auto c = block_corner_moments(r.sets[b], basis, block_cells(coarse, b, p.porosity.values),
                                            block_nodes(coarse, b, p.c0));
        h_corners.insert(h_corners.end(), h.begin(), h.end());
        c_corners.insert(c_corners.end(), c.begin(), c.end());
      }
      load = corner_load(coarse, h_corners, N);
      moments = corner_load(coarse, c_corners, N);
    }
    if (cfg.source_mode == MacroSource::BlockConstant) {
      load = block_constant_load(coarse, r.h_blocks, N);
    }
    const MacroTransport op(coarse, r.transport_hat, r.combined, load, cfg.bc.concentration, cfg.tau);
    r.state.C = cfg.initial_mode == MacroInitial::Projected
                    ? project_macro_concentration(coarse, r.transport_hat, moments, cfg.bc.concentration)
                    : initial_macro_concentration(coarse, p.continua, p.c0);
    if (cfg.bc.concentration == ConcentrationBc::DirichletZero) {
      const auto fixed = boundary_mask(coarse.mesh);
      for (int i = 0; i < N; ++i) {
        for (int n = 0; n < coarse.node_count(); ++n) {
          if (fixed[n]) {
            r.state.C[static_cast<std::size_t>(i) * coarse.node_count() + n] = 0.0;
          }
        }
      }
    }
    r.state.t = 0.0;
    int done = 0;
    for (double t : cfg.output_times) {
      for (const int target = steps_to(t, cfg.tau); done < target; ++done) {
        op.step(r.state);
      }
      r.times.push_back(t);
      r.macro_c.push_back(r.state.C);
      std::vector<double> com;
      for (int i = 0; i < N; ++i) {
        com.push_back(center_of_mass_x(coarse, r.transport_hat, r.state.C, i));
      }
      r.center_of_mass.push_back(std::move(com));
    }
  });
  r.report.seconds["macro_transport"] = since(t0);

  if (r.fine) {
    stage("errors", [&] {
      for (std::size_t k = 0; k < r.times.size(); ++k) {
        r.report.times.push_back(r.times[k]);
        r.report.errors.push_back(relative_errors(coarse, p.continua, r.macro_c[k], r.fine->snapshots[k]));
      }
    });
  }
  return r;
}

void check_refinement_pair(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto strip = [](const std::string& canonical) {
    std::istringstream is(canonical);
    std::string line;
    std::string out;
    while (std::getline(is, line)) {
      if (line.rfind("grid.blocks=", 0) == 0 || line.rfind("grid.layers=", 0) == 0 ||
          line.rfind("experiment.name=", 0) == 0) {
        continue;
      }
      out += line + "\n";
    }
    return out;
  };
  if (strip(a.canonical) != strip(b.canonical)) {
    throw std::invalid_argument("compare: configs differ in more than grid.blocks and grid.layers");
  }
}

std::vector<RefinementRow> compare_refinement(const ErrorReport& a, const ErrorReport& b) {
  if (a.times != b.times) {
    throw std::invalid_argument("compare: error reports have different output times");
  }
  std::vector<RefinementRow> out;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    RefinementRow row;
    row.t = a.times[k];
    row.a = a.errors[k];
    row.b = b.errors[k];
    for (std::size_t i = 0; i < row.a.size(); ++i) {
      row.ratio.push_back(row.a[i] == row.b[i] ? 1.0 : row.b[i] / row.a[i]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_hash(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot read " + file.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  const auto s = ss.str();
  return fnv1a64(s.data(), s.size());
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::trunc);
  if (!os) {
    throw std::runtime_error("cannot write " + file.string());
  }
  return os;
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

}  // namespace

void write_error_csv(const ErrorReport& report, const std::filesystem::path& file) {
  auto os = open_out(file);
  const std::size_t N = report.errors.empty() ? 0 : report.errors.front().size();
  os << "t";
  for (std::size_t i = 0; i < N; ++i) {
    os << ",e" << i + 1;
  }
  os << '\n';
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    os << format_double(report.times[k]);
    for (double e : report.errors[k]) {
      os << ',' << format_double(e);
    }
    os << '\n';
  }
}

ErrorReport read_error_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) {
    throw std::runtime_error("cannot read " + file.string());
  }
  ErrorReport r;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t = 0.0;
    ls >> t;
    std::vector<double> e;
    for (double v = 0.0; ls >> v;) {
      e.push_back(v);
    }
    r.times.push_back(t);
    r.errors.push_back(std::move(e));
  }
  return r;
}

void write_grid(const std::filesystem::path& file, int nx, int ny, double t, const std::string& name,
                std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(nx) * ny) {
    throw std::invalid_argument("write_grid: " + name + " has " + std::to_string(values.size()) + " values, expected " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  }
  auto os = open_out(file);
  os << nx << ' ' << ny << ' ' << format_double(t) << ' ' << name << '\n';
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      os << (i == 0 ? "" : " ") << format_double(values[static_cast<std::size_t>(j) * nx + i]);
    }
    os << '\n';
  }
}

void write_tensors_csv(const ExperimentResult& r, const std::filesystem::path& file) {
  auto os = open_out(file);
  write_tensor_csv_header(os);
  for (std::size_t b = 0; b < r.flow_hat.size(); ++b) {
    const auto* t = b < r.transport_hat.size() ? &r.transport_hat[b] : nullptr;
    write_tensor_csv(os, static_cast<BlockId>(b), r.flow_hat[b], t, "_hat");
  }
}

void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& p = r.problem;
  const int nf = p.fine.cells_per_side;
  const int M = p.coarse.blocks_per_side;
  const int N = p.continua.continua;
  if (!r.report.times.empty()) {
    write_error_csv(r.report, dir / "errors.csv");
  }
  if (!r.flow_hat.empty()) {
    write_tensors_csv(r, dir / "tensors.csv");
    for (int i = 0; i < N; ++i) {
      write_grid(dir / ("macro_P" + std::to_string(i + 1) + ".txt"), M + 1, M + 1, 0.0,
                 "P" + std::to_string(i + 1), r.state.p(i));
    }
  }
  if (r.fine) {
    write_grid(dir / "fine_p.txt", nf + 1, nf + 1, 0.0, "p", r.fine->pressure);
    for (std::size_t k = 0; k < r.fine->times.size(); ++k) {
      write_grid(dir / ("fine_c_t" + time_tag(r.fine->times[k]) + ".txt"), nf + 1, nf + 1, r.fine->times[k], "c",
                 r.fine->snapshots[k]);
    }
  }
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const auto tag = time_tag(r.times[k]);
    const auto nn = static_cast<std::size_t>(p.coarse.node_count());
    for (int i = 0; i < N; ++i) {
      write_grid(dir / ("macro_C" + std::to_string(i + 1) + "_t" + tag + ".txt"), M + 1, M + 1, r.times[k],
                 "C" + std::to_string(i + 1), std::span(r.macro_c[k]).subspan(i * nn, nn));
    }
    const auto ds = patches_to_cells(p.coarse, downscale(p.coarse, r.sets, r.macro_c[k], N, true));
    write_grid(dir / ("downscaled_c_t" + tag + ".txt"), nf, nf, r.times[k], "c_ds", ds);
  }
  write_manifest(dir, r);
}

void write_manifest(const std::filesystem::path& dir, const ExperimentResult& r) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.txt") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  auto os = open_out(dir / "manifest.txt");
  os << "# mch run manifest\n";
  os << "name " << r.config.name << '\n';
  os << "config_hash " << hex64(r.report.config_hash) << '\n';
  for (const auto& [k, v] : r.report.seconds) {
    os << "seconds." << k << ' ' << format_double(v) << '\n';
  }
  for (const auto& f : files) {
    os << "file " << hex64(file_hash(f)) << ' ' << std::filesystem::file_size(f) << ' ' << f.filename().string()
       << '\n';
  }
}

}  // namespace mch

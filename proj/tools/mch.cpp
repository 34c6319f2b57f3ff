#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "mch/harness.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
  std::string cache;
  bool paper_scale = false;
};

void add_common(CLI::App* app, Common& c, bool with_config = true) {
  if (with_config) {
    app->add_option("cfg", c.config, "Experiment config file");
    app->add_option("--config", c.config, "Experiment config file");
  }
  app->add_option("--out", c.out, "Output directory (default out/<name>)");
  app->add_option("--threads", c.threads, "Worker threads for cell problems")->check(CLI::PositiveNumber);
  app->add_option("--cache", c.cache, "Directory for cached cell bases");
  app->add_flag("--paper-scale", c.paper_scale, "Allow paper-scale configs");
}

mch::RunOptions options(const Common& c) {
  mch::RunOptions o;
  o.threads = c.threads;
  o.paper_scale = c.paper_scale;
  if (!c.cache.empty()) {
    fs::create_directories(c.cache);
    o.cache = fs::path(c.cache);
  }
  o.log = [](const std::string& s) { std::cerr << "[mch] " << s << '\n'; };
  return o;
}

mch::ExperimentConfig load(const std::string& file, bool paper_scale) {
  if (file.empty()) {
    throw std::invalid_argument("no config given");
  }
  auto cfg = mch::load_experiment(file);
  if (cfg.paper_scale && !paper_scale) {
    throw std::runtime_error(file + " is a paper-scale config; pass --paper-scale to run it");
  }
  return cfg;
}

fs::path out_dir(const Common& c, const mch::ExperimentConfig& cfg) {
  return c.out.empty() ? fs::path("out") / cfg.name : fs::path(c.out);
}

void print_errors(const mch::ErrorReport& r) {
  std::printf("%-8s", "t");
  const std::size_t N = r.errors.empty() ? 0 : r.errors.front().size();
  for (std::size_t i = 0; i < N; ++i) {
    std::printf("  e%zu(%%)    ", i + 1);
  }
  std::printf("\n");
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::printf("%-8g", r.times[k]);
    for (double e : r.errors[k]) {
      std::printf("  %-10.4f", 100.0 * e);
    }
    std::printf("\n");
  }
}

int cmd_run(const Common& c) {
  const auto cfg = load(c.config, c.paper_scale);
  const auto r = mch::run_experiment(cfg, options(c));
  const auto dir = out_dir(c, cfg);
  mch::write_outputs(r, dir);
  print_errors(r.report);
  std::printf("outputs in %s\n", dir.string().c_str());
  return 0;
}

int cmd_compare(const Common& a, const std::string& cfg_b) {
  const auto A = load(a.config, a.paper_scale);
  const auto B = load(cfg_b, a.paper_scale);
  mch::check_refinement_pair(A, B);
  auto opts = options(a);
  const auto ra = mch::run_experiment(A, opts);
  const auto rb = mch::run_experiment(B, opts, ra.fine ? &*ra.fine : nullptr);
  const auto rows = mch::compare_refinement(ra.report, rb.report);
  std::printf("%s (H = 1/%d) vs %s (H = 1/%d)\n", A.name.c_str(), A.blocks, B.name.c_str(), B.blocks);
  std::printf("%-8s", "t");
  const std::size_t N = rows.empty() ? 0 : rows.front().a.size();
  for (std::size_t i = 0; i < N; ++i) {
    std::printf("  A:e%zu(%%)   B:e%zu(%%)   ratio     ", i + 1, i + 1);
  }
  std::printf("\n");
  for (const auto& row : rows) {
    std::printf("%-8g", row.t);
    for (std::size_t i = 0; i < row.a.size(); ++i) {
      std::printf("  %-10.4f %-10.4f %-9.4f", 100.0 * row.a[i], 100.0 * row.b[i], row.ratio[i]);
    }
    std::printf("\n");
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::FILE* f = std::fopen((fs::path(a.out) / "compare.csv").string().c_str(), "w");
    if (f == nullptr) {
      throw std::runtime_error("cannot write compare.csv in " + a.out);
    }
    std::fprintf(f, "t");
    for (std::size_t i = 0; i < N; ++i) {
      std::fprintf(f, ",a_e%zu,b_e%zu,ratio%zu", i + 1, i + 1, i + 1);
    }
    std::fprintf(f, "\n");
    for (const auto& row : rows) {
      std::fprintf(f, "%s", mch::format_double(row.t).c_str());
      for (std::size_t i = 0; i < row.a.size(); ++i) {
        std::fprintf(f, ",%s,%s,%s", mch::format_double(row.a[i]).c_str(), mch::format_double(row.b[i]).c_str(),
                     mch::format_double(row.ratio[i]).c_str());
      }
      std::fprintf(f, "\n");
    }
    std::fclose(f);
  }
  return 0;
}

int cmd_tensors(const Common& c) {
  const auto cfg = load(c.config, c.paper_scale);
  auto opts = options(c);
  opts.fine = false;
  opts.macro_transport = false;
  const auto r = mch::run_experiment(cfg, opts);
  const auto dir = out_dir(c, cfg);
  fs::create_directories(dir);
  mch::write_tensors_csv(r, dir / "tensors.csv");
  mch::write_manifest(dir, r);
  std::printf("max constraint residual: flow avg %.3e, flow grad %.3e, transport avg %.3e, transport grad %.3e\n",
              r.max_residual[0], r.max_residual[1], r.max_residual[2], r.max_residual[3]);
  std::printf("tensors in %s\n", (dir / "tensors.csv").string().c_str());
  return 0;
}

int cmd_fine(const Common& c) {
  const auto cfg = load(c.config, c.paper_scale);
  const auto problem = mch::build_problem(cfg);
  const auto ref = mch::compute_fine_reference(cfg, problem);
  const auto dir = out_dir(c, cfg);
  fs::create_directories(dir);
  const int n = cfg.fine_cells + 1;
  mch::write_grid(dir / "fine_p.txt", n, n, 0.0, "p", ref.pressure);
  for (std::size_t k = 0; k < ref.times.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "fine_c_t%g.txt", ref.times[k]);
    mch::write_grid(dir / name, n, n, ref.times[k], "c", ref.snapshots[k]);
  }
  std::printf("fine reference (%.1f s) in %s\n", ref.seconds, dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicontinuum homogenization of coupled flow and transport"};
  app.require_subcommand(1);

  Common run;
  add_common(app.add_subcommand("run", "Full experiment: fine reference, cell problems, macro solve, errors"), run);

  Common cmp;
  std::string cfg_b;
  auto* compare = app.add_subcommand("compare", "Run two configs that differ only in the coarse grid");
  compare->add_option("cfgA", cmp.config, "Config A")->required();
  compare->add_option("cfgB", cfg_b, "Config B")->required();
  add_common(compare, cmp, false);

  Common tens;
  add_common(app.add_subcommand("tensors", "Effective tensors only"), tens);

  Common fine;
  add_common(app.add_subcommand("fine", "Fine reference solution only"), fine);

  auto* self = app.add_subcommand("selftest", "Invariant suite on small problems");

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("run")) {
      return cmd_run(run);
    }
    if (app.got_subcommand("compare")) {
      return cmd_compare(cmp, cfg_b);
    }
    if (app.got_subcommand("tensors")) {
      return cmd_tensors(tens);
    }
    if (app.got_subcommand("fine")) {
      return cmd_fine(fine);
    }
    if (self->parsed()) {
      return mch::tools::run_selftest(std::cout) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "mch: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

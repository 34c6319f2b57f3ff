#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mch/harness.hpp"

using namespace mch;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "[experiment]\nname = small\n"
    "[grid]\nfine_cells = 32\nblocks = 4\nlayers = 1\n"
    "[field]\ntype = layered\nkappa_low = 0.01\nkappa_high = 1\nstripe_period = 0.25\n"
    "stripe_offset = 0.0625\nstripe_width = 0.09375\n"
    "[boundary]\ncase = 2\n"
    "[time]\ntau = 0.01\nt_end = 0.1\noutput_times = 0.05, 0.1\n";

ExperimentConfig config(const std::string& text) {
  std::istringstream is(text);
  return parse_experiment(Config::parse(is, "small.cfg"));
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mch_test_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("build_problem") {
  const auto cfg = config(kSmall);
  const auto p = build_problem(cfg);
  CHECK(p.coarse.blocks_per_side == 4);
  CHECK(p.fine.cells_per_side == 32);
  CHECK(p.layers == 1);
  CHECK(p.continua.continua == 2);
  CHECK(p.kappa.size() == 32u * 32u);
  CHECK(p.g.size() == 32u * 32u);
  CHECK(p.c0.size() == 33u * 33u);
  CHECK(p.c0[16 * 33 + 16] == doctest::Approx(1.0));
  // a stripe pattern that misses a block row is rejected
  auto text = std::string(kSmall);
  text.replace(text.find("stripe_period"), 0, "stripes = 0.0 0.1\n");
  text.erase(text.find("stripe_period"), text.find("[boundary]") - text.find("stripe_period"));
  CHECK_THROWS_WITH_AS(build_problem(config(text)), doctest::Contains("coarse block 4"), std::invalid_argument);
}

TEST_CASE("relative errors") {
  const auto p = build_problem(config(kSmall));
  const std::vector<double> fine(p.fine.node_count(), 2.0);
  std::vector<double> macro(2 * p.coarse.node_count(), 2.0);
  for (double e : relative_errors(p.coarse, p.continua, macro, fine)) {
    CHECK(e < 1e-15);
  }
  for (auto& v : macro) {
    v = 2.2;
  }
  for (double e : relative_errors(p.coarse, p.continua, macro, fine)) {
    CHECK(e == doctest::Approx(0.1).epsilon(1e-12));
  }
  const std::vector<double> zero(p.fine.node_count(), 0.0);
  CHECK_THROWS_AS(relative_errors(p.coarse, p.continua, macro, zero), std::domain_error);
  CHECK_THROWS(relative_errors(p.coarse, p.continua, std::vector<double>(3), fine));
}

TEST_CASE("refinement pairs") {
  const auto a = config(kSmall);
  auto text = std::string(kSmall);
  const auto b = config(text.replace(text.find("blocks = 4"), 10, "blocks = 8"));
  CHECK_NOTHROW(check_refinement_pair(a, b));
  auto other = std::string(kSmall);
  const auto c = config(other.replace(other.find("tau = 0.01"), 10, "tau = 0.05"));
  CHECK_THROWS_AS(check_refinement_pair(a, c), std::invalid_argument);

  ErrorReport ra{{0.1, 0.2}, {{0.1, 0.2}, {0.3, 0.0}}, 0, {}};
  ErrorReport rb{{0.1, 0.2}, {{0.05, 0.3}, {0.3, 0.0}}, 0, {}};
  const auto rows = compare_refinement(ra, rb);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ratio[0] == doctest::Approx(0.5));
  CHECK(rows[0].ratio[1] == doctest::Approx(1.5));
  CHECK(rows[1].ratio[0] == 1.0);
  CHECK(rows[1].ratio[1] == 1.0);
  ErrorReport rc{{0.1}, {{0.1, 0.1}}, 0, {}};
  CHECK_THROWS(compare_refinement(ra, rc));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  for (int threads : {1, 2, 4}) {
    std::vector<int> hits(57, 0);
    parallel_for(57, threads, [&](int k) { hits[k] += 1; });
    for (int h : hits) {
      CHECK(h == 1);
    }
    CHECK_THROWS_WITH(parallel_for(10, threads,
                                   [](int k) {
                                     if (k == 3) {
                                       throw std::runtime_error("block 3 failed");
                                     }
                                   }),
                      "block 3 failed");
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("paper-scale configs need the explicit option") {
  auto cfg = config(kSmall);
  cfg.paper_scale = true;
  RunOptions o;
  CHECK_THROWS_AS(run_experiment(cfg, o), std::runtime_error);
}

TEST_CASE("small end-to-end run") {
  const auto cfg = config(kSmall);
  RunOptions o;
  const auto r = run_experiment(cfg, o);
  REQUIRE(r.fine.has_value());
  CHECK(r.report.times == std::vector<double>{0.05, 0.1});
  REQUIRE(r.report.errors.size() == 2);
  for (const auto& row : r.report.errors) {
    REQUIRE(row.size() == 2);
    for (double e : row) {
      CHECK(std::isfinite(e));
      CHECK(e < 0.5);
    }
  }
  for (double res : r.max_residual) {
    CHECK(res < 1e-10);
  }
  CHECK(r.flow_hat.size() == 16);
  CHECK(r.transport_hat.size() == 16);
  CHECK(r.macro_c.size() == 2);
  CHECK(r.center_of_mass.size() == 2);
  CHECK(r.report.config_hash == cfg.hash());
  for (const char* stage : {"fine", "flow_cells", "transport_cells", "macro_transport"}) {
    CHECK(r.report.seconds.count(stage) == 1);
  }

  SUBCASE("threads and the cache do not change a bit") {
    const auto cache = scratch("cache");
    RunOptions threaded;
    threaded.threads = 3;
    threaded.cache = cache;
    const auto r2 = run_experiment(cfg, threaded, &*r.fine);
    const auto r3 = run_experiment(cfg, threaded, &*r.fine);
    CHECK(fs::exists(cache));
    CHECK(std::distance(fs::directory_iterator(cache), fs::directory_iterator{}) == 32);
    for (const auto* x : {&r2, &r3}) {
      CHECK(x->report.errors == r.report.errors);
      CHECK(x->state.P == r.state.P);
      CHECK(x->macro_c == r.macro_c);
    }
    fs::remove_all(cache);
  }

  SUBCASE("outputs and manifest") {
    const auto dir = scratch("out");
    write_outputs(r, dir);
    for (const char* f : {"errors.csv", "tensors.csv", "macro_P1.txt", "macro_P2.txt", "fine_p.txt",
                          "fine_c_t0.05.txt", "fine_c_t0.1.txt", "macro_C1_t0.1.txt", "macro_C2_t0.05.txt",
                          "downscaled_c_t0.1.txt", "manifest.txt"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / f));
    }
    const auto back = read_error_csv(dir / "errors.csv");
    CHECK(back.times == r.report.times);
    CHECK(back.errors == r.report.errors);
    CHECK(slurp(dir / "errors.csv").rfind("t,e1,e2\n", 0) == 0);

    std::ifstream grid(dir / "macro_P1.txt");
    int nx = 0;
    int ny = 0;
    double t = -1.0;
    std::string name;
    grid >> nx >> ny >> t >> name;
    CHECK(nx == 5);
    CHECK(ny == 5);
    CHECK(t == 0.0);
    CHECK(name == "P1");
    std::vector<double> values;
    for (double v; grid >> v;) {
      values.push_back(v);
    }
    CHECK(values == std::vector<double>(r.state.P.begin(), r.state.P.begin() + 25));

    std::ifstream man(dir / "manifest.txt");
    std::string line;
    std::getline(man, line);
    CHECK(line == "# mch run manifest");
    int files = 0;
    while (std::getline(man, line)) {
      if (line.rfind("file ", 0) != 0) {
        continue;
      }
      std::istringstream ls(line.substr(5));
      std::string hash;
      std::uintmax_t size = 0;
      std::string file;
      ls >> hash >> size >> file;
      CAPTURE(file);
      CHECK(hash == hex64(file_hash(dir / file)));
      CHECK(size == fs::file_size(dir / file));
      ++files;
    }
    CHECK(files == 13);
    fs::remove_all(dir);
  }
}

TEST_CASE("write_grid checks its shape") {
  const auto dir = scratch("grid");
  fs::create_directories(dir);
  CHECK_THROWS(write_grid(dir / "g.txt", 3, 3, 0.0, "g", std::vector<double>(8)));
  write_grid(dir / "g.txt", 2, 1, 0.5, "g", std::vector<double>{0.1, 1e-20});
  CHECK(slurp(dir / "g.txt") == "2 1 0.5 g\n0.10000000000000001 9.9999999999999995e-21\n");
  fs::remove_all(dir);
}

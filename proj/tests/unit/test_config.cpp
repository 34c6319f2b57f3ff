#include <doctest.h>

#include <sstream>
#include <tuple>

#include "mch/config.hpp"
#include "mch/harness.hpp"

using namespace mch;

namespace {

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

}  // namespace

TEST_CASE("sections, comments and typed accessors") {
  const auto c = parse(
      "top = 1   # trailing comment\n"
      "\n"
      "[grid]\n"
      "  blocks = 20\n"
      "ratio=2.5e-3\n"
      "[ time ]\n"
      "output_times = 0.1, 0.5 1\n"
      "on = yes\n"
      "name = some text here\n");
  CHECK(c.integer("top", 0) == 1);
  CHECK(c.integer("grid.blocks", 0) == 20);
  CHECK(c.number("grid.ratio", 0.0) == 2.5e-3);
  CHECK(c.numbers("time.output_times", {}) == std::vector<double>{0.1, 0.5, 1.0});
  CHECK(c.flag("time.on", false));
  CHECK(c.text("time.name", "") == "some text here");
  CHECK(c.integer("grid.missing", 7) == 7);
  CHECK_FALSE(c.has("grid.missing"));
  CHECK(c.canonical() ==
        "grid.blocks=20\ngrid.ratio=2.5e-3\ntime.name=some text here\ntime.on=yes\ntime.output_times=0.1, 0.5 "
        "1\ntop=1\n");
}

TEST_CASE("unused keys are tracked") {
  const auto c = parse("[a]\nx = 1\ny = 2\n");
  CHECK(c.unused() == std::vector<std::string>{"a.x", "a.y"});
  (void)c.integer("a.x", 0);
  CHECK(c.unused() == std::vector<std::string>{"a.y"});
}

TEST_CASE("malformed input is rejected with its location") {
  auto message = [](const std::string& text) {
    try {
      (void)parse(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[grid\n").find("test.cfg:1") != std::string::npos);
  CHECK(message("a = 1\nnonsense\n").find("test.cfg:2") != std::string::npos);
  CHECK(message(" = 4\n").find("empty key") != std::string::npos);
  CHECK(message("[s]\nk = 1\nk = 2\n").find("duplicate key s.k") != std::string::npos);

  const auto c = parse("[s]\nn = 1.5\nb = maybe\nv = 1 two\n");
  CHECK_THROWS_AS(std::ignore = c.integer("s.n", 0), std::invalid_argument);
  CHECK_THROWS_AS(std::ignore = c.flag("s.b", false), std::invalid_argument);
  CHECK_THROWS_AS(std::ignore = c.numbers("s.v", {}), std::invalid_argument);
  CHECK_THROWS(Config::load("/nonexistent/file.cfg"));
}

TEST_CASE("experiment defaults") {
  const auto e = parse_experiment(parse("[experiment]\nname = x\n"));
  CHECK(e.name == "x");
  CHECK(e.field == FieldType::Layered);
  CHECK(e.fine_cells == 200);
  CHECK(e.blocks == 20);
  CHECK(e.effective_layers() == layers_for(0.05));
  CHECK(e.regions == RegionBoundary::Mirrored);
  CHECK(e.bc.number() == 1);
  CHECK(e.tau == 0.001);
  CHECK(e.output_times == std::vector<double>{0.02, 0.1, 0.5, 1.0, 2.0});
  CHECK(e.stripes.size() == 40);
  CHECK(e.source_mode == MacroSource::Projected);
  CHECK(e.initial_mode == MacroInitial::Projected);
  CHECK_FALSE(e.paper_scale);
  CHECK(e.diffusion_low == e.kappa_low);
}

TEST_CASE("experiment keys") {
  const auto e = parse_experiment(parse(
      "[grid]\nfine_cells = 40\nblocks = 4\nlayers = 2\nregions = clipped\n"
      "[field]\ntype = circular\ndisks = 0.5 0.5 0.1  0.2 0.2 0.05\nkappa_low = 2\nkappa_high = 3\n"
      "diffusion_low = 0.5\nporosity = 0.3\n"
      "[boundary]\ncase = 3\n"
      "[time]\ntau = 0.01\nt_end = 0.5\noutput_times = 0, 0.1, 0.5\n"
      "[source]\ng_amplitude = 2\ng_center = 0.25 0.75\nh_decay = 10\n"
      "[initial]\ntype = zero\n"
      "[macro]\nsource = block\ninitial = averaged\n"));
  CHECK(e.fine_cells == 40);
  CHECK(e.effective_layers() == 2);
  CHECK(e.regions == RegionBoundary::Clipped);
  CHECK(e.field == FieldType::Circular);
  REQUIRE(e.disks.size() == 2);
  CHECK(e.disks[1].radius == 0.05);
  CHECK(e.diffusion_low == 0.5);
  CHECK(e.diffusion_high == 3.0);
  CHECK(e.porosity == 0.3);
  CHECK(e.bc.pressure == PressureBc::DirichletLinearX);
  CHECK(e.bc.concentration == ConcentrationBc::NeumannZero);
  CHECK(e.g.amplitude == 2.0);
  CHECK(e.g.center.x == 0.25);
  CHECK(e.h.decay == 10.0);
  CHECK(e.initial_zero);
  CHECK(e.source_mode == MacroSource::BlockConstant);
  CHECK(e.initial_mode == MacroInitial::Averaged);
}

TEST_CASE("experiment validation") {
  const char* bad[] = {
      "[grid]\nlayers = -2\n",
      "[grid]\nregions = wrapped\n",
      "[field]\ntype = random\n",
      "[field]\nkappa_low = 0\n",
      "[field]\nstripes = 0.1 0.2 0.3\n",
      "[field]\ntype = circular\ndisks = 0.5 0.5\n",
      "[boundary]\ncase = 4\n",
      "[time]\ntau = 0\n",
      "[time]\noutput_times = 0.5 0.1\n",
      "[time]\nt_end = 1\noutput_times = 1.5\n",
      "[time]\ntau = 0.001\noutput_times = 0.0015\n",
      "[source]\ng_decay = -1\n",
      "[initial]\ntype = step\n",
      "[macro]\nsource = lumped\n",
      "[macro]\ninitial = exact\n",
      "[grid]\nblokcs = 10\n",
      "[grid]\nblocks = 1\nfine_cells = 10\n",
      "[grid]\nblocks = 3\nfine_cells = 10\n",
      "[grid]\nblocks = -3\n",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_experiment(parse(text)), std::invalid_argument);
  }
}

TEST_CASE("config hash follows the canonical text") {
  const auto a = parse_experiment(parse("[grid]\nblocks = 10\n[experiment]\nname = a\n"));
  const auto b = parse_experiment(parse("[experiment]\nname = a   # same\n\n[grid]\nblocks=10\n"));
  const auto c = parse_experiment(parse("[grid]\nblocks = 20\n[experiment]\nname = a\n"));
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"example1_case1_H10", "example2_case3_H20", "example1_case2_paper_H40", "homogeneous_H10"}) {
    CAPTURE(name);
    const auto e = load_experiment(std::string(MCH_SOURCE_DIR) + "/configs/" + name + ".cfg");
    CHECK(e.name == name);
  }
}

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mch/harness.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace mch;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> to_array(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows[0].size();
  py::array_t<double> a({rows.size(), cols});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw std::invalid_argument("ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = rows[i][j];
    }
  }
  return a;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::dict flow_dict(const FlowEffective& f) {
  return py::dict("continua"_a = f.continua, "alpha"_a = to_array(f.alpha), "beta_m"_a = to_array(f.beta_m),
                  "beta"_a = to_array(f.beta));
}

py::dict transport_dict(const TransportEffective& t) {
  return py::dict("continua"_a = t.continua, "eta"_a = to_array(t.eta), "theta_m"_a = to_array(t.theta_m),
                  "theta"_a = to_array(t.theta), "gamma"_a = to_array(t.gamma), "zeta"_a = to_array(t.zeta),
                  "chi"_a = to_array(t.chi), "upsilon"_a = to_array(t.upsilon), "iota"_a = to_array(t.iota));
}

ExperimentConfig config_from_text(const std::string& text, const std::map<std::string, std::string>& overrides) {
  std::istringstream is(text);
  auto c = Config::parse(is, "<python>");
  for (const auto& [k, v] : overrides) {
    c.set(k, v);
  }
  return parse_experiment(c);
}

ExperimentConfig config_from_file(const std::filesystem::path& file,
                                  const std::map<std::string, std::string>& overrides) {
  auto c = Config::load(file);
  for (const auto& [k, v] : overrides) {
    c.set(k, v);
  }
  return parse_experiment(c);
}

}  // namespace

PYBIND11_MODULE(mchomog, m) {
  m.doc() = "Multicontinuum homogenization of coupled flow and transport";

  py::class_<ExperimentConfig>(m, "Experiment")
      .def_readonly("name", &ExperimentConfig::name)
      .def_readonly("fine_cells", &ExperimentConfig::fine_cells)
      .def_readonly("blocks", &ExperimentConfig::blocks)
      .def_readonly("tau", &ExperimentConfig::tau)
      .def_readonly("t_end", &ExperimentConfig::t_end)
      .def_readonly("output_times", &ExperimentConfig::output_times)
      .def_readonly("canonical", &ExperimentConfig::canonical)
      .def_property_readonly("case", [](const ExperimentConfig& c) { return c.bc.number(); })
      .def_property_readonly("layers", &ExperimentConfig::effective_layers)
      .def("hash", &ExperimentConfig::hash)
      .def("__repr__", [](const ExperimentConfig& c) {
        return "<Experiment " + c.name + " M=" + std::to_string(c.blocks) + " n_f=" + std::to_string(c.fine_cells) +
               ">";
      });

  m.def("load", &config_from_file, "file"_a, "overrides"_a = std::map<std::string, std::string>{},
        "Read a config file; overrides map \"section.key\" to a value.");
  m.def("parse", &config_from_text, "text"_a, "overrides"_a = std::map<std::string, std::string>{});

  py::class_<ExperimentResult>(m, "Result")
      .def_readonly("config", &ExperimentResult::config)
      .def_property_readonly("times", [](const ExperimentResult& r) { return to_array(r.times); })
      .def_property_readonly("errors", [](const ExperimentResult& r) { return to_array(r.report.errors); })
      .def_property_readonly("seconds", [](const ExperimentResult& r) { return r.report.seconds; })
      .def_property_readonly("center_of_mass", [](const ExperimentResult& r) { return to_array(r.center_of_mass); })
      .def_property_readonly("macro_c", [](const ExperimentResult& r) { return to_array(r.macro_c); })
      .def_property_readonly("pressure", [](const ExperimentResult& r) { return to_array(r.state.P); })
      .def_readonly("max_residual", &ExperimentResult::max_residual)
      .def_property_readonly("has_fine", [](const ExperimentResult& r) { return r.fine.has_value(); })
      .def("flow", [](const ExperimentResult& r, int block) { return flow_dict(r.flow_hat.at(block)); }, "block"_a,
           "Hatted flow tensors of a block.")
      .def(
          "transport",
          [](const ExperimentResult& r, int block) { return transport_dict(r.transport_hat.at(block)); }, "block"_a)
      .def("write", &write_outputs, "dir"_a);

  m.def(
      "run",
      [](const ExperimentConfig& cfg, int threads, std::optional<std::filesystem::path> cache, bool fine,
         bool transport, bool macro_transport, bool paper_scale, std::function<void(const std::string&)> log) {
        RunOptions o;
        o.threads = threads;
        o.cache = std::move(cache);
        o.fine = fine;
        o.transport = transport;
        o.macro_transport = macro_transport;
        o.paper_scale = paper_scale;
        o.log = std::move(log);
        py::gil_scoped_release release;
        if (o.log) {
          auto inner = o.log;
          o.log = [inner](const std::string& s) {
            py::gil_scoped_acquire acquire;
            inner(s);
          };
        }
        return run_experiment(cfg, o);
      },
      "config"_a, "threads"_a = 1, "cache"_a = py::none(), "fine"_a = true, "transport"_a = true,
      "macro_transport"_a = true, "paper_scale"_a = false, "log"_a = nullptr);

  m.def(
      "solve_poisson",
      [](int n, const py::array_t<double, py::array::c_style | py::array::forcecast>& kappa,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& g, bool linear_x) {
        if (n < 1) {
          throw std::invalid_argument("n must be positive");
        }
        FineGrid fine;
        fine.cells_per_side = n;
        fine.h = 1.0 / n;
        fine.mesh = {n, n, 0.0, 0.0, fine.h, fine.h};
        CellField k;
        k.values = to_vector(kappa);
        if (static_cast<int>(k.values.size()) != fine.cell_count()) {
          throw std::invalid_argument("kappa needs one value per cell");
        }
        const auto f = to_vector(g);
        const auto s = solve_flow_fine(fine, k, f, linear_x ? PressureBc::DirichletLinearX : PressureBc::DirichletZero);
        return to_array(s.nodal);
      },
      "n"_a, "kappa"_a, "g"_a, "linear_x"_a = false,
      "Q1 solve of -div(kappa grad p) = g on an n x n unit-square mesh; per-cell kappa and g, nodal result.");

  m.def(
      "fnv1a64", [](const py::bytes& b) {
        const std::string s = b;
        return fnv1a64(s.data(), s.size());
      },
      "data"_a);
  m.def("format_double", &format_double);
  m.def("read_errors", [](const std::filesystem::path& file) {
    const auto r = read_error_csv(file);
    return py::make_tuple(to_array(r.times), to_array(r.errors));
  });
}

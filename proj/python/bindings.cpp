#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fdnet/analysis.hpp"
#include "fdnet/checkpoint.hpp"
#include "fdnet/config.hpp"
#include "fdnet/error.hpp"
#include "fdnet/model.hpp"
#include "fdnet/spectral.hpp"
#include "fdnet/spectrum.hpp"

namespace py = pybind11;
using namespace fdnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v, std::size_t h, std::size_t w) {
  Array out({h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::pair<std::size_t, std::size_t> dims(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))};
}

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

ComplexGrid complex_grid(const Array& re, const Array& im) {
  const auto [h, w] = dims(re);
  if (dims(im) != std::make_pair(h, w)) throw py::value_error("re and im shapes differ");
  ComplexGrid c(h, w);
  c.re = flat(re);
  c.im = flat(im);
  return c;
}

py::tuple complex_tuple(const ComplexGrid& c) {
  return py::make_tuple(to_array(c.re, c.height, c.width), to_array(c.im, c.height, c.width));
}

py::tuple spectrum_tuple(const Spectrum& s) {
  return py::make_tuple(to_array(s.magnitude, s.height, s.width), to_array(s.phase, s.height, s.width));
}

Spectrum spectrum_of(const Array& magnitude, const Array& phase) {
  const auto [h, w] = dims(magnitude);
  if (dims(phase) != std::make_pair(h, w)) throw py::value_error("magnitude and phase shapes differ");
  Spectrum s(h, w);
  s.magnitude = flat(magnitude);
  s.phase = flat(phase);
  return s;
}

py::dict train_config(const std::filesystem::path& path, std::optional<std::size_t> iterations,
                      std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> data_root,
                      std::optional<std::filesystem::path> checkpoint) {
  auto cfg = load_config(path);
  if (iterations) cfg.optimizer.iterations = *iterations;
  if (seed) cfg.seed = *seed;
  if (data_root) cfg.data_root = *data_root;
  std::vector<MetricRecord> records;
  double accuracy = 0;
  {
    py::gil_scoped_release release;
    const Datasets data = load_datasets(cfg);
    Rng rng(cfg.seed);
    auto net = build_network(cfg, rng);
    TrainOptions opts;
    opts.record_wall_time = false;
    const auto result = train(*net, cfg, data, opts);
    records = result.metrics;
    accuracy = result.final_accuracy;
    if (checkpoint) {
      auto state = net->state();
      save_checkpoint(*checkpoint, state);
    }
  }
  py::list rows;
  for (const auto& r : records) rows.append(py::make_tuple(r.iteration, r.loss, r.accuracy));
  py::dict out;
  out["accuracy"] = accuracy;
  out["metrics"] = rows;
  out["csv"] = metrics_csv(records);
  return out;
}

py::dict describe_config(const std::filesystem::path& path) {
  const auto cfg = load_config(path);
  Rng rng(cfg.seed);
  auto net = build_network(cfg, rng);
  std::size_t params = 0;
  for (Parameter* p : net->parameters()) params += p->size();
  py::list layers;
  for (const auto& l : net->layers()) layers.append(py::make_tuple(l->name(), std::string(l->kind())));
  const auto in = input_shape(cfg);
  py::dict out;
  out["variant"] = std::string(to_string(cfg.variant));
  out["dataset"] = std::string(to_string(cfg.dataset));
  out["data_root"] = cfg.data_root.string();
  out["input_shape"] = py::make_tuple(in.channels, in.height, in.width);
  out["first_layer_weights"] = first_layer_weight_count(*net);
  out["parameters"] = params;
  out["layers"] = layers;
  return out;
}

}  // namespace

PYBIND11_MODULE(_fdnet, m) {
  m.doc() = "frequency-domain CNN core (native)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalAbort>(m, "NumericalAbort", PyExc_ArithmeticError);
  py::register_exception<NumericalInconsistency>(m, "NumericalInconsistency", PyExc_ArithmeticError);

  m.def("dft2", [](const Array& grid) {
    const auto [h, w] = dims(grid);
    return spectrum_tuple(dft2(RealGrid(h, w, flat(grid))));
  }, py::arg("grid"), "Centered unnormalized 2-D DFT; returns (magnitude, phase).");

  m.def("idft2", [](const Array& magnitude, const Array& phase) {
    const RealGrid g = idft2(spectrum_of(magnitude, phase));
    return to_array(g.samples, g.height, g.width);
  }, py::arg("magnitude"), py::arg("phase"));

  m.def("tsrelu", [](const Array& re, const Array& im, double alpha, double beta) {
    return complex_tuple(tsrelu_apply(complex_grid(re, im), {alpha, beta}));
  }, py::arg("re"), py::arg("im"), py::arg("alpha") = 1.0, py::arg("beta") = TwoSReLUConfig{}.beta);

  m.def("tsrelu_adjoint", [](const Array& re, const Array& im, double alpha, double beta) {
    return complex_tuple(tsrelu_adjoint(complex_grid(re, im), {alpha, beta}));
  }, py::arg("re"), py::arg("im"), py::arg("alpha") = 1.0, py::arg("beta") = TwoSReLUConfig{}.beta);

  m.def("low_frequency_region", [](std::size_t h, std::size_t w) {
    std::vector<std::pair<int, int>> out;
    for (auto p : low_frequency_region(h, w)) out.emplace_back(p.u, p.v);
    return out;
  }, py::arg("height"), py::arg("width"));

  m.def("spectral_pool", [](const Array& magnitude, const Array& phase, std::size_t h, std::size_t w) {
    return spectrum_tuple(spectral_pool(spectrum_of(magnitude, phase), h, w));
  }, py::arg("magnitude"), py::arg("phase"), py::arg("height"), py::arg("width"));

  m.def("analyze_spectrum", [] {
    const auto a = analyze_spectrum();
    py::dict files;
    for (const auto& f : a.files) files[py::str(f.name)] = f.content;
    py::list checks;
    for (const auto& c : a.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
    py::dict out;
    out["files"] = files;
    out["checks"] = checks;
    out["all_passed"] = a.all_passed();
    return out;
  });

  m.def("describe_config", &describe_config, py::arg("path"));
  m.def("train", &train_config, py::arg("config"), py::arg("iterations") = py::none(),
        py::arg("seed") = py::none(), py::arg("data_root") = py::none(),
        py::arg("checkpoint") = py::none());
}

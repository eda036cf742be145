#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dice/errors.hpp"
#include "dice/experiment.hpp"
#include "dice/geometry.hpp"
#include "dice/metrics.hpp"
#include "dice/phantom.hpp"

namespace py = pybind11;
using namespace dice;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Vec& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array image_array(const Image& img) { return to_array(img.pixels(), {img.side(), img.side()}); }

Image image_from(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw DimensionError("expected a square 2-D array");
  return Image(static_cast<int>(a.shape(0)), Vec(a.data(), a.data() + a.size()));
}

Sinogram sino_from(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D sinogram (angles x detectors)");
  return Sinogram(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), Vec(a.data(), a.data() + a.size()));
}

ExperimentConfig make_config(int image_side, std::uint64_t seed, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  cfg.image_side = image_side;
  cfg.seed = seed;
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Diffusion consensus equilibrium for sparse-view parallel-beam CT";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("version", &version_string);

  m.def("shepp_logan", [](int side) { return image_array(shepp_logan(side)); }, py::arg("side") = 64);
  m.def("ellipse_phantom", [](int side, std::uint64_t seed) { return image_array(random_ellipse_phantom(side, seed)); },
        py::arg("side") = 64, py::arg("seed") = 0);
  m.def("disk_phantom", [](int side, double radius) { return image_array(disk_phantom(side, radius)); },
        py::arg("side") = 64, py::arg("radius") = 0.6);

  m.def(
      "angles",
      [](int side, int views, const std::string& pattern, std::uint64_t seed) {
        return build_geometry(side, {parse_pattern_kind(pattern), views, seed}).angles_deg;
      },
      py::arg("side"), py::arg("views"), py::arg("pattern") = "uniform", py::arg("seed") = 0,
      "View angles in degrees for a subset of the 180-view grid.");

  m.def(
      "radon",
      [](const Array& image, std::vector<double> angles_deg) {
        const Image img = image_from(image);
        ScanGeometry g = build_geometry(img.side(), {PatternKind::uniform, 180, 0});
        g.angles_deg = std::move(angles_deg);
        const Sinogram s = radon_forward(img, g);
        return to_array(s.values(), {s.n_angles(), s.n_detectors()});
      },
      py::arg("image"), py::arg("angles_deg"));

  m.def(
      "backproject",
      [](const Array& sino, std::vector<double> angles_deg, int side) {
        ScanGeometry g = build_geometry(side, {PatternKind::uniform, 180, 0});
        g.angles_deg = std::move(angles_deg);
        return image_array(radon_adjoint(sino_from(sino), g));
      },
      py::arg("sinogram"), py::arg("angles_deg"), py::arg("side"));

  m.def(
      "reconstruct",
      [](const Array& sino, int views, const std::string& pattern, const std::string& method, int image_side,
         std::uint64_t seed, const std::vector<std::string>& overrides) {
        const ExperimentConfig cfg = make_config(image_side, seed, overrides);
        const ScanGeometry g = experiment_geometry(cfg, parse_pattern_kind(pattern), views);
        const Sinogram s = sino_from(sino);
        Reconstruction rec;
        {
          py::gil_scoped_release release;
          rec = reconstruct(cfg, parse_method(method), s, g, 0);
        }
        return image_array(rec.image);
      },
      py::arg("sinogram"), py::arg("views"), py::arg("pattern") = "uniform", py::arg("method") = "dice",
      py::arg("image_side") = 64, py::arg("seed") = 0, py::arg("overrides") = std::vector<std::string>{},
      "Reconstruct a sinogram measured on experiment_angles(views, pattern, seed).\n"
      "overrides are 'section.key=value' strings as on the command line.");

  m.def(
      "experiment_angles",
      [](int views, const std::string& pattern, int image_side, std::uint64_t seed) {
        return experiment_geometry(make_config(image_side, seed, {}), parse_pattern_kind(pattern), views).angles_deg;
      },
      py::arg("views"), py::arg("pattern") = "uniform", py::arg("image_side") = 64, py::arg("seed") = 0);

  m.def(
      "psnr", [](const Array& ref, const Array& test, double r) { return psnr(image_from(ref), image_from(test), r); },
      py::arg("ref"), py::arg("test"), py::arg("data_range") = 1.0);
  m.def(
      "ssim", [](const Array& ref, const Array& test, double r) { return ssim(image_from(ref), image_from(test), r); },
      py::arg("ref"), py::arg("test"), py::arg("data_range") = 1.0);

  m.def(
      "run_experiment",
      [](const std::string& ini_text) {
        const ExperimentConfig cfg = parse_config(ini_text, "<python>");
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["image_id"] = row.image_id;
          d["method"] = row.method;
          d["views"] = row.views;
          d["pattern"] = row.pattern;
          d["psnr"] = row.psnr;
          d["ssim"] = row.ssim;
          rows.append(d);
        }
        return rows;
      },
      py::arg("ini_text"), "Run a full experiment from INI text; returns the metric rows.");
}

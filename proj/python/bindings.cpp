// Python bindings: renderer, oracle, metrics, paste-back and checkpoint-based transfer on
// numpy arrays of shape (H, W, 3), float32 in [0, 1].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

#include "reenact/editing/editing.hpp"
#include "reenact/editing/paste_back.hpp"
#include "reenact/errors.hpp"
#include "reenact/eval/metrics.hpp"
#include "reenact/image_tensor.hpp"
#include "reenact/toyface/fit.hpp"
#include "reenact/toyface/render.hpp"
#include "reenact/training/checkpoint.hpp"

namespace py = pybind11;
using namespace reenact;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 3) throw ShapeError("expected an (H, W, C) array");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), img.pixels().begin());
  return img;
}

Array to_array(const Image& img) {
  Array a({img.height(), img.width(), img.channels()});
  std::copy(img.pixels().begin(), img.pixels().end(), a.mutable_data());
  return a;
}

std::map<std::string, double> params_to_dict(const toyface::ToyFaceParams& p) {
  std::map<std::string, double> out;
  const auto raw = toyface::to_raw(p);
  const auto& table = toyface::factor_table();
  for (std::size_t i = 0; i < raw.size(); ++i) out[std::string(table[i].name)] = raw[i];
  return out;
}

toyface::ToyFaceParams params_from_dict(const std::map<std::string, double>& d) {
  auto raw = toyface::to_raw(toyface::ToyFaceParams{});
  const auto& table = toyface::factor_table();
  for (const auto& [key, value] : d) {
    std::size_t i = 0;
    while (i < table.size() && table[i].name != key) ++i;
    if (i == table.size()) throw ArgumentError("unknown factor '" + key + "'");
    raw[i] = value;
  }
  return toyface::from_raw(raw);
}

class Transfer {
 public:
  explicit Transfer(const std::string& checkpoint)
      : model_(training::model_from_checkpoint(training::load_checkpoint(checkpoint))) {}

  int resolution() const { return model_.config().resolution; }

  Array expression(const Array& source, const Array& driving) { return apply(source, driving, true); }
  Array pose(const Array& source, const Array& driving) { return apply(source, driving, false); }

 private:
  Array apply(const Array& source, const Array& driving, bool expression) {
    const auto S = to_tensor(to_image(source)), D = to_tensor(to_image(driving));
    Image out;
    {
      py::gil_scoped_release release;
      torch::NoGradGuard ng;
      const auto t = expression ? editing::transfer_expression(model_, S, D) : editing::transfer_pose(model_, S, D);
      out = reenact::to_image(t);
    }
    return to_array(out);
  }

  models::ReenactModel model_;
};

}  // namespace

PYBIND11_MODULE(_reenact, m) {
  m.doc() = "Toy-face renderer, factor oracle, metrics and pose/expression transfer";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<CorruptionError>(m, "CorruptionError", PyExc_OSError);

  m.def("factor_names", [] {
    std::vector<std::string> names;
    for (const auto& f : toyface::factor_table()) names.emplace_back(f.name);
    return names;
  });
  m.def("render", [](const std::map<std::string, double>& params, int resolution) {
    return to_array(toyface::render(params_from_dict(params), resolution));
  }, py::arg("params") = std::map<std::string, double>{}, py::arg("resolution") = 64,
        "Render a toy face; unspecified factors take their defaults.");
  m.def("fit_params", [](const Array& image) {
    const Image img = to_image(image);
    toyface::FitResult r;
    {
      py::gil_scoped_release release;
      r = toyface::fit_params(img);
    }
    return py::make_tuple(params_to_dict(r.params), r.residual);
  }, py::arg("image"), "Recover (factors, residual) from an image.");
  m.attr("RELIABLE_RESIDUAL") = toyface::kReliableResidual;
  m.def("psnr", [](const Array& a, const Array& b) { return eval::psnr(to_image(a), to_image(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return eval::ssim(to_image(a), to_image(b)); });
  m.def("paste_back", [](const Array& frame, std::tuple<int, int, int, int> box, const Array& crop, double sigma) {
    const auto [x, y, w, h] = box;
    return to_array(editing::paste_back(to_image(frame), {x, y, w, h}, to_image(crop), sigma));
  }, py::arg("frame"), py::arg("box"), py::arg("crop"), py::arg("feather_sigma") = 0.0);

  py::class_<Transfer>(m, "Transfer")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def_property_readonly("resolution", &Transfer::resolution)
      .def("expression", &Transfer::expression, py::arg("source"), py::arg("driving"))
      .def("pose", &Transfer::pose, py::arg("source"), py::arg("driving"));
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <utility>
#include <vector>

#include "soc/hungarian.hpp"
#include "soc/metrics.hpp"
#include "soc/ops.hpp"
#include "soc/tape.hpp"
#include "soc/tensor.hpp"

namespace py = pybind11;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

soc::Tensor to_tensor(const Arr& a) {
  soc::Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  std::vector<double> data(a.data(), a.data() + a.size());
  return soc::Tensor(std::move(shape), std::move(data));
}

Arr from_tensor(const soc::Tensor& t) {
  std::vector<py::ssize_t> shape;
  for (int d : t.shape()) shape.push_back(d);
  Arr out(shape);
  std::memcpy(out.mutable_data(), t.data(), sizeof(double) * static_cast<size_t>(t.size()));
  return out;
}

soc::Mask to_mask(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("mask must be 2-D");
  soc::Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  const uint8_t* p = a.data();
  for (size_t i = 0; i < m.v.size(); ++i) m.v[i] = p[i] ? 1 : 0;
  return m;
}

// every exposed op runs off-tape; the bindings expose values, not gradients
Arr unary(const Arr& x, soc::Tensor (*fn)(soc::Tape&, const soc::Tensor&)) {
  soc::Tape off(false);
  return from_tensor(fn(off, to_tensor(x)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "numeric core bindings: activations, attention primitives, "
            "assignment and segmentation metrics";

  m.def("relu", [](const Arr& x) { return unary(x, soc::ops::relu); });
  m.def("sigmoid", [](const Arr& x) { return unary(x, soc::ops::sigmoid); });
  m.def("softplus", [](const Arr& x) { return unary(x, soc::ops::softplus); });

  m.def(
      "softmax",
      [](const Arr& x, int axis) {
        soc::Tape off(false);
        return from_tensor(soc::ops::softmax(off, to_tensor(x), axis));
      },
      py::arg("x"), py::arg("axis") = -1);
  m.def(
      "logsumexp",
      [](const Arr& x, int axis) {
        soc::Tape off(false);
        return from_tensor(soc::ops::logsumexp(off, to_tensor(x), axis));
      },
      py::arg("x"), py::arg("axis") = -1);

  m.def("matmul", [](const Arr& a, const Arr& b) {
    soc::Tape off(false);
    return from_tensor(soc::ops::matmul(off, to_tensor(a), to_tensor(b)));
  });

  m.def(
      "conv2d",
      [](const Arr& x, const Arr& w, const Arr& b, int stride, int pad) {
        soc::Tape off(false);
        return from_tensor(
            soc::ops::conv2d(off, to_tensor(x), to_tensor(w), to_tensor(b), stride, pad));
      },
      py::arg("x"), py::arg("w"), py::arg("b"), py::arg("stride") = 1, py::arg("pad") = 0);

  m.def("upsample2x", [](const Arr& x) { return unary(x, soc::ops::upsample2x); });
  m.def(
      "avg_pool2d",
      [](const Arr& x, int k, int stride) {
        soc::Tape off(false);
        return from_tensor(soc::ops::avg_pool2d(off, to_tensor(x), k, stride > 0 ? stride : k));
      },
      py::arg("x"), py::arg("k") = 2, py::arg("stride") = 0);

  m.def("hungarian", [](const Arr& cost) {
    return soc::hungarian(to_tensor(cost));
  });
  m.def("assignment_cost", [](const Arr& cost, const std::vector<std::pair<int, int>>& pairs) {
    return soc::assignment_cost(to_tensor(cost), pairs);
  });

  using MaskArr = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;
  m.def("iou", [](const MaskArr& pred, const MaskArr& gt) {
    return soc::mask_iou(to_mask(pred), to_mask(gt));
  });
  m.def(
      "boundary_f",
      [](const MaskArr& pred, const MaskArr& gt, int tol) {
        soc::Mask p = to_mask(pred), g = to_mask(gt);
        if (tol < 0) tol = soc::boundary_tolerance(p.h, p.w);
        return soc::boundary_f(p, g, tol);
      },
      py::arg("pred"), py::arg("gt"), py::arg("tol") = -1);
  m.def("boundary_tolerance", &soc::boundary_tolerance);
  m.def("precision_at_k", &soc::precision_at_k);
  m.def("map_50_95", &soc::map_50_95);
  m.def("stability_variance", &soc::stability_variance);
}

#include "reenact/models/warp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "reenact/errors.hpp"

namespace reenact::models {

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::tensor_list;

// Per-pixel bilinear stencil shared by all channels.
struct Stencil {
  std::int64_t i00, i01, i10, i11;  // flat offsets into one H*W plane
  double w00, w01, w10, w11;
  double wy, wx;                    // fractional parts
  bool free_y, free_x;              // sample position not clamped on that axis
};

template <typename T>
std::vector<Stencil> build_stencils(const T* flow, std::int64_t h, std::int64_t w) {
  const std::int64_t plane = h * w;
  std::vector<Stencil> out(static_cast<std::size_t>(plane));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t p = y * w + x;
      const double sy_raw = static_cast<double>(y) + flow[p];
      const double sx_raw = static_cast<double>(x) + flow[plane + p];
      const double sy = std::clamp(sy_raw, 0.0, static_cast<double>(h - 1));
      const double sx = std::clamp(sx_raw, 0.0, static_cast<double>(w - 1));
      const std::int64_t y0 = std::min(static_cast<std::int64_t>(std::floor(sy)), h - 1);
      const std::int64_t x0 = std::min(static_cast<std::int64_t>(std::floor(sx)), w - 1);
      const std::int64_t y1 = std::min(y0 + 1, h - 1);
      const std::int64_t x1 = std::min(x0 + 1, w - 1);
      Stencil& s = out[static_cast<std::size_t>(p)];
      s.wy = sy - static_cast<double>(y0);
      s.wx = sx - static_cast<double>(x0);
      s.i00 = y0 * w + x0;
      s.i01 = y0 * w + x1;
      s.i10 = y1 * w + x0;
      s.i11 = y1 * w + x1;
      s.w00 = (1.0 - s.wy) * (1.0 - s.wx);
      s.w01 = (1.0 - s.wy) * s.wx;
      s.w10 = s.wy * (1.0 - s.wx);
      s.w11 = s.wy * s.wx;
      s.free_y = sy_raw >= 0.0 && sy_raw <= static_cast<double>(h - 1);
      s.free_x = sx_raw >= 0.0 && sx_raw <= static_cast<double>(w - 1);
    }
  }
  return out;
}

template <typename T>
void warp_forward(const torch::Tensor& feature, const torch::Tensor& flow, torch::Tensor& out) {
  const auto b = feature.size(0), c = feature.size(1), h = feature.size(2), w = feature.size(3);
  const std::int64_t plane = h * w;
  const T* in = feature.data_ptr<T>();
  const T* fl = flow.data_ptr<T>();
  T* dst = out.data_ptr<T>();
  for (std::int64_t n = 0; n < b; ++n) {
    const auto stencils = build_stencils(fl + n * 2 * plane, h, w);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* src = in + (n * c + ch) * plane;
      T* o = dst + (n * c + ch) * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        const Stencil& s = stencils[static_cast<std::size_t>(p)];
        o[p] = static_cast<T>(s.w00 * src[s.i00] + s.w01 * src[s.i01] + s.w10 * src[s.i10] +
                              s.w11 * src[s.i11]);
      }
    }
  }
}

template <typename T>
void warp_backward(const torch::Tensor& feature, const torch::Tensor& flow,
                   const torch::Tensor& grad_out, torch::Tensor& grad_feature,
                   torch::Tensor& grad_flow) {
  const auto b = feature.size(0), c = feature.size(1), h = feature.size(2), w = feature.size(3);
  const std::int64_t plane = h * w;
  const T* in = feature.data_ptr<T>();
  const T* fl = flow.data_ptr<T>();
  const T* g = grad_out.data_ptr<T>();
  T* gf = grad_feature.data_ptr<T>();
  T* gflow = grad_flow.data_ptr<T>();
  std::vector<double> acc_y(static_cast<std::size_t>(plane));
  std::vector<double> acc_x(static_cast<std::size_t>(plane));
  for (std::int64_t n = 0; n < b; ++n) {
    const auto stencils = build_stencils(fl + n * 2 * plane, h, w);
    std::fill(acc_y.begin(), acc_y.end(), 0.0);
    std::fill(acc_x.begin(), acc_x.end(), 0.0);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* src = in + (n * c + ch) * plane;
      const T* go = g + (n * c + ch) * plane;
      T* gsrc = gf + (n * c + ch) * plane;
      for (std::int64_t p = 0; p < plane; ++p) {
        const Stencil& s = stencils[static_cast<std::size_t>(p)];
        const double gp = go[p];
        gsrc[s.i00] += static_cast<T>(gp * s.w00);
        gsrc[s.i01] += static_cast<T>(gp * s.w01);
        gsrc[s.i10] += static_cast<T>(gp * s.w10);
        gsrc[s.i11] += static_cast<T>(gp * s.w11);
        const double v00 = src[s.i00], v01 = src[s.i01], v10 = src[s.i10], v11 = src[s.i11];
        acc_y[p] += gp * ((1.0 - s.wx) * (v10 - v00) + s.wx * (v11 - v01));
        acc_x[p] += gp * ((1.0 - s.wy) * (v01 - v00) + s.wy * (v11 - v10));
      }
    }
    T* gy = gflow + n * 2 * plane;
    T* gx = gy + plane;
    for (std::int64_t p = 0; p < plane; ++p) {
      const Stencil& s = stencils[static_cast<std::size_t>(p)];
      gy[p] = s.free_y ? static_cast<T>(acc_y[p]) : T(0);
      gx[p] = s.free_x ? static_cast<T>(acc_x[p]) : T(0);
    }
  }
}

class WarpFunction : public torch::autograd::Function<WarpFunction> {
 public:
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& feature,
                               const torch::Tensor& flow) {
    const auto f = feature.contiguous();
    const auto fl = flow.contiguous();
    ctx->save_for_backward({f, fl});
    auto out = torch::empty_like(f);
    AT_DISPATCH_FLOATING_TYPES(f.scalar_type(), "warp_forward",
                               [&] { warp_forward<scalar_t>(f, fl, out); });
    return out;
  }

  static tensor_list backward(AutogradContext* ctx, tensor_list grad_outputs) {
    const auto saved = ctx->get_saved_variables();
    const auto& f = saved[0];
    const auto& fl = saved[1];
    const auto go = grad_outputs[0].contiguous();
    auto grad_feature = torch::zeros_like(f);
    auto grad_flow = torch::zeros_like(fl);
    AT_DISPATCH_FLOATING_TYPES(f.scalar_type(), "warp_backward", [&] {
      warp_backward<scalar_t>(f, fl, go, grad_feature, grad_flow);
    });
    return {grad_feature, grad_flow};
  }
};

}  // namespace

torch::Tensor warp(const torch::Tensor& feature, const torch::Tensor& flow) {
  if (feature.dim() != 4 || flow.dim() != 4 || flow.size(1) != 2 ||
      feature.size(0) != flow.size(0) || feature.size(2) != flow.size(2) ||
      feature.size(3) != flow.size(3)) {
    throw ShapeError("warp: flow must be [B,2,H,W] matching feature [B,C,H,W]");
  }
  if (feature.scalar_type() != flow.scalar_type()) {
    throw ShapeError("warp: feature and flow dtypes differ");
  }
  return WarpFunction::apply(feature, flow);
}

}  // namespace reenact::models

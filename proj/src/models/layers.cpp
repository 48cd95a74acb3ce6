#include "reenact/models/layers.hpp"

#include <cmath>

namespace reenact::models {

namespace F = torch::nn::functional;

torch::Tensor lrelu(const torch::Tensor& x) {
  return torch::leaky_relu(x, 0.2) * std::sqrt(2.0);
}

EqualLinearImpl::EqualLinearImpl(int in_features, int out_features, at::Generator& gen,
                                 double bias_init)
    : scale_(1.0 / std::sqrt(static_cast<double>(in_features))) {
  weight = register_parameter("weight", torch::randn({out_features, in_features}, gen));
  bias = register_parameter("bias", torch::full({out_features}, bias_init));
}

torch::Tensor EqualLinearImpl::forward(const torch::Tensor& x) {
  return torch::nn::functional::linear(x, weight * scale_, bias);
}

EqualConv2dImpl::EqualConv2dImpl(int in_channels, int out_channels, int kernel,
                                 at::Generator& gen, bool use_bias)
    : scale_(1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel))),
      padding_(kernel / 2) {
  weight = register_parameter("weight",
                              torch::randn({out_channels, in_channels, kernel, kernel}, gen));
  if (use_bias) bias = register_parameter("bias", torch::zeros({out_channels}));
}

torch::Tensor EqualConv2dImpl::forward(const torch::Tensor& x) {
  return torch::conv2d(x, weight * scale_, bias, 1, padding_);
}

ModulatedConv2dImpl::ModulatedConv2dImpl(int in_channels, int out_channels, int kernel,
                                         int code_dim, at::Generator& gen, bool demodulate,
                                         bool zero_init)
    : scale_(1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel))),
      padding_(kernel / 2),
      demodulate_(demodulate) {
  affine = register_module("affine", EqualLinear(code_dim, in_channels, gen, 1.0));
  auto w = torch::randn({out_channels, in_channels, kernel, kernel}, gen);
  if (zero_init) w.zero_();
  weight = register_parameter("weight", w);
  bias = register_parameter("bias", torch::zeros({out_channels}));
}

torch::Tensor ModulatedConv2dImpl::forward(const torch::Tensor& x, const torch::Tensor& code) {
  const auto style = affine->forward(code);  // [B, in]
  const auto w = weight * scale_;
  auto out = torch::conv2d(x * style.unsqueeze(-1).unsqueeze(-1), w, {}, 1, padding_);
  if (demodulate_) {
    // sum over (in, k, k) of (w * style)^2, per sample and output channel
    const auto w_sq = w.pow(2).sum({2, 3});  // [out, in]
    const auto demod = torch::rsqrt(torch::matmul(style.pow(2), w_sq.t()) + 1e-8);  // [B, out]
    out = out * demod.unsqueeze(-1).unsqueeze(-1);
  }
  return out + bias.view({1, -1, 1, 1});
}

torch::Tensor upsample2(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

torch::Tensor downsample2(const torch::Tensor& x) { return torch::avg_pool2d(x, 2); }

}  // namespace reenact::models

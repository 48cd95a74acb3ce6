#pragma once

#include <torch/torch.h>

namespace reenact::models {

// Leaky ReLU (slope 0.2) with sqrt(2) gain, paired with the equalized layers below.
torch::Tensor lrelu(const torch::Tensor& x);

// Equalized-learning-rate layers: weights stored as N(0,1), scaled by 1/sqrt(fan_in) at run time.
class EqualLinearImpl : public torch::nn::Module {
 public:
  EqualLinearImpl(int in_features, int out_features, at::Generator& gen, double bias_init = 0.0);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight, bias;

 private:
  double scale_;
};
TORCH_MODULE(EqualLinear);

class EqualConv2dImpl : public torch::nn::Module {
 public:
  EqualConv2dImpl(int in_channels, int out_channels, int kernel, at::Generator& gen,
                  bool use_bias = true);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight, bias;

 private:
  double scale_;
  int padding_;
};
TORCH_MODULE(EqualConv2d);

// Convolution whose input channels are scaled per sample by an affine map of a latent code.
// With `demodulate`, output channels are renormalized per sample. With `zero_init`, the
// convolution weight starts at zero (the code affine does not).
class ModulatedConv2dImpl : public torch::nn::Module {
 public:
  ModulatedConv2dImpl(int in_channels, int out_channels, int kernel, int code_dim,
                      at::Generator& gen, bool demodulate, bool zero_init = false);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& code);

  EqualLinear affine{nullptr};
  torch::Tensor weight, bias;

 private:
  double scale_;
  int padding_;
  bool demodulate_;
};
TORCH_MODULE(ModulatedConv2d);

torch::Tensor upsample2(const torch::Tensor& x);
torch::Tensor downsample2(const torch::Tensor& x);

}  // namespace reenact::models

#pragma once

#include <torch/torch.h>

#include <optional>
#include <vector>

#include "reenact/models/layers.hpp"

namespace reenact::models {

struct ModelConfig {
  int resolution = 64;
  int latent_dim = 128;
  // Encoder output channels per residual block, finest first (block k runs at resolution / 2^k).
  std::vector<int> channels{16, 32, 64, 128, 128};
  int probe_features = 16;

  int num_blocks() const { return static_cast<int>(channels.size()); }
  // Outputs of the first (num_blocks - 2) encoder blocks form the feature pyramid.
  int pyramid_levels() const { return num_blocks() - 2; }
  // Throws ConfigError if channels do not reach 4x4 exactly.
  void validate() const;
};

// Encoder output c plus the multi-resolution feature pyramid, finest first.
struct Encoding {
  torch::Tensor code;                  // [B, d]
  std::vector<torch::Tensor> pyramid;  // level k: [B, ch_k, r/2^k, r/2^k]
};

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int in_channels, int out_channels, bool downsample, at::Generator& gen);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  EqualConv2d conv1{nullptr}, conv2{nullptr}, skip{nullptr};
  bool downsample_;
};
TORCH_MODULE(ResBlock);

class EncoderImpl : public torch::nn::Module {
 public:
  EncoderImpl(const ModelConfig& config, at::Generator& gen);
  Encoding forward(const torch::Tensor& image);

 private:
  ModelConfig config_;
  EqualConv2d stem{nullptr};
  torch::nn::ModuleList blocks;
  EqualLinear project{nullptr};
};
TORCH_MODULE(Encoder);

struct MotionCodes {
  torch::Tensor expression;  // [B, d]
  torch::Tensor pose;        // [B, d]
};

// Five shared fully connected layers, then two three-layer heads.
class DisentanglerImpl : public torch::nn::Module {
 public:
  DisentanglerImpl(int latent_dim, at::Generator& gen);
  MotionCodes forward(const torch::Tensor& code);

  static constexpr int kSharedLayers = 5;
  static constexpr int kHeadLayers = 3;

 private:
  int latent_dim_;
  torch::nn::ModuleList shared, expression_head, pose_head;
};
TORCH_MODULE(Disentangler);

// One resolution-doubling style block of the flow generator.
class StyleBlockImpl : public torch::nn::Module {
 public:
  StyleBlockImpl(int in_channels, int out_channels, std::optional<int> pyramid_channels,
                 int code_dim, at::Generator& gen);
  // Returns (features, rgb contribution); `flow_out` receives the predicted flow if any.
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& x,
                                                  const torch::Tensor& code,
                                                  const torch::Tensor* pyramid_level,
                                                  torch::Tensor* flow_out = nullptr);
  bool has_flow() const { return !flow.is_empty(); }

  ModulatedConv2d conv{nullptr};
  ModulatedConv2d flow{nullptr};
  ModulatedConv2d refine{nullptr};
  EqualConv2d fuse{nullptr};
  ModulatedConv2d to_rgb{nullptr};
};
TORCH_MODULE(StyleBlock);

class GeneratorImpl : public torch::nn::Module {
 public:
  GeneratorImpl(const ModelConfig& config, at::Generator& gen);
  // Image in [0,1], [B, 3, r, r]. `flows`, if given, receives each block's flow (or undefined).
  torch::Tensor forward(const torch::Tensor& code, const std::vector<torch::Tensor>& pyramid,
                        std::vector<torch::Tensor>* flows = nullptr);

  std::vector<StyleBlock> style_blocks() const { return blocks_; }

 private:
  ModelConfig config_;
  torch::Tensor constant;
  std::vector<StyleBlock> blocks_;
};
TORCH_MODULE(Generator);

class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(const ModelConfig& config, at::Generator& gen);
  torch::Tensor forward(const torch::Tensor& image);  // [B] logits

 private:
  ModelConfig config_;
  EqualConv2d from_rgb{nullptr};
  torch::nn::ModuleList blocks;
  EqualLinear fc{nullptr}, out{nullptr};
};
TORCH_MODULE(Discriminator);

// Frozen random convolutional stack used as the perceptual feature extractor.
class PerceptualExtractorImpl : public torch::nn::Module {
 public:
  explicit PerceptualExtractorImpl(std::uint64_t seed);
  std::vector<torch::Tensor> forward(const torch::Tensor& image);
  static constexpr int kLayers = 4;

 private:
  std::vector<EqualConv2d> convs_;
};
TORCH_MODULE(PerceptualExtractor);

}  // namespace reenact::models

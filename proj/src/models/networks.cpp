#include "reenact/models/networks.hpp"

#include <cmath>
#include <string>

#include <ATen/CPUGeneratorImpl.h>

#include "reenact/errors.hpp"
#include "reenact/models/warp.hpp"

namespace reenact::models {

void ModelConfig::validate() const {
  if (resolution < 16 || (resolution & (resolution - 1)) != 0) {
    throw ConfigError("model resolution must be a power of two >= 16");
  }
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if ((resolution >> (num_blocks() - 1)) != 4) {
    throw ConfigError("channels must list one entry per encoder block (resolution " +
                      std::to_string(resolution) + " needs " +
                      std::to_string(static_cast<int>(std::log2(resolution)) - 1) + ")");
  }
  for (int c : channels) {
    if (c < 1) throw ConfigError("channel counts must be positive");
  }
}

ResBlockImpl::ResBlockImpl(int in_channels, int out_channels, bool downsample, at::Generator& gen)
    : downsample_(downsample) {
  conv1 = register_module("conv1", EqualConv2d(in_channels, in_channels, 3, gen));
  conv2 = register_module("conv2", EqualConv2d(in_channels, out_channels, 3, gen));
  skip = register_module("skip", EqualConv2d(in_channels, out_channels, 1, gen, false));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = lrelu(conv1->forward(x));
  auto s = x;
  if (downsample_) {
    h = downsample2(h);
    s = downsample2(s);
  }
  h = lrelu(conv2->forward(h));
  return (h + skip->forward(s)) * (1.0 / std::sqrt(2.0));
}

EncoderImpl::EncoderImpl(const ModelConfig& config, at::Generator& gen) : config_(config) {
  config_.validate();
  const auto& ch = config_.channels;
  stem = register_module("stem", EqualConv2d(3, ch[0], 3, gen));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int k = 0; k < config_.num_blocks(); ++k) {
    blocks->push_back(ResBlock(k == 0 ? ch[0] : ch[k - 1], ch[k], k > 0, gen));
  }
  project = register_module("project", EqualLinear(ch.back(), config_.latent_dim, gen));
}

Encoding EncoderImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 3 || image.size(2) != config_.resolution ||
      image.size(3) != config_.resolution) {
    throw ShapeError("encode: expected [B,3," + std::to_string(config_.resolution) + "," +
                     std::to_string(config_.resolution) + "] input");
  }
  Encoding enc;
  auto x = lrelu(stem->forward(image * 2.0 - 1.0));
  for (int k = 0; k < config_.num_blocks(); ++k) {
    x = blocks[k]->as<ResBlock>()->forward(x);
    if (k < config_.pyramid_levels()) enc.pyramid.push_back(x);
  }
  enc.code = project->forward(x.mean({2, 3}));
  return enc;
}

DisentanglerImpl::DisentanglerImpl(int latent_dim, at::Generator& gen) : latent_dim_(latent_dim) {
  shared = register_module("shared", torch::nn::ModuleList());
  expression_head = register_module("expression_head", torch::nn::ModuleList());
  pose_head = register_module("pose_head", torch::nn::ModuleList());
  for (int i = 0; i < kSharedLayers; ++i) shared->push_back(EqualLinear(latent_dim, latent_dim, gen));
  for (int i = 0; i < kHeadLayers; ++i) {
    expression_head->push_back(EqualLinear(latent_dim, latent_dim, gen));
  }
  for (int i = 0; i < kHeadLayers; ++i) pose_head->push_back(EqualLinear(latent_dim, latent_dim, gen));
}

MotionCodes DisentanglerImpl::forward(const torch::Tensor& code) {
  if (code.dim() != 2 || code.size(1) != latent_dim_) {
    throw ShapeError("disentangle: expected [B," + std::to_string(latent_dim_) + "] code");
  }
  auto h = code;
  for (const auto& layer : *shared) h = lrelu(layer->as<EqualLinear>()->forward(h));
  auto run_head = [&](torch::nn::ModuleList& head) {
    auto y = h;
    for (std::size_t i = 0; i < head->size(); ++i) {
      y = head[i]->as<EqualLinear>()->forward(y);
      if (i + 1 < head->size()) y = lrelu(y);
    }
    return y;
  };
  return {run_head(expression_head), run_head(pose_head)};
}

StyleBlockImpl::StyleBlockImpl(int in_channels, int out_channels,
                               std::optional<int> pyramid_channels, int code_dim,
                               at::Generator& gen) {
  conv = register_module("conv", ModulatedConv2d(in_channels, out_channels, 3, code_dim, gen, true));
  if (pyramid_channels) {
    flow = register_module("flow",
                           ModulatedConv2d(out_channels, 2, 3, code_dim, gen, false, true));
    fuse = register_module("fuse", EqualConv2d(out_channels + *pyramid_channels, out_channels, 3, gen));
  } else {
    refine = register_module("refine",
                             ModulatedConv2d(out_channels, out_channels, 3, code_dim, gen, true));
  }
  to_rgb = register_module("to_rgb", ModulatedConv2d(out_channels, 3, 1, code_dim, gen, false));
}

std::pair<torch::Tensor, torch::Tensor> StyleBlockImpl::forward(const torch::Tensor& x,
                                                                const torch::Tensor& code,
                                                                const torch::Tensor* pyramid_level,
                                                                torch::Tensor* flow_out) {
  auto h = lrelu(conv->forward(upsample2(x), code));
  if (!flow.is_empty()) {
    if (pyramid_level == nullptr || pyramid_level->size(2) != h.size(2)) {
      throw ShapeError("generate: pyramid level missing or at the wrong resolution");
    }
    auto field = flow->forward(h, code);
    auto warped = warp(*pyramid_level, field);
    if (flow_out != nullptr) *flow_out = field;
    h = lrelu(fuse->forward(torch::cat({h, warped}, 1)));
  } else {
    h = lrelu(refine->forward(h, code));
  }
  return {h, to_rgb->forward(h, code)};
}

GeneratorImpl::GeneratorImpl(const ModelConfig& config, at::Generator& gen) : config_(config) {
  config_.validate();
  const auto& ch = config_.channels;
  const int n = config_.num_blocks();
  constant = register_parameter("constant", torch::randn({1, ch[n - 1], 4, 4}, gen));
  // Block i doubles to resolution 8 * 2^i, which matches encoder block k = n - 2 - i.
  for (int i = 0; i < n - 1; ++i) {
    const int k = n - 2 - i;
    std::optional<int> pyramid;
    if (k < config_.pyramid_levels()) pyramid = ch[k];
    blocks_.push_back(register_module("block" + std::to_string(i),
                                      StyleBlock(ch[k + 1], ch[k], pyramid, config_.latent_dim, gen)));
  }
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& code,
                                     const std::vector<torch::Tensor>& pyramid,
                                     std::vector<torch::Tensor>* flows) {
  if (code.dim() != 2 || code.size(1) != config_.latent_dim) {
    throw ShapeError("generate: code has the wrong dimension");
  }
  if (static_cast<int>(pyramid.size()) != config_.pyramid_levels()) {
    throw ShapeError("generate: pyramid has " + std::to_string(pyramid.size()) + " levels, expected " +
                     std::to_string(config_.pyramid_levels()));
  }
  const int n = config_.num_blocks();
  auto x = constant.expand({code.size(0), -1, -1, -1});
  torch::Tensor rgb;
  if (flows != nullptr) flows->assign(blocks_.size(), torch::Tensor());
  for (int i = 0; i < n - 1; ++i) {
    const int k = n - 2 - i;
    const torch::Tensor* level = k < config_.pyramid_levels() ? &pyramid[k] : nullptr;
    torch::Tensor field;
    auto [h, contribution] = blocks_[i]->forward(x, code, level, &field);
    x = h;
    rgb = rgb.defined() ? upsample2(rgb) + contribution : contribution;
    if (flows != nullptr) (*flows)[i] = field;
  }
  return torch::sigmoid(rgb);
}

DiscriminatorImpl::DiscriminatorImpl(const ModelConfig& config, at::Generator& gen)
    : config_(config) {
  config_.validate();
  const auto& ch = config_.channels;
  from_rgb = register_module("from_rgb", EqualConv2d(3, ch[0], 1, gen));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int k = 0; k < config_.num_blocks(); ++k) {
    blocks->push_back(ResBlock(k == 0 ? ch[0] : ch[k - 1], ch[k], k > 0, gen));
  }
  fc = register_module("fc", EqualLinear(ch.back() * 16, ch.back(), gen));
  out = register_module("out", EqualLinear(ch.back(), 1, gen));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 3 || image.size(2) != config_.resolution ||
      image.size(3) != config_.resolution) {
    throw ShapeError("discriminate: image has the wrong shape");
  }
  auto x = lrelu(from_rgb->forward(image * 2.0 - 1.0));
  for (const auto& block : *blocks) x = block->as<ResBlock>()->forward(x);
  x = lrelu(fc->forward(x.flatten(1)));
  return out->forward(x).squeeze(1);
}

PerceptualExtractorImpl::PerceptualExtractorImpl(std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const int widths[kLayers + 1] = {3, 16, 32, 64, 64};
  for (int i = 0; i < kLayers; ++i) {
    convs_.push_back(register_module("conv" + std::to_string(i),
                                     EqualConv2d(widths[i], widths[i + 1], 3, gen)));
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> PerceptualExtractorImpl::forward(const torch::Tensor& image) {
  std::vector<torch::Tensor> layers;
  auto x = image * 2.0 - 1.0;
  for (int i = 0; i < kLayers; ++i) {
    x = lrelu(convs_[i]->forward(x));
    layers.push_back(x);
    if (i + 1 < kLayers) x = downsample2(x);
  }
  return layers;
}

}  // namespace reenact::models

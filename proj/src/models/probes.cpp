#include "reenact/models/probes.hpp"

#include "reenact/errors.hpp"

namespace reenact::models {

namespace nn = torch::nn;

std::string to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::expression: return "expression_probe";
    case ProbeKind::pose: return "pose_probe";
    case ProbeKind::identity: return "identity_probe";
  }
  return "probe";
}

namespace {

void gaussian_init(nn::Module& module, at::Generator& gen) {
  for (auto& item : module.named_parameters()) {
    torch::NoGradGuard no_grad;
    auto& p = item.value();
    if (p.dim() > 1) {
      const double fan_in = static_cast<double>(p.numel() / p.size(0));
      p.copy_(torch::randn(p.sizes(), gen) * std::sqrt(1.0 / (3.0 * fan_in)));
    } else {
      p.zero_();
    }
  }
}

}  // namespace

ProbeNetworkImpl::ProbeNetworkImpl(int resolution, int feature_dim, int outputs,
                                   at::Generator& gen) {
  const int widths[] = {3, 16, 32, 64, 64};
  trunk = nn::Sequential();
  for (int i = 0; i < 4; ++i) {
    trunk->push_back(nn::Conv2d(nn::Conv2dOptions(widths[i], widths[i + 1], 3).stride(2).padding(1)));
    trunk->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  }
  register_module("trunk", trunk);
  const int spatial = resolution / 16;
  embed = register_module("embed", nn::Linear(64 * spatial * spatial, feature_dim));
  head = register_module("head", nn::Linear(feature_dim, outputs));
  gaussian_init(*this, gen);
}

torch::Tensor ProbeNetworkImpl::features(const torch::Tensor& image) {
  return embed->forward(trunk->forward(image * 2.0 - 1.0).flatten(1));
}

torch::Tensor ProbeNetworkImpl::regress(const torch::Tensor& features) {
  return head->forward(torch::leaky_relu(features, 0.2));
}

Probe::Probe(ProbeKind kind, int resolution, int feature_dim, at::Generator& gen)
    : kind_(kind), net_(resolution, feature_dim, 4, gen) {}

torch::Tensor Probe::features(const torch::Tensor& image) const {
  if (!frozen_) throw StateError(to_string(kind_) + " has not been trained and frozen");
  return net_->features(image);
}

torch::Tensor Probe::predict(const torch::Tensor& image) const {
  if (!frozen_) throw StateError(to_string(kind_) + " has not been trained and frozen");
  return net_->regress(net_->features(image));
}

std::vector<torch::Tensor> Probe::trainable_parameters() {
  if (frozen_) throw StateError(to_string(kind_) + " is frozen and rejects gradient updates");
  return net_->parameters();
}

torch::Tensor Probe::training_forward(const torch::Tensor& image) {
  if (frozen_) throw StateError(to_string(kind_) + " is frozen and rejects gradient updates");
  return net_->regress(net_->features(image));
}

void Probe::freeze() {
  for (auto& p : net_->parameters()) p.set_requires_grad(false);
  net_->eval();
  frozen_ = true;
}

}  // namespace reenact::models

#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

namespace reenact::models {

enum class ProbeKind { expression, pose, identity };

std::string to_string(ProbeKind kind);

// Small convolutional regressor predicting one group of four toy factors. Its penultimate
// layer is the probe feature vector.
class ProbeNetworkImpl : public torch::nn::Module {
 public:
  ProbeNetworkImpl(int resolution, int feature_dim, int outputs, at::Generator& gen);
  torch::Tensor features(const torch::Tensor& image);
  torch::Tensor regress(const torch::Tensor& features);

 private:
  torch::nn::Sequential trunk{nullptr};
  torch::nn::Linear embed{nullptr}, head{nullptr};
};
TORCH_MODULE(ProbeNetwork);

// Lifecycle wrapper: untrained -> (supervised training) -> frozen. Features are only
// available once frozen; parameters are only handed out for training before that.
class Probe {
 public:
  Probe(ProbeKind kind, int resolution, int feature_dim, at::Generator& gen);

  ProbeKind kind() const { return kind_; }
  bool frozen() const { return frozen_; }

  torch::Tensor features(const torch::Tensor& image) const;      // requires frozen
  torch::Tensor predict(const torch::Tensor& image) const;       // requires frozen
  std::vector<torch::Tensor> trainable_parameters();              // throws once frozen
  torch::Tensor training_forward(const torch::Tensor& image);     // throws once frozen
  void freeze();
  // Used by checkpoint loading, which restores an already-trained probe.
  void mark_frozen() { freeze(); }

  ProbeNetwork& network() { return net_; }
  const ProbeNetwork& network() const { return net_; }

 private:
  ProbeKind kind_;
  mutable ProbeNetwork net_;
  bool frozen_ = false;
};

}  // namespace reenact::models

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "reenact/models/networks.hpp"
#include "reenact/models/probes.hpp"

namespace reenact::models {

// Ownership tags partitioning every tensor of a model instance.
enum class Component {
  motion_editing_encoder,
  motion_editing_mlp,
  generator_expression,
  generator_pose,
  discriminator,
  frozen,
};

std::string to_string(Component component);
Component component_from_string(const std::string& name);

inline constexpr Component kTrainableComponents[] = {
    Component::motion_editing_encoder, Component::motion_editing_mlp,
    Component::generator_expression, Component::generator_pose, Component::discriminator};

struct TaggedParameter {
  std::string name;
  Component component;
  torch::Tensor tensor;
};

struct ProbeSet {
  ProbeSet(int resolution, int feature_dim, std::uint64_t seed);
  Probe expression;
  Probe pose;
  Probe identity;

  Probe& get(ProbeKind kind);
  const Probe& get(ProbeKind kind) const;
  bool frozen() const { return expression.frozen() && pose.frozen() && identity.frozen(); }
  std::vector<TaggedParameter> tagged_parameters() const;
};

// Every network of the framework plus the frozen evaluation/loss networks.
class ReenactModel {
 public:
  ReenactModel(const ModelConfig& config, std::uint64_t seed, std::uint64_t perceptual_seed);

  const ModelConfig& config() const { return config_; }

  Encoding encode(const torch::Tensor& image);
  MotionCodes disentangle(const torch::Tensor& code);
  torch::Tensor generate_expression(const torch::Tensor& code, const std::vector<torch::Tensor>& pyramid);
  torch::Tensor generate_pose(const torch::Tensor& code, const std::vector<torch::Tensor>& pyramid);
  torch::Tensor discriminate(const torch::Tensor& image);
  torch::Tensor probe_features(ProbeKind kind, const torch::Tensor& image);

  Encoder encoder{nullptr};
  Disentangler disentangler{nullptr};
  Generator expression_generator{nullptr};
  Generator pose_generator{nullptr};
  Discriminator discriminator{nullptr};
  PerceptualExtractor perceptual{nullptr};
  ProbeSet probes;

  // All tensors, in a fixed order, with their component tags.
  std::vector<TaggedParameter> tagged_parameters() const;
  std::vector<torch::Tensor> parameters_of(Component component) const;
  // requires_grad on exactly the listed trainable components; frozen tensors stay off.
  void set_trainable(std::initializer_list<Component> components);
  void set_trainable(const std::vector<Component>& components);

  void to(torch::Dtype dtype);

 private:
  ModelConfig config_;
};

}  // namespace reenact::models

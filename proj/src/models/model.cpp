#include "reenact/models/model.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>

#include "reenact/errors.hpp"

namespace reenact::models {

std::string to_string(Component component) {
  switch (component) {
    case Component::motion_editing_encoder: return "motion_editing_encoder";
    case Component::motion_editing_mlp: return "motion_editing_mlp";
    case Component::generator_expression: return "generator_expression";
    case Component::generator_pose: return "generator_pose";
    case Component::discriminator: return "discriminator";
    case Component::frozen: return "frozen";
  }
  return "unknown";
}

Component component_from_string(const std::string& name) {
  for (Component c : {Component::motion_editing_encoder, Component::motion_editing_mlp,
                      Component::generator_expression, Component::generator_pose,
                      Component::discriminator, Component::frozen}) {
    if (to_string(c) == name) return c;
  }
  throw CorruptionError("unknown component tag '" + name + "'");
}

namespace {

at::Generator seeded(std::uint64_t seed) { return at::make_generator<at::CPUGeneratorImpl>(seed); }

void append(std::vector<TaggedParameter>& out, const std::string& prefix, Component component,
            const torch::nn::Module& module) {
  for (const auto& item : module.named_parameters()) {
    out.push_back({prefix + "." + item.key(), component, item.value()});
  }
}

}  // namespace

ProbeSet::ProbeSet(int resolution, int feature_dim, std::uint64_t seed)
    : expression([&] {
        auto g = seeded(seed * 3 + 0);
        return Probe(ProbeKind::expression, resolution, feature_dim, g);
      }()),
      pose([&] {
        auto g = seeded(seed * 3 + 1);
        return Probe(ProbeKind::pose, resolution, feature_dim, g);
      }()),
      identity([&] {
        auto g = seeded(seed * 3 + 2);
        return Probe(ProbeKind::identity, resolution, feature_dim, g);
      }()) {}

Probe& ProbeSet::get(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::expression: return expression;
    case ProbeKind::pose: return pose;
    case ProbeKind::identity: return identity;
  }
  throw ArgumentError("unknown probe kind");
}

const Probe& ProbeSet::get(ProbeKind kind) const {
  return const_cast<ProbeSet*>(this)->get(kind);
}

std::vector<TaggedParameter> ProbeSet::tagged_parameters() const {
  std::vector<TaggedParameter> out;
  append(out, "probe.expression", Component::frozen, *expression.network());
  append(out, "probe.pose", Component::frozen, *pose.network());
  append(out, "probe.identity", Component::frozen, *identity.network());
  return out;
}

ReenactModel::ReenactModel(const ModelConfig& config, std::uint64_t seed,
                           std::uint64_t perceptual_seed)
    : probes(config.resolution, config.probe_features, seed ^ 0x70726F6265ULL), config_(config) {
  config_.validate();
  auto gen = seeded(seed);
  encoder = Encoder(config_, gen);
  disentangler = Disentangler(config_.latent_dim, gen);
  expression_generator = Generator(config_, gen);
  pose_generator = Generator(config_, gen);
  discriminator = Discriminator(config_, gen);
  perceptual = PerceptualExtractor(perceptual_seed);
}

Encoding ReenactModel::encode(const torch::Tensor& image) { return encoder->forward(image); }

MotionCodes ReenactModel::disentangle(const torch::Tensor& code) {
  return disentangler->forward(code);
}

torch::Tensor ReenactModel::generate_expression(const torch::Tensor& code,
                                                const std::vector<torch::Tensor>& pyramid) {
  return expression_generator->forward(code, pyramid);
}

torch::Tensor ReenactModel::generate_pose(const torch::Tensor& code,
                                          const std::vector<torch::Tensor>& pyramid) {
  return pose_generator->forward(code, pyramid);
}

torch::Tensor ReenactModel::discriminate(const torch::Tensor& image) {
  return discriminator->forward(image);
}

torch::Tensor ReenactModel::probe_features(ProbeKind kind, const torch::Tensor& image) {
  return probes.get(kind).features(image);
}

std::vector<TaggedParameter> ReenactModel::tagged_parameters() const {
  std::vector<TaggedParameter> out;
  append(out, "encoder", Component::motion_editing_encoder, *encoder);
  append(out, "mlp", Component::motion_editing_mlp, *disentangler);
  append(out, "generator_expression", Component::generator_expression, *expression_generator);
  append(out, "generator_pose", Component::generator_pose, *pose_generator);
  append(out, "discriminator", Component::discriminator, *discriminator);
  append(out, "perceptual", Component::frozen, *perceptual);
  for (auto& p : probes.tagged_parameters()) out.push_back(std::move(p));
  return out;
}

std::vector<torch::Tensor> ReenactModel::parameters_of(Component component) const {
  std::vector<torch::Tensor> out;
  for (const auto& p : tagged_parameters()) {
    if (p.component == component) out.push_back(p.tensor);
  }
  return out;
}

void ReenactModel::set_trainable(std::initializer_list<Component> components) {
  set_trainable(std::vector<Component>(components));
}

void ReenactModel::set_trainable(const std::vector<Component>& components) {
  for (auto& p : tagged_parameters()) {
    const bool on = p.component != Component::frozen &&
                    std::find(components.begin(), components.end(), p.component) != components.end();
    p.tensor.set_requires_grad(on);
  }
}

void ReenactModel::to(torch::Dtype dtype) {
  encoder->to(dtype);
  disentangler->to(dtype);
  expression_generator->to(dtype);
  pose_generator->to(dtype);
  discriminator->to(dtype);
  perceptual->to(dtype);
  probes.expression.network()->to(dtype);
  probes.pose.network()->to(dtype);
  probes.identity.network()->to(dtype);
}

}  // namespace reenact::models

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "reenact/losses/losses.hpp"
#include "reenact/models/networks.hpp"

namespace reenact::training {

struct TrainConfig {
  int batch_size = 16;
  int stage1_iters = 6000;
  int stage2_iters = 2000;
  double lr_stage1 = 0.002;
  double lr_stage2 = 0.0008;
  double lambda_p = losses::kDefaultLambdaPerceptual;
  double lambda_e = losses::kDefaultLambdaExpression;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.99;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int resolution = 64;
  int latent_dim = 128;
  std::vector<int> channels{16, 32, 64, 128, 128};
  int probe_features = 16;
  std::uint64_t perceptual_seed = 1234;
  double r1_gamma = 1.0;
  // The gradient penalty is applied on every r1_every-th discriminator step, scaled by r1_every.
  int r1_every = 1;
  int checkpoint_every = 1000;
  int log_every = 10;
  int probe_epochs = 12;
  // Ablation switch: drop <e(S,S),S> and <p(S,S),S> from the perceptual loss.
  bool self_reconstruction_pairs = true;
  std::string dataset;  // training manifest

  models::ModelConfig model_config() const;
  losses::LossWeights loss_weights() const;
  // Throws ConfigError describing the first violated invariant. Config files always require
  // positive learning rates; `allow_zero_lr` admits lr == 0 for in-process frozen runs.
  void validate(bool allow_zero_lr = false) const;
};

// TrainConfig plus run-level paths. Serialized as one flat JSON object; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  std::string eval_dataset;
  std::string out_dir = "runs/default";
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& config);

// SHA-256 (hex) of the canonical TrainConfig serialization.
std::string config_hash(const TrainConfig& config);

std::string sha256_hex(const void* data, std::size_t size);

}  // namespace reenact::training

#include "reenact/training/config.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <set>

#include "reenact/errors.hpp"

namespace reenact::training {

using nlohmann::json;

models::ModelConfig TrainConfig::model_config() const {
  models::ModelConfig m;
  m.resolution = resolution;
  m.latent_dim = latent_dim;
  m.channels = channels;
  m.probe_features = probe_features;
  return m;
}

losses::LossWeights TrainConfig::loss_weights() const {
  return {lambda_p, lambda_e, self_reconstruction_pairs};
}

void TrainConfig::validate(bool allow_zero_lr) const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (stage1_iters < 1 || stage2_iters < 1) throw ConfigError("iteration counts must be positive");
  const bool lr_ok = allow_zero_lr ? (lr_stage1 >= 0.0 && lr_stage2 >= 0.0)
                                   : (lr_stage1 > 0.0 && lr_stage2 > 0.0);
  if (!lr_ok) throw ConfigError("learning rates must be positive");
  if (lambda_p < 0.0 || lambda_e < 0.0) throw ConfigError("loss weights must be non-negative");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (r1_gamma < 0.0) throw ConfigError("r1_gamma must be non-negative");
  if (r1_every < 1) throw ConfigError("r1_every must be >= 1");
  if (checkpoint_every < 1 || log_every < 1) {
    throw ConfigError("checkpoint_every and log_every must be positive");
  }
  if (probe_epochs < 1) throw ConfigError("probe_epochs must be positive");
  if (probe_features < 1) throw ConfigError("probe_features must be positive");
  model_config().validate();
}

json to_json(const TrainConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["stage1_iters"] = c.stage1_iters;
  j["stage2_iters"] = c.stage2_iters;
  j["lr_stage1"] = c.lr_stage1;
  j["lr_stage2"] = c.lr_stage2;
  j["lambda_p"] = c.lambda_p;
  j["lambda_e"] = c.lambda_e;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["seed"] = c.seed;
  j["resolution"] = c.resolution;
  j["latent_dim"] = c.latent_dim;
  j["channels"] = c.channels;
  j["probe_features"] = c.probe_features;
  j["perceptual_seed"] = c.perceptual_seed;
  j["r1_gamma"] = c.r1_gamma;
  j["r1_every"] = c.r1_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["log_every"] = c.log_every;
  j["probe_epochs"] = c.probe_epochs;
  j["self_reconstruction_pairs"] = c.self_reconstruction_pairs;
  j["dataset"] = c.dataset;
  return j;
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void read_train_fields(const json& j, TrainConfig& c) {
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "stage1_iters", c.stage1_iters);
  read_field(j, "stage2_iters", c.stage2_iters);
  read_field(j, "lr_stage1", c.lr_stage1);
  read_field(j, "lr_stage2", c.lr_stage2);
  read_field(j, "lambda_p", c.lambda_p);
  read_field(j, "lambda_e", c.lambda_e);
  read_field(j, "adam_beta1", c.adam_beta1);
  read_field(j, "adam_beta2", c.adam_beta2);
  read_field(j, "adam_eps", c.adam_eps);
  read_field(j, "seed", c.seed);
  read_field(j, "resolution", c.resolution);
  read_field(j, "latent_dim", c.latent_dim);
  read_field(j, "channels", c.channels);
  read_field(j, "probe_features", c.probe_features);
  read_field(j, "perceptual_seed", c.perceptual_seed);
  read_field(j, "r1_gamma", c.r1_gamma);
  read_field(j, "r1_every", c.r1_every);
  read_field(j, "checkpoint_every", c.checkpoint_every);
  read_field(j, "log_every", c.log_every);
  read_field(j, "probe_epochs", c.probe_epochs);
  read_field(j, "self_reconstruction_pairs", c.self_reconstruction_pairs);
  read_field(j, "dataset", c.dataset);
}

void reject_unknown(const json& j, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
}

std::set<std::string> train_keys() {
  std::set<std::string> keys;
  const json defaults = to_json(TrainConfig{});
  for (const auto& item : defaults.items()) keys.insert(item.key());
  return keys;
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  reject_unknown(j, train_keys());
  TrainConfig c;
  read_train_fields(j, c);
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j = to_json(c.train);
  j["eval_dataset"] = c.eval_dataset;
  j["out_dir"] = c.out_dir;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  auto keys = train_keys();
  keys.insert("eval_dataset");
  keys.insert("out_dir");
  reject_unknown(j, keys);
  RunConfig c;
  read_train_fields(j, c.train);
  read_field(j, "eval_dataset", c.eval_dataset);
  read_field(j, "out_dir", c.out_dir);
  c.train.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  out << to_json(config).dump(2) << '\n';
  if (!out) throw IoError("write failed", path);
}

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(static_cast<const unsigned char*>(data), size, digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

std::string config_hash(const TrainConfig& config) {
  const std::string canonical = to_json(config).dump();
  return sha256_hex(canonical.data(), canonical.size());
}

}  // namespace reenact::training

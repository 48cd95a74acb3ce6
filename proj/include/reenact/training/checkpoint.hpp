#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "reenact/models/model.hpp"
#include "reenact/training/config.hpp"

namespace reenact::training {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct TensorRecord {
  std::string name;
  std::string component;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

struct AdamEntry {
  std::string param;
  std::int64_t step = 0;
  std::vector<float> exp_avg;
  std::vector<float> exp_avg_sq;
};

struct OptimizerRecord {
  std::string name;
  std::vector<AdamEntry> entries;
};

// Binary container, all integers and floats little-endian:
//   "RNCK" u32 version | str config_json | str config_hash | u64 iteration | u32 stage
//   u32 n_tensors  { str name | str component | u32 ndim | i64 dims[ndim] | u64 n | f32 data[n] }
//   u32 n_optimizers { str name | u32 n { str param | i64 step | u64 n | f32 m[n] | f32 v[n] } }
//   32-byte SHA-256 of everything above
// where str = u32 length + bytes.
struct Checkpoint {
  std::uint32_t format_version = kCheckpointFormatVersion;
  std::string config_json;
  std::string config_hash;
  std::uint64_t iteration = 0;
  std::uint32_t stage = 0;
  std::vector<TensorRecord> tensors;
  std::vector<OptimizerRecord> optimizers;
};

using models::TaggedParameter;

struct NamedOptimizer {
  std::string name;
  torch::optim::Adam* optimizer;
  std::vector<TaggedParameter> params;  // the optimizer's parameters in group order
};

Checkpoint capture_checkpoint(const models::ReenactModel& model, const TrainConfig& config,
                              std::uint64_t iteration, std::uint32_t stage,
                              const std::vector<NamedOptimizer>& optimizers = {});

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint);
// Throws CorruptionError on truncation, bad magic, digest mismatch or malformed records.
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

// Atomic: writes to a temporary file and renames it into place.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

struct RestoreOptions {
  // When non-empty, the checkpoint's config hash must equal this unless `force` is set.
  std::string expected_config_hash;
  bool force = false;
  // Restrict restoration to tensors whose names start with this prefix (empty = all).
  std::string name_prefix;
};

// Validates every record against the model before copying anything: on error the model is
// untouched. Optimizer state is restored for optimizers named in both.
void restore_checkpoint(const Checkpoint& checkpoint, models::ReenactModel& model,
                        const RestoreOptions& options = {},
                        const std::vector<NamedOptimizer>& optimizers = {});

// Builds a model whose architecture comes from the checkpoint's embedded config, restores all
// tensors and marks probes frozen.
models::ReenactModel model_from_checkpoint(const Checkpoint& checkpoint);
TrainConfig config_of(const Checkpoint& checkpoint);

}  // namespace reenact::training

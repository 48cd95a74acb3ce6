#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reenact/losses/losses.hpp"
#include "reenact/models/model.hpp"
#include "reenact/training/checkpoint.hpp"
#include "reenact/training/config.hpp"
#include "reenact/training/frame_store.hpp"

namespace reenact::training {

inline constexpr const char* kTrainLogFileName = "train_log.jsonl";
inline constexpr const char* kDiagnosticFileName = "nonfinite_diagnostic.json";

struct StepRecord {
  int stage = 0;
  std::uint64_t iteration = 0;  // 1-based within the stage
  losses::LossReport losses;
};

// Components updated by the generator-side optimizer in each stage.
std::vector<models::Component> generator_components(int stage);

// Owns the optimizers of one training run over a caller-owned model.
class Trainer {
 public:
  // `out_dir` empty: no log, diagnostic or checkpoint files are written.
  Trainer(TrainConfig config, models::ReenactModel& model, const FrameStore& data,
          std::filesystem::path out_dir = {});

  // Switches the trainable set and creates the stage's optimizers. Requires frozen probes.
  void begin_stage(int stage);
  int stage() const { return stage_; }
  std::uint64_t iteration() const { return iteration_; }

  // One generator update followed by one discriminator update.
  // Throws NonFiniteLossError after writing a diagnostic snapshot.
  StepRecord step();

  // Runs until the stage's configured iteration count, logging and checkpointing.
  void run_stage(int stage);

  Checkpoint snapshot() const;
  // Restores model, optimizer moments and position from a checkpoint written by this trainer.
  void resume(const Checkpoint& checkpoint, bool force = false);

  std::filesystem::path checkpoint_path(int stage) const;
  const std::vector<StepRecord>& history() const { return history_; }

 private:
  std::vector<NamedOptimizer> named_optimizers() const;
  void append_log(const StepRecord& record);
  [[noreturn]] void fail_nonfinite(const std::string& phase, const losses::LossReport& report);

  TrainConfig config_;
  models::ReenactModel& model_;
  const FrameStore& data_;
  std::filesystem::path out_dir_;
  losses::LossWeights weights_;
  int stage_ = 0;
  std::uint64_t iteration_ = 0;
  std::unique_ptr<torch::optim::Adam> gen_opt_, disc_opt_;
  std::vector<TaggedParameter> gen_params_, disc_params_;
  std::vector<StepRecord> history_;
};

// Full pipeline on a prepared model with frozen probes: stage 1 and/or 2, reusing any
// completed stage checkpoint under out_dir whose config hash matches. Returns the final checkpoint.
Checkpoint train(const TrainConfig& config, models::ReenactModel& model, const FrameStore& data,
                 const std::filesystem::path& out_dir, int first_stage = 1, int last_stage = 2);

}  // namespace reenact::training

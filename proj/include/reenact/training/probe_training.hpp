#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "reenact/models/model.hpp"
#include "reenact/training/frame_store.hpp"

namespace reenact::training {

inline constexpr std::int64_t kMinProbeFrames = 100;

struct ProbeTrainOptions {
  int epochs = 12;
  std::uint64_t seed = 0;
  int batch_size = 64;
  double lr = 1e-3;
};

// Held-out mean absolute error per factor, in normalized units.
struct ProbeReport {
  std::array<double, 4> expression_mae{};
  std::array<double, 4> pose_mae{};
  std::array<double, 4> identity_mae{};
  std::int64_t train_frames = 0;
  std::int64_t heldout_frames = 0;
};

// Supervised regression of each probe onto its factor group (Adam, lr dropped by 5x for the
// final third of the epochs), then freezing. Every tenth
// sequence is held out (every tenth frame when there are fewer than ten sequences).
// Throws ArgumentError with fewer than kMinProbeFrames frames, StateError if already frozen.
ProbeReport pretrain_probes(models::ProbeSet& probes, const FrameStore& data,
                            const ProbeTrainOptions& options);

// Probe-only checkpoint files.
void save_probes(const std::string& path, const models::ReenactModel& model);
// Restores probe weights into `model` and marks them frozen.
void load_probes(const std::string& path, models::ReenactModel& model);

}  // namespace reenact::training

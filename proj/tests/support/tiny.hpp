#pragma once

// Small model and data fixtures for fast tests.

#include <torch/torch.h>

#include <vector>

#include "reenact/models/model.hpp"
#include "reenact/toyface/dataset.hpp"
#include "reenact/training/config.hpp"
#include "reenact/training/frame_store.hpp"

namespace reenact::test {

inline models::ModelConfig tiny_model_config() {
  models::ModelConfig c;
  c.resolution = 16;
  c.latent_dim = 16;
  c.channels = {4, 8, 8};
  c.probe_features = 8;
  return c;
}

inline training::TrainConfig tiny_train_config() {
  training::TrainConfig c;
  c.batch_size = 2;
  c.stage1_iters = 5;
  c.stage2_iters = 3;
  c.resolution = 16;
  c.latent_dim = 16;
  c.channels = {4, 8, 8};
  c.probe_features = 8;
  c.probe_epochs = 1;
  c.log_every = 1;
  c.checkpoint_every = 1000;
  return c;
}

// A model whose probes are marked frozen without training (random but fixed features).
inline models::ReenactModel tiny_model(std::uint64_t seed = 0) {
  models::ReenactModel m(tiny_model_config(), seed, 99);
  m.probes.expression.mark_frozen();
  m.probes.pose.mark_frozen();
  m.probes.identity.mark_frozen();
  return m;
}

inline models::ReenactModel tiny_model(const training::TrainConfig& c) {
  models::ReenactModel m(c.model_config(), c.seed, c.perceptual_seed);
  m.probes.expression.mark_frozen();
  m.probes.pose.mark_frozen();
  m.probes.identity.mark_frozen();
  return m;
}

inline std::vector<toyface::FrameRecord> tiny_records(int sequences, int frames, int resolution = 16,
                                                     std::uint64_t seed = 1) {
  std::vector<toyface::FrameRecord> all;
  for (int s = 0; s < sequences; ++s) {
    auto seq = toyface::sample_sequence(toyface::derive_seed(seed, 2 * s), frames,
                                        toyface::derive_seed(seed, 2 * s + 1), resolution, s);
    all.insert(all.end(), seq.begin(), seq.end());
  }
  return all;
}

inline training::FrameStore tiny_store(int sequences = 4, int frames = 6, int resolution = 16) {
  return training::FrameStore::from_records(tiny_records(sequences, frames, resolution));
}

// Snapshot of every parameter, keyed by position in tagged_parameters().
inline std::vector<torch::Tensor> clone_parameters(const models::ReenactModel& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.tagged_parameters()) out.push_back(p.tensor.detach().clone());
  return out;
}

}  // namespace reenact::test

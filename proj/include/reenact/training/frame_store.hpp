#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <random>
#include <vector>

#include "reenact/toyface/dataset.hpp"

namespace reenact::training {

// A dataset held in memory as tensors, grouped by sequence.
struct FrameStore {
  torch::Tensor images;   // [N, 3, H, W] float32 in [0, 1]
  torch::Tensor factors;  // [N, 12] normalized ground-truth factors
  std::vector<std::vector<std::int64_t>> sequences;  // frame indices per sequence
  std::vector<int> sequence_ids;                     // manifest sequence id per entry of `sequences`
  int resolution = 0;

  std::int64_t size() const { return images.defined() ? images.size(0) : 0; }

  static FrameStore from_manifest(const toyface::Manifest& manifest);
  static FrameStore from_records(const std::vector<toyface::FrameRecord>& records);

  torch::Tensor gather_images(const std::vector<std::int64_t>& indices) const;
  torch::Tensor gather_factors(const std::vector<std::int64_t>& indices) const;
};

struct PairIndices {
  std::vector<std::int64_t> source, driving;
};

// For each batch element: pick a sequence uniformly, then two distinct frames of it.
// Requires every sequence to have at least two frames.
PairIndices sample_pairs(const FrameStore& store, int batch_size, std::mt19937_64& rng);

}  // namespace reenact::training

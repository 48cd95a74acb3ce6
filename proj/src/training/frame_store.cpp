#include "reenact/training/frame_store.hpp"

#include <map>

#include "reenact/errors.hpp"
#include "reenact/image_tensor.hpp"

namespace reenact::training {

namespace {

torch::Tensor factor_row(const toyface::ToyFaceParams& params) {
  const auto n = toyface::to_normalized(params);
  auto row = torch::empty({toyface::kFactorCount}, torch::kFloat32);
  for (int i = 0; i < toyface::kFactorCount; ++i) row[i] = static_cast<float>(n[i]);
  return row;
}

FrameStore assemble(std::vector<Image> images, std::vector<torch::Tensor> rows,
                    const std::vector<int>& sequence_of) {
  if (images.empty()) throw ArgumentError("dataset is empty");
  FrameStore store;
  store.resolution = images.front().height();
  store.images = to_tensor(images);
  store.factors = torch::stack(rows);
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < sequence_of.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(sequence_of[i], store.sequences.size());
    if (inserted) {
      store.sequences.emplace_back();
      store.sequence_ids.push_back(sequence_of[i]);
    }
    store.sequences[it->second].push_back(static_cast<std::int64_t>(i));
  }
  return store;
}

}  // namespace

FrameStore FrameStore::from_manifest(const toyface::Manifest& manifest) {
  std::vector<Image> images;
  std::vector<torch::Tensor> rows;
  std::vector<int> seq;
  for (const auto& entry : manifest.entries) {
    Image img = read_png(manifest.image_path(entry).string());
    if (img.height() != manifest.resolution || img.width() != manifest.resolution) {
      throw ShapeError("frame " + entry.image + " does not match the manifest resolution");
    }
    images.push_back(std::move(img));
    rows.push_back(factor_row(entry.params));
    seq.push_back(entry.sequence_id);
  }
  return assemble(std::move(images), std::move(rows), seq);
}

FrameStore FrameStore::from_records(const std::vector<toyface::FrameRecord>& records) {
  std::vector<Image> images;
  std::vector<torch::Tensor> rows;
  std::vector<int> seq;
  for (const auto& r : records) {
    images.push_back(r.image);
    rows.push_back(factor_row(r.params));
    seq.push_back(r.sequence_id);
  }
  return assemble(std::move(images), std::move(rows), seq);
}

torch::Tensor FrameStore::gather_images(const std::vector<std::int64_t>& indices) const {
  return images.index_select(0, torch::tensor(indices, torch::kInt64));
}

torch::Tensor FrameStore::gather_factors(const std::vector<std::int64_t>& indices) const {
  return factors.index_select(0, torch::tensor(indices, torch::kInt64));
}

PairIndices sample_pairs(const FrameStore& store, int batch_size, std::mt19937_64& rng) {
  if (store.sequences.empty()) throw ArgumentError("sample_pairs: no sequences");
  PairIndices out;
  std::uniform_int_distribution<std::size_t> pick_seq(0, store.sequences.size() - 1);
  for (int b = 0; b < batch_size; ++b) {
    const auto& seq = store.sequences[pick_seq(rng)];
    if (seq.size() < 2) throw ArgumentError("sample_pairs: sequence with fewer than two frames");
    std::uniform_int_distribution<std::size_t> pick(0, seq.size() - 1);
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    while (j == i) j = pick(rng);
    out.source.push_back(seq[i]);
    out.driving.push_back(seq[j]);
  }
  return out;
}

}  // namespace reenact::training

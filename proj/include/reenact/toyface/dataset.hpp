#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reenact/image.hpp"
#include "reenact/toyface/params.hpp"

namespace reenact::toyface {

struct FrameRecord {
  Image image;
  ToyFaceParams params;
  int sequence_id = 0;
  int frame_index = 0;
};

// One identity, pose/expression following reflected Gaussian random walks
// (per-frame increment std = 5% of each factor's range). Images are 8-bit quantized renders,
// i.e. exactly what a PNG round trip of the render yields.
std::vector<FrameRecord> sample_sequence(std::uint64_t identity_seed, int n_frames,
                                         std::uint64_t rng_seed, int resolution = 64,
                                         int sequence_id = 0);

struct ManifestEntry {
  int sequence_id = 0;
  int frame_index = 0;
  std::string image;  // relative to the manifest directory
  ToyFaceParams params;
};

struct Manifest {
  std::string renderer_version;
  std::uint64_t seed = 0;
  int resolution = 64;
  int n_identities = 0;
  int frames_per_identity = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory holding the manifest; not serialized

  std::filesystem::path image_path(const ManifestEntry& entry) const { return root / entry.image; }
};

inline constexpr const char* kManifestFileName = "manifest.jsonl";

// Writes out_dir/images/*.png and out_dir/manifest.jsonl.
Manifest generate_dataset(int n_identities, int frames_per_identity,
                          const std::filesystem::path& out_dir, std::uint64_t seed,
                          int resolution = 64);

// Accepts either the manifest file or the directory containing it.
Manifest read_manifest(const std::filesystem::path& path);

// Serialized form of one manifest line (exposed for tests / bindings).
std::string manifest_header_line(const Manifest& manifest);
std::string manifest_entry_line(const ManifestEntry& entry);

// Real-data hook: every PNG under `dir`, sorted by file name, as frames of one sequence.
// Parameters are left at defaults; these frames carry no ground truth.
std::vector<FrameRecord> load_png_sequence_dir(const std::filesystem::path& dir);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace reenact::toyface

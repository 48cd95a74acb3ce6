#include "reenact/toyface/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "reenact/errors.hpp"
#include "reenact/toyface/render.hpp"

namespace reenact::toyface {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kWalkFraction = 0.05;

double reflect(double v, double lo, double hi) {
  // A single increment is far smaller than any range, so one reflection suffices.
  if (v > hi) v = 2.0 * hi - v;
  if (v < lo) v = 2.0 * lo - v;
  return std::clamp(v, lo, hi);
}

ordered_json params_to_json(const ToyFaceParams& p) {
  ordered_json j;
  j["identity"] = {{"face_width", p.identity[0]},
                   {"skin_tone", p.identity[1]},
                   {"eye_spacing", p.identity[2]},
                   {"hair_shade", p.identity[3]}};
  j["pose"] = {{"yaw", p.pose.yaw}, {"tx", p.pose.tx}, {"ty", p.pose.ty}, {"scale", p.pose.scale}};
  j["expression"] = {{"mouth_open", p.expression.mouth_open},
                     {"mouth_curve", p.expression.mouth_curve},
                     {"eye_open", p.expression.eye_open},
                     {"brow_raise", p.expression.brow_raise}};
  return j;
}

ToyFaceParams params_from_json(const ordered_json& j) {
  ToyFaceParams p;
  const auto& id = j.at("identity");
  p.identity = {id.at("face_width").get<double>(), id.at("skin_tone").get<double>(),
                id.at("eye_spacing").get<double>(), id.at("hair_shade").get<double>()};
  const auto& pose = j.at("pose");
  p.pose = {pose.at("yaw").get<double>(), pose.at("tx").get<double>(),
            pose.at("ty").get<double>(), pose.at("scale").get<double>()};
  const auto& e = j.at("expression");
  p.expression = {e.at("mouth_open").get<double>(), e.at("mouth_curve").get<double>(),
                  e.at("eye_open").get<double>(), e.at("brow_raise").get<double>()};
  return p;
}

std::string image_name(int sequence_id, int frame_index) {
  std::ostringstream name;
  name << "images/s" << std::setw(4) << std::setfill('0') << sequence_id << "_f" << std::setw(4)
       << std::setfill('0') << frame_index << ".png";
  return name.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<FrameRecord> sample_sequence(std::uint64_t identity_seed, int n_frames,
                                         std::uint64_t rng_seed, int resolution,
                                         int sequence_id) {
  if (n_frames < 2) throw ArgumentError("sample_sequence: n_frames must be >= 2");
  if (!is_supported_resolution(resolution)) {
    throw ArgumentError("sample_sequence: unsupported resolution");
  }
  std::mt19937_64 id_rng(identity_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ToyFaceParams params;
  for (double& f : params.identity) f = unit(id_rng);

  const auto& table = factor_table();
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FactorVector raw = to_raw(params);
  for (int i = kPoseOffset; i < kFactorCount; ++i) {
    raw[i] = table[i].lo + unit(rng) * (table[i].hi - table[i].lo);
  }

  std::vector<FrameRecord> frames;
  frames.reserve(n_frames);
  for (int f = 0; f < n_frames; ++f) {
    if (f > 0) {
      for (int i = kPoseOffset; i < kFactorCount; ++i) {
        const double range = table[i].hi - table[i].lo;
        raw[i] = reflect(raw[i] + kWalkFraction * range * normal(rng), table[i].lo, table[i].hi);
      }
    }
    FrameRecord record;
    record.params = from_raw(raw);
    record.image = quantize8(render(record.params, resolution));
    record.sequence_id = sequence_id;
    record.frame_index = f;
    frames.push_back(std::move(record));
  }
  return frames;
}

std::string manifest_header_line(const Manifest& m) {
  ordered_json j;
  j["type"] = "header";
  j["renderer_version"] = m.renderer_version;
  j["seed"] = m.seed;
  j["resolution"] = m.resolution;
  j["n_identities"] = m.n_identities;
  j["frames_per_identity"] = m.frames_per_identity;
  return j.dump();
}

std::string manifest_entry_line(const ManifestEntry& e) {
  ordered_json j;
  j["type"] = "frame";
  j["sequence_id"] = e.sequence_id;
  j["frame_index"] = e.frame_index;
  j["image"] = e.image;
  const ordered_json params = params_to_json(e.params);
  for (const auto& [key, value] : params.items()) j[key] = value;
  return j.dump();
}

Manifest generate_dataset(int n_identities, int frames_per_identity, const fs::path& out_dir,
                          std::uint64_t seed, int resolution) {
  if (n_identities < 1) throw ArgumentError("generate_dataset: n_identities must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create directory", (out_dir / "images").string());

  Manifest manifest;
  manifest.renderer_version = kRendererVersion;
  manifest.seed = seed;
  manifest.resolution = resolution;
  manifest.n_identities = n_identities;
  manifest.frames_per_identity = frames_per_identity;
  manifest.root = out_dir;

  for (int s = 0; s < n_identities; ++s) {
    const auto frames = sample_sequence(derive_seed(seed, 2ULL * s), frames_per_identity,
                                        derive_seed(seed, 2ULL * s + 1), resolution, s);
    for (const auto& frame : frames) {
      ManifestEntry entry{frame.sequence_id, frame.frame_index,
                          image_name(frame.sequence_id, frame.frame_index), frame.params};
      write_png((out_dir / entry.image).string(), frame.image);
      manifest.entries.push_back(std::move(entry));
    }
  }

  const fs::path manifest_path = out_dir / kManifestFileName;
  const fs::path tmp_path = out_dir / (std::string(kManifestFileName) + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", tmp_path.string());
    out << manifest_header_line(manifest) << '\n';
    for (const auto& entry : manifest.entries) out << manifest_entry_line(entry) << '\n';
    if (!out) throw IoError("write failed", tmp_path.string());
  }
  fs::rename(tmp_path, manifest_path, ec);
  if (ec) throw IoError("cannot rename manifest into place", manifest_path.string());
  return manifest;
}

Manifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestFileName : path;
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest", file.string());
  Manifest m;
  m.root = file.parent_path();
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        m.renderer_version = j.at("renderer_version").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.resolution = j.at("resolution").get<int>();
        m.n_identities = j.at("n_identities").get<int>();
        m.frames_per_identity = j.at("frames_per_identity").get<int>();
        have_header = true;
      } else if (type == "frame") {
        ManifestEntry e;
        e.sequence_id = j.at("sequence_id").get<int>();
        e.frame_index = j.at("frame_index").get<int>();
        e.image = j.at("image").get<std::string>();
        e.params = params_from_json(j);
        m.entries.push_back(std::move(e));
      } else {
        throw CorruptionError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& err) {
      throw CorruptionError(file.string() + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (!have_header) throw CorruptionError(file.string() + ": manifest header missing");
  return m;
}

std::vector<FrameRecord> load_png_sequence_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file() && item.path().extension() == ".png") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FrameRecord> frames;
  for (std::size_t i = 0; i < files.size(); ++i) {
    FrameRecord record;
    record.image = read_png(files[i].string());
    record.frame_index = static_cast<int>(i);
    frames.push_back(std::move(record));
  }
  return frames;
}

}  // namespace reenact::toyface

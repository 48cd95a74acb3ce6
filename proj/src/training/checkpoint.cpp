#include "reenact/training/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "reenact/errors.hpp"

namespace reenact::training {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'N', 'C', 'K'};
constexpr std::size_t kDigestSize = 32;

class Writer {
 public:
  template <typename T>
  void pod(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void floats(const std::vector<float>& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    bytes.insert(bytes.end(), p, p + v.size() * sizeof(float));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::uint64_t n) {
    if (n > size_ / sizeof(float)) throw CorruptionError("checkpoint: implausible tensor size");
    need(n * sizeof(float));
    std::vector<float> v(n);
    std::memcpy(v.data(), data_ + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) throw CorruptionError("checkpoint: truncated");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::vector<float> to_floats(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat32).contiguous();
  return std::vector<float>(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
}

torch::Tensor from_floats(const std::vector<float>& v, const std::vector<std::int64_t>& shape,
                          torch::Dtype dtype) {
  return torch::from_blob(const_cast<float*>(v.data()), shape, torch::kFloat32).clone().to(dtype);
}

void apply_adam_entry(torch::optim::Adam& opt, const torch::Tensor& param, const AdamEntry& e) {
  auto state = std::make_unique<torch::optim::AdamParamState>();
  state->step(e.step);
  state->exp_avg(from_floats(e.exp_avg, param.sizes().vec(), param.scalar_type()));
  state->exp_avg_sq(from_floats(e.exp_avg_sq, param.sizes().vec(), param.scalar_type()));
  opt.state()[param.unsafeGetTensorImpl()] = std::move(state);
}

}  // namespace

Checkpoint capture_checkpoint(const models::ReenactModel& model, const TrainConfig& config,
                              std::uint64_t iteration, std::uint32_t stage,
                              const std::vector<NamedOptimizer>& optimizers) {
  Checkpoint ck;
  ck.config_json = to_json(config).dump();
  ck.config_hash = config_hash(config);
  ck.iteration = iteration;
  ck.stage = stage;
  for (const auto& p : model.tagged_parameters()) {
    ck.tensors.push_back({p.name, models::to_string(p.component), p.tensor.sizes().vec(),
                          to_floats(p.tensor)});
  }
  for (const auto& named : optimizers) {
    OptimizerRecord rec;
    rec.name = named.name;
    auto& state = named.optimizer->state();
    for (const auto& p : named.params) {
      auto it = state.find(p.tensor.unsafeGetTensorImpl());
      if (it == state.end()) continue;
      const auto& adam = static_cast<const torch::optim::AdamParamState&>(*it->second);
      rec.entries.push_back({p.name, adam.step(), to_floats(adam.exp_avg()),
                             to_floats(adam.exp_avg_sq())});
    }
    ck.optimizers.push_back(std::move(rec));
  }
  return ck;
}

std::vector<std::uint8_t> serialize(const Checkpoint& ck) {
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.pod<std::uint32_t>(ck.format_version);
  w.str(ck.config_json);
  w.str(ck.config_hash);
  w.pod<std::uint64_t>(ck.iteration);
  w.pod<std::uint32_t>(ck.stage);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    w.str(t.name);
    w.str(t.component);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.pod<std::int64_t>(d);
    w.pod<std::uint64_t>(t.data.size());
    w.floats(t.data);
  }
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ck.optimizers.size()));
  for (const auto& o : ck.optimizers) {
    w.str(o.name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(o.entries.size()));
    for (const auto& e : o.entries) {
      w.str(e.param);
      w.pod<std::int64_t>(e.step);
      w.pod<std::uint64_t>(e.exp_avg.size());
      w.floats(e.exp_avg);
      w.floats(e.exp_avg_sq);
    }
  }
  const std::string digest_hex = sha256_hex(w.bytes.data(), w.bytes.size());
  for (std::size_t i = 0; i < kDigestSize; ++i) {
    w.bytes.push_back(static_cast<std::uint8_t>(std::stoi(digest_hex.substr(2 * i, 2), nullptr, 16)));
  }
  return std::move(w.bytes);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 + kDigestSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CorruptionError("checkpoint: bad magic or truncated header");
  }
  const std::size_t body = bytes.size() - kDigestSize;
  const std::string digest_hex = sha256_hex(bytes.data(), body);
  for (std::size_t i = 0; i < kDigestSize; ++i) {
    const auto expected = static_cast<std::uint8_t>(std::stoi(digest_hex.substr(2 * i, 2), nullptr, 16));
    if (bytes[body + i] != expected) throw CorruptionError("checkpoint: digest mismatch (corrupt or truncated file)");
  }
  Reader r(bytes.data() + 4, body - 4);
  Checkpoint ck;
  ck.format_version = r.pod<std::uint32_t>();
  if (ck.format_version != kCheckpointFormatVersion) {
    throw CorruptionError("checkpoint: unsupported format version " + std::to_string(ck.format_version));
  }
  ck.config_json = r.str();
  ck.config_hash = r.str();
  ck.iteration = r.pod<std::uint64_t>();
  ck.stage = r.pod<std::uint32_t>();
  const auto n_tensors = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorRecord t;
    t.name = r.str();
    t.component = r.str();
    const auto ndim = r.pod<std::uint32_t>();
    if (ndim > 8) throw CorruptionError("checkpoint: implausible tensor rank");
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(r.pod<std::int64_t>());
      numel *= t.shape.back();
    }
    const auto n = r.pod<std::uint64_t>();
    if (static_cast<std::int64_t>(n) != numel) throw CorruptionError("checkpoint: shape/size mismatch for " + t.name);
    t.data = r.floats(n);
    ck.tensors.push_back(std::move(t));
  }
  const auto n_opt = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    OptimizerRecord o;
    o.name = r.str();
    const auto n_entries = r.pod<std::uint32_t>();
    for (std::uint32_t k = 0; k < n_entries; ++k) {
      AdamEntry e;
      e.param = r.str();
      e.step = r.pod<std::int64_t>();
      const auto n = r.pod<std::uint64_t>();
      e.exp_avg = r.floats(n);
      e.exp_avg_sq = r.floats(n);
      o.entries.push_back(std::move(e));
    }
    ck.optimizers.push_back(std::move(o));
  }
  if (!r.done()) throw CorruptionError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize(checkpoint);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed", tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename checkpoint into place", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void restore_checkpoint(const Checkpoint& ck, models::ReenactModel& model,
                        const RestoreOptions& options,
                        const std::vector<NamedOptimizer>& optimizers) {
  if (!options.expected_config_hash.empty() && !options.force &&
      ck.config_hash != options.expected_config_hash) {
    throw ConfigError("checkpoint config hash " + ck.config_hash + " does not match " +
                      options.expected_config_hash + " (use force to override)");
  }
  auto params = model.tagged_parameters();
  std::map<std::string, const TensorRecord*> records;
  for (const auto& t : ck.tensors) records[t.name] = &t;

  // Validate everything first.
  std::vector<std::pair<torch::Tensor, const TensorRecord*>> plan;
  for (const auto& p : params) {
    if (!options.name_prefix.empty() && p.name.rfind(options.name_prefix, 0) != 0) continue;
    auto it = records.find(p.name);
    if (it == records.end()) throw CorruptionError("checkpoint: missing tensor " + p.name);
    const auto& rec = *it->second;
    if (rec.shape != p.tensor.sizes().vec()) throw ShapeError("checkpoint: shape mismatch for " + p.name);
    if (static_cast<std::int64_t>(rec.data.size()) != p.tensor.numel()) {
      throw CorruptionError("checkpoint: element count mismatch for " + p.name);
    }
    if (rec.component != models::to_string(p.component)) {
      throw CorruptionError("checkpoint: component tag mismatch for " + p.name);
    }
    plan.emplace_back(p.tensor, &rec);
  }
  std::map<std::string, torch::Tensor> by_name;
  for (const auto& p : params) by_name[p.name] = p.tensor;
  for (const auto& named : optimizers) {
    for (const auto& o : ck.optimizers) {
      if (o.name != named.name) continue;
      for (const auto& e : o.entries) {
        auto it = by_name.find(e.param);
        if (it == by_name.end() || static_cast<std::int64_t>(e.exp_avg.size()) != it->second.numel() ||
            e.exp_avg_sq.size() != e.exp_avg.size()) {
          throw CorruptionError("checkpoint: optimizer entry does not match model: " + e.param);
        }
      }
    }
  }

  torch::NoGradGuard no_grad;
  for (auto& [tensor, rec] : plan) {
    tensor.copy_(from_floats(rec->data, rec->shape, tensor.scalar_type()));
  }
  for (const auto& named : optimizers) {
    for (const auto& o : ck.optimizers) {
      if (o.name != named.name) continue;
      for (const auto& e : o.entries) {
        const bool owned = std::any_of(named.params.begin(), named.params.end(),
                                       [&](const TaggedParameter& p) { return p.name == e.param; });
        if (owned) apply_adam_entry(*named.optimizer, by_name.at(e.param), e);
      }
    }
  }
}

TrainConfig config_of(const Checkpoint& checkpoint) {
  try {
    return train_config_from_json(nlohmann::json::parse(checkpoint.config_json));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint: embedded config unreadable: ") + e.what());
  }
}

models::ReenactModel model_from_checkpoint(const Checkpoint& checkpoint) {
  const TrainConfig config = config_of(checkpoint);
  models::ReenactModel model(config.model_config(), config.seed, config.perceptual_seed);
  restore_checkpoint(checkpoint, model);
  model.probes.expression.mark_frozen();
  model.probes.pose.mark_frozen();
  model.probes.identity.mark_frozen();
  return model;
}

}  // namespace reenact::training

#include "reenact/training/probe_training.hpp"

#include <algorithm>
#include <random>

#include "reenact/errors.hpp"
#include "reenact/toyface/params.hpp"
#include "reenact/training/checkpoint.hpp"

namespace reenact::training {

namespace {

constexpr double kLateLrFactor = 0.2;

int factor_offset(models::ProbeKind kind) {
  switch (kind) {
    case models::ProbeKind::expression: return toyface::kExpressionOffset;
    case models::ProbeKind::pose: return toyface::kPoseOffset;
    case models::ProbeKind::identity: return 0;
  }
  return 0;
}

std::array<double, 4> train_one(models::Probe& probe, const FrameStore& data,
                                const std::vector<std::int64_t>& train,
                                const std::vector<std::int64_t>& heldout,
                                const ProbeTrainOptions& options, std::uint64_t stream) {
  const int offset = factor_offset(probe.kind());
  torch::optim::Adam opt(probe.trainable_parameters(), torch::optim::AdamOptions(options.lr));
  std::mt19937_64 rng(toyface::derive_seed(options.seed, stream));
  std::vector<std::int64_t> order = train;
  const int decay_epoch = (2 * options.epochs) / 3;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (epoch == decay_epoch && epoch > 0) {
      for (auto& group : opt.param_groups()) {
        auto& o = static_cast<torch::optim::AdamOptions&>(group.options());
        o.lr(o.lr() * kLateLrFactor);
      }
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      std::vector<std::int64_t> idx(order.begin() + start, order.begin() + stop);
      auto x = data.gather_images(idx);
      auto y = data.gather_factors(idx).narrow(1, offset, 4);
      auto loss = torch::mse_loss(probe.training_forward(x), y);
      opt.zero_grad();
      loss.backward();
      opt.step();
    }
  }
  probe.freeze();

  std::array<double, 4> mae{};
  if (heldout.empty()) return mae;
  torch::NoGradGuard no_grad;
  torch::Tensor sum = torch::zeros({4}, torch::kFloat64);
  for (std::size_t start = 0; start < heldout.size(); start += options.batch_size) {
    const std::size_t stop = std::min(heldout.size(), start + options.batch_size);
    std::vector<std::int64_t> idx(heldout.begin() + start, heldout.begin() + stop);
    auto pred = probe.predict(data.gather_images(idx));
    auto y = data.gather_factors(idx).narrow(1, offset, 4);
    sum += (pred - y).abs().sum(0).to(torch::kFloat64);
  }
  sum /= static_cast<double>(heldout.size());
  for (int i = 0; i < 4; ++i) mae[i] = sum[i].item<double>();
  return mae;
}

}  // namespace

ProbeReport pretrain_probes(models::ProbeSet& probes, const FrameStore& data,
                            const ProbeTrainOptions& options) {
  if (data.size() < kMinProbeFrames) {
    throw ArgumentError("probe pretraining needs at least " + std::to_string(kMinProbeFrames) +
                        " frames, got " + std::to_string(data.size()));
  }
  if (options.epochs <= 0 || options.batch_size <= 0 || options.lr <= 0.0) {
    throw ArgumentError("probe pretraining: epochs, batch size and lr must be positive");
  }
  std::vector<std::int64_t> train, heldout;
  const bool by_sequence = data.sequences.size() >= 10;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    const auto& seq = data.sequences[s];
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const bool hold = by_sequence ? (s % 10 == 9) : (f % 10 == 9);
      (hold ? heldout : train).push_back(seq[f]);
    }
  }
  ProbeReport report;
  report.train_frames = static_cast<std::int64_t>(train.size());
  report.heldout_frames = static_cast<std::int64_t>(heldout.size());
  report.expression_mae = train_one(probes.expression, data, train, heldout, options, 1);
  report.pose_mae = train_one(probes.pose, data, train, heldout, options, 2);
  report.identity_mae = train_one(probes.identity, data, train, heldout, options, 3);
  return report;
}

void save_probes(const std::string& path, const models::ReenactModel& model) {
  if (!model.probes.frozen()) throw StateError("save_probes: probes are not frozen");
  Checkpoint ck;
  for (const auto& p : model.probes.tagged_parameters()) {
    auto c = p.tensor.detach().to(torch::kFloat32).contiguous();
    ck.tensors.push_back({p.name, models::to_string(p.component), c.sizes().vec(),
                          std::vector<float>(c.data_ptr<float>(), c.data_ptr<float>() + c.numel())});
  }
  save_checkpoint(path, ck);
}

void load_probes(const std::string& path, models::ReenactModel& model) {
  const Checkpoint ck = load_checkpoint(path);
  RestoreOptions options;
  options.name_prefix = "probe.";
  restore_checkpoint(ck, model, options);
  model.probes.expression.mark_frozen();
  model.probes.pose.mark_frozen();
  model.probes.identity.mark_frozen();
}

}  // namespace reenact::training

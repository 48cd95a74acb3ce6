#include "reenact/training/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "reenact/editing/editing.hpp"
#include "reenact/errors.hpp"

namespace reenact::training {

namespace {

using models::Component;

std::vector<TaggedParameter> params_of(const models::ReenactModel& model,
                                       const std::vector<Component>& components) {
  std::vector<TaggedParameter> out;
  for (auto& p : model.tagged_parameters()) {
    if (std::find(components.begin(), components.end(), p.component) != components.end()) {
      out.push_back(p);
    }
  }
  return out;
}

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<TaggedParameter>& params,
                                              const TrainConfig& config, double lr) {
  std::vector<torch::Tensor> tensors;
  for (const auto& p : params) tensors.push_back(p.tensor);
  return std::make_unique<torch::optim::Adam>(
      tensors, torch::optim::AdamOptions(lr)
                   .betas({config.adam_beta1, config.adam_beta2})
                   .eps(config.adam_eps));
}

bool finite(const losses::LossReport& r) {
  return std::isfinite(r.rec) && std::isfinite(r.per) && std::isfinite(r.exp) &&
         std::isfinite(r.adv_g) && std::isfinite(r.adv_d) && std::isfinite(r.r1) &&
         std::isfinite(r.total);
}

nlohmann::ordered_json report_json(const losses::LossReport& r) {
  nlohmann::ordered_json j;
  j["rec"] = r.rec;
  j["per"] = r.per;
  j["exp"] = r.exp;
  j["adv_g"] = r.adv_g;
  j["adv_d"] = r.adv_d;
  j["r1"] = r.r1;
  j["total"] = r.total;
  return j;
}

}  // namespace

std::vector<Component> generator_components(int stage) {
  if (stage == 1) {
    return {Component::motion_editing_encoder, Component::motion_editing_mlp,
            Component::generator_expression, Component::generator_pose};
  }
  if (stage == 2) return {Component::motion_editing_mlp, Component::generator_expression};
  throw ArgumentError("stage must be 1 or 2");
}

Trainer::Trainer(TrainConfig config, models::ReenactModel& model, const FrameStore& data,
                 std::filesystem::path out_dir)
    : config_(std::move(config)), model_(model), data_(data), out_dir_(std::move(out_dir)),
      weights_(config_.loss_weights()) {
  config_.validate(/*allow_zero_lr=*/true);
  if (data_.resolution != config_.resolution) {
    throw ShapeError("dataset resolution " + std::to_string(data_.resolution) +
                     " does not match configured resolution " + std::to_string(config_.resolution));
  }
  if (!out_dir_.empty()) std::filesystem::create_directories(out_dir_);
}

void Trainer::begin_stage(int stage) {
  if (!model_.probes.frozen()) throw StateError("training requires frozen probes");
  const auto components = generator_components(stage);
  stage_ = stage;
  iteration_ = 0;
  const double lr = stage == 1 ? config_.lr_stage1 : config_.lr_stage2;
  gen_params_ = params_of(model_, components);
  gen_opt_ = make_adam(gen_params_, config_, lr);
  if (!disc_opt_) {
    disc_params_ = params_of(model_, {Component::discriminator});
    disc_opt_ = make_adam(disc_params_, config_, lr);
  } else {
    for (auto& group : disc_opt_->param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
  }
}

StepRecord Trainer::step() {
  if (stage_ == 0) throw StateError("begin_stage must be called before step");
  ++iteration_;
  std::mt19937_64 rng(toyface::derive_seed(config_.seed, (static_cast<std::uint64_t>(stage_) << 40) + iteration_));
  const PairIndices pairs = sample_pairs(data_, config_.batch_size, rng);
  const auto S = data_.gather_images(pairs.source);
  const auto D = data_.gather_images(pairs.driving);

  model_.set_trainable(generator_components(stage_));
  auto batch = editing::cyclic_forward(model_, S, D, weights_.self_reconstruction_pairs);
  auto terms = losses::generator_losses(batch, model_, weights_);
  gen_opt_->zero_grad();
  terms.total.backward();
  StepRecord record{stage_, iteration_, terms.report()};
  if (!std::isfinite(record.losses.total) || !std::isfinite(terms.total.item<double>())) {
    fail_nonfinite("generator", record.losses);
  }
  gen_opt_->step();

  model_.set_trainable({Component::discriminator});
  const bool penalize = iteration_ % static_cast<std::uint64_t>(config_.r1_every) == 0;
  const double gamma = penalize ? config_.r1_gamma * config_.r1_every : 0.0;
  auto d = losses::adversarial_discriminator_loss(batch, torch::cat({S, D}, 0), model_.discriminator, gamma);
  disc_opt_->zero_grad();
  (d.adv + d.r1).backward();
  record.losses.adv_d = d.adv.item<double>();
  record.losses.r1 = d.r1.item<double>();
  if (!finite(record.losses)) fail_nonfinite("discriminator", record.losses);
  disc_opt_->step();
  model_.set_trainable(std::vector<Component>{});

  history_.push_back(record);
  return record;
}

void Trainer::run_stage(int stage) {
  if (stage_ != stage) begin_stage(stage);
  const auto total = static_cast<std::uint64_t>(stage == 1 ? config_.stage1_iters : config_.stage2_iters);
  while (iteration_ < total) {
    const StepRecord record = step();
    if (record.iteration % static_cast<std::uint64_t>(config_.log_every) == 0 || record.iteration == 1) {
      append_log(record);
    }
    if (!out_dir_.empty() && iteration_ % static_cast<std::uint64_t>(config_.checkpoint_every) == 0 &&
        iteration_ < total) {
      save_checkpoint((out_dir_ / ("stage" + std::to_string(stage) + "_latest.ckpt")).string(), snapshot());
    }
  }
  if (!out_dir_.empty()) save_checkpoint(checkpoint_path(stage).string(), snapshot());
}

std::vector<NamedOptimizer> Trainer::named_optimizers() const {
  std::vector<NamedOptimizer> out;
  if (gen_opt_) out.push_back({"generator_side", gen_opt_.get(), gen_params_});
  if (disc_opt_) out.push_back({"discriminator", disc_opt_.get(), disc_params_});
  return out;
}

Checkpoint Trainer::snapshot() const {
  return capture_checkpoint(model_, config_, iteration_, static_cast<std::uint32_t>(stage_),
                            named_optimizers());
}

void Trainer::resume(const Checkpoint& checkpoint, bool force) {
  RestoreOptions options;
  options.expected_config_hash = config_hash(config_);
  options.force = force;
  // Validate against the live model before touching any trainer state.
  const int stage = static_cast<int>(checkpoint.stage);
  if (stage != 1 && stage != 2) throw CorruptionError("checkpoint stage must be 1 or 2");
  begin_stage(stage);
  restore_checkpoint(checkpoint, model_, options, named_optimizers());
  iteration_ = checkpoint.iteration;
}

std::filesystem::path Trainer::checkpoint_path(int stage) const {
  return out_dir_ / ("stage" + std::to_string(stage) + ".ckpt");
}

void Trainer::append_log(const StepRecord& record) {
  if (out_dir_.empty()) return;
  nlohmann::ordered_json j;
  j["stage"] = record.stage;
  j["iteration"] = record.iteration;
  const auto losses = report_json(record.losses);
  for (const auto& [k, v] : losses.items()) j[k] = v;
  std::ofstream out(out_dir_ / kTrainLogFileName, std::ios::app);
  if (!out) throw IoError("cannot append training log", (out_dir_ / kTrainLogFileName).string());
  out << j.dump() << '\n';
}

void Trainer::fail_nonfinite(const std::string& phase, const losses::LossReport& report) {
  nlohmann::ordered_json diag;
  diag["stage"] = stage_;
  diag["iteration"] = iteration_;
  diag["phase"] = phase;
  diag["losses"] = report_json(report);
  nlohmann::ordered_json norms;
  for (Component c : models::kTrainableComponents) {
    double sq = 0.0;
    for (const auto& t : model_.parameters_of(c)) {
      if (t.grad().defined()) sq += t.grad().to(torch::kFloat64).pow(2).sum().item<double>();
    }
    norms[models::to_string(c)] = std::sqrt(sq);
  }
  diag["grad_norms"] = norms;
  if (!out_dir_.empty()) {
    std::ofstream out(out_dir_ / kDiagnosticFileName);
    out << diag.dump(2) << '\n';
  }
  throw NonFiniteLossError("non-finite loss at stage " + std::to_string(stage_) + " iteration " +
                           std::to_string(iteration_) + ": " + diag.dump());
}

Checkpoint train(const TrainConfig& config, models::ReenactModel& model, const FrameStore& data,
                 const std::filesystem::path& out_dir, int first_stage, int last_stage) {
  Trainer trainer(config, model, data, out_dir);
  const std::string hash = config_hash(config);
  auto matching = [&](const std::filesystem::path& p) -> std::optional<Checkpoint> {
    if (out_dir.empty() || !std::filesystem::exists(p)) return std::nullopt;
    Checkpoint ck = load_checkpoint(p.string());
    if (ck.config_hash != hash) return std::nullopt;
    return ck;
  };
  if (first_stage == 2) {
    auto ck = matching(trainer.checkpoint_path(1));
    if (!ck) throw StateError("stage 2 requires a stage-1 checkpoint in " + out_dir.string());
    trainer.resume(*ck);
  }
  for (int stage = first_stage; stage <= last_stage; ++stage) {
    if (auto done = matching(trainer.checkpoint_path(stage)); done && done->stage == static_cast<std::uint32_t>(stage)) {
      trainer.resume(*done);
      continue;
    }
    if (auto partial = matching(out_dir / ("stage" + std::to_string(stage) + "_latest.ckpt"));
        partial && partial->stage == static_cast<std::uint32_t>(stage)) {
      trainer.resume(*partial);
    } else {
      trainer.begin_stage(stage);
    }
    trainer.run_stage(stage);
  }
  return trainer.snapshot();
}

}  // namespace reenact::training

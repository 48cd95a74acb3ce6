#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reenact/image.hpp"
#include "reenact/models/model.hpp"
#include "reenact/toyface/fit.hpp"
#include "reenact/training/frame_store.hpp"

namespace reenact::eval {

// Cosine of identity probe features. Throws StateError when the probe is not frozen.
double identity_similarity(const Image& a, const Image& b, const models::Probe& identity_probe);

struct FactorDistances {
  double pose_dist = 0.0;
  double expr_dist = 0.0;
  bool reliable = false;
  double residuals[3] = {0.0, 0.0, 0.0};  // generated, pose target, expression target
};

// Mean absolute difference of normalized pose (expression) factors between the fit of
// `generated` and the fit of `pose_target` (`expr_target`).
FactorDistances factor_distances(const toyface::FitResult& generated,
                                 const toyface::FitResult& pose_target,
                                 const toyface::FitResult& expr_target);
FactorDistances factor_distances(const Image& generated, const Image& pose_target,
                                 const Image& expr_target, const toyface::FitOptions& options = {});

enum class EvalMode { expression_edit, pose_edit, both };
std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& name);  // throws ArgumentError

struct EvalPair {
  std::int64_t source = 0;   // frame index into the FrameStore
  std::int64_t driving = 0;
  bool same_sequence = true;
};

// Pair i uses sequence i mod n_sequences: its first frame as source and a random other frame
// as driving. With `cross_identity`, the driving frame comes from the next sequence instead.
std::vector<EvalPair> sample_eval_pairs(const training::FrameStore& store, int n_pairs,
                                        std::uint64_t seed, bool cross_identity = false);

struct EvalRow {
  std::int64_t source = 0;
  std::int64_t driving = 0;
  bool reliable = false;
  double residual_generated = 0.0;
  double residual_pose_target = 0.0;
  double residual_expr_target = 0.0;
  double pose_dist = 0.0;
  double expr_dist = 0.0;
  double id_sim = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

struct EvalReport {
  EvalMode mode = EvalMode::expression_edit;
  int n_pairs = 0;
  int n_reliable = 0;
  int n_excluded = 0;
  std::optional<double> psnr_mean;  // over reliable rows with a reconstruction target
  std::optional<double> ssim_mean;
  double id_sim_mean = 0.0;
  double expr_dist_mean = 0.0;
  double pose_dist_mean = 0.0;
  std::string config_hash;
  std::string checkpoint_hash;
  std::vector<EvalRow> rows;

  double unreliable_fraction() const { return n_pairs ? double(n_excluded) / n_pairs : 0.0; }
};

struct ReportOptions {
  toyface::FitOptions fit;
  int batch_size = 20;
};

// Scores every pair; rows with any fit residual above kReliableResidual are excluded from the
// means. Throws ReportError when no row is reliable.
EvalReport disentanglement_report(models::ReenactModel& model, const training::FrameStore& store,
                                  const std::vector<EvalPair>& pairs, EvalMode mode,
                                  const ReportOptions& options = {});

// Loads the checkpoint, samples `n_pairs` same-identity pairs with `seed` and fills in hashes.
EvalReport disentanglement_report(const std::string& checkpoint_path,
                                  const training::FrameStore& store, int n_pairs, EvalMode mode,
                                  std::uint64_t seed = 0, const ReportOptions& options = {});

// Mean over frames of (psnr(e(S,S), S) + psnr(p(S,S), S)) / 2.
double self_reconstruction_psnr(models::ReenactModel& model, const training::FrameStore& store,
                                const std::vector<std::int64_t>& frames, int batch_size = 20);

nlohmann::ordered_json to_json(const EvalReport& report);
void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

}  // namespace reenact::eval

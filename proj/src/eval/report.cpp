#include "reenact/eval/report.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "reenact/editing/editing.hpp"
#include "reenact/errors.hpp"
#include "reenact/eval/metrics.hpp"
#include "reenact/image_tensor.hpp"
#include "reenact/training/checkpoint.hpp"

namespace reenact::eval {

namespace {

double mean_abs_diff(const toyface::FactorVector& a, const toyface::FactorVector& b, int offset) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += std::abs(a[offset + i] - b[offset + i]);
  return sum / 4.0;
}

std::vector<float> flat(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat32).contiguous().flatten();
  return {c.data_ptr<float>(), c.data_ptr<float>() + c.numel()};
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return training::sha256_hex(bytes.data(), bytes.size());
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

double identity_similarity(const Image& a, const Image& b, const models::Probe& identity_probe) {
  torch::NoGradGuard no_grad;
  const auto fa = flat(identity_probe.features(to_tensor(a)));
  const auto fb = flat(identity_probe.features(to_tensor(b)));
  return cosine_similarity(fa, fb);
}

FactorDistances factor_distances(const toyface::FitResult& generated,
                                 const toyface::FitResult& pose_target,
                                 const toyface::FitResult& expr_target) {
  FactorDistances d;
  d.residuals[0] = generated.residual;
  d.residuals[1] = pose_target.residual;
  d.residuals[2] = expr_target.residual;
  d.reliable = generated.residual <= toyface::kReliableResidual &&
               pose_target.residual <= toyface::kReliableResidual &&
               expr_target.residual <= toyface::kReliableResidual;
  const auto g = toyface::to_normalized(generated.params);
  d.pose_dist = mean_abs_diff(g, toyface::to_normalized(pose_target.params), toyface::kPoseOffset);
  d.expr_dist = mean_abs_diff(g, toyface::to_normalized(expr_target.params), toyface::kExpressionOffset);
  return d;
}

FactorDistances factor_distances(const Image& generated, const Image& pose_target,
                                 const Image& expr_target, const toyface::FitOptions& options) {
  return factor_distances(toyface::fit_params(generated, options),
                          toyface::fit_params(pose_target, options),
                          toyface::fit_params(expr_target, options));
}

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::expression_edit: return "expression_edit";
    case EvalMode::pose_edit: return "pose_edit";
    case EvalMode::both: return "both";
  }
  return "?";
}

EvalMode eval_mode_from_string(const std::string& name) {
  for (EvalMode m : {EvalMode::expression_edit, EvalMode::pose_edit, EvalMode::both}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown evaluation mode '" + name + "'");
}

std::vector<EvalPair> sample_eval_pairs(const training::FrameStore& store, int n_pairs,
                                        std::uint64_t seed, bool cross_identity) {
  if (n_pairs <= 0) throw ArgumentError("n_pairs must be positive");
  if (store.sequences.empty()) throw ArgumentError("evaluation set has no sequences");
  if (cross_identity && store.sequences.size() < 2) {
    throw ArgumentError("cross-identity pairs need at least two sequences");
  }
  std::mt19937_64 rng(seed);
  std::vector<EvalPair> pairs;
  const std::size_t n_seq = store.sequences.size();
  for (int i = 0; i < n_pairs; ++i) {
    const auto& seq = store.sequences[static_cast<std::size_t>(i) % n_seq];
    EvalPair p;
    p.source = seq.front();
    if (cross_identity) {
      const auto& other = store.sequences[(static_cast<std::size_t>(i) + 1) % n_seq];
      std::uniform_int_distribution<std::size_t> pick(0, other.size() - 1);
      p.driving = other[pick(rng)];
      p.same_sequence = false;
    } else {
      if (seq.size() < 2) throw ArgumentError("same-identity pairs need sequences of two or more frames");
      std::uniform_int_distribution<std::size_t> pick(1, seq.size() - 1);
      p.driving = seq[pick(rng)];
    }
    pairs.push_back(p);
  }
  return pairs;
}

EvalReport disentanglement_report(models::ReenactModel& model, const training::FrameStore& store,
                                  const std::vector<EvalPair>& pairs, EvalMode mode,
                                  const ReportOptions& options) {
  if (!model.probes.identity.frozen()) throw StateError("evaluation requires a frozen identity probe");
  if (store.resolution != model.config().resolution) {
    throw ShapeError("evaluation set resolution does not match the model");
  }
  torch::NoGradGuard no_grad;
  std::map<std::int64_t, toyface::FitResult> fit_cache;
  auto frame_fit = [&](std::int64_t index) -> const toyface::FitResult& {
    auto it = fit_cache.find(index);
    if (it == fit_cache.end()) {
      it = fit_cache.emplace(index, toyface::fit_params(to_image(store.images, index), options.fit)).first;
    }
    return it->second;
  };

  EvalReport report;
  report.mode = mode;
  report.n_pairs = static_cast<int>(pairs.size());
  const int bs = std::max(1, options.batch_size);
  for (std::size_t start = 0; start < pairs.size(); start += bs) {
    const std::size_t stop = std::min(pairs.size(), start + bs);
    std::vector<std::int64_t> src, drv;
    for (std::size_t i = start; i < stop; ++i) {
      src.push_back(pairs[i].source);
      drv.push_back(pairs[i].driving);
    }
    const auto S = store.gather_images(src);
    const auto D = store.gather_images(drv);
    torch::Tensor out;
    switch (mode) {
      case EvalMode::expression_edit: out = editing::transfer_expression(model, S, D); break;
      case EvalMode::pose_edit: out = editing::transfer_pose(model, S, D); break;
      case EvalMode::both:
        out = editing::transfer_pose(model, editing::transfer_expression(model, S, D), D);
        break;
    }
    const auto id_src = model.probes.identity.features(S);
    const auto id_out = model.probes.identity.features(out);
    for (std::size_t i = start; i < stop; ++i) {
      const auto k = static_cast<std::int64_t>(i - start);
      const Image generated = to_image(out, k);
      const auto& fs = frame_fit(pairs[i].source);
      const auto& fd = frame_fit(pairs[i].driving);
      const auto fg = toyface::fit_params(generated, options.fit);
      FactorDistances d;
      switch (mode) {
        case EvalMode::expression_edit: d = factor_distances(fg, fs, fd); break;
        case EvalMode::pose_edit: d = factor_distances(fg, fd, fs); break;
        case EvalMode::both: d = factor_distances(fg, fd, fd); break;
      }
      EvalRow row;
      row.source = pairs[i].source;
      row.driving = pairs[i].driving;
      row.reliable = d.reliable;
      row.residual_generated = d.residuals[0];
      row.residual_pose_target = d.residuals[1];
      row.residual_expr_target = d.residuals[2];
      row.pose_dist = d.pose_dist;
      row.expr_dist = d.expr_dist;
      row.id_sim = cosine_similarity(flat(id_src[k]), flat(id_out[k]));
      if (mode == EvalMode::both && pairs[i].same_sequence) {
        const Image target = to_image(D, k);
        row.psnr = psnr(generated, target);
        row.ssim = ssim(generated, target);
      }
      report.rows.push_back(row);
    }
  }

  double id_sum = 0.0, pose_sum = 0.0, expr_sum = 0.0, psnr_sum = 0.0, ssim_sum = 0.0;
  int n_recon = 0;
  for (const auto& row : report.rows) {
    if (!row.reliable) {
      ++report.n_excluded;
      continue;
    }
    ++report.n_reliable;
    id_sum += row.id_sim;
    pose_sum += row.pose_dist;
    expr_sum += row.expr_dist;
    if (row.psnr) {
      ++n_recon;
      psnr_sum += *row.psnr;
      ssim_sum += *row.ssim;
    }
  }
  if (report.n_reliable == 0) {
    throw ReportError("no reliable rows among " + std::to_string(report.n_pairs) +
                      " pairs: every evaluated image pair had an oracle fit residual above " +
                      std::to_string(toyface::kReliableResidual));
  }
  report.id_sim_mean = id_sum / report.n_reliable;
  report.pose_dist_mean = pose_sum / report.n_reliable;
  report.expr_dist_mean = expr_sum / report.n_reliable;
  if (n_recon > 0) {
    report.psnr_mean = psnr_sum / n_recon;
    report.ssim_mean = ssim_sum / n_recon;
  }
  return report;
}

EvalReport disentanglement_report(const std::string& checkpoint_path,
                                  const training::FrameStore& store, int n_pairs, EvalMode mode,
                                  std::uint64_t seed, const ReportOptions& options) {
  const auto ck = training::load_checkpoint(checkpoint_path);
  auto model = training::model_from_checkpoint(ck);
  EvalReport report =
      disentanglement_report(model, store, sample_eval_pairs(store, n_pairs, seed), mode, options);
  report.config_hash = ck.config_hash;
  report.checkpoint_hash = file_sha256(checkpoint_path);
  return report;
}

double self_reconstruction_psnr(models::ReenactModel& model, const training::FrameStore& store,
                                const std::vector<std::int64_t>& frames, int batch_size) {
  if (frames.empty()) throw ArgumentError("self_reconstruction_psnr: no frames");
  torch::NoGradGuard no_grad;
  double sum = 0.0;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < frames.size(); start += bs) {
    const std::size_t stop = std::min(frames.size(), start + bs);
    std::vector<std::int64_t> idx(frames.begin() + start, frames.begin() + stop);
    const auto S = store.gather_images(idx);
    const auto e = editing::transfer_expression(model, S, S);
    const auto p = editing::transfer_pose(model, S, S);
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(idx.size()); ++k) {
      const Image s = to_image(S, k);
      sum += 0.5 * (psnr(to_image(e, k), s) + psnr(to_image(p, k), s));
    }
  }
  return sum / static_cast<double>(frames.size());
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  j["n_pairs"] = r.n_pairs;
  j["n_reliable"] = r.n_reliable;
  j["n_excluded"] = r.n_excluded;
  j["psnr_mean"] = optional_json(r.psnr_mean);
  j["ssim_mean"] = optional_json(r.ssim_mean);
  j["id_sim_mean"] = r.id_sim_mean;
  j["expr_dist_mean"] = r.expr_dist_mean;
  j["pose_dist_mean"] = r.pose_dist_mean;
  j["config_hash"] = r.config_hash;
  j["checkpoint_hash"] = r.checkpoint_hash;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["source"] = row.source;
    o["driving"] = row.driving;
    o["reliable"] = row.reliable;
    o["residual_generated"] = row.residual_generated;
    o["residual_pose_target"] = row.residual_pose_target;
    o["residual_expr_target"] = row.residual_expr_target;
    o["pose_dist"] = row.pose_dist;
    o["expr_dist"] = row.expr_dist;
    o["id_sim"] = row.id_sim;
    o["psnr"] = optional_json(row.psnr);
    o["ssim"] = optional_json(row.ssim);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j;
}

void write_report_json(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report", path);
  out << to_json(report).dump(2) << '\n';
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report", path);
  out << "source,driving,reliable,residual_generated,residual_pose_target,residual_expr_target,"
         "pose_dist,expr_dist,id_sim,psnr,ssim\n";
  out.precision(17);
  for (const auto& row : report.rows) {
    out << row.source << ',' << row.driving << ',' << (row.reliable ? 1 : 0) << ','
        << row.residual_generated << ',' << row.residual_pose_target << ','
        << row.residual_expr_target << ',' << row.pose_dist << ',' << row.expr_dist << ','
        << row.id_sim << ',';
    if (row.psnr) out << *row.psnr;
    out << ',';
    if (row.ssim) out << *row.ssim;
    out << '\n';
  }
}

}  // namespace reenact::eval

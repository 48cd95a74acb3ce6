#include "reenact/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "reenact/editing/editing.hpp"
#include "reenact/editing/paste_back.hpp"
#include "reenact/errors.hpp"
#include "reenact/eval/report.hpp"
#include "reenact/image_tensor.hpp"
#include "reenact/toyface/dataset.hpp"
#include "reenact/toyface/render.hpp"
#include "reenact/training/checkpoint.hpp"
#include "reenact/training/config.hpp"
#include "reenact/training/probe_training.hpp"
#include "reenact/training/trainer.hpp"

namespace reenact::cli {

namespace fs = std::filesystem;

namespace {

inline constexpr const char* kProbeFileName = "probes.ckpt";

struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  // generate-dataset
  std::string out;
  int identities = 0;
  int frames = 0;
  std::uint64_t seed = 0;
  int resolution = 64;
  // config driven
  std::string config;
  std::string stage = "all";
  bool force = false;
  // evaluate
  std::string mode = "expression_edit";
  std::string checkpoint;
  std::string dataset;
  int pairs = 100;
  bool csv = false;
  // edit
  std::string source, driving, op = "exp", full_frame, box;
  double feather = 0.0;
};

training::RunConfig load_config(const Flags& f) {
  training::RunConfig rc = f.config.empty() ? training::RunConfig{} : training::load_run_config(f.config);
  if (!f.out.empty()) rc.out_dir = f.out;
  return rc;
}

training::FrameStore load_store(const std::string& manifest_path) {
  if (manifest_path.empty()) throw ConfigError("no dataset manifest configured");
  return training::FrameStore::from_manifest(toyface::read_manifest(manifest_path));
}

models::ReenactModel make_model(const training::TrainConfig& c) {
  return models::ReenactModel(c.model_config(), c.seed, c.perceptual_seed);
}

nlohmann::ordered_json probe_report_json(const training::ProbeReport& r) {
  nlohmann::ordered_json j;
  j["train_frames"] = r.train_frames;
  j["heldout_frames"] = r.heldout_frames;
  j["expression_mae"] = r.expression_mae;
  j["pose_mae"] = r.pose_mae;
  j["identity_mae"] = r.identity_mae;
  return j;
}

// Loads probes from out_dir or pretrains (and saves) them.
void ensure_probes(models::ReenactModel& model, const training::RunConfig& rc,
                   const training::FrameStore& data, std::ostream& out) {
  const fs::path path = fs::path(rc.out_dir) / kProbeFileName;
  if (fs::exists(path)) {
    training::load_probes(path.string(), model);
    return;
  }
  training::ProbeTrainOptions opts;
  opts.epochs = rc.train.probe_epochs;
  opts.seed = rc.train.seed;
  const auto report = training::pretrain_probes(model.probes, data, opts);
  fs::create_directories(rc.out_dir);
  training::save_probes(path.string(), model);
  std::ofstream(fs::path(rc.out_dir) / "probe_report.json") << probe_report_json(report).dump(2) << '\n';
  out << "probes: " << probe_report_json(report).dump() << '\n';
}

int cmd_generate(const Flags& f, std::ostream& out) {
  if (f.identities <= 0 || f.frames <= 0) throw FlagError("--identities and --frames must be positive");
  if (!toyface::is_supported_resolution(f.resolution)) {
    throw FlagError("--resolution must be a power of two between 16 and 512");
  }
  const auto m = toyface::generate_dataset(f.identities, f.frames, f.out, f.seed, f.resolution);
  out << "wrote " << m.entries.size() << " frames to " << f.out << '\n';
  return kExitOk;
}

int cmd_pretrain(const Flags& f, std::ostream& out) {
  const auto rc = load_config(f);
  const auto data = load_store(rc.train.dataset);
  auto model = make_model(rc.train);
  const fs::path path = fs::path(rc.out_dir) / kProbeFileName;
  if (fs::exists(path)) fs::remove(path);
  ensure_probes(model, rc, data, out);
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  int first = 1, last = 2;
  if (f.stage == "1") last = 1;
  else if (f.stage == "2") first = 2;
  else if (f.stage != "all") throw FlagError("--stage must be 1, 2 or all");
  const auto rc = load_config(f);
  const auto data = load_store(rc.train.dataset);
  if (data.resolution != rc.train.resolution) {
    throw ConfigError("dataset resolution " + std::to_string(data.resolution) +
                      " differs from configured resolution " + std::to_string(rc.train.resolution));
  }
  auto model = make_model(rc.train);
  ensure_probes(model, rc, data, out);
  fs::create_directories(rc.out_dir);
  training::save_run_config((fs::path(rc.out_dir) / "config.json").string(), rc);
  const auto ck = training::train(rc.train, model, data, rc.out_dir, first, last);
  out << "stage " << ck.stage << " finished at iteration " << ck.iteration << "; checkpoint "
      << (fs::path(rc.out_dir) / ("stage" + std::to_string(ck.stage) + ".ckpt")).string() << '\n';
  return kExitOk;
}

std::string default_checkpoint(const std::string& out_dir) {
  for (const char* name : {"stage2.ckpt", "stage1.ckpt"}) {
    const fs::path p = fs::path(out_dir) / name;
    if (fs::exists(p)) return p.string();
  }
  throw IoError("no checkpoint found", out_dir);
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const auto mode = eval::eval_mode_from_string(f.mode);
  if (f.pairs <= 0) throw FlagError("--pairs must be positive");
  const auto rc = load_config(f);
  const std::string manifest = !f.dataset.empty() ? f.dataset : rc.eval_dataset;
  const auto store = load_store(manifest);
  const std::string ck = f.checkpoint.empty() ? default_checkpoint(rc.out_dir) : f.checkpoint;
  const auto report = eval::disentanglement_report(ck, store, f.pairs, mode, f.seed);
  fs::create_directories(rc.out_dir);
  const fs::path json_path = fs::path(rc.out_dir) / ("report_" + f.mode + ".json");
  eval::write_report_json(json_path.string(), report);
  if (f.csv) eval::write_report_csv((fs::path(rc.out_dir) / ("report_" + f.mode + ".csv")).string(), report);
  out << "pose_dist_mean " << report.pose_dist_mean << " expr_dist_mean " << report.expr_dist_mean
      << " reliable " << report.n_reliable << '/' << report.n_pairs << " -> " << json_path.string() << '\n';
  return kExitOk;
}

editing::CropBox parse_box(const std::string& text) {
  editing::CropBox box;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(text);
  if (!(in >> box.x >> c1 >> box.y >> c2 >> box.width >> c3 >> box.height) || c1 != ',' ||
      c2 != ',' || c3 != ',' || !(in >> std::ws).eof()) {
    throw FlagError("--box must be x,y,width,height");
  }
  return box;
}

int cmd_edit(const Flags& f, std::ostream& out) {
  if (f.op != "exp" && f.op != "pose" && f.op != "both") throw FlagError("--op must be exp, pose or both");
  if (!f.box.empty() && f.full_frame.empty()) throw FlagError("--box requires --full-frame");
  if (f.feather < 0.0) throw FlagError("--feather must be non-negative");
  const auto ck = training::load_checkpoint(f.checkpoint);
  auto model = training::model_from_checkpoint(ck);
  const int res = model.config().resolution;
  const Image src = read_png(f.source);
  const Image drv = read_png(f.driving);
  for (const Image* img : {&src, &drv}) {
    if (img->height() != res || img->width() != res) {
      throw ShapeError("input is " + std::to_string(img->width()) + "x" + std::to_string(img->height()) +
                       " but the checkpoint expects " + std::to_string(res) + "x" + std::to_string(res));
    }
  }
  torch::NoGradGuard no_grad;
  const auto S = to_tensor(src);
  const auto D = to_tensor(drv);
  torch::Tensor result;
  if (f.op == "exp") result = editing::transfer_expression(model, S, D);
  else if (f.op == "pose") result = editing::transfer_pose(model, S, D);
  else {
    // Same as running `exp`, saving the PNG, then running `pose` on it.
    const auto intermediate = to_tensor(quantize8(to_image(editing::transfer_expression(model, S, D))));
    result = editing::transfer_pose(model, intermediate, D);
  }
  Image edited = quantize8(to_image(result));

  if (!f.full_frame.empty()) {
    const Image frame = read_png(f.full_frame);
    editing::CropBox box = f.box.empty() ? editing::CropBox{0, 0, frame.width(), frame.height()} : parse_box(f.box);
    if (box.width != res || box.height != res) {
      auto resized = torch::nn::functional::interpolate(
          to_tensor(edited), torch::nn::functional::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{box.height, box.width})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
      edited = quantize8(to_image(resized));
    }
    edited = quantize8(editing::paste_back(frame, box, edited, f.feather));
  }
  const fs::path out_path(f.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_png(f.out, edited);
  out << "wrote " << f.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose/expression disentangled face reenactment on a synthetic toy-face benchmark", "reenact"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate-dataset", "Render a toy-face dataset with a manifest");
  gen->add_option("--out", f.out, "Output directory")->required();
  gen->add_option("--identities", f.identities, "Number of identities (one sequence each)")->required();
  gen->add_option("--frames", f.frames, "Frames per identity")->required();
  gen->add_option("--seed", f.seed, "Dataset seed");
  gen->add_option("--resolution", f.resolution, "Image side in pixels");

  auto* pre = app.add_subcommand("pretrain-probes", "Train and freeze the expression/pose/identity probes");
  pre->add_option("--config", f.config, "Run config JSON");
  pre->add_option("--out", f.out, "Output directory (overrides out_dir)");

  auto* train = app.add_subcommand("train", "Two-stage training");
  train->add_option("--config", f.config, "Run config JSON");
  train->add_option("--out", f.out, "Output directory (overrides out_dir)");
  train->add_option("--stage", f.stage, "1, 2 or all");

  auto* ev = app.add_subcommand("evaluate", "Disentanglement report");
  ev->add_option("--config", f.config, "Run config JSON");
  ev->add_option("--out", f.out, "Output directory (overrides out_dir)");
  ev->add_option("--mode", f.mode, "expression_edit, pose_edit or both");
  ev->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: latest stage in out_dir)");
  ev->add_option("--dataset", f.dataset, "Evaluation manifest (overrides eval_dataset)");
  ev->add_option("--pairs", f.pairs, "Number of source/driving pairs");
  ev->add_option("--seed", f.seed, "Pair sampling seed");
  ev->add_flag("--csv", f.csv, "Also write per-pair rows as CSV");

  auto* edit = app.add_subcommand("edit", "Transfer expression and/or pose from a driving image");
  edit->add_option("--source", f.source, "Source PNG")->required();
  edit->add_option("--driving", f.driving, "Driving PNG")->required();
  edit->add_option("--checkpoint", f.checkpoint, "Trained checkpoint")->required();
  edit->add_option("--out", f.out, "Output PNG")->required();
  edit->add_option("--op", f.op, "exp, pose or both");
  edit->add_option("--full-frame", f.full_frame, "Frame PNG to paste the edited crop into");
  edit->add_option("--box", f.box, "Crop box x,y,width,height inside the full frame");
  edit->add_option("--feather", f.feather, "Paste-back feather sigma in pixels");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitBadFlags;
  }

  try {
    if (gen->parsed()) return cmd_generate(f, out);
    if (pre->parsed()) return cmd_pretrain(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (ev->parsed()) return cmd_evaluate(f, out);
    if (edit->parsed()) return cmd_edit(f, out);
    return kExitBadFlags;
  } catch (const FlagError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadFlags;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadFlags;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CorruptionError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NonFiniteLossError& e) {
    err << "training halted: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const ShapeError& e) {
    err << "resolution mismatch: " << e.what() << '\n';
    return kExitResolution;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace reenact::cli

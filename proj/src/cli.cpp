// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "aerosplat/attention.hpp"
#include "aerosplat/errors.hpp"
#include "aerosplat/fixer.hpp"
#include "aerosplat/io.hpp"
#include "aerosplat/pipeline.hpp"
#include "aerosplat/synthetic.hpp"
#include "aerosplat/trajectories.hpp"

namespace aerosplat {

namespace fs = std::filesystem;

namespace {

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

void write_loss_csv(const fs::path& path, const std::vector<double>& curve) {
  std::ostringstream os;
  os << "iteration,loss\n" << std::setprecision(10);
  for (std::size_t i = 0; i < curve.size(); ++i) os << i << ',' << curve[i] << '\n';
  write_file(path, os.str());
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsSnapshot>& metrics) {
  std::ostringstream os;
  os << "stage,mean_psnr,mean_ssim";
  if (!metrics.empty()) {
    for (const auto& [name, v] : metrics.front().plugin_means) os << ',' << name;
  }
  os << '\n';
  for (const MetricsSnapshot& m : metrics) {
    os << m.stage << ',' << fmt_metric(m.mean_psnr) << ',' << fmt_metric(m.mean_ssim);
    for (const auto& [name, v] : m.plugin_means) os << ',' << fmt_metric(v);
    os << '\n';
  }
  write_file(path, os.str());
}

std::string view_name(int id) {
  std::ostringstream os;
  os << "view_" << std::setw(4) << std::setfill('0') << id << ".png";
  return os.str();
}

struct CommonOptions {
  std::uint64_t seed = 0;
  int threads = 0;
};

// --- synth --------------------------------------------------------------------

struct SynthOptions {
  std::string out;
  int width = 64;
  int height = 48;
};

int run_synth(const SynthOptions& o, const CommonOptions& c, std::ostream& out) {
  SyntheticOptions so;
  so.seed = c.seed;
  so.width = o.width;
  so.height = o.height;
  so.render.threads = c.threads;
  const SyntheticScene synth = make_synthetic_scene(so);
  DatasetBundle b;
  b.cameras[1] = synth.aerial.front().intrinsics;
  std::vector<Image> images;
  int id = 1;
  auto add = [&](const Camera& cam, const Image& img, const std::string& prefix, int i,
                 Split split) {
    std::ostringstream name;
    name << prefix << '_' << std::setw(3) << std::setfill('0') << i << ".png";
    b.images.push_back({id++, 1, name.str(), cam.pose});
    b.splits[name.str()] = split;
    images.push_back(img);
  };
  for (std::size_t i = 0; i < synth.aerial.size(); ++i) {
    add(synth.aerial[i], synth.aerial_images[i], "aerial", static_cast<int>(i),
        Split::kTrainAerial);
  }
  for (std::size_t i = 0; i < synth.ground.size(); ++i) {
    add(synth.ground[i], synth.ground_images[i], "ground", static_cast<int>(i),
        Split::kEvalGround);
  }
  b.points = synth.points;
  write_dataset(o.out, b, images);
  save_checkpoint(synth.hidden, fs::path(o.out) / "hidden.ckpt");
  out << "wrote " << synth.aerial.size() << " aerial and " << synth.ground.size()
      << " ground views, " << synth.points.size() << " points, " << synth.hidden.size()
      << " hidden Gaussians to " << o.out << '\n';
  return kExitOk;
}

// --- train / refine -------------------------------------------------------------

struct RefineOptions {
  std::string data;
  std::string out;
  std::string strategy = "stochastic-scaled-forward";
  std::string schedule = "0.9,0.7,0.5,0.3,0.1";
  std::string fixer = "identity";
  std::string fixer_cmd;
  std::string oracle_scene;
  double blur_sigma = 1.0;
  double filter_tau = 0.3;
  std::string filter_action = "discard";
  double novel_share_cap = 0.15;
  int initial_iterations = 7000;
  int stage_iterations = 2000;
  std::vector<std::string> metric_plugins;
};

std::unique_ptr<Fixer> make_fixer(const RefineOptions& o, const RenderSettings& render) {
  if (o.fixer == "identity") return std::make_unique<IdentityFixer>();
  if (o.fixer == "blur") return std::make_unique<BlurFixer>(o.blur_sigma);
  if (o.fixer == "oracle") {
    if (o.oracle_scene.empty()) throw DomainError("--fixer oracle requires --oracle-scene");
    return std::make_unique<OracleFixer>(load_checkpoint(o.oracle_scene), render);
  }
  if (o.fixer == "extern") {
    if (o.fixer_cmd.empty()) throw DomainError("--fixer extern requires --fixer-cmd");
    return std::make_unique<ExternalFixer>(o.fixer_cmd, fs::path(o.out) / "extern_scratch");
  }
  throw DomainError("unknown fixer '" + o.fixer + "'");
}

int run_refine(const RefineOptions& o, const CommonOptions& c, std::ostream& out,
               bool train_only) {
  const DatasetBundle bundle = load_dataset(o.data);
  InitOptions init;
  init.seed = c.seed;
  ProgressiveInput input = dataset_progressive_input(bundle, init);

  PipelineConfig cfg;
  cfg.seed = c.seed;
  cfg.initial_iterations = o.initial_iterations;
  cfg.stage_iterations = o.stage_iterations;
  cfg.schedule = train_only ? std::vector<double>{} : parse_altitude_schedule(o.schedule);
  cfg.trajectory.strategy = parse_strategy(o.strategy);
  cfg.filter.tau = o.filter_tau;
  if (o.filter_action == "discard") {
    cfg.filter.action = FilterAction::kDiscard;
  } else if (o.filter_action == "downweight") {
    cfg.filter.action = FilterAction::kDownweight;
  } else {
    throw DomainError("unknown filter action '" + o.filter_action + "'");
  }
  cfg.train.novel_share_cap = o.novel_share_cap;
  cfg.train.render.threads = c.threads;
  cfg.metric_plugins = o.metric_plugins;
  cfg.plugin_scratch = (fs::path(o.out) / "plugin_scratch").string();
  const std::unique_ptr<Fixer> fixer =
      train_only ? std::make_unique<IdentityFixer>() : make_fixer(o, cfg.train.render);

  out << "training on " << input.views.size() << " views, evaluating on " << input.eval.size()
      << " views, " << input.scene.size() << " initial Gaussians\n";
  const ProgressiveResult r = run_progressive(cfg, std::move(input), *fixer);

  fs::create_directories(o.out);
  save_checkpoint(r.scene, fs::path(o.out) / "scene.ckpt");
  write_loss_csv(fs::path(o.out) / "loss.csv", r.loss_curve);
  write_metrics_csv(fs::path(o.out) / "metrics.csv", r.metrics);
  for (const RefinementStage& s : r.stages) {
    const fs::path dir = fs::path(o.out) / ("stage_" + std::to_string(s.stage));
    fs::create_directories(dir);
    write_file(dir / "record.json", stage_record_to_json(s));
    for (std::size_t i = 0; i < s.views.size(); ++i) {
      const std::string name = view_name(s.views[i].id);
      if (!s.noisy[i].empty()) write_image(dir / ("noisy_" + name), s.noisy[i]);
      if (!s.fixed[i].empty()) write_image(dir / ("fixed_" + name), s.fixed[i]);
    }
    std::size_t accepted = 0;
    for (const ViewRecord& v : s.views) accepted += v.accepted;
    out << "stage " << s.stage << " (altitude " << s.altitude_factor << "): " << accepted
        << '/' << s.views.size() << " views accepted\n";
  }
  out << "stage,mean_psnr,mean_ssim\n";
  for (const MetricsSnapshot& m : r.metrics) {
    out << m.stage << ',' << fmt_metric(m.mean_psnr) << ',' << fmt_metric(m.mean_ssim) << '\n';
  }
  return kExitOk;
}

// --- render -------------------------------------------------------------------

struct RenderCliOptions {
  std::string scene;
  std::string trajectory;
  std::string data;
  std::string out;
};

int run_render(const RenderCliOptions& o, const CommonOptions& c, std::ostream& out) {
  const GaussianScene scene = load_checkpoint(o.scene);
  RenderSettings settings;
  settings.threads = c.threads;
  std::vector<std::pair<int, Camera>> cams;
  if (!o.trajectory.empty()) {
    std::ifstream in(o.trajectory);
    if (!in) throw std::runtime_error("cannot open " + o.trajectory);
    for (const PlannedView& v : read_trajectory(in).views) {
      cams.emplace_back(v.id, Camera{v.intrinsics, v.pose});
    }
  } else if (!o.data.empty()) {
    const DatasetBundle b = load_dataset(o.data);
    for (const ColmapImage& img : b.images) {
      cams.emplace_back(img.image_id, Camera{b.cameras.at(img.camera_id), img.pose});
    }
  } else {
    throw DomainError("render needs --trajectory or --data");
  }
  fs::create_directories(o.out);
  for (const auto& [id, cam] : cams) {
    write_image(fs::path(o.out) / view_name(id), render(scene, cam, settings).image);
  }
  out << "rendered " << cams.size() << " views to " << o.out << '\n';
  return kExitOk;
}

// --- trajectory ---------------------------------------------------------------

struct TrajectoryCliOptions {
  std::string data;
  std::string scene;
  std::string out;
  std::string strategy = "stochastic-scaled-forward";
  double factor = 0.9;
  int stage = 1;
  double yaw_std = 2.0;
  double pitch_std = 2.0;
  int samples = 0;
  double ground = std::numeric_limits<double>::quiet_NaN();
};

int run_trajectory(const TrajectoryCliOptions& o, const CommonOptions& c, std::ostream& out) {
  const DatasetBundle b = load_dataset(o.data);
  std::vector<BaseCamera> base;
  for (const ColmapImage& img : b.images) {
    if (b.split_of(img.name) != Split::kTrainAerial) continue;
    base.push_back({img.image_id, Camera{b.cameras.at(img.camera_id), img.pose}});
  }
  std::vector<Vec3> positions;
  for (const ColoredPoint& p : b.points) positions.push_back(p.position);
  if (positions.empty()) throw DomainError("dataset has no points");
  Vec3 centroid = Vec3::Zero();
  if (!o.scene.empty()) {
    centroid = load_checkpoint(o.scene).centroid();
  } else {
    for (const Vec3& p : positions) centroid += p;
    centroid /= static_cast<double>(positions.size());
  }
  const double ground = std::isnan(o.ground) ? ground_height(positions) : o.ground;
  TrajectoryParams params;
  params.strategy = parse_strategy(o.strategy);
  params.altitude_factor = o.factor;
  params.yaw_std_deg = o.yaw_std;
  params.pitch_std_deg = o.pitch_std;
  params.sample_count = o.samples;
  params.seed = c.seed;
  const TrajectoryPlan plan = generate(params, base, centroid, ground, o.stage);
  std::ofstream f(o.out);
  write_trajectory(f, plan);
  if (!f) throw std::runtime_error("cannot write " + o.out);
  out << "wrote " << plan.views.size() << " views to " << o.out;
  if (!plan.skipped.empty()) out << " (" << plan.skipped.size() << " cameras skipped)";
  out << '\n';
  return kExitOk;
}

// --- eval ---------------------------------------------------------------------

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string csv;
  std::vector<std::string> metric_plugins;
};

int run_eval(const EvalOptions& o, std::ostream& out) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(o.pred)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext != ".png" && ext != ".ppm" && ext != ".pgm" && ext != ".pnm") continue;
    if (fs::exists(fs::path(o.gt) / entry.path().filename())) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DomainError("eval: no image pairs with matching names");

  std::ostringstream csv;
  csv << "name,psnr,ssim";
  for (const std::string& p : o.metric_plugins) csv << ',' << p;
  csv << '\n';
  out << std::left << std::setw(28) << "image" << std::right << std::setw(10) << "PSNR"
      << std::setw(10) << "SSIM";
  for (const std::string& p : o.metric_plugins) out << std::setw(14) << fs::path(p).filename().string();
  out << '\n';
  double sum_psnr = 0.0, sum_ssim = 0.0;
  for (const std::string& name : names) {
    const Image pred = read_image(fs::path(o.pred) / name);
    const Image gt = read_image(fs::path(o.gt) / name);
    const double p = psnr(pred, gt);
    const double s = ssim(pred, gt);
    sum_psnr += p;
    sum_ssim += s;
    csv << name << ',' << fmt_metric(p) << ',' << fmt_metric(s);
    out << std::left << std::setw(28) << name << std::right << std::setw(10) << fmt_metric(p)
        << std::setw(10) << fmt_metric(s);
    for (const std::string& plugin : o.metric_plugins) {
      const double v = run_metric_plugin(plugin, pred, gt, "");
      csv << ',' << fmt_metric(v);
      out << std::setw(14) << fmt_metric(v);
    }
    csv << '\n';
    out << '\n';
  }
  const double n = static_cast<double>(names.size());
  out << std::left << std::setw(28) << "mean" << std::right << std::setw(10)
      << fmt_metric(sum_psnr / n) << std::setw(10) << fmt_metric(sum_ssim / n) << '\n';
  if (!o.csv.empty()) write_file(o.csv, csv.str());
  return kExitOk;
}

// --- mask-debug -----------------------------------------------------------------

struct MaskOptions {
  std::string data;
  int novel = 0;
  int reference = 0;
  int rows = 16;
  int cols = 16;
  int token = -1;
  std::vector<double> pixel;
  double band = 0.0;
  int dilation = 1;
  std::string out;
};

int run_mask_debug(const MaskOptions& o, const CommonOptions& c, std::ostream& out) {
  const DatasetBundle b = load_dataset(o.data);
  auto find = [&](int id) {
    for (const ColmapImage& img : b.images) {
      if (img.image_id == id) return Camera{b.cameras.at(img.camera_id), img.pose};
    }
    throw DomainError("mask-debug: unknown image id " + std::to_string(id));
  };
  const Camera novel = find(o.novel);
  const Camera reference = find(o.reference);
  TokenGrid grid;
  grid.rows = o.rows;
  grid.cols = o.cols;
  if (o.rows <= 0 || o.cols <= 0 || novel.intrinsics.width % o.cols != 0 ||
      novel.intrinsics.height % o.rows != 0) {
    throw DomainError("mask-debug: the token grid must tile the image exactly");
  }
  grid.patch_w = novel.intrinsics.width / o.cols;
  grid.patch_h = novel.intrinsics.height / o.rows;
  EpipolarMaskOptions opt;
  opt.band_px = o.band;
  opt.dilation_radius = o.dilation;
  opt.threads = c.threads;
  const EpipolarMask mask = build_epipolar_mask(novel, reference, grid, opt);
  int token = o.token;
  if (o.pixel.size() == 2) token = grid.token_at(Vec2(o.pixel[0], o.pixel[1]));
  if (token < 0) token = grid.size() / 2 + grid.cols / 2;
  if (token >= grid.size()) throw DomainError("mask-debug: token index out of range");
  out << "tokens " << grid.size() << ", band " << mask.band_px << " px, dilation "
      << mask.dilation_radius << '\n'
      << "mask density " << std::setprecision(4)
      << static_cast<double>(mask.bits.count()) / (static_cast<double>(grid.size()) * grid.size())
      << ", misses " << mask.misses.size() << ", epipole fallbacks "
      << mask.epipole_fallbacks.size() << '\n'
      << "token " << token << " attends to " << mask.bits.count_row(token)
      << " reference tokens\n";
  if (!o.out.empty()) {
    write_pgm_bytes(o.out, grid.cols, grid.rows, mask_row_image(mask, token));
    out << "wrote " << o.out << '\n';
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Progressive aerial-to-ground Gaussian splatting", "aerosplat"};
  app.require_subcommand(1);
  CommonOptions common;
  std::function<int()> action;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--threads", common.threads, "Worker threads (0: all cores)");
  };

  SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "Generate the synthetic aerial/ground dataset");
  s_synth->add_option("--out", synth.out, "Output dataset directory")->required();
  s_synth->add_option("--width", synth.width, "Image width");
  s_synth->add_option("--height", synth.height, "Image height");
  add_common(s_synth);
  s_synth->callback([&] { action = [&] { return run_synth(synth, common, out); }; });

  RefineOptions train;
  auto* s_train = app.add_subcommand("train", "Train splats on the train-aerial views");
  s_train->add_option("--data", train.data, "Dataset directory")->required();
  s_train->add_option("--out", train.out, "Output directory")->required();
  s_train->add_option("--iterations", train.initial_iterations, "Optimizer iterations");
  add_common(s_train);
  s_train->callback([&] { action = [&] { return run_refine(train, common, out, true); }; });

  RefineOptions refine;
  auto* s_refine = app.add_subcommand("refine", "Progressive train-render-fix-retrain loop");
  s_refine->add_option("--data", refine.data, "Dataset directory")->required();
  s_refine->add_option("--out", refine.out, "Output directory")->required();
  s_refine->add_option("--strategy", refine.strategy, "Trajectory strategy");
  s_refine->add_option("--schedule", refine.schedule, "Altitude factors, e.g. 0.9,0.7,0.5");
  s_refine->add_option("--fixer", refine.fixer, "identity|blur|oracle|extern");
  s_refine->add_option("--fixer-cmd", refine.fixer_cmd, "External fixer executable");
  s_refine->add_option("--oracle-scene", refine.oracle_scene, "Hidden scene checkpoint");
  s_refine->add_option("--blur-sigma", refine.blur_sigma, "Blur fixer sigma (pixels)");
  s_refine->add_option("--filter-tau", refine.filter_tau, "DSSIM threshold in [0, 0.5]");
  s_refine->add_option("--filter-action", refine.filter_action, "discard|downweight");
  s_refine->add_option("--novel-share-cap", refine.novel_share_cap,
                       "Max sampling share of novel views in (0, 1]; 1 disables");
  s_refine->add_option("--initial-iterations", refine.initial_iterations, "Initial iterations");
  s_refine->add_option("--stage-iterations", refine.stage_iterations, "Iterations per stage");
  s_refine->add_option("--metric-plugin", refine.metric_plugins, "Metric executable");
  add_common(s_refine);
  s_refine->callback([&] { action = [&] { return run_refine(refine, common, out, false); }; });

  RenderCliOptions rend;
  auto* s_render = app.add_subcommand("render", "Render a checkpoint at given cameras");
  s_render->add_option("--scene", rend.scene, "Scene checkpoint")->required();
  s_render->add_option("--trajectory", rend.trajectory, "Trajectory file");
  s_render->add_option("--data", rend.data, "Dataset directory (render its cameras)");
  s_render->add_option("--out", rend.out, "Output directory")->required();
  add_common(s_render);
  s_render->callback([&] { action = [&] { return run_render(rend, common, out); }; });

  TrajectoryCliOptions traj;
  auto* s_traj = app.add_subcommand("trajectory", "Generate a novel camera plan");
  s_traj->add_option("--data", traj.data, "Dataset directory")->required();
  s_traj->add_option("--scene", traj.scene, "Checkpoint whose centroid is targeted");
  s_traj->add_option("--out", traj.out, "Output trajectory file")->required();
  s_traj->add_option("--strategy", traj.strategy, "Trajectory strategy");
  s_traj->add_option("--factor", traj.factor, "Altitude factor in (0, 1]");
  s_traj->add_option("--stage", traj.stage, "Stage index written to the plan");
  s_traj->add_option("--yaw-std", traj.yaw_std, "Yaw noise std (degrees)");
  s_traj->add_option("--pitch-std", traj.pitch_std, "Pitch noise std (degrees)");
  s_traj->add_option("--samples", traj.samples, "Elliptical sample count");
  s_traj->add_option("--ground", traj.ground, "Ground height (default: 5th percentile)");
  add_common(s_traj);
  s_traj->callback([&] { action = [&] { return run_trajectory(traj, common, out); }; });

  EvalOptions ev;
  auto* s_eval = app.add_subcommand("eval", "PSNR/SSIM table for render/GT directories");
  s_eval->add_option("--pred", ev.pred, "Directory of renders")->required();
  s_eval->add_option("--gt", ev.gt, "Directory of ground-truth images")->required();
  s_eval->add_option("--csv", ev.csv, "Write the table as CSV");
  s_eval->add_option("--metric-plugin", ev.metric_plugins, "Metric executable");
  s_eval->callback([&] { action = [&] { return run_eval(ev, out); }; });

  MaskOptions mask;
  auto* s_mask = app.add_subcommand("mask-debug", "Inspect an epipolar attention mask");
  s_mask->add_option("--data", mask.data, "Dataset directory")->required();
  s_mask->add_option("--novel", mask.novel, "Novel image id")->required();
  s_mask->add_option("--reference", mask.reference, "Reference image id")->required();
  s_mask->add_option("--rows", mask.rows, "Token rows");
  s_mask->add_option("--cols", mask.cols, "Token columns");
  s_mask->add_option("--token", mask.token, "Novel token index");
  s_mask->add_option("--pixel", mask.pixel, "Novel pixel (x y) selecting the token")
      ->expected(2);
  s_mask->add_option("--band", mask.band, "Band half-width in pixels (0: half diagonal)");
  s_mask->add_option("--dilation", mask.dilation, "Square dilation radius");
  s_mask->add_option("--out", mask.out, "PGM image of the token's mask row");
  add_common(s_mask);
  s_mask->callback([&] { action = [&] { return run_mask_debug(mask, common, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Help for a subcommand is raised from within the subcommand.
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      for (const CLI::App* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  if (!action) {
    err << app.help();
    return kExitUsage;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace aerosplat

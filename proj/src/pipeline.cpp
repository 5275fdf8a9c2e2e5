// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "aerosplat/errors.hpp"
#include "aerosplat/parallel.hpp"
#include "aerosplat/process.hpp"

namespace aerosplat {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TrainResult train_splats(GaussianScene& scene, std::span<const TrainingView> views,
                         int iterations, const TrainConfig& config,
                         AdamOptimizer* optimizer) {
  if (iterations < 0) throw DomainError("train_splats: negative iteration count");
  TrainResult result;
  if (iterations == 0) return result;
  config.validate();

  double original_mass = 0.0, novel_mass = 0.0;
  for (const TrainingView& v : views) {
    if (!(v.weight >= 0.0) || !std::isfinite(v.weight)) {
      throw DomainError("train_splats: view weights must be finite and non-negative");
    }
    (v.stage == 0 ? original_mass : novel_mass) += v.weight;
  }
  double novel_scale = 1.0;
  const double cap = config.novel_share_cap;
  if (cap < 1.0 && original_mass > 0.0 && novel_mass > cap / (1.0 - cap) * original_mass) {
    novel_scale = cap / (1.0 - cap) * original_mass / novel_mass;
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const TrainingView& v : views) {
    total += v.stage == 0 ? v.weight : v.weight * novel_scale;
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw DomainError("train_splats: no view with positive weight");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, total);
  std::optional<AdamOptimizer> local;
  if (!optimizer) optimizer = &local.emplace(scene, config.adam);
  AdamOptimizer& adam = *optimizer;
  result.loss_curve.reserve(static_cast<std::size_t>(iterations));

  for (int it = 0; it < iterations; ++it) {
    const double u = uniform(rng);
    std::size_t pick = std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                       cumulative.begin();
    // u == total can only occur through rounding; take the last positive view.
    while (pick >= views.size() || views[pick].weight == 0.0) {
      pick = pick >= views.size() ? views.size() - 1 : pick - 1;
    }
    const TrainingView& view = views[pick];
    GradientResult g;
    try {
      g = render_with_gradients(scene, view.camera, view.image, config.loss, config.render,
                                view.appearance_id);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("training diverged: ") + e.what(),
                           static_cast<std::size_t>(it));
    }
    result.loss_curve.push_back(g.loss.total);
    adam.step(scene, g.gradient);

    if (config.prune_interval > 0 && (it + 1) % config.prune_interval == 0) {
      std::size_t survivors = 0;
      for (const auto& p : scene.gaussians) survivors += p.opacity() >= config.prune_threshold;
      if (survivors > 0 && survivors < scene.size()) {
        const std::size_t before = scene.size();
        const std::vector<std::size_t> kept = prune_by_opacity(scene, config.prune_threshold);
        adam.compact(scene, kept);
        result.pruned += before - scene.size();
      }
    }
  }
  return result;
}

void TrainConfig::validate() const {
  loss.validate();
  render.validate();
  adam.lr.validate();
  if (!(prune_threshold >= 0.0 && prune_threshold < 1.0)) {
    throw DomainError("train: prune threshold must be in [0, 1)");
  }
  if (prune_interval < 0) throw DomainError("train: prune interval must be >= 0");
  if (!(novel_share_cap > 0.0 && novel_share_cap <= 1.0)) {
    throw DomainError("train: novel share cap must be in (0, 1]");
  }
}

std::size_t reference_for(const CameraPose& novel, std::span<const TrainingView> views) {
  if (views.empty()) throw DomainError("reference_for: empty training set");
  std::vector<double> angles, dists;
  angles.reserve(views.size());
  dists.reserve(views.size());
  for (const TrainingView& v : views) {
    angles.push_back(rotation_angle_between(novel.rotation, v.camera.pose.rotation));
    dists.push_back((novel.center - v.camera.pose.center).norm());
  }
  double ma = median(angles);
  double md = median(dists);
  if (!(ma > 0.0)) ma = 1.0;
  if (!(md > 0.0)) md = 1.0;
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const double score = angles[i] / ma + dists[i] / md;
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

void ViewQualityFilter::validate() const {
  if (!(tau >= 0.0 && tau <= 0.5)) throw DomainError("filter: tau must be in [0, 0.5]");
  if (!(weight_floor > 0.0 && weight_floor <= 1.0)) {
    throw DomainError("filter: weight floor must be in (0, 1]");
  }
}

FilterVerdict ViewQualityFilter::judge(double dssim) const {
  if (!std::isfinite(dssim)) return {false, 0.0};
  if (action == FilterAction::kDiscard) {
    return dssim < tau ? FilterVerdict{true, 1.0} : FilterVerdict{false, 0.0};
  }
  if (tau == 0.0) return {false, 0.0};
  return {true, std::max(weight_floor, 1.0 - dssim / tau)};
}

RefinementStage run_stage(const GaussianScene& scene, const StageConfig& config,
                          const Fixer& fixer, std::vector<TrainingView>& views) {
  config.filter.validate();
  config.render.validate();
  std::vector<BaseCamera> base;
  std::vector<TrainingView> originals;
  for (const TrainingView& v : views) {
    if (v.stage != 0) continue;
    base.push_back({v.id, v.camera});
    originals.push_back(v);
  }
  if (base.empty()) throw DomainError("run_stage: no original views to derive a plan from");

  RefinementStage stage;
  stage.stage = config.stage;
  stage.altitude_factor = config.trajectory.altitude_factor;
  stage.strategy = config.trajectory.strategy;
  const TrajectoryPlan plan =
      generate(config.trajectory, base, scene.centroid(), config.ground_height, config.stage);
  stage.skipped = plan.skipped;

  const std::size_t n = plan.views.size();
  stage.views.resize(n);
  stage.noisy.resize(n);
  stage.fixed.resize(n);
  const FixerCapabilities caps = fixer.capabilities();
  RenderSettings inner = config.render;
  const int outer_threads = caps.thread_safe ? config.render.threads : 1;
  if (resolve_thread_count(outer_threads) > 1) inner.threads = 1;

  parallel_for_workers(n, outer_threads, [&](int, std::size_t i) {
    const PlannedView& pv = plan.views[i];
    ViewRecord& rec = stage.views[i];
    rec.id = pv.id;
    rec.source_id = pv.source_id;
    rec.pose = pv.pose;
    rec.intrinsics = pv.intrinsics;
    const Camera cam{pv.intrinsics, pv.pose};
    rec.reference_index = reference_for(pv.pose, originals);
    const TrainingView& ref = originals[rec.reference_index];
    rec.reference_view_id = ref.id;
    stage.noisy[i] = render(scene, cam, inner).image;
    FixRequest req;
    req.noisy = &stage.noisy[i];
    req.reference = &ref.image;
    req.novel = cam;
    req.reference_camera = ref.camera;
    req.view_id = config.stage * 100000 + pv.id;
    try {
      stage.fixed[i] = run_fixer(fixer, req);
    } catch (const std::exception& e) {
      rec.error = e.what();
      return;
    }
    if (stage.fixed[i].same_shape(ref.image)) {
      rec.dssim = dssim(stage.fixed[i], ref.image);
    } else {
      rec.dssim = std::numeric_limits<double>::infinity();
    }
    const FilterVerdict verdict = config.filter.judge(rec.dssim);
    rec.accepted = verdict.accepted;
    rec.weight = verdict.weight;
  });

  int next_id = 0;
  for (const TrainingView& v : views) next_id = std::max(next_id, v.id + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const ViewRecord& rec = stage.views[i];
    if (!rec.accepted) continue;
    TrainingView v;
    v.id = next_id++;
    v.camera = Camera{rec.intrinsics, rec.pose};
    v.image = stage.fixed[i];
    v.weight = rec.weight;
    v.stage = config.stage;
    views.push_back(std::move(v));
  }
  return stage;
}

void PipelineConfig::validate() const {
  if (initial_iterations < 0 || stage_iterations < 0) {
    throw DomainError("pipeline: iteration counts must be >= 0");
  }
  altitude_schedule(schedule);
  trajectory.validate();
  filter.validate();
  train.validate();
}

MetricsSnapshot evaluate(const GaussianScene& scene, std::span<const EvalView> eval,
                         const RenderSettings& settings, int stage,
                         const std::vector<std::string>& plugins,
                         const std::string& plugin_scratch) {
  MetricsSnapshot m;
  m.stage = stage;
  std::vector<double> plugin_sum(plugins.size(), 0.0);
  for (const EvalView& e : eval) {
    const Image img = render(scene, e.camera, settings).image;
    m.psnr.push_back(psnr(img, e.image));
    m.ssim.push_back(ssim(img, e.image));
    for (std::size_t p = 0; p < plugins.size(); ++p) {
      plugin_sum[p] += run_metric_plugin(plugins[p], img, e.image, plugin_scratch);
    }
  }
  if (!eval.empty()) {
    const double n = static_cast<double>(eval.size());
    for (double v : m.psnr) m.mean_psnr += v / n;
    for (double v : m.ssim) m.mean_ssim += v / n;
    for (std::size_t p = 0; p < plugins.size(); ++p) {
      m.plugin_means.emplace_back(plugins[p], plugin_sum[p] / n);
    }
  }
  return m;
}

ProgressiveResult run_progressive(const PipelineConfig& config, ProgressiveInput input,
                                  const Fixer& fixer) {
  config.validate();
  ProgressiveResult result;
  result.scene = std::move(input.scene);
  result.views = std::move(input.views);

  TrainConfig train = config.train;
  train.seed = config.seed;
  // One optimizer for the whole run: restarting the moment estimates at every
  // stage perturbs a converged scene.
  AdamOptimizer adam(result.scene, config.train.adam);
  TrainResult tr =
      train_splats(result.scene, result.views, config.initial_iterations, train, &adam);
  result.loss_curve = std::move(tr.loss_curve);
  result.metrics.push_back(evaluate(result.scene, input.eval, config.train.render, 0,
                                    config.metric_plugins, config.plugin_scratch));

  for (std::size_t s = 0; s < config.schedule.size(); ++s) {
    const int stage_index = static_cast<int>(s) + 1;
    StageConfig sc;
    sc.stage = stage_index;
    sc.trajectory = config.trajectory;
    sc.trajectory.altitude_factor = config.schedule[s];
    sc.trajectory.seed = mix_seed(config.seed, 2 * s + 1);
    sc.ground_height = input.ground_height;
    sc.filter = config.filter;
    sc.render = config.train.render;
    RefinementStage stage = run_stage(result.scene, sc, fixer, result.views);

    train.seed = mix_seed(config.seed, 2 * s + 2);
    tr = train_splats(result.scene, result.views, config.stage_iterations, train, &adam);
    result.loss_curve.insert(result.loss_curve.end(), tr.loss_curve.begin(),
                             tr.loss_curve.end());
    stage.metrics = evaluate(result.scene, input.eval, config.train.render, stage_index,
                             config.metric_plugins, config.plugin_scratch);
    result.metrics.push_back(*stage.metrics);
    result.stages.push_back(std::move(stage));
  }
  return result;
}

double run_metric_plugin(const std::string& command, const Image& prediction,
                         const Image& target, const std::string& scratch_dir) {
  const std::filesystem::path dir =
      scratch_dir.empty() ? std::filesystem::temp_directory_path() / "aerosplat_metrics"
                          : std::filesystem::path(scratch_dir);
  std::filesystem::create_directories(dir);
  const auto pred_path = dir / "prediction.png";
  const auto target_path = dir / "target.png";
  write_image(pred_path, prediction);
  write_image(target_path, target);
  const ProcessResult r =
      run_process({command, pred_path.string(), target_path.string()}, true);
  if (r.exit_code != 0) {
    throw FixerError("metric plugin '" + command + "' exited with status " +
                     std::to_string(r.exit_code));
  }
  std::istringstream in(r.captured);
  double v = 0.0;
  if (!(in >> v)) throw FixerError("metric plugin '" + command + "' printed no number");
  return v;
}

}  // namespace aerosplat

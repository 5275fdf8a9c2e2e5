// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Progressive refinement: train on aerial views, render lower-altitude novel
// views, restore them with a fixer, filter against reference views, add the
// survivors to the training set and retrain.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aerosplat/fixer.hpp"
#include "aerosplat/losses.hpp"
#include "aerosplat/optimizer.hpp"
#include "aerosplat/renderer.hpp"
#include "aerosplat/scene.hpp"
#include "aerosplat/trajectories.hpp"

namespace aerosplat {

struct TrainingView {
  int id = 0;
  Camera camera;
  Image image;
  double weight = 1.0;
  // Registered appearance entry; novel views carry none.
  std::optional<int> appearance_id;
  // 0 for the original captures, otherwise the refinement stage (1-based)
  // that produced the view.
  int stage = 0;
};

struct TrainConfig {
  LossConfig loss;
  AdamConfig adam;
  RenderSettings render;
  double prune_threshold = 0.005;
  int prune_interval = 500;  // 0 disables pruning
  // Upper bound on the fraction of sampling mass held by novel (stage > 0)
  // views; their weights are scaled down together when exceeded. 1 disables.
  double novel_share_cap = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  std::vector<double> loss_curve;  // total loss per iteration
  std::size_t pruned = 0;
};

// Adam on splat_loss with views sampled proportionally to their weights.
// `optimizer`, when given, carries moment state across calls (it must match
// the scene's layout); otherwise a fresh optimizer is used.
// Throws DomainError when no view has positive weight (and iterations > 0),
// NumericalError carrying the iteration index on divergence.
TrainResult train_splats(GaussianScene& scene, std::span<const TrainingView> views,
                         int iterations, const TrainConfig& config,
                         AdamOptimizer* optimizer = nullptr);

// Index of the view closest to `novel`: rotation angle plus center distance,
// each divided by its median over the set (a zero median counts as 1).
std::size_t reference_for(const CameraPose& novel, std::span<const TrainingView> views);

enum class FilterAction : std::uint8_t { kDiscard, kDownweight };

struct FilterVerdict {
  bool accepted = false;
  double weight = 0.0;
};

struct ViewQualityFilter {
  double tau = 0.3;
  FilterAction action = FilterAction::kDiscard;
  double weight_floor = 0.1;

  void validate() const;
  // discard: accepted iff dssim < tau, weight 1.
  // downweight: weight max(floor, 1 - dssim / tau); tau = 0 discards all.
  FilterVerdict judge(double dssim) const;
};

struct MetricsSnapshot {
  int stage = 0;  // 0: after initial training
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<std::pair<std::string, double>> plugin_means;
};

struct ViewRecord {
  int id = 0;
  std::optional<int> source_id;
  CameraPose pose;
  CameraIntrinsics intrinsics;
  std::size_t reference_index = 0;
  int reference_view_id = 0;
  double dssim = 0.0;
  bool accepted = false;
  double weight = 0.0;
  std::string error;  // non-empty when the fixer failed and the view was skipped
};

struct RefinementStage {
  int stage = 0;  // 1-based
  double altitude_factor = 1.0;
  TrajectoryStrategy strategy = TrajectoryStrategy::kStochasticScaledForward;
  std::vector<ViewRecord> views;
  std::vector<TrajectoryIssue> skipped;
  std::optional<MetricsSnapshot> metrics;
  // Per-view images, parallel to `views`; empty entries for failed views.
  std::vector<Image> noisy;
  std::vector<Image> fixed;
};

struct StageConfig {
  int stage = 1;
  TrajectoryParams trajectory;
  double ground_height = 0.0;
  ViewQualityFilter filter;
  RenderSettings render;
};

// Renders the stage plan from `scene`, fixes every view, filters, and
// appends accepted views to `views`. Views whose fixer throws are recorded
// with an error and skipped.
RefinementStage run_stage(const GaussianScene& scene, const StageConfig& config,
                          const Fixer& fixer, std::vector<TrainingView>& views);

struct PipelineConfig {
  int initial_iterations = 7000;
  int stage_iterations = 2000;
  std::vector<double> schedule = default_altitude_schedule();
  TrajectoryParams trajectory;
  ViewQualityFilter filter;
  TrainConfig train;
  // Executables invoked as `cmd prediction.png target.png`, printing a scalar.
  std::vector<std::string> metric_plugins;
  std::string plugin_scratch = "";
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalView {
  int id = 0;
  Camera camera;
  Image image;
};

struct ProgressiveInput {
  GaussianScene scene;
  std::vector<TrainingView> views;
  std::vector<EvalView> eval;
  double ground_height = 0.0;
};

struct ProgressiveResult {
  GaussianScene scene;
  std::vector<TrainingView> views;
  std::vector<RefinementStage> stages;
  std::vector<MetricsSnapshot> metrics;  // initial, then one per stage
  std::vector<double> loss_curve;        // concatenated over all training calls
};

MetricsSnapshot evaluate(const GaussianScene& scene, std::span<const EvalView> eval,
                         const RenderSettings& settings, int stage,
                         const std::vector<std::string>& plugins = {},
                         const std::string& plugin_scratch = "");

ProgressiveResult run_progressive(const PipelineConfig& config, ProgressiveInput input,
                                  const Fixer& fixer);

// Runs `command prediction target` and parses its stdout as one number.
double run_metric_plugin(const std::string& command, const Image& prediction,
                         const Image& target, const std::string& scratch_dir);

}  // namespace aerosplat

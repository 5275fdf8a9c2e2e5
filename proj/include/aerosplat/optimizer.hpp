// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "aerosplat/scene.hpp"

namespace aerosplat {

// Step sizes per parameter class.
struct LearningRates {
  double mean = 1.6e-4;
  double log_scale = 5e-3;
  double rotation = 1e-3;
  double color = 2.5e-3;
  double opacity = 5e-2;
  double feature = 1e-3;
  double network = 1e-3;
  double appearance = 1e-3;

  double for_class(ParameterClass c) const;
  void validate() const;
};

struct AdamConfig {
  LearningRates lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-15;
};

// Adam over the flat parameter layout of a scene. Moment buffers follow the
// layout, so pruning must be mirrored with compact().
class AdamOptimizer {
 public:
  AdamOptimizer(const GaussianScene& scene, const AdamConfig& config);

  // One update of every parameter; `gradient` is laid out by
  // ParameterLayout(scene).
  void step(GaussianScene& scene, std::span<const double> gradient);

  // Keeps only the moment state of the surviving primitives (original
  // indices, ascending), e.g. the result of prune_by_opacity.
  void compact(const GaussianScene& pruned_scene, const std::vector<std::size_t>& kept);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  void rebuild_rates(const GaussianScene& scene);

  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<double> rate_;
  std::size_t global_size_ = 0;
  std::size_t primitive_size_ = 0;
  long steps_ = 0;
};

}  // namespace aerosplat

// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale aerial-to-ground test scene: a hidden Gaussian scene, a ring of
// aerial cameras looking down at it, and low ground cameras looking
// horizontally. Every view is rendered from the hidden scene.

#pragma once

#include <cstdint>
#include <vector>

#include "aerosplat/pipeline.hpp"
#include "aerosplat/renderer.hpp"
#include "aerosplat/scene.hpp"

namespace aerosplat {

struct SyntheticOptions {
  std::uint64_t seed = 0;
  int min_gaussians = 20;
  int max_gaussians = 60;
  Vec3 box_min = Vec3(-5.0, -5.0, 0.0);
  Vec3 box_max = Vec3(5.0, 5.0, 3.0);
  double min_scale = 0.25;
  double max_scale = 0.9;
  int width = 64;
  int height = 48;
  double horizontal_fov_deg = 60.0;
  int aerial_count = 30;
  double aerial_height = 20.0;
  double min_pitch_deg = 45.0;
  double max_pitch_deg = 70.0;
  // Fraction of Gaussian centers each aerial camera must see.
  double min_visible_fraction = 0.8;
  int ground_count = 10;
  double ground_camera_height = 0.5;
  double min_ground_radius = 9.0;
  double max_ground_radius = 12.0;
  int points_per_gaussian = 6;
  double point_color_noise = 0.03;
  RenderSettings render;

  void validate() const;
};

struct SyntheticScene {
  GaussianScene hidden;  // modulator disabled
  std::vector<Camera> aerial;
  std::vector<Camera> ground;
  std::vector<Image> aerial_images;
  std::vector<Image> ground_images;
  // Sampled from the hidden Gaussians; plays the role of the aerial
  // reconstruction.
  std::vector<ColoredPoint> points;
};

SyntheticScene make_synthetic_scene(const SyntheticOptions& options);

// Fraction of primitive centers that project inside the image in front of
// the camera.
double visible_center_fraction(const GaussianScene& scene, const Camera& camera);

// Initial scene from the point cloud plus aerial training views (appearance
// ids = view ids) and ground evaluation views.
ProgressiveInput synthetic_progressive_input(const SyntheticScene& synth,
                                             const InitOptions& init);

}  // namespace aerosplat

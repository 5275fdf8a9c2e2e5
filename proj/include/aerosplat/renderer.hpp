// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Tile-based CPU splatting with analytic reverse-mode gradients.
//
// Per pixel p, splats are composited front to back in (depth, index) order:
//   C(p) = sum_i a_i c_i prod_{j<i} (1 - a_j) + T(p) * background,
//   a_i = min(o_i exp(-1/2 d^T cov2d^-1 d), max_alpha),
// where splats with o_i exp(...) < min_alpha are skipped. Whether a splat
// contributes to a pixel depends only on that pixel, never on tiling, so the
// tiled renderer and a per-pixel compositor agree exactly.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aerosplat/geometry.hpp"
#include "aerosplat/image.hpp"
#include "aerosplat/losses.hpp"
#include "aerosplat/scene.hpp"

namespace aerosplat {

struct RenderSettings {
  int tile_size = 16;
  double near_clip = 0.01;
  double far_clip = 1e4;
  Vec3 background = Vec3::Zero();
  int max_splats_per_pixel = 4096;
  // Added to the diagonal of every projected covariance, pixels^2.
  double low_pass = 0.3;
  double min_alpha = 1.0 / 255.0;
  double max_alpha = 0.99;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct ProjectedSplat {
  std::size_t index = 0;  // primitive index in the scene
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  Mat2 conic = Mat2::Identity();  // cov2d^-1
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;  // after distance modulation
};

// Projection of one primitive with already-modulated opacity/scale and final
// color. Returns nullopt when culled: depth outside [near, far], or the
// 3-sigma box of the projected ellipse misses the image.
std::optional<ProjectedSplat> project_gaussian(const GaussianPrimitive& g,
                                               const Modulation& modulation,
                                               const Vec3& color, const Camera& camera,
                                               const RenderSettings& settings);

// Projects every primitive of the scene (modulation and appearance applied).
std::vector<ProjectedSplat> project_scene(const GaussianScene& scene, const Camera& camera,
                                          const RenderSettings& settings,
                                          std::optional<int> image_id = std::nullopt);

// Unclipped splat alpha at a pixel: opacity * exp(-1/2 d^T conic d).
double splat_alpha(const ProjectedSplat& splat, const Vec2& pixel);

struct CompositeEntry {
  double alpha = 0.0;  // unclipped
  Vec3 color = Vec3::Zero();
};

// Front-to-back compositing of a depth-sorted list at one pixel, applying
// the min/max alpha guards and the per-pixel cap of `settings`.
Vec3 composite_pixel(std::span<const CompositeEntry> sorted, const RenderSettings& settings,
                     double* transmittance = nullptr);

struct RenderOutput {
  Image image;  // H x W x 3
  Image alpha;  // H x W x 1, 1 - final transmittance
  Image depth;  // H x W x 1, alpha-weighted camera depth
  std::size_t visible = 0;
};

RenderOutput render(const GaussianScene& scene, const Camera& camera,
                    const RenderSettings& settings = {},
                    std::optional<int> image_id = std::nullopt);

struct GradientResult {
  LossValue loss;
  // d loss / d parameter, laid out by ParameterLayout(scene).
  std::vector<double> gradient;
  RenderOutput render;
};

// Backpropagates an arbitrary image-space gradient dL/dC through compositing,
// projection, modulation and appearance.
std::vector<double> backpropagate_image_gradient(const GaussianScene& scene,
                                                 const Camera& camera,
                                                 const Image& image_gradient,
                                                 const RenderSettings& settings = {},
                                                 std::optional<int> image_id = std::nullopt);

// Loss L = lambda_dssim DSSIM + lambda_l2 MSE against `target` and its
// gradient. Throws NumericalError naming the first primitive with a
// non-finite gradient.
GradientResult render_with_gradients(const GaussianScene& scene, const Camera& camera,
                                     const Image& target, const LossConfig& loss,
                                     const RenderSettings& settings = {},
                                     std::optional<int> image_id = std::nullopt);

}  // namespace aerosplat

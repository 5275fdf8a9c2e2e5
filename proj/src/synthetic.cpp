// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/synthetic.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <random>

#include "aerosplat/errors.hpp"
#include "aerosplat/trajectories.hpp"

namespace aerosplat {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

CameraIntrinsics make_intrinsics(const SyntheticOptions& o) {
  CameraIntrinsics k;
  k.width = o.width;
  k.height = o.height;
  k.fx = k.fy = 0.5 * o.width / std::tan(0.5 * o.horizontal_fov_deg * kDegToRad);
  k.cx = 0.5 * (o.width - 1);
  k.cy = 0.5 * (o.height - 1);
  return k;
}

}  // namespace

void SyntheticOptions::validate() const {
  if (min_gaussians < 1 || max_gaussians < min_gaussians) {
    throw DomainError("synthetic: invalid Gaussian count range");
  }
  if (!(box_min.array() < box_max.array()).all()) throw DomainError("synthetic: empty box");
  if (!(min_scale > 0.0 && max_scale >= min_scale)) {
    throw DomainError("synthetic: invalid scale range");
  }
  if (width < 11 || height < 11) throw DomainError("synthetic: images must be >= 11x11");
  if (aerial_count < 1 || ground_count < 0 || points_per_gaussian < 1) {
    throw DomainError("synthetic: invalid camera or point counts");
  }
  if (!(min_pitch_deg > 0.0 && max_pitch_deg < 90.0 && min_pitch_deg <= max_pitch_deg)) {
    throw DomainError("synthetic: pitch range must lie in (0, 90) degrees");
  }
  if (!(aerial_height > box_max.z())) {
    throw DomainError("synthetic: aerial cameras must fly above the scene box");
  }
  render.validate();
}

double visible_center_fraction(const GaussianScene& scene, const Camera& camera) {
  if (scene.empty()) return 0.0;
  std::size_t seen = 0;
  for (const GaussianPrimitive& g : scene.gaussians) {
    double depth = 0.0;
    const Vec2 p = camera.project(g.mu, &depth);
    if (depth > 0.0 && camera.intrinsics.contains(p)) ++seen;
  }
  return static_cast<double>(seen) / static_cast<double>(scene.size());
}

SyntheticScene make_synthetic_scene(const SyntheticOptions& o) {
  o.validate();
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  SyntheticScene out;
  ModelDims dims;
  out.hidden.dims = dims;
  out.hidden.modulator = AdaptiveModulator::zeros(dims);
  out.hidden.modulator.enabled = false;
  out.hidden.appearance = AppearanceTable::zeros(dims.appearance_dim);

  const int count =
      o.min_gaussians + static_cast<int>(u01(rng) * (o.max_gaussians - o.min_gaussians + 1));
  for (int i = 0; i < std::min(count, o.max_gaussians); ++i) {
    GaussianPrimitive g;
    for (int a = 0; a < 3; ++a) g.mu[a] = uniform(o.box_min[a], o.box_max[a]);
    for (int a = 0; a < 3; ++a) {
      g.log_scale[a] = uniform(std::log(o.min_scale), std::log(o.max_scale));
    }
    Vec4 q(n01(rng), n01(rng), n01(rng), n01(rng));
    g.rotation_q = q.normalized();
    // Saturated palette: one dominant channel, the others random.
    const int dominant = static_cast<int>(u01(rng) * 3.0) % 3;
    for (int c = 0; c < 3; ++c) g.color[c] = c == dominant ? uniform(0.7, 1.0) : uniform(0.0, 0.5);
    g.logit_opacity = logit(uniform(0.85, 0.98));
    g.f_sca = VecX::Zero(dims.feature_dim);
    g.f_opa = VecX::Zero(dims.feature_dim);
    out.hidden.gaussians.push_back(std::move(g));
  }

  const CameraIntrinsics intr = make_intrinsics(o);
  const Vec3 center = 0.5 * (o.box_min + o.box_max);
  for (int i = 0; i < o.aerial_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const double azimuth =
          2.0 * std::numbers::pi * (i + uniform(-0.3, 0.3)) / o.aerial_count;
      const double pitch = uniform(o.min_pitch_deg, o.max_pitch_deg) * kDegToRad;
      const double radius = (o.aerial_height - center.z()) / std::tan(pitch);
      const Vec3 pos(center.x() + radius * std::cos(azimuth),
                     center.y() + radius * std::sin(azimuth), o.aerial_height);
      const Camera cam{intr, look_at(pos, center, Vec3::UnitZ())};
      if (visible_center_fraction(out.hidden, cam) >= o.min_visible_fraction) {
        out.aerial.push_back(cam);
        placed = true;
      }
    }
    if (!placed) {
      throw DomainError("synthetic: cannot place an aerial camera seeing enough of the scene");
    }
  }

  for (int i = 0; i < o.ground_count; ++i) {
    const double azimuth = 2.0 * std::numbers::pi * (i + uniform(-0.3, 0.3)) / o.ground_count;
    const double radius = uniform(o.min_ground_radius, o.max_ground_radius);
    const Vec3 pos(center.x() + radius * std::cos(azimuth),
                   center.y() + radius * std::sin(azimuth), o.ground_camera_height);
    const Vec3 target(center.x(), center.y(), o.ground_camera_height);
    out.ground.push_back(Camera{intr, look_at(pos, target, Vec3::UnitZ())});
  }

  for (const GaussianPrimitive& g : out.hidden.gaussians) {
    const Mat3 chol = g.covariance().llt().matrixL();
    for (int k = 0; k < o.points_per_gaussian; ++k) {
      ColoredPoint p;
      p.position = g.mu + chol * Vec3(n01(rng), n01(rng), n01(rng));
      for (int c = 0; c < 3; ++c) {
        p.color[c] = std::clamp(g.color[c] + o.point_color_noise * n01(rng), 0.0, 1.0);
      }
      out.points.push_back(p);
    }
  }

  for (const Camera& cam : out.aerial) {
    out.aerial_images.push_back(render(out.hidden, cam, o.render).image);
  }
  for (const Camera& cam : out.ground) {
    out.ground_images.push_back(render(out.hidden, cam, o.render).image);
  }
  return out;
}

ProgressiveInput synthetic_progressive_input(const SyntheticScene& synth,
                                             const InitOptions& init) {
  ProgressiveInput in;
  std::vector<int> ids;
  for (std::size_t i = 0; i < synth.aerial.size(); ++i) ids.push_back(static_cast<int>(i));
  in.scene = init_from_points(synth.points, init, ids);
  for (std::size_t i = 0; i < synth.aerial.size(); ++i) {
    TrainingView v;
    v.id = static_cast<int>(i);
    v.camera = synth.aerial[i];
    v.image = synth.aerial_images[i];
    v.appearance_id = v.id;
    in.views.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < synth.ground.size(); ++i) {
    in.eval.push_back({static_cast<int>(i), synth.ground[i], synth.ground_images[i]});
  }
  std::vector<Vec3> positions;
  for (const ColoredPoint& p : synth.points) positions.push_back(p.position);
  in.ground_height = ground_height(positions);
  return in;
}

}  // namespace aerosplat

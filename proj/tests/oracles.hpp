// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations and random fixtures shared by the
// unit tests and the acceptance binary. Nothing here calls the code it is
// meant to check, except for projection (tested on its own against the
// analytic pinhole model).

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "aerosplat/geometry.hpp"
#include "aerosplat/image.hpp"
#include "aerosplat/renderer.hpp"
#include "aerosplat/scene.hpp"

namespace aerosplat::oracle {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double stddev = 1.0) {
  return std::normal_distribution<double>(0.0, stddev)(rng);
}

inline Vec4 random_quaternion(Rng& rng) {
  Vec4 q(normal(rng), normal(rng), normal(rng), normal(rng));
  return q / q.norm();
}

// Hamilton product rotation built by hand (w, x, y, z).
inline Mat3 rotation_from_quaternion(const Vec4& q_in) {
  const Vec4 q = q_in / q_in.norm();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline Mat3 random_rotation(Rng& rng) { return rotation_from_quaternion(random_quaternion(rng)); }

// Camera-to-world pose at `eye` looking at `target`, built from an explicit
// orthonormal basis with world z up.
inline CameraPose pose_towards(const Vec3& eye, const Vec3& target) {
  const Vec3 f = (target - eye).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(f.dot(up)) > 0.99) up = Vec3::UnitY();
  const Vec3 r = f.cross(up).normalized();
  const Vec3 d = f.cross(r);
  CameraPose p;
  p.rotation.col(0) = r;
  p.rotation.col(1) = d;
  p.rotation.col(2) = f;
  p.center = eye;
  return p;
}

inline CameraIntrinsics intrinsics(int w, int h, double f) {
  return {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
}

// Two cameras with distinct centers looking roughly at the origin.
inline std::pair<Camera, Camera> random_rig(Rng& rng, int w = 64, int h = 48) {
  auto place = [&] {
    const Vec3 dir = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    const Vec3 eye = dir * uniform(rng, 4.0, 8.0);
    const Vec3 target(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    Camera c;
    c.intrinsics = intrinsics(w, h, uniform(rng, 0.6, 1.4) * w);
    c.intrinsics.cx += uniform(rng, -2.0, 2.0);
    c.intrinsics.cy += uniform(rng, -2.0, 2.0);
    c.pose = pose_towards(eye, target);
    return c;
  };
  Camera a = place();
  Camera b = place();
  while ((a.pose.center - b.pose.center).norm() < 0.5) b = place();
  return {a, b};
}

// Point in front of both cameras, projecting inside both images.
inline std::optional<Vec3> common_point(Rng& rng, const Camera& a, const Camera& b) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec3 x(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5));
    double da = 0.0, db = 0.0;
    const Vec2 pa = a.project(x, &da);
    const Vec2 pb = b.project(x, &db);
    if (da > 0.1 && db > 0.1 && a.intrinsics.contains(pa) && b.intrinsics.contains(pb)) {
      return x;
    }
  }
  return std::nullopt;
}

// Random primitives around the origin, seen by a camera at (0, 0, -4)
// looking along +z.
inline GaussianScene random_scene(Rng& rng, int count, bool random_networks,
                                  const ModelDims& dims = {}) {
  GaussianScene s;
  s.dims = dims;
  s.modulator = AdaptiveModulator::initialize(dims, rng);
  if (random_networks) {
    for (Mlp* net : {&s.modulator.scale_net, &s.modulator.opacity_net}) {
      for (int i = 0; i < net->w2.size(); ++i) net->w2[i] = 0.3 * normal(rng);
      for (int i = 0; i < net->b1.size(); ++i) net->b1[i] = 0.1 * normal(rng);
      net->b2 = 0.5;
    }
  }
  s.appearance = AppearanceTable::zeros(dims.appearance_dim);
  for (int i = 0; i < count; ++i) {
    GaussianPrimitive g;
    g.mu = Vec3(uniform(rng, -1.5, 1.5), uniform(rng, -1.2, 1.2), uniform(rng, -1.0, 1.0));
    for (int k = 0; k < 3; ++k) g.log_scale[k] = std::log(uniform(rng, 0.05, 0.4));
    g.rotation_q = random_quaternion(rng);
    g.color = Vec3(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
    g.logit_opacity = uniform(rng, -2.0, 4.0);
    g.f_sca = VecX(dims.feature_dim);
    g.f_opa = VecX(dims.feature_dim);
    for (int k = 0; k < dims.feature_dim; ++k) {
      g.f_sca[k] = 0.5 * normal(rng);
      g.f_opa[k] = 0.5 * normal(rng);
    }
    s.gaussians.push_back(g);
  }
  return s;
}

inline Camera front_camera(int w, int h, double f) {
  Camera c;
  c.intrinsics = intrinsics(w, h, f);
  c.pose.center = Vec3(0.0, 0.0, -4.0);
  return c;
}

// Per pixel: every projected splat in scene order, alpha evaluated directly,
// then a sort by (depth, index) and a plain front-to-back sum.
inline Image brute_force_render(const GaussianScene& scene, const Camera& cam,
                                const RenderSettings& s,
                                std::optional<int> image_id = std::nullopt) {
  const std::vector<ProjectedSplat> splats = project_scene(scene, cam, s, image_id);
  const int w = cam.intrinsics.width, h = cam.intrinsics.height;
  Image out(w, h, 3);
  std::vector<std::tuple<double, std::size_t, double, Vec3>> hits;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      hits.clear();
      for (const ProjectedSplat& sp : splats) {
        const Vec2 d = Vec2(x, y) - sp.mean2d;
        const double q = d.dot(sp.cov2d.inverse() * d);
        const double a = sp.opacity * std::exp(-0.5 * q);
        if (a >= s.min_alpha) hits.emplace_back(sp.depth, sp.index, a, sp.color);
      }
      std::sort(hits.begin(), hits.end(), [](const auto& l, const auto& r) {
        return std::tie(std::get<0>(l), std::get<1>(l)) < std::tie(std::get<0>(r), std::get<1>(r));
      });
      double t = 1.0;
      Vec3 c = Vec3::Zero();
      int used = 0;
      for (const auto& [depth, index, a_raw, color] : hits) {
        if (used++ >= s.max_splats_per_pixel) break;
        const double a = std::min(a_raw, s.max_alpha);
        c += t * a * color;
        t *= 1.0 - a;
      }
      c += t * s.background;
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = c[ch];
    }
  }
  return out;
}

// Direct sliding-window SSIM: 11x11 Gaussian weights (sigma 1.5) built as a
// 2D table, every valid window evaluated from scratch.
inline double naive_ssim(const Image& a, const Image& b) {
  constexpr int n = 11;
  double wsum = 0.0;
  double win[n][n];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double di = i - 5, dj = j - 5;
      win[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      wsum += win[i][j];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int windows = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y0 = 0; y0 + n <= a.height(); ++y0) {
      for (int x0 = 0; x0 + n <= a.width(); ++x0) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double wt = win[i][j] / wsum;
            mx += wt * a.at(x0 + j, y0 + i, c);
            my += wt * b.at(x0 + j, y0 + i, c);
          }
        }
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double wt = win[i][j] / wsum;
            const double dx = a.at(x0 + j, y0 + i, c) - mx;
            const double dy = b.at(x0 + j, y0 + i, c) - my;
            sxx += wt * dx * dx;
            syy += wt * dy * dy;
            sxy += wt * dx * dy;
          }
        }
        total += (2 * mx * my + c1) * (2 * sxy + c2) /
                 ((mx * mx + my * my + c1) * (sxx + syy + c2));
        ++windows;
      }
    }
  }
  return total / windows;
}

// Five primitives with random modulator networks and one registered
// appearance image (id 3) seen by a 32x32 camera; used for gradient checks.
struct GradientFixture {
  GaussianScene scene;
  Camera camera;
  Image target;
  int image_id = 3;
};

inline GradientFixture gradient_fixture(std::uint64_t seed = 7) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> n(0, 1);
  GradientFixture fx;
  ModelDims dims;
  GaussianScene& s = fx.scene;
  s.dims = dims;
  s.modulator = AdaptiveModulator::initialize(dims, rng);
  for (Mlp* net : {&s.modulator.scale_net, &s.modulator.opacity_net}) {
    for (int i = 0; i < net->w2.size(); ++i) net->w2[i] = 0.3 * n(rng);
    for (int i = 0; i < net->b1.size(); ++i) net->b1[i] = 0.1 * n(rng);
    net->b2 = 0.5;
  }
  s.appearance = AppearanceTable::zeros(dims.appearance_dim);
  VecX e(dims.appearance_dim);
  for (int i = 0; i < e.size(); ++i) e[i] = 0.3 * n(rng);
  s.appearance.register_image(fx.image_id, e);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < dims.appearance_dim; ++c) {
      s.appearance.gain_weights(r, c) = 0.1 * n(rng);
      s.appearance.bias_weights(r, c) = 0.02 * n(rng);
    }
  }
  for (int i = 0; i < 5; ++i) {
    GaussianPrimitive g;
    g.mu = Vec3(u(rng) * 0.8, u(rng) * 0.8, u(rng) * 0.5);
    const double a = std::log(0.3) + 0.3 * u(rng);
    const double b = std::log(0.3) + 0.3 * u(rng);
    const double c = std::log(0.3) + 0.3 * u(rng);
    g.log_scale = Vec3(a, b, c);
    const double q0 = n(rng), q1 = n(rng), q2 = n(rng), q3 = n(rng);
    g.rotation_q = Vec4(q0, q1, q2, q3);
    const double c0 = 0.2 + 0.6 * (u(rng) + 1) / 2;
    const double c1 = 0.2 + 0.6 * (u(rng) + 1) / 2;
    const double c2 = 0.2 + 0.6 * (u(rng) + 1) / 2;
    g.color = Vec3(c0, c1, c2);
    g.logit_opacity = 0.5 * u(rng) + 0.5;
    g.f_sca = VecX(dims.feature_dim);
    g.f_opa = VecX(dims.feature_dim);
    for (int k = 0; k < dims.feature_dim; ++k) {
      g.f_sca[k] = 0.5 * n(rng);
      g.f_opa[k] = 0.5 * n(rng);
    }
    s.gaussians.push_back(g);
  }
  fx.camera.intrinsics = {40, 40, 15.5, 15.5, 32, 32};
  fx.camera.pose.center = Vec3(0, 0, -4);
  fx.target = Image(32, 32, 3);
  for (double& v : fx.target.data()) v = (u(rng) + 1) / 2;
  return fx;
}

inline Image random_image(Rng& rng, int w, int h, int channels = 3) {
  Image img(w, h, channels);
  for (double& v : img.data()) v = uniform(rng, 0.0, 1.0);
  return img;
}

// Central differences of `loss` over every packed parameter; returns the
// number of compared entries and the worst relative error among entries
// where either gradient exceeds `floor` in magnitude.
template <typename LossFn>
std::pair<int, double> finite_difference_check(const GaussianScene& scene,
                                               const std::vector<double>& analytic,
                                               LossFn&& loss, double h = 1e-4,
                                               double floor = 1e-8,
                                               std::vector<double>* per_class_worst = nullptr) {
  const std::vector<double> p = pack_parameters(scene);
  const ParameterLayout layout(scene);
  int compared = 0;
  double worst = 0.0;
  if (per_class_worst) per_class_worst->assign(kParameterClassCount, -1.0);
  GaussianScene probe = scene;
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<double> q = p;
    q[i] = p[i] + h;
    unpack_parameters(q, probe);
    const double lp = loss(probe);
    q[i] = p[i] - h;
    unpack_parameters(q, probe);
    const double lm = loss(probe);
    const double numeric = (lp - lm) / (2.0 * h);
    const double mag = std::max(std::abs(analytic[i]), std::abs(numeric));
    if (mag <= floor) continue;
    ++compared;
    const double rel = std::abs(analytic[i] - numeric) / mag;
    worst = std::max(worst, rel);
    if (per_class_worst) {
      double& slot = (*per_class_worst)[static_cast<int>(layout.class_of(i))];
      slot = std::max(slot, rel);
    }
  }
  return {compared, worst};
}

}  // namespace aerosplat::oracle

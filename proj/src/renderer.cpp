// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/renderer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aerosplat/errors.hpp"
#include "aerosplat/parallel.hpp"

namespace aerosplat {

using Mat23 = Eigen::Matrix<double, 2, 3>;

void RenderSettings::validate() const {
  if (tile_size < 1) throw DomainError("render settings: tile size must be >= 1");
  if (!(near_clip < far_clip)) throw DomainError("render settings: near must be < far");
  if (max_splats_per_pixel < 1) throw DomainError("render settings: splat cap must be >= 1");
  if (low_pass < 0.0) throw DomainError("render settings: low-pass floor must be >= 0");
  if (!(max_alpha > 0.0 && max_alpha <= 1.0)) {
    throw DomainError("render settings: max alpha must be in (0, 1]");
  }
}

namespace {

// Forward intermediates of one primitive, kept for the backward pass.
struct PrimitiveState {
  bool visible = false;
  ProjectedSplat splat;
  Vec3 cam_point = Vec3::Zero();
  Mat23 jacobian = Mat23::Zero();
  Mat23 transform = Mat23::Zero();  // jacobian * world-to-camera rotation
  double distance = 0.0;
  VecX hidden_sca, hidden_opa;
  VecX input_sca, input_opa;
  double gate_sca = 1.0;
  double gate_opa = 1.0;
  double base_opacity = 0.0;
  Vec3 base_scale = Vec3::Zero();  // exp(log_scale)
  Vec3 scale = Vec3::Zero();       // gated
  Vec4 q_unit = Vec4(1, 0, 0, 0);
  double q_norm = 1.0;
  Mat3 rotation = Mat3::Identity();
  Mat3 sigma = Mat3::Identity();
  std::array<bool, 3> color_clamped{false, false, false};
  // Half extents of the box containing every pixel with alpha >= min_alpha.
  double support_x = 0.0;
  double support_y = 0.0;
};

struct Frame {
  std::vector<PrimitiveState> prims;
  std::vector<ProjectedSplat> splats;  // visible, sorted by (depth, index)
  std::vector<std::size_t> prim_of;    // splat position -> primitive index
  std::vector<std::vector<int>> tiles;
  int tiles_x = 0;
  int tiles_y = 0;
  bool has_appearance = false;
  int appearance_index = -1;
  AppearanceAffine affine;
};

bool project_into(const Vec3& mu, const Mat3& sigma, const Camera& cam,
                  const RenderSettings& s, ProjectedSplat& out, Vec3* cam_point,
                  Mat23* jacobian, Mat23* transform) {
  const Mat3 w = cam.pose.rotation.transpose();
  const Vec3 t = w * (mu - cam.pose.center);
  if (!(t.z() > s.near_clip) || !(t.z() < s.far_clip)) return false;
  const auto& k = cam.intrinsics;
  const double iz = 1.0 / t.z();
  Mat23 j;
  j << k.fx * iz, 0.0, -k.fx * t.x() * iz * iz, 0.0, k.fy * iz, -k.fy * t.y() * iz * iz;
  const Mat23 tr = j * w;
  Mat2 cov = tr * sigma * tr.transpose();
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  cov(0, 0) += s.low_pass;
  cov(1, 1) += s.low_pass;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(det > 0.0)) return false;
  const Vec2 mean(k.fx * t.x() * iz + k.cx, k.fy * t.y() * iz + k.cy);
  const double ex = 3.0 * std::sqrt(cov(0, 0));
  const double ey = 3.0 * std::sqrt(cov(1, 1));
  if (mean.x() + ex < -0.5 || mean.x() - ex > k.width - 0.5 || mean.y() + ey < -0.5 ||
      mean.y() - ey > k.height - 0.5) {
    return false;
  }
  out.mean2d = mean;
  out.cov2d = cov;
  Mat2 conic;
  conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;
  out.conic = conic;
  out.depth = t.z();
  if (cam_point) *cam_point = t;
  if (jacobian) *jacobian = j;
  if (transform) *transform = tr;
  return true;
}

inline double splat_power(const ProjectedSplat& s, double px, double py) {
  const double dx = px - s.mean2d.x();
  const double dy = py - s.mean2d.y();
  return -0.5 * (s.conic(0, 0) * dx * dx + 2.0 * s.conic(0, 1) * dx * dy +
                 s.conic(1, 1) * dy * dy);
}

Frame prepare_frame(const GaussianScene& scene, const Camera& cam, const RenderSettings& s,
                    std::optional<int> image_id) {
  s.validate();
  Frame f;
  if (image_id) {
    f.has_appearance = true;
    f.appearance_index = scene.appearance.index_of(*image_id);
    f.affine = scene.appearance.affine(*image_id);
  }
  const std::size_t n = scene.gaussians.size();
  f.prims.resize(n);
  const auto& mod = scene.modulator;
  for (std::size_t i = 0; i < n; ++i) {
    const GaussianPrimitive& g = scene.gaussians[i];
    PrimitiveState& st = f.prims[i];
    st.distance = camera_scene_distance(cam.pose, g.mu);
    st.base_opacity = g.opacity();
    st.base_scale = g.scale();
    if (mod.enabled) {
      st.input_sca = modulator_input(g.f_sca, st.distance);
      st.input_opa = modulator_input(g.f_opa, st.distance);
      st.gate_sca = sigmoid(mod.scale_net.forward(st.input_sca, &st.hidden_sca));
      st.gate_opa = sigmoid(mod.opacity_net.forward(st.input_opa, &st.hidden_opa));
    }
    st.scale = st.gate_sca * st.base_scale;
    st.q_norm = g.rotation_q.norm();
    st.q_unit = g.rotation_q / st.q_norm;
    st.rotation = quaternion_to_rotation(st.q_unit);
    const Vec3 s2 = st.scale.cwiseProduct(st.scale);
    st.sigma = st.rotation * s2.asDiagonal() * st.rotation.transpose();

    Vec3 color = g.color;
    if (f.has_appearance) {
      const Vec3 pre = f.affine.gain.cwiseProduct(g.color) + f.affine.bias;
      for (int c = 0; c < 3; ++c) {
        st.color_clamped[c] = pre[c] < 0.0 || pre[c] > 1.0;
        color[c] = std::clamp(pre[c], 0.0, 1.0);
      }
    }
    st.splat.index = i;
    st.splat.color = color;
    st.splat.opacity = st.gate_opa * st.base_opacity;
    st.visible = project_into(g.mu, st.sigma, cam, s, st.splat, &st.cam_point,
                              &st.jacobian, &st.transform);
    if (!st.visible) continue;
    if (s.min_alpha > 0.0) {
      if (st.splat.opacity < s.min_alpha) {
        st.support_x = st.support_y = -1.0;
      } else {
        const double kk = 2.0 * std::log(st.splat.opacity / s.min_alpha);
        st.support_x = std::sqrt(kk * st.splat.cov2d(0, 0)) + 1.0;
        st.support_y = std::sqrt(kk * st.splat.cov2d(1, 1)) + 1.0;
      }
    } else {
      st.support_x = st.support_y = std::numeric_limits<double>::infinity();
    }
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (f.prims[i].visible) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = f.prims[a].splat.depth, db = f.prims[b].splat.depth;
    return da < db || (da == db && a < b);
  });
  f.splats.reserve(order.size());
  for (std::size_t i : order) {
    f.splats.push_back(f.prims[i].splat);
    f.prim_of.push_back(i);
  }

  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  f.tiles_x = (w + s.tile_size - 1) / s.tile_size;
  f.tiles_y = (h + s.tile_size - 1) / s.tile_size;
  f.tiles.assign(static_cast<std::size_t>(f.tiles_x) * f.tiles_y, {});
  for (std::size_t k = 0; k < f.splats.size(); ++k) {
    const PrimitiveState& st = f.prims[f.prim_of[k]];
    if (st.support_x < 0.0) continue;
    const Vec2& m = f.splats[k].mean2d;
    const double lo_x = std::max(0.0, std::ceil(m.x() - st.support_x));
    const double hi_x = std::min(w - 1.0, std::floor(m.x() + st.support_x));
    const double lo_y = std::max(0.0, std::ceil(m.y() - st.support_y));
    const double hi_y = std::min(h - 1.0, std::floor(m.y() + st.support_y));
    if (lo_x > hi_x || lo_y > hi_y) continue;
    const int tx0 = static_cast<int>(lo_x) / s.tile_size;
    const int tx1 = static_cast<int>(hi_x) / s.tile_size;
    const int ty0 = static_cast<int>(lo_y) / s.tile_size;
    const int ty1 = static_cast<int>(hi_y) / s.tile_size;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        f.tiles[static_cast<std::size_t>(ty) * f.tiles_x + tx].push_back(static_cast<int>(k));
      }
    }
  }
  return f;
}

struct TileBounds {
  int x0, y0, x1, y1;
};

TileBounds tile_bounds(const Frame& f, std::size_t tile, const RenderSettings& s, int w, int h) {
  const int tx = static_cast<int>(tile) % f.tiles_x;
  const int ty = static_cast<int>(tile) / f.tiles_x;
  return {tx * s.tile_size, ty * s.tile_size, std::min(w, (tx + 1) * s.tile_size),
          std::min(h, (ty + 1) * s.tile_size)};
}

RenderOutput rasterize(const Frame& f, const Camera& cam, const RenderSettings& s) {
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  RenderOutput out;
  out.image = Image(w, h, 3);
  out.alpha = Image(w, h, 1);
  out.depth = Image(w, h, 1);
  out.visible = f.splats.size();
  parallel_for_workers(f.tiles.size(), s.threads, [&](int, std::size_t tile) {
    const TileBounds b = tile_bounds(f, tile, s, w, h);
    const auto& list = f.tiles[tile];
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) {
        double t = 1.0;
        Vec3 c = Vec3::Zero();
        double depth = 0.0;
        int count = 0;
        for (int k : list) {
          const ProjectedSplat& sp = f.splats[k];
          const double a_raw = sp.opacity * std::exp(splat_power(sp, x, y));
          if (a_raw < s.min_alpha) continue;
          const double a = std::min(a_raw, s.max_alpha);
          c += (a * t) * sp.color;
          depth += a * t * sp.depth;
          t *= 1.0 - a;
          if (++count >= s.max_splats_per_pixel) break;
        }
        for (int ch = 0; ch < 3; ++ch) out.image.at(x, y, ch) = c[ch] + t * s.background[ch];
        out.alpha.at(x, y) = 1.0 - t;
        out.depth.at(x, y) = depth;
      }
    }
  });
  return out;
}

// Per splat: d/d mean2d (2), d/d conic (a, b, c) (3), d/d opacity, d/d color (3).
constexpr int kSplatGradSize = 9;

std::vector<double> rasterize_backward(const Frame& f, const Camera& cam,
                                       const RenderSettings& s, const Image& grad_image) {
  const int w = cam.intrinsics.width;
  const int h = cam.intrinsics.height;
  const std::size_t m = f.splats.size();
  const int workers = worker_count(f.tiles.size(), s.threads);
  std::vector<std::vector<double>> buffers(workers,
                                           std::vector<double>(m * kSplatGradSize, 0.0));
  struct Hit {
    int k;
    double a_raw;
    double a;
    double t;  // transmittance in front of this splat
  };
  std::vector<std::vector<Hit>> scratch(workers);

  parallel_for_workers(f.tiles.size(), s.threads, [&](int worker, std::size_t tile) {
    const TileBounds b = tile_bounds(f, tile, s, w, h);
    const auto& list = f.tiles[tile];
    std::vector<double>& acc = buffers[worker];
    std::vector<Hit>& hits = scratch[worker];
    for (int y = b.y0; y < b.y1; ++y) {
      for (int x = b.x0; x < b.x1; ++x) {
        const Vec3 dc(grad_image.at(x, y, 0), grad_image.at(x, y, 1), grad_image.at(x, y, 2));
        if (dc.isZero(0.0)) continue;
        hits.clear();
        double t = 1.0;
        for (int k : list) {
          const ProjectedSplat& sp = f.splats[k];
          const double a_raw = sp.opacity * std::exp(splat_power(sp, x, y));
          if (a_raw < s.min_alpha) continue;
          const double a = std::min(a_raw, s.max_alpha);
          hits.push_back({k, a_raw, a, t});
          t *= 1.0 - a;
          if (static_cast<int>(hits.size()) >= s.max_splats_per_pixel) break;
        }
        Vec3 behind = s.background;
        for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
          const ProjectedSplat& sp = f.splats[it->k];
          double* g = acc.data() + static_cast<std::size_t>(it->k) * kSplatGradSize;
          const double wgt = it->a * it->t;
          g[6] += wgt * dc[0];
          g[7] += wgt * dc[1];
          g[8] += wgt * dc[2];
          const double d_alpha = it->t * (sp.color - behind).dot(dc);
          behind = it->a * sp.color + (1.0 - it->a) * behind;
          if (it->a_raw > s.max_alpha) continue;  // clipped: no dependence
          const double dx = x - sp.mean2d.x();
          const double dy = y - sp.mean2d.y();
          const double g_exp = it->a_raw / sp.opacity;
          g[5] += d_alpha * g_exp;
          const double d_power = d_alpha * it->a_raw;
          g[0] += d_power * (sp.conic(0, 0) * dx + sp.conic(0, 1) * dy);
          g[1] += d_power * (sp.conic(0, 1) * dx + sp.conic(1, 1) * dy);
          g[2] += d_power * (-0.5 * dx * dx);
          g[3] += d_power * (-dx * dy);
          g[4] += d_power * (-0.5 * dy * dy);
        }
      }
    }
  });
  std::vector<double> total = std::move(buffers[0]);
  for (int wk = 1; wk < workers; ++wk) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += buffers[wk][i];
  }
  return total;
}

// Accumulates MLP parameter gradients at `offset`; returns d out / d input.
VecX mlp_backward(const Mlp& net, const VecX& input, const VecX& hidden, double d_out,
                  double* grad, std::size_t offset) {
  const int hw = net.hidden();
  const int in = net.input_dim();
  const VecX d_pre = (d_out * net.w2.array() * (1.0 - hidden.array().square())).matrix();
  std::size_t p = offset;
  for (int r = 0; r < hw; ++r) {
    for (int c = 0; c < in; ++c) grad[p++] += d_pre[r] * input[c];
  }
  for (int r = 0; r < hw; ++r) grad[p++] += d_pre[r];
  for (int r = 0; r < hw; ++r) grad[p++] += d_out * hidden[r];
  grad[p] += d_out;
  return net.w1.transpose() * d_pre;
}

// d R / d q for unit quaternion components (w, x, y, z), contracted with G.
Vec4 rotation_backward(const Vec4& q, const Mat3& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 d;
  d[0] = g(0, 1) * (-2 * z) + g(0, 2) * (2 * y) + g(1, 0) * (2 * z) + g(1, 2) * (-2 * x) +
         g(2, 0) * (-2 * y) + g(2, 1) * (2 * x);
  d[1] = g(0, 1) * (2 * y) + g(0, 2) * (2 * z) + g(1, 0) * (2 * y) + g(1, 1) * (-4 * x) +
         g(1, 2) * (-2 * w) + g(2, 0) * (2 * z) + g(2, 1) * (2 * w) + g(2, 2) * (-4 * x);
  d[2] = g(0, 0) * (-4 * y) + g(0, 1) * (2 * x) + g(0, 2) * (2 * w) + g(1, 0) * (2 * x) +
         g(1, 2) * (2 * z) + g(2, 0) * (-2 * w) + g(2, 1) * (2 * z) + g(2, 2) * (-4 * y);
  d[3] = g(0, 0) * (-4 * z) + g(0, 1) * (-2 * w) + g(0, 2) * (2 * x) + g(1, 0) * (2 * w) +
         g(1, 1) * (-4 * z) + g(1, 2) * (2 * y) + g(2, 0) * (2 * x) + g(2, 1) * (2 * y);
  return d;
}

std::vector<double> chain_to_parameters(const GaussianScene& scene, const Frame& f,
                                        const Camera& cam, const std::vector<double>& g2d) {
  const ParameterLayout layout(scene);
  std::vector<double> grad(layout.size(), 0.0);
  const auto& mod = scene.modulator;
  const Mat3 w = cam.pose.rotation.transpose();
  const auto& k = cam.intrinsics;
  Vec3 d_gain = Vec3::Zero();
  Vec3 d_bias = Vec3::Zero();

  for (std::size_t pos = 0; pos < f.splats.size(); ++pos) {
    const std::size_t i = f.prim_of[pos];
    const PrimitiveState& st = f.prims[i];
    const GaussianPrimitive& g = scene.gaussians[i];
    const double* gs = g2d.data() + pos * kSplatGradSize;
    double* out = grad.data() + layout.primitive_offset(i);

    // Color and appearance.
    for (int c = 0; c < 3; ++c) {
      const double dcol = gs[6 + c];
      if (!f.has_appearance) {
        out[ParameterLayout::kColor + c] += dcol;
      } else if (!st.color_clamped[c]) {
        out[ParameterLayout::kColor + c] += f.affine.gain[c] * dcol;
        d_gain[c] += g.color[c] * dcol;
        d_bias[c] += dcol;
      }
    }

    // Opacity: o = gate_opa * sigmoid(logit).
    const double d_opacity = gs[5];
    const double base = st.base_opacity;
    out[ParameterLayout::kLogitOpacity] += d_opacity * st.gate_opa * base * (1.0 - base);
    double d_dist_input = 0.0;
    if (mod.enabled) {
      const double d_pre = d_opacity * base * st.gate_opa * (1.0 - st.gate_opa);
      const VecX d_in = mlp_backward(mod.opacity_net, st.input_opa, st.hidden_opa, d_pre,
                                     grad.data(), layout.opacity_net_offset());
      for (int q = 0; q < scene.dims.feature_dim; ++q) out[layout.f_opa_field() + q] += d_in[q];
      d_dist_input += d_in[scene.dims.feature_dim];
    }

    // Conic -> cov2d: d cov = -conic G conic with G the symmetric gradient.
    Mat2 g_conic;
    g_conic << gs[2], 0.5 * gs[3], 0.5 * gs[3], gs[4];
    const Mat2& conic = st.splat.conic;
    const Mat2 g_cov = -conic * g_conic * conic;

    // cov2d = T Sigma T^T + eps I, T = J W.
    const Mat3 g_sigma = st.transform.transpose() * g_cov * st.transform;
    const Mat23 g_transform = 2.0 * g_cov * st.transform * st.sigma;
    const Mat23 g_jac = g_transform * w.transpose();

    const Vec3& t = st.cam_point;
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    const double iz3 = iz2 * iz;
    Vec3 g_t;
    g_t.x() = g_jac(0, 2) * (-k.fx * iz2);
    g_t.y() = g_jac(1, 2) * (-k.fy * iz2);
    g_t.z() = g_jac(0, 0) * (-k.fx * iz2) + g_jac(0, 2) * (2.0 * k.fx * t.x() * iz3) +
              g_jac(1, 1) * (-k.fy * iz2) + g_jac(1, 2) * (2.0 * k.fy * t.y() * iz3);
    // Mean projection.
    g_t.x() += gs[0] * k.fx * iz;
    g_t.y() += gs[1] * k.fy * iz;
    g_t.z() += -gs[0] * k.fx * t.x() * iz2 - gs[1] * k.fy * t.y() * iz2;
    Vec3 g_mu = w.transpose() * g_t;

    // Sigma = M M^T, M = R diag(scale).
    const Mat3 m = st.rotation * st.scale.asDiagonal();
    const Mat3 g_m = 2.0 * g_sigma * m;
    Vec3 g_scale;
    for (int c = 0; c < 3; ++c) g_scale[c] = g_m.col(c).dot(st.rotation.col(c));
    const Mat3 g_rot = g_m * st.scale.asDiagonal();
    const Vec4 g_qunit = rotation_backward(st.q_unit, g_rot);
    const Vec4 g_q = (g_qunit - st.q_unit * st.q_unit.dot(g_qunit)) / st.q_norm;
    for (int c = 0; c < 4; ++c) out[ParameterLayout::kRotation + c] += g_q[c];

    // scale = gate_sca * exp(log_scale).
    for (int c = 0; c < 3; ++c) out[ParameterLayout::kLogScale + c] += g_scale[c] * st.scale[c];
    if (mod.enabled) {
      const double d_gate = g_scale.dot(st.base_scale);
      const double d_pre = d_gate * st.gate_sca * (1.0 - st.gate_sca);
      const VecX d_in = mlp_backward(mod.scale_net, st.input_sca, st.hidden_sca, d_pre,
                                     grad.data(), layout.scale_net_offset());
      for (int q = 0; q < scene.dims.feature_dim; ++q) out[layout.f_sca_field() + q] += d_in[q];
      d_dist_input += d_in[scene.dims.feature_dim];
    }

    // Distance input log1p(|mu - center|).
    if (d_dist_input != 0.0 && st.distance > 0.0) {
      g_mu += d_dist_input / (1.0 + st.distance) * (g.mu - cam.pose.center) / st.distance;
    }
    for (int c = 0; c < 3; ++c) out[ParameterLayout::kMu + c] += g_mu[c];
  }

  if (f.has_appearance) {
    const auto& app = scene.appearance;
    const VecX& e = app.embeddings[f.appearance_index];
    const Vec3 d_gain_pre = d_gain.cwiseProduct(f.affine.gain);  // through exp
    const std::size_t go = layout.gain_weights_offset();
    const std::size_t bo = layout.bias_weights_offset();
    const std::size_t eo = layout.embedding_offset(f.appearance_index);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < app.dim; ++c) {
        grad[go + r * app.dim + c] += d_gain_pre[r] * e[c];
        grad[bo + r * app.dim + c] += d_bias[r] * e[c];
        grad[eo + c] += d_gain_pre[r] * app.gain_weights(r, c) + d_bias[r] * app.bias_weights(r, c);
      }
    }
  }
  return grad;
}

void check_finite(const GaussianScene& scene, const std::vector<double>& grad) {
  const ParameterLayout layout(scene);
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (std::isfinite(grad[j])) continue;
    if (j < layout.global_size()) {
      throw NumericalError("non-finite gradient in shared network/appearance parameters", j);
    }
    throw NumericalError("non-finite gradient for primitive",
                         (j - layout.global_size()) / layout.primitive_size());
  }
}

}  // namespace

std::optional<ProjectedSplat> project_gaussian(const GaussianPrimitive& g,
                                               const Modulation& modulation,
                                               const Vec3& color, const Camera& camera,
                                               const RenderSettings& settings) {
  const Mat3 r = quaternion_to_rotation(g.rotation_q);
  const Vec3 s2 = modulation.scale.cwiseProduct(modulation.scale);
  const Mat3 sigma = r * s2.asDiagonal() * r.transpose();
  ProjectedSplat out;
  if (!project_into(g.mu, sigma, camera, settings, out, nullptr, nullptr, nullptr)) {
    return std::nullopt;
  }
  out.color = color;
  out.opacity = modulation.opacity;
  return out;
}

std::vector<ProjectedSplat> project_scene(const GaussianScene& scene, const Camera& camera,
                                          const RenderSettings& settings,
                                          std::optional<int> image_id) {
  Frame f = prepare_frame(scene, camera, settings, image_id);
  return f.splats;
}

double splat_alpha(const ProjectedSplat& splat, const Vec2& pixel) {
  return splat.opacity * std::exp(splat_power(splat, pixel.x(), pixel.y()));
}

Vec3 composite_pixel(std::span<const CompositeEntry> sorted, const RenderSettings& settings,
                     double* transmittance) {
  double t = 1.0;
  Vec3 c = Vec3::Zero();
  int count = 0;
  for (const CompositeEntry& e : sorted) {
    if (e.alpha < settings.min_alpha) continue;
    const double a = std::min(e.alpha, settings.max_alpha);
    c += (a * t) * e.color;
    t *= 1.0 - a;
    if (++count >= settings.max_splats_per_pixel) break;
  }
  if (transmittance) *transmittance = t;
  return c + t * settings.background;
}

RenderOutput render(const GaussianScene& scene, const Camera& camera,
                    const RenderSettings& settings, std::optional<int> image_id) {
  const Frame f = prepare_frame(scene, camera, settings, image_id);
  return rasterize(f, camera, settings);
}

std::vector<double> backpropagate_image_gradient(const GaussianScene& scene,
                                                 const Camera& camera,
                                                 const Image& image_gradient,
                                                 const RenderSettings& settings,
                                                 std::optional<int> image_id) {
  if (image_gradient.width() != camera.intrinsics.width ||
      image_gradient.height() != camera.intrinsics.height || image_gradient.channels() != 3) {
    throw DomainError("image gradient does not match the camera resolution");
  }
  const Frame f = prepare_frame(scene, camera, settings, image_id);
  const std::vector<double> g2d = rasterize_backward(f, camera, settings, image_gradient);
  std::vector<double> grad = chain_to_parameters(scene, f, camera, g2d);
  check_finite(scene, grad);
  return grad;
}

GradientResult render_with_gradients(const GaussianScene& scene, const Camera& camera,
                                     const Image& target, const LossConfig& loss,
                                     const RenderSettings& settings,
                                     std::optional<int> image_id) {
  if (target.width() != camera.intrinsics.width ||
      target.height() != camera.intrinsics.height || target.channels() != 3) {
    throw DomainError("render_with_gradients: target does not match the camera resolution");
  }
  const Frame f = prepare_frame(scene, camera, settings, image_id);
  GradientResult result;
  result.render = rasterize(f, camera, settings);
  Image d_image;
  result.loss = splat_loss(result.render.image, target, loss, &d_image);
  if (!std::isfinite(result.loss.total)) {
    throw NumericalError("non-finite loss", 0);
  }
  const std::vector<double> g2d = rasterize_backward(f, camera, settings, d_image);
  result.gradient = chain_to_parameters(scene, f, camera, g2d);
  check_finite(scene, result.gradient);
  return result;
}

}  // namespace aerosplat

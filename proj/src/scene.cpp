// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/scene.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "aerosplat/errors.hpp"

namespace aerosplat {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Mat3 quaternion_to_rotation(const Vec4& q_in) {
  const Vec4 q = q_in.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 covariance_from_params(const Vec3& log_scale, const Vec4& rotation_q) {
  const Mat3 r = quaternion_to_rotation(rotation_q);
  const Vec3 s2 = (2.0 * log_scale).array().exp();
  return r * s2.asDiagonal() * r.transpose();
}

double evaluate_gaussian(const GaussianPrimitive& g, const Vec3& x) {
  // Sigma^-1 = R diag(exp(-2 log_scale)) R^T.
  const Mat3 r = quaternion_to_rotation(g.rotation_q);
  const Vec3 local = r.transpose() * (x - g.mu);
  const Vec3 inv_s2 = (-2.0 * g.log_scale).array().exp();
  const double quad = local.cwiseProduct(local).dot(inv_s2);
  return g.opacity() * std::exp(-0.5 * quad);
}

Mlp Mlp::zeros(int input_dim, int hidden) {
  Mlp m;
  m.w1 = MatX::Zero(hidden, input_dim);
  m.b1 = VecX::Zero(hidden);
  m.w2 = VecX::Zero(hidden);
  m.b2 = 0.0;
  return m;
}

double Mlp::forward(const VecX& x, VecX* hidden_out) const {
  VecX h = (w1 * x + b1).array().tanh().matrix();
  const double out = w2.dot(h) + b2;
  if (hidden_out) *hidden_out = std::move(h);
  return out;
}

AdaptiveModulator AdaptiveModulator::zeros(const ModelDims& dims) {
  AdaptiveModulator m;
  m.scale_net = Mlp::zeros(dims.feature_dim + 1, dims.hidden_width);
  m.opacity_net = Mlp::zeros(dims.feature_dim + 1, dims.hidden_width);
  return m;
}

AdaptiveModulator AdaptiveModulator::initialize(const ModelDims& dims,
                                                std::mt19937_64& rng) {
  AdaptiveModulator m = zeros(dims);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double std_w = 1.0 / std::sqrt(static_cast<double>(dims.feature_dim + 1));
  for (Mlp* net : {&m.scale_net, &m.opacity_net}) {
    for (int r = 0; r < net->w1.rows(); ++r) {
      for (int c = 0; c < net->w1.cols(); ++c) net->w1(r, c) = std_w * n01(rng);
    }
  }
  return m;
}

VecX modulator_input(const VecX& feature, double d_gc) {
  VecX x(feature.size() + 1);
  x.head(feature.size()) = feature;
  x[feature.size()] = distance_input(d_gc);
  return x;
}

Modulation modulate(const GaussianPrimitive& g, double d_gc,
                    const AdaptiveModulator& modulator) {
  if (!(d_gc >= 0.0)) throw DomainError("modulate: negative camera distance");
  Modulation m;
  if (modulator.enabled) {
    m.opacity_gate = sigmoid(modulator.opacity_net.forward(modulator_input(g.f_opa, d_gc)));
    m.scale_gate = sigmoid(modulator.scale_net.forward(modulator_input(g.f_sca, d_gc)));
  }
  m.opacity = m.opacity_gate * g.opacity();
  m.scale = m.scale_gate * g.scale();
  return m;
}

AppearanceTable AppearanceTable::zeros(int dim) {
  AppearanceTable t;
  t.dim = dim;
  t.gain_weights = MatX::Zero(3, dim);
  t.bias_weights = MatX::Zero(3, dim);
  return t;
}

int AppearanceTable::register_image(int image_id, const VecX& embedding) {
  if (contains(image_id)) {
    throw DomainError("appearance: image id " + std::to_string(image_id) +
                      " already registered");
  }
  if (embedding.size() != dim) throw DomainError("appearance: embedding size mismatch");
  image_ids.push_back(image_id);
  embeddings.push_back(embedding);
  return static_cast<int>(image_ids.size()) - 1;
}

bool AppearanceTable::contains(int image_id) const {
  return std::find(image_ids.begin(), image_ids.end(), image_id) != image_ids.end();
}

int AppearanceTable::index_of(int image_id) const {
  const auto it = std::find(image_ids.begin(), image_ids.end(), image_id);
  if (it == image_ids.end()) {
    throw DomainError("appearance: unknown image id " + std::to_string(image_id));
  }
  return static_cast<int>(it - image_ids.begin());
}

AppearanceAffine AppearanceTable::affine(int image_id) const {
  const VecX& e = embeddings[index_of(image_id)];
  return {(gain_weights * e).array().exp().matrix(), bias_weights * e};
}

Vec3 apply_appearance(const Vec3& color, int image_id, const AppearanceTable& table) {
  const AppearanceAffine a = table.affine(image_id);
  return (a.gain.cwiseProduct(color) + a.bias).cwiseMax(0.0).cwiseMin(1.0);
}

Vec3 GaussianScene::centroid() const {
  Vec3 c = Vec3::Zero();
  if (gaussians.empty()) return c;
  for (const auto& g : gaussians) c += g.mu;
  return c / static_cast<double>(gaussians.size());
}

std::vector<double> nearest_neighbor_scales(const std::vector<ColoredPoint>& points,
                                            double isolated_scale) {
  const std::size_t n = points.size();
  std::vector<double> out(n, isolated_scale);
  std::vector<double> d;
  for (std::size_t i = 0; i < n; ++i) {
    d.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.push_back((points[i].position - points[j].position).norm());
    }
    if (d.empty()) continue;
    const std::size_t k = std::min<std::size_t>(3, d.size());
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    double s = 0.0;
    for (std::size_t t = 0; t < k; ++t) s += d[t];
    out[i] = std::max(s / k, 1e-7);
  }
  return out;
}

GaussianScene init_from_points(const std::vector<ColoredPoint>& points,
                               const InitOptions& options,
                               const std::vector<int>& training_image_ids) {
  if (points.empty()) throw DomainError("init_from_points: empty point cloud");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const ModelDims& dims = options.dims;

  GaussianScene scene;
  scene.dims = dims;
  scene.modulator = AdaptiveModulator::initialize(dims, rng);
  scene.appearance = AppearanceTable::zeros(dims.appearance_dim);
  for (int id : training_image_ids) {
    VecX e(dims.appearance_dim);
    for (int k = 0; k < e.size(); ++k) e[k] = options.embedding_noise * n01(rng);
    scene.appearance.register_image(id, e);
  }

  const std::vector<double> scales = nearest_neighbor_scales(points, options.isolated_scale);
  scene.gaussians.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    GaussianPrimitive g;
    g.mu = points[i].position;
    g.log_scale = Vec3::Constant(std::log(scales[i]));
    g.color = points[i].color.cwiseMax(0.0).cwiseMin(1.0);
    g.logit_opacity = logit(options.initial_opacity);
    g.f_sca.resize(dims.feature_dim);
    g.f_opa.resize(dims.feature_dim);
    for (int k = 0; k < dims.feature_dim; ++k) g.f_sca[k] = options.feature_noise * n01(rng);
    for (int k = 0; k < dims.feature_dim; ++k) g.f_opa[k] = options.feature_noise * n01(rng);
    scene.gaussians.push_back(std::move(g));
  }
  return scene;
}

std::vector<std::size_t> prune_by_opacity(GaussianScene& scene, double threshold) {
  std::vector<std::size_t> kept;
  std::vector<GaussianPrimitive> survivors;
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    if (scene.gaussians[i].opacity() >= threshold) {
      kept.push_back(i);
      survivors.push_back(std::move(scene.gaussians[i]));
    }
  }
  scene.gaussians = std::move(survivors);
  return kept;
}

const char* parameter_class_name(ParameterClass c) {
  switch (c) {
    case ParameterClass::kMean: return "mean";
    case ParameterClass::kLogScale: return "log_scale";
    case ParameterClass::kRotation: return "rotation";
    case ParameterClass::kColor: return "color";
    case ParameterClass::kOpacity: return "opacity";
    case ParameterClass::kFeature: return "feature";
    case ParameterClass::kNetwork: return "network";
    case ParameterClass::kAppearance: return "appearance";
  }
  return "unknown";
}

ParameterLayout::ParameterLayout(const GaussianScene& scene) {
  const ModelDims& d = scene.dims;
  mlp_size_ = static_cast<std::size_t>(d.hidden_width) * (d.feature_dim + 1) +
              2 * static_cast<std::size_t>(d.hidden_width) + 1;
  app_dim_ = static_cast<std::size_t>(scene.appearance.dim);
  feature_dim_ = static_cast<std::size_t>(d.feature_dim);
  global_size_ = 2 * mlp_size_ + 6 * app_dim_ + scene.appearance.embeddings.size() * app_dim_;
  primitive_size_ = kFeatures + 2 * feature_dim_;
  count_ = scene.gaussians.size();
}

ParameterClass ParameterLayout::class_of(std::size_t index) const {
  if (index < 2 * mlp_size_) return ParameterClass::kNetwork;
  if (index < global_size_) return ParameterClass::kAppearance;
  const std::size_t field = (index - global_size_) % primitive_size_;
  if (field < kLogScale) return ParameterClass::kMean;
  if (field < kRotation) return ParameterClass::kLogScale;
  if (field < kColor) return ParameterClass::kRotation;
  if (field < kLogitOpacity) return ParameterClass::kColor;
  if (field < kFeatures) return ParameterClass::kOpacity;
  return ParameterClass::kFeature;
}

namespace {

void check_dims(const GaussianScene& scene) {
  const ModelDims& d = scene.dims;
  for (const Mlp* net : {&scene.modulator.scale_net, &scene.modulator.opacity_net}) {
    if (net->w1.rows() != d.hidden_width || net->w1.cols() != d.feature_dim + 1 ||
        net->b1.size() != d.hidden_width || net->w2.size() != d.hidden_width) {
      throw DomainError("scene: modulator shape does not match model dims");
    }
  }
  const auto& app = scene.appearance;
  if (app.gain_weights.rows() != 3 || app.gain_weights.cols() != app.dim ||
      app.bias_weights.rows() != 3 || app.bias_weights.cols() != app.dim) {
    throw DomainError("scene: appearance decoder shape mismatch");
  }
  for (const auto& g : scene.gaussians) {
    if (g.f_sca.size() != d.feature_dim || g.f_opa.size() != d.feature_dim) {
      throw DomainError("scene: primitive feature size does not match model dims");
    }
  }
}

// Applies fn(double&) to every parameter in layout order.
template <typename Scene, typename Fn>
void for_each_parameter(Scene& scene, Fn&& fn) {
  auto mlp = [&](auto& net) {
    for (int r = 0; r < net.w1.rows(); ++r) {
      for (int c = 0; c < net.w1.cols(); ++c) fn(net.w1(r, c));
    }
    for (int i = 0; i < net.b1.size(); ++i) fn(net.b1[i]);
    for (int i = 0; i < net.w2.size(); ++i) fn(net.w2[i]);
    fn(net.b2);
  };
  mlp(scene.modulator.scale_net);
  mlp(scene.modulator.opacity_net);
  auto& app = scene.appearance;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < app.dim; ++c) fn(app.gain_weights(r, c));
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < app.dim; ++c) fn(app.bias_weights(r, c));
  }
  for (auto& e : app.embeddings) {
    for (int k = 0; k < e.size(); ++k) fn(e[k]);
  }
  for (auto& g : scene.gaussians) {
    for (int k = 0; k < 3; ++k) fn(g.mu[k]);
    for (int k = 0; k < 3; ++k) fn(g.log_scale[k]);
    for (int k = 0; k < 4; ++k) fn(g.rotation_q[k]);
    for (int k = 0; k < 3; ++k) fn(g.color[k]);
    fn(g.logit_opacity);
    for (int k = 0; k < g.f_sca.size(); ++k) fn(g.f_sca[k]);
    for (int k = 0; k < g.f_opa.size(); ++k) fn(g.f_opa[k]);
  }
}

}  // namespace

std::vector<double> pack_parameters(const GaussianScene& scene) {
  check_dims(scene);
  std::vector<double> out;
  out.reserve(ParameterLayout(scene).size());
  for_each_parameter(scene, [&](const double& v) { out.push_back(v); });
  return out;
}

void unpack_parameters(std::span<const double> params, GaussianScene& scene) {
  check_dims(scene);
  if (params.size() != ParameterLayout(scene).size()) {
    throw DomainError("unpack_parameters: size does not match scene layout");
  }
  std::size_t i = 0;
  for_each_parameter(scene, [&](double& v) { v = params[i++]; });
}

}  // namespace aerosplat

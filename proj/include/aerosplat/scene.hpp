// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Gaussian primitives, the distance-adaptive modulator and per-image
// appearance embeddings, plus a flat parameter layout shared by the renderer
// gradients and the optimizer.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "aerosplat/geometry.hpp"

namespace aerosplat {

using Vec4 = Eigen::Vector4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct ModelDims {
  int feature_dim = 8;      // F: length of f_sca and f_opa
  int hidden_width = 32;    // H: modulator hidden layer width
  int appearance_dim = 16;  // A: appearance embedding length

  bool operator==(const ModelDims&) const = default;
};

double sigmoid(double x);
double logit(double p);

// Rotation matrix of a quaternion (w, x, y, z); the input is normalized.
Mat3 quaternion_to_rotation(const Vec4& q);

// Sigma = R diag(exp(log_scale))^2 R^T.
Mat3 covariance_from_params(const Vec3& log_scale, const Vec4& rotation_q);

struct GaussianPrimitive {
  Vec3 mu = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation_q = Vec4(1.0, 0.0, 0.0, 0.0);  // (w, x, y, z)
  Vec3 color = Vec3::Constant(0.5);
  double logit_opacity = 0.0;
  VecX f_sca;
  VecX f_opa;

  double opacity() const { return sigmoid(logit_opacity); }
  Vec3 scale() const { return log_scale.array().exp(); }
  Mat3 covariance() const { return covariance_from_params(log_scale, rotation_q); }
};

// alpha * exp(-1/2 (X - mu)^T Sigma^-1 (X - mu)) with the base opacity.
double evaluate_gaussian(const GaussianPrimitive& g, const Vec3& x);

// Feed-forward network: scalar = w2 . tanh(W1 x + b1) + b2.
struct Mlp {
  MatX w1;  // hidden x input
  VecX b1;
  VecX w2;
  double b2 = 0.0;

  static Mlp zeros(int input_dim, int hidden);
  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + 1);
  }
  double forward(const VecX& x, VecX* hidden_out = nullptr) const;
};

// Input normalization for the camera distance fed to the modulator.
inline double distance_input(double d_gc) { return std::log1p(d_gc); }

struct AdaptiveModulator {
  Mlp scale_net;
  Mlp opacity_net;
  // Disabled modulators gate by exactly 1 (used for reference scenes).
  bool enabled = true;

  static AdaptiveModulator zeros(const ModelDims& dims);
  // Random first layer, zero output layer: the initial gates are exactly 0.5
  // while the hidden layer still receives gradient once w2 moves.
  static AdaptiveModulator initialize(const ModelDims& dims, std::mt19937_64& rng);
};

struct Modulation {
  double opacity = 0.0;       // gated opacity
  Vec3 scale = Vec3::Zero();  // gated per-axis scale
  double opacity_gate = 1.0;
  double scale_gate = 1.0;
};

VecX modulator_input(const VecX& feature, double d_gc);

Modulation modulate(const GaussianPrimitive& g, double d_gc,
                    const AdaptiveModulator& modulator);

struct AppearanceAffine {
  Vec3 gain = Vec3::Ones();
  Vec3 bias = Vec3::Zero();
};

// Per-image embeddings decoded by a shared linear map into a per-channel
// affine transform: gain = exp(G e), bias = B e. Zero decoder weights (or a
// zero embedding) give the identity.
struct AppearanceTable {
  int dim = 16;
  std::vector<int> image_ids;
  std::vector<VecX> embeddings;
  MatX gain_weights;  // 3 x dim
  MatX bias_weights;  // 3 x dim

  static AppearanceTable zeros(int dim);
  int register_image(int image_id, const VecX& embedding);
  // Position of image_id in the table; throws DomainError when unknown.
  int index_of(int image_id) const;
  bool contains(int image_id) const;
  AppearanceAffine affine(int image_id) const;
};

Vec3 apply_appearance(const Vec3& color, int image_id, const AppearanceTable& table);

struct GaussianScene {
  ModelDims dims;
  std::vector<GaussianPrimitive> gaussians;
  AdaptiveModulator modulator;
  AppearanceTable appearance;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
  Vec3 centroid() const;
};

struct InitOptions {
  ModelDims dims;
  double initial_opacity = 0.1;
  double feature_noise = 0.01;
  double embedding_noise = 0.01;
  // Scale used when a point has no neighbours.
  double isolated_scale = 0.1;
  std::uint64_t seed = 0;
};

struct ColoredPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Constant(0.5);
};

// Mean distance to the (up to) three nearest other points, per point.
std::vector<double> nearest_neighbor_scales(const std::vector<ColoredPoint>& points,
                                            double isolated_scale);

// One isotropic primitive per point. Throws DomainError for an empty cloud.
GaussianScene init_from_points(const std::vector<ColoredPoint>& points,
                               const InitOptions& options,
                               const std::vector<int>& training_image_ids = {});

// Removes primitives whose base opacity is below threshold; returns the
// surviving original indices in order.
std::vector<std::size_t> prune_by_opacity(GaussianScene& scene, double threshold);

// ---------------------------------------------------------------------------
// Flat parameter layout.
//
//   [scale_net | opacity_net | gain_weights | bias_weights | embeddings]
//   [primitive 0 | primitive 1 | ...]
//
// An Mlp block is W1 (row-major), b1, w2, b2. A primitive block is
// mu(3) log_scale(3) rotation_q(4) color(3) logit_opacity(1) f_sca(F) f_opa(F).

enum class ParameterClass : std::uint8_t {
  kMean,
  kLogScale,
  kRotation,
  kColor,
  kOpacity,
  kFeature,
  kNetwork,
  kAppearance,
};

inline constexpr int kParameterClassCount = 8;
const char* parameter_class_name(ParameterClass c);

class ParameterLayout {
 public:
  explicit ParameterLayout(const GaussianScene& scene);

  std::size_t size() const { return global_size_ + primitive_size_ * count_; }
  std::size_t global_size() const { return global_size_; }
  std::size_t primitive_size() const { return primitive_size_; }
  std::size_t primitive_count() const { return count_; }

  std::size_t scale_net_offset() const { return 0; }
  std::size_t opacity_net_offset() const { return mlp_size_; }
  std::size_t gain_weights_offset() const { return 2 * mlp_size_; }
  std::size_t bias_weights_offset() const { return 2 * mlp_size_ + 3 * app_dim_; }
  std::size_t embedding_offset(int table_index) const {
    return 2 * mlp_size_ + 6 * app_dim_ + static_cast<std::size_t>(table_index) * app_dim_;
  }
  std::size_t primitive_offset(std::size_t i) const {
    return global_size_ + i * primitive_size_;
  }

  static constexpr std::size_t kMu = 0;
  static constexpr std::size_t kLogScale = 3;
  static constexpr std::size_t kRotation = 6;
  static constexpr std::size_t kColor = 10;
  static constexpr std::size_t kLogitOpacity = 13;
  static constexpr std::size_t kFeatures = 14;
  std::size_t f_sca_field() const { return kFeatures; }
  std::size_t f_opa_field() const { return kFeatures + feature_dim_; }

  ParameterClass class_of(std::size_t index) const;

 private:
  std::size_t mlp_size_ = 0;
  std::size_t app_dim_ = 0;
  std::size_t feature_dim_ = 0;
  std::size_t global_size_ = 0;
  std::size_t primitive_size_ = 0;
  std::size_t count_ = 0;
};

std::vector<double> pack_parameters(const GaussianScene& scene);
void unpack_parameters(std::span<const double> params, GaussianScene& scene);

}  // namespace aerosplat

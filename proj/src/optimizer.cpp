// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/optimizer.hpp"

#include <cmath>

#include "aerosplat/errors.hpp"

namespace aerosplat {

double LearningRates::for_class(ParameterClass c) const {
  switch (c) {
    case ParameterClass::kMean: return mean;
    case ParameterClass::kLogScale: return log_scale;
    case ParameterClass::kRotation: return rotation;
    case ParameterClass::kColor: return color;
    case ParameterClass::kOpacity: return opacity;
    case ParameterClass::kFeature: return feature;
    case ParameterClass::kNetwork: return network;
    case ParameterClass::kAppearance: return appearance;
  }
  return 0.0;
}

void LearningRates::validate() const {
  for (double r : {mean, log_scale, rotation, color, opacity, feature, network, appearance}) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw DomainError("learning rates must be finite and non-negative");
    }
  }
}

AdamOptimizer::AdamOptimizer(const GaussianScene& scene, const AdamConfig& config)
    : config_(config) {
  config_.lr.validate();
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.epsilon > 0.0)) {
    throw DomainError("adam: betas must be in [0, 1) and epsilon > 0");
  }
  rebuild_rates(scene);
  m_.assign(rate_.size(), 0.0);
  v_.assign(rate_.size(), 0.0);
}

void AdamOptimizer::rebuild_rates(const GaussianScene& scene) {
  const ParameterLayout layout(scene);
  global_size_ = layout.global_size();
  primitive_size_ = layout.primitive_size();
  rate_.resize(layout.size());
  for (std::size_t i = 0; i < rate_.size(); ++i) {
    rate_[i] = config_.lr.for_class(layout.class_of(i));
  }
}

void AdamOptimizer::step(GaussianScene& scene, std::span<const double> gradient) {
  if (gradient.size() != m_.size()) {
    throw DomainError("adam: gradient size does not match optimizer state");
  }
  std::vector<double> params = pack_parameters(scene);
  if (params.size() != m_.size()) throw DomainError("adam: scene layout changed");
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= rate_[i] * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
  unpack_parameters(params, scene);
}

void AdamOptimizer::compact(const GaussianScene& pruned_scene,
                            const std::vector<std::size_t>& kept) {
  std::vector<double> m(m_.begin(), m_.begin() + static_cast<std::ptrdiff_t>(global_size_));
  std::vector<double> v(v_.begin(), v_.begin() + static_cast<std::ptrdiff_t>(global_size_));
  for (std::size_t i : kept) {
    const std::size_t off = global_size_ + i * primitive_size_;
    if (off + primitive_size_ > m_.size()) throw DomainError("adam: kept index out of range");
    m.insert(m.end(), m_.begin() + off, m_.begin() + off + primitive_size_);
    v.insert(v.end(), v_.begin() + off, v_.begin() + off + primitive_size_);
  }
  m_ = std::move(m);
  v_ = std::move(v);
  rebuild_rates(pruned_scene);
  if (rate_.size() != m_.size()) throw DomainError("adam: pruned scene does not match kept set");
}

}  // namespace aerosplat

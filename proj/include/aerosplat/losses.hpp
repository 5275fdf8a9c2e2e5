// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "aerosplat/image.hpp"

namespace aerosplat {

struct LossConfig {
  double lambda_dssim = 0.2;
  double lambda_l2 = 0.8;
  std::vector<int> sobel_scales{1, 2, 4};
  double edge_floor = 1.0;

  // Throws DomainError on negative weights or repeated / non-positive scales.
  void validate() const;
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Mean squared error over all pixels and channels.
double mse(const Image& a, const Image& b);

// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

// Mean SSIM over all valid 11x11 windows (Gaussian weights, sigma 1.5) and
// channels. When `grad_a` is non-null it receives d ssim / d a.
double ssim(const Image& a, const Image& b, Image* grad_a = nullptr);

// (1 - ssim) / 2.
double dssim(const Image& a, const Image& b, Image* grad_a = nullptr);

// Sobel gradient magnitude with replicate padding, averaged over channels.
// Returns a single-channel image.
Image sobel_magnitude(const Image& img);

// Sum over scales of mean((w0 + normalized sobel(target_s)) * (pred_s -
// target_s)^2), with images average-pooled by each scale factor. Edge
// weights come from the target only.
double edge_weighted_l2(const Image& pred, const Image& target, const LossConfig& cfg,
                        Image* grad_pred = nullptr);

struct LossValue {
  double total = 0.0;
  double dssim = 0.0;
  double l2 = 0.0;
};

// lambda_dssim * DSSIM + lambda_l2 * MSE.
LossValue splat_loss(const Image& render, const Image& gt, const LossConfig& cfg,
                     Image* grad_render = nullptr);

}  // namespace aerosplat

// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aerosplat/errors.hpp"
#include "aerosplat/parallel.hpp"

namespace aerosplat {

Vec2 TokenGrid::token_center(int index) const {
  const int r = index / cols;
  const int c = index % cols;
  return {c * patch_w + (patch_w - 1) / 2.0, r * patch_h + (patch_h - 1) / 2.0};
}

int TokenGrid::token_at(const Vec2& pixel) const {
  const int u = static_cast<int>(std::lround(pixel.x()));
  const int v = static_cast<int>(std::lround(pixel.y()));
  if (u < 0 || v < 0 || u >= image_width() || v >= image_height()) return -1;
  return (v / patch_h) * cols + u / patch_w;
}

double TokenGrid::half_diagonal() const {
  return 0.5 * std::hypot(static_cast<double>(patch_w), static_cast<double>(patch_h));
}

void TokenGrid::validate(const CameraIntrinsics& intr) const {
  if (rows <= 0 || cols <= 0 || patch_h <= 0 || patch_w <= 0) {
    throw DomainError("token grid: dimensions must be positive");
  }
  if (image_width() != intr.width || image_height() != intr.height) {
    throw DomainError("token grid: " + std::to_string(cols) + "x" +
                      std::to_string(patch_w) + " by " + std::to_string(rows) +
                      "x" + std::to_string(patch_h) +
                      " does not tile the camera image");
  }
}

int BitMatrix::count_row(int r) const {
  const auto* p = row(r);
  return std::accumulate(p, p + cols_, 0);
}

std::size_t BitMatrix::count() const {
  return std::accumulate(bits_.begin(), bits_.end(), std::size_t{0});
}

bool BitMatrix::subset_of(const BitMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

BitMatrix dilate_mask(const BitMatrix& grid_bits, int radius) {
  if (radius < 0) throw DomainError("dilate_mask: negative radius");
  if (radius == 0) return grid_bits;
  const int rows = grid_bits.rows();
  const int cols = grid_bits.cols();
  // Square structuring element is separable: horizontal pass, then vertical.
  BitMatrix horizontal(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!grid_bits.get(r, c)) continue;
      const int lo = std::max(0, c - radius);
      const int hi = std::min(cols - 1, c + radius);
      for (int k = lo; k <= hi; ++k) horizontal.set(r, k);
    }
  }
  BitMatrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!horizontal.get(r, c)) continue;
      const int lo = std::max(0, r - radius);
      const int hi = std::min(rows - 1, r + radius);
      for (int k = lo; k <= hi; ++k) out.set(k, c);
    }
  }
  return out;
}

EpipolarMask build_epipolar_mask(const Camera& novel, const Camera& reference,
                                 const TokenGrid& grid,
                                 const EpipolarMaskOptions& options) {
  grid.validate(novel.intrinsics);
  grid.validate(reference.intrinsics);
  if (options.dilation_radius < 0) {
    throw DomainError("build_epipolar_mask: negative dilation radius");
  }
  const Mat3 f = fundamental_matrix(novel.intrinsics, novel.pose,
                                    reference.intrinsics, reference.pose);
  const int n = grid.size();
  EpipolarMask mask;
  mask.grid = grid;
  mask.dilation_radius = options.dilation_radius;
  mask.band_px = options.band_px > 0.0 ? options.band_px : grid.half_diagonal();
  mask.bits = BitMatrix(n, n);

  std::vector<std::uint8_t> miss(n, 0);
  std::vector<std::uint8_t> at_epipole(n, 0);
  std::vector<Vec2> centers(n);
  for (int j = 0; j < n; ++j) centers[j] = grid.token_center(j);

  parallel_for_workers(n, options.threads, [&](int, std::size_t idx) {
    const int i = static_cast<int>(idx);
    std::uint8_t* row = mask.bits.row(i);
    EpipolarLine line;
    try {
      line = epipolar_line(f, centers[i]);
    } catch (const DegenerateGeometryError&) {
      std::fill(row, row + n, 1);
      at_epipole[i] = 1;
      return;
    }
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (std::abs(line.signed_distance(centers[j])) <= mask.band_px) {
        row[j] = 1;
        any = true;
      }
    }
    if (!any) {
      miss[i] = 1;
      return;
    }
    if (mask.dilation_radius > 0) {
      BitMatrix tile(grid.rows, grid.cols);
      std::copy(row, row + n, tile.row(0));
      const BitMatrix grown = dilate_mask(tile, mask.dilation_radius);
      std::copy(grown.row(0), grown.row(0) + n, row);
    }
  });

  for (int i = 0; i < n; ++i) {
    if (miss[i]) mask.misses.push_back(i);
    if (at_epipole[i]) mask.epipole_fallbacks.push_back(i);
  }
  return mask;
}

CausalBlockMask assemble_causal_mask(const EpipolarMask& epipolar) {
  const int n = epipolar.bits.rows();
  CausalBlockMask out;
  out.tokens_per_view = n;
  out.bits = BitMatrix(2 * n, 2 * n);
  for (int r = 0; r < n; ++r) {
    std::uint8_t* row = out.bits.row(r);
    std::fill(row, row + n, 1);
    std::copy(epipolar.bits.row(r), epipolar.bits.row(r) + n, row + n);
  }
  for (int r = n; r < 2 * n; ++r) {
    std::uint8_t* row = out.bits.row(r);
    std::fill(row + n, row + 2 * n, 1);
  }
  return out;
}

namespace {

void check_shapes(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                  const CausalBlockMask& mask) {
  const auto rows = mask.bits.rows();
  if (q.cols() < 1) throw DomainError("masked_attention: feature dimension must be >= 1");
  if (q.rows() != rows || k.rows() != rows || k.cols() != q.cols() ||
      mask.bits.cols() != rows) {
    throw DomainError("masked_attention: shape mismatch between Q, K and mask");
  }
}

// Softmax weights for one query row; entries outside `support` stay zero.
void row_weights(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                 const CausalBlockMask& mask, MaskMode mode, int i,
                 double inv_sqrt_d, std::vector<double>& w) {
  const int m = mask.bits.rows();
  const std::uint8_t* bits = mask.bits.row(i);
  w.assign(m, 0.0);
  if (std::none_of(bits, bits + m, [](std::uint8_t b) { return b != 0; })) {
    throw DomainError("masked_attention: mask row " + std::to_string(i) +
                      " has no admissible key");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    if (mode == MaskMode::kExclude && !bits[j]) continue;
    double logit = q.row(i).dot(k.row(j)) * inv_sqrt_d;
    if (mode == MaskMode::kMultiplyLogits && !bits[j]) logit = 0.0;
    w[j] = logit;
    max_logit = std::max(max_logit, logit);
  }
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    if (mode == MaskMode::kExclude && !bits[j]) continue;
    w[j] = std::exp(w[j] - max_logit);
    sum += w[j];
  }
  for (int j = 0; j < m; ++j) {
    if (mode == MaskMode::kExclude && !bits[j]) continue;
    w[j] /= sum;
  }
}

}  // namespace

Eigen::MatrixXd attention_weights(const Eigen::MatrixXd& q,
                                  const Eigen::MatrixXd& k,
                                  const CausalBlockMask& mask, MaskMode mode) {
  check_shapes(q, k, mask);
  const int m = mask.bits.rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> w;
  for (int i = 0; i < m; ++i) {
    row_weights(q, k, mask, mode, i, inv_sqrt_d, w);
    for (int j = 0; j < m; ++j) out(i, j) = w[j];
  }
  return out;
}

Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q,
                                 const Eigen::MatrixXd& k,
                                 const Eigen::MatrixXd& v,
                                 const CausalBlockMask& mask, MaskMode mode) {
  check_shapes(q, k, mask);
  const int m = mask.bits.rows();
  if (v.rows() != m) throw DomainError("masked_attention: V row count mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, v.cols());
  std::vector<double> w;
  for (int i = 0; i < m; ++i) {
    row_weights(q, k, mask, mode, i, inv_sqrt_d, w);
    const std::uint8_t* bits = mask.bits.row(i);
    for (int j = 0; j < m; ++j) {
      // Excluded keys never touch the accumulator, so their values cannot
      // leak into the output bits.
      if (mode == MaskMode::kExclude && !bits[j]) continue;
      out.row(i) += w[j] * v.row(j);
    }
  }
  return out;
}

std::vector<std::uint8_t> mask_row_image(const EpipolarMask& mask, int novel_token) {
  if (novel_token < 0 || novel_token >= mask.bits.rows()) {
    throw DomainError("mask_row_image: token index out of range");
  }
  const int n = mask.bits.cols();
  std::vector<std::uint8_t> out(n);
  const std::uint8_t* row = mask.bits.row(novel_token);
  for (int j = 0; j < n; ++j) out[j] = row[j] ? 255 : 0;
  return out;
}

}  // namespace aerosplat

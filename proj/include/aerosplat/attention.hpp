// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Epipolar attention masks and the asymmetric cross-view attention kernel.
//
// Tokens are indexed row-major over a TokenGrid. For a (novel, reference)
// pair of views, the joint token sequence is [novel tokens | reference
// tokens]. Novel tokens attend to every novel token and to the reference
// tokens near their epipolar line; reference tokens attend only to reference
// tokens.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "aerosplat/geometry.hpp"

namespace aerosplat {

struct TokenGrid {
  int rows = 32;
  int cols = 32;
  int patch_h = 1;
  int patch_w = 1;

  int size() const { return rows * cols; }
  int image_width() const { return cols * patch_w; }
  int image_height() const { return rows * patch_h; }
  // Center pixel of token `index` (pixel centers at integer coordinates).
  Vec2 token_center(int index) const;
  // Token containing a pixel position, or -1 outside the grid.
  int token_at(const Vec2& pixel) const;
  double half_diagonal() const;
  // Throws DomainError unless rows * patch_h and cols * patch_w match the
  // image size.
  void validate(const CameraIntrinsics& intr) const;
};

class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(int rows, int cols, bool value = false)
      : rows_(rows), cols_(cols),
        bits_(static_cast<std::size_t>(rows) * cols, value ? 1 : 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool get(int r, int c) const { return bits_[index(r, c)] != 0; }
  void set(int r, int c, bool v = true) { bits_[index(r, c)] = v ? 1 : 0; }
  const std::uint8_t* row(int r) const { return bits_.data() + index(r, 0); }
  std::uint8_t* row(int r) { return bits_.data() + index(r, 0); }
  int count_row(int r) const;
  std::size_t count() const;
  // Elementwise a <= b.
  bool subset_of(const BitMatrix& other) const;

  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Novel-token x reference-token mask. Row i, reshaped to the token grid,
// marks the reference tokens novel token i may attend to.
struct EpipolarMask {
  BitMatrix bits;
  TokenGrid grid;
  int dilation_radius = 0;
  double band_px = 0.0;
  // Novel tokens whose epipolar line misses every reference token.
  std::vector<int> misses;
  // Novel tokens at the epipole; their rows are set to all ones.
  std::vector<int> epipole_fallbacks;
};

// 2n x 2n, layout [novel | reference] on both axes.
struct CausalBlockMask {
  BitMatrix bits;
  int tokens_per_view = 0;
};

struct EpipolarMaskOptions {
  // Distance threshold from token center to the epipolar line, pixels.
  // Non-positive selects half the token patch diagonal.
  double band_px = 0.0;
  int dilation_radius = 1;
  int threads = 0;
};

EpipolarMask build_epipolar_mask(const Camera& novel, const Camera& reference,
                                 const TokenGrid& grid,
                                 const EpipolarMaskOptions& options = {});

// Dilation of a 2D binary grid by a (2r+1) x (2r+1) square, clipped at the
// borders. Radius 0 returns the input.
BitMatrix dilate_mask(const BitMatrix& grid_bits, int radius);

CausalBlockMask assemble_causal_mask(const EpipolarMask& epipolar);

enum class MaskMode {
  // Masked logits are excluded from the softmax (weight exactly zero).
  kExclude,
  // Literal elementwise product of logits with the mask; masked entries keep
  // a zero logit and still receive softmax weight. Comparison only.
  kMultiplyLogits,
};

// Row-softmax attention weights, 2n x 2n.
Eigen::MatrixXd attention_weights(const Eigen::MatrixXd& q,
                                  const Eigen::MatrixXd& k,
                                  const CausalBlockMask& mask,
                                  MaskMode mode = MaskMode::kExclude);

// softmax(Q K^T / sqrt(d), masked) V. Throws DomainError on shape mismatch or
// an all-zero mask row.
Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q,
                                 const Eigen::MatrixXd& k,
                                 const Eigen::MatrixXd& v,
                                 const CausalBlockMask& mask,
                                 MaskMode mode = MaskMode::kExclude);

// Row `novel_token` of the epipolar mask as a grid-shaped image (0 or 255),
// row-major rows x cols.
std::vector<std::uint8_t> mask_row_image(const EpipolarMask& mask, int novel_token);

}  // namespace aerosplat

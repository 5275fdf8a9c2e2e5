// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace aerosplat {

// Interleaved row-major float image, values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 3, double fill = 0.0)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Channel mean, single-channel output.
Image to_grayscale(const Image& img);
// One channel of a multi-channel image.
Image extract_channel(const Image& img, int channel);
// Box average over factor x factor blocks; trailing partial blocks dropped.
Image downsample_average(const Image& img, int factor);
// Adjoint of downsample_average for gradient propagation.
Image downsample_average_adjoint(const Image& grad, int factor, int width, int height);
Image gaussian_blur(const Image& img, double sigma);
Image clamp01(Image img);

// 8-bit I/O. PNG via libpng; PPM (P6) / PGM (P5) written with maxval 255.
// Readers accept 1 or 3 channel PNG and P5/P6 netpbm with maxval <= 65535.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& img);
Image read_pnm(const std::filesystem::path& path);
// Dispatch on extension (.png, .ppm, .pgm, .pnm).
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);
void write_pgm_bytes(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& gray);

}  // namespace aerosplat

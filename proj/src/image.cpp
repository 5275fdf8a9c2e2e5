// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "aerosplat/errors.hpp"

namespace aerosplat {

Image to_grayscale(const Image& img) {
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels(); ++c) s += img.at(x, y, c);
      out.at(x, y) = s / img.channels();
    }
  }
  return out;
}

Image extract_channel(const Image& img, int channel) {
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = img.at(x, y, channel);
  }
  return out;
}

Image downsample_average(const Image& img, int factor) {
  if (factor < 1) throw DomainError("downsample_average: factor must be >= 1");
  if (factor == 1) return img;
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  Image out(w, h, img.channels());
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            s += img.at(x * factor + dx, y * factor + dy, c);
          }
        }
        out.at(x, y, c) = s * inv;
      }
    }
  }
  return out;
}

Image downsample_average_adjoint(const Image& grad, int factor, int width, int height) {
  if (factor == 1) return grad;
  Image out(width, height, grad.channels());
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < grad.height(); ++y) {
    for (int x = 0; x < grad.width(); ++x) {
      for (int c = 0; c < grad.channels(); ++c) {
        const double g = grad.at(x, y, c) * inv;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            out.at(x * factor + dx, y * factor + dy, c) = g;
          }
        }
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  const int w = img.width();
  const int h = img.height();
  auto clampi = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
  Image tmp(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          s += k[i + radius] * img.at(clampi(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = s;
      }
    }
  }
  Image out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          s += k[i + radius] * tmp.at(x, clampi(y + i, 0, h - 1), c);
        }
        out.at(x, y, c) = s;
      }
    }
  }
  return out;
}

Image clamp01(Image img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw DomainError("write_png: only 1 or 3 channel images are supported");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialization failed");
  }
  std::vector<std::uint8_t> rows(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) rows[i] = to_byte(img.data()[i]);
  std::vector<png_bytep> row_ptrs(img.height());
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  for (int y = 0; y < img.height(); ++y) row_ptrs[y] = rows.data() + y * stride;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  std::vector<std::uint8_t> buffer;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("invalid PNG file " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = png_get_channels(png, info);
  buffer.resize(static_cast<std::size_t>(w) * h * ch);
  row_ptrs.resize(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = buffer.data() + static_cast<std::size_t>(y) * w * ch;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  Image out(w, h, ch);
  for (std::size_t i = 0; i < buffer.size(); ++i) out.data()[i] = buffer[i] / 255.0;
  return out;
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw DomainError("write_pnm: only 1 or 3 channel images are supported");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << (img.channels() == 3 ? "P6" : "P5") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  std::vector<char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<char>(to_byte(img.data()[i]));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto next_token = [&]() {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P6") throw ParseError("unsupported netpbm magic '" + magic + "'");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ParseError("malformed netpbm header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw ParseError("invalid netpbm header values in " + path.string());
  }
  const int ch = magic == "P6" ? 3 : 1;
  const int bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * ch * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw ParseError("truncated netpbm payload in " + path.string());
  }
  Image out(w, h, ch);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned v = bytes_per == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
    out.data()[i] = static_cast<double>(v) / maxval;
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return write_pnm(path, img);
  throw DomainError("unsupported image extension '" + ext + "'");
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw DomainError("unsupported image extension '" + ext + "'");
}

void write_pgm_bytes(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& gray) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
}

}  // namespace aerosplat

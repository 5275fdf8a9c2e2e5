// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aerosplat/errors.hpp"
#include "aerosplat/image.hpp"
#include "oracles.hpp"

using namespace aerosplat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aerosplat_test_image";
  fs::create_directories(dir);
  return dir / name;
}

// Values on the 8-bit grid survive quantization exactly.
Image quantized_image(oracle::Rng& rng, int w, int h, int c) {
  Image img(w, h, c);
  for (double& v : img.data()) v = std::floor(oracle::uniform(rng, 0, 256)) / 255.0;
  return img;
}

}  // namespace

TEST_CASE("grayscale and channel extraction") {
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 0.3;
  img.at(0, 0, 1) = 0.6;
  img.at(0, 0, 2) = 0.9;
  const Image g = to_grayscale(img);
  CHECK(g.channels() == 1);
  CHECK(g.at(0, 0) == doctest::Approx(0.6));
  CHECK(extract_channel(img, 2).at(0, 0) == 0.9);
}

TEST_CASE("downsample averages blocks and drops partial ones") {
  Image img(5, 3, 1);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) img.at(x, y) = x + 10 * y;
  }
  const Image d = downsample_average(img, 2);
  CHECK(d.width() == 2);
  CHECK(d.height() == 1);
  CHECK(d.at(0, 0) == doctest::Approx((0 + 1 + 10 + 11) / 4.0));
  CHECK(d.at(1, 0) == doctest::Approx((2 + 3 + 12 + 13) / 4.0));
  CHECK(downsample_average(img, 1) == img);
  CHECK_THROWS_AS(downsample_average(img, 0), DomainError);
}

TEST_CASE("downsample adjoint satisfies the inner-product identity") {
  oracle::Rng rng(1);
  const Image x = oracle::random_image(rng, 13, 9, 3);
  const Image y = oracle::random_image(rng, 6, 4, 3);
  const Image dx = downsample_average(x, 2);
  const Image aty = downsample_average_adjoint(y, 2, 13, 9);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) lhs += dx.data()[i] * y.data()[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data()[i] * aty.data()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("blur keeps constants and smooths impulses") {
  const Image flat(9, 7, 3, 0.4);
  const Image b = gaussian_blur(flat, 1.3);
  for (double v : b.data()) CHECK(v == doctest::Approx(0.4));
  Image impulse(9, 9, 1);
  impulse.at(4, 4) = 1.0;
  const Image s = gaussian_blur(impulse, 1.0);
  CHECK(s.at(4, 4) < 1.0);
  CHECK(s.at(3, 4) == doctest::Approx(s.at(5, 4)));
  CHECK(s.at(4, 3) == doctest::Approx(s.at(3, 4)));
  double sum = 0.0;
  for (double v : s.data()) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(gaussian_blur(impulse, 0.0) == impulse);
}

TEST_CASE("clamp01") {
  Image img(2, 1, 1);
  img.at(0, 0) = -0.5;
  img.at(1, 0) = 1.5;
  const Image c = clamp01(img);
  CHECK(c.at(0, 0) == 0.0);
  CHECK(c.at(1, 0) == 1.0);
}

TEST_CASE("png and pnm round trips on the 8-bit grid") {
  oracle::Rng rng(2);
  for (int channels : {1, 3}) {
    const Image img = quantized_image(rng, 7, 5, channels);
    const fs::path png = scratch("rt" + std::to_string(channels) + ".png");
    write_image(png, img);
    CHECK(read_image(png) == img);
    const fs::path pnm = scratch(channels == 1 ? "rt.pgm" : "rt.ppm");
    write_image(pnm, img);
    CHECK(read_image(pnm) == img);
  }
}

TEST_CASE("image readers reject bad input") {
  const fs::path junk = scratch("junk.png");
  std::ofstream(junk) << "not a png";
  CHECK_THROWS_AS(read_png(junk), ParseError);
  const fs::path bad_magic = scratch("bad.ppm");
  std::ofstream(bad_magic) << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_pnm(bad_magic), ParseError);
  const fs::path truncated = scratch("short.ppm");
  std::ofstream(truncated, std::ios::binary) << "P6\n4 4\n255\n" << std::string(5, 'x');
  CHECK_THROWS_AS(read_pnm(truncated), ParseError);
  CHECK_THROWS_AS(write_image(scratch("x.bmp"), Image(1, 1, 3)), DomainError);
  CHECK_THROWS(read_png(scratch("missing.png")));
}

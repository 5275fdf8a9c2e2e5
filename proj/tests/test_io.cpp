// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>

#include "aerosplat/errors.hpp"
#include "aerosplat/io.hpp"
#include "aerosplat/synthetic.hpp"
#include "oracles.hpp"

using namespace aerosplat;
using oracle::Rng;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCameras =
    "# Camera list\n"
    "1 PINHOLE 640 480 500 510 319.5 239.5\n"
    "\n"
    "2 SIMPLE_PINHOLE 320 240 300 160 120\n";

// Image 1 is a 90 degree rotation about z; image 2 has a non-unit quaternion.
constexpr const char* kImages =
    "# Image list\n"
    "1 0.70710678 0 0 0.70710678 1 2 3 1 left image.png\n"
    "10 1 2 20\n"
    "2 1.01 0 0 0 0 0 5 2 right.png\n"
    "\n";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aerosplat_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> as_bytes(const std::string& s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("colmap cameras") {
  const auto cams = parse_colmap_cameras(kCameras);
  REQUIRE(cams.size() == 2);
  CHECK(cams.at(1).fx == 500.0);
  CHECK(cams.at(1).fy == 510.0);
  CHECK(cams.at(1).width == 640);
  CHECK(cams.at(2).fx == 300.0);
  CHECK(cams.at(2).fy == 300.0);
  CHECK(cams.at(2).cy == 120.0);
  const auto again = parse_colmap_cameras(export_colmap_cameras(cams));
  CHECK(again.at(1).cx == cams.at(1).cx);
  CHECK(again.at(2).height == 240);

  try {
    parse_colmap_cameras("1 PINHOLE 640 480 500 510 319.5 239.5\n2 OPENCV 1 1 1 1 1 1 0 0 0 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_colmap_cameras("1 PINHOLE 640 480 500 510 319.5\n"), ParseError);
  CHECK_THROWS_AS(parse_colmap_cameras("1 PINHOLE 640 480 500 510 319.5 239.5\n"
                                       "1 PINHOLE 640 480 500 510 319.5 239.5\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_colmap_cameras("1 PINHOLE 640 480 -5 510 319.5 239.5\n"), ParseError);
  CHECK_THROWS_AS(parse_colmap_cameras("x PINHOLE 640 480 500 510 319.5 239.5\n"), ParseError);
}

TEST_CASE("colmap images map world to camera") {
  const auto cams = parse_colmap_cameras(kCameras);
  std::vector<std::string> warnings;
  const auto imgs = parse_colmap_images(kImages, &cams, &warnings);
  REQUIRE(imgs.size() == 2);
  CHECK(imgs[0].name == "left image.png");
  CHECK(imgs[1].camera_id == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("line 4") != std::string::npos);

  // World-to-camera rotation from the quaternion by hand.
  const Mat3 r = oracle::rotation_from_quaternion(Vec4(0.70710678, 0, 0, 0.70710678));
  const Vec3 t(1, 2, 3);
  CHECK((imgs[0].pose.rotation - r.transpose()).norm() < 1e-7);
  CHECK((r * imgs[0].pose.center + t).norm() < 1e-7);
  CHECK((imgs[1].pose.center - Vec3(0, 0, -5)).norm() < 1e-12);
  CHECK_NOTHROW(imgs[0].pose.validate());

  const auto again = parse_colmap_images(export_colmap_images(imgs), &cams);
  REQUIRE(again.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK((again[i].pose.rotation - imgs[i].pose.rotation).norm() < 1e-12);
    CHECK((again[i].pose.center - imgs[i].pose.center).norm() < 1e-12);
    CHECK(again[i].name == imgs[i].name);
  }

  CHECK_THROWS_AS(parse_colmap_images("1 1 0 0 0 0 0 0 9 a.png\n", &cams), ParseError);
  CHECK_THROWS_AS(parse_colmap_images("1 0 0 0 0 0 0 0 1 a.png\n"), ParseError);
  CHECK_THROWS_AS(parse_colmap_images("1 1 0 0 0 0 0 0 1 a.png\n\n1 1 0 0 0 0 0 0 1 b.png\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_colmap_images("1 1 0 0 0 0 0 0 1\n"), ParseError);
}

TEST_CASE("colmap points") {
  const auto pts = parse_colmap_points("# comment\n1 0.5 -1 2 255 0 51 0.3 4 5 6 7\n2 1 1 1 0 0 0 0\n");
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].position == Vec3(0.5, -1, 2));
  CHECK(pts[0].color == Vec3(1, 0, 0.2));
  const auto again = parse_colmap_points(export_colmap_points(pts));
  CHECK(again[0].position == pts[0].position);
  CHECK((again[0].color - pts[0].color).norm() < 1e-12);
  CHECK_THROWS_AS(parse_colmap_points("1 0 0 0 256 0 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_colmap_points("1 0 0 0 1 0 0 0 4\n"), ParseError);
  CHECK_THROWS_AS(parse_colmap_points("1 0 0 nan 1 0 0 0\n"), ParseError);
}

TEST_CASE("ply ascii and binary agree") {
  Rng rng(1);
  std::vector<ColoredPoint> pts(25);
  for (auto& p : pts) {
    p.position = Vec3(oracle::normal(rng), oracle::normal(rng), oracle::normal(rng));
    for (int c = 0; c < 3; ++c) p.color[c] = std::floor(oracle::uniform(rng, 0, 256)) / 255.0;
  }
  const auto a = parse_ply_points(write_ply_points(pts, false));
  const auto b = parse_ply_points(write_ply_points(pts, true));
  REQUIRE(a.size() == pts.size());
  REQUIRE(b.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK((a[i].position - b[i].position).norm() < 1e-6);
    CHECK((a[i].position - pts[i].position).norm() < 1e-6);
    CHECK((a[i].color - pts[i].color).norm() < 1e-12);
    CHECK(a[i].color == b[i].color);
  }

  const std::string no_color =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n1 2 3\n4 5 6\n";
  const auto gray = parse_ply_points(no_color);
  REQUIRE(gray.size() == 2);
  CHECK(gray[1].position == Vec3(4, 5, 6));
  CHECK(gray[0].color == Vec3::Constant(0.5));

  const std::string with_face =
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\n"
      "property double z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
      "element face 0\nproperty list uchar int vertex_indices\nend_header\n1 2 3 255 0 0\n";
  CHECK(parse_ply_points(with_face)[0].color == Vec3(1, 0, 0));
}

TEST_CASE("malformed ply") {
  CHECK_THROWS_AS(parse_ply_points("plx\n"), ParseError);
  CHECK_THROWS_AS(parse_ply_points("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_ply_points("ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                                   "property float x\nproperty float y\nproperty float z\n"
                                   "end_header\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_ply_points("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                   "property float y\nproperty float z\nend_header\n1 2 3\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_ply_points("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
                                   "property float y\nend_header\n1 2\n"),
                  ParseError);
  std::string bin = write_ply_points({ColoredPoint{}, ColoredPoint{}}, true);
  bin.resize(bin.size() - 3);
  CHECK_THROWS_AS(parse_ply_points(bin), ParseError);
}

TEST_CASE("checkpoints round trip at float precision") {
  Rng rng(2);
  GaussianScene s = oracle::random_scene(rng, 9, true);
  s.appearance.register_image(17, VecX::Constant(s.dims.appearance_dim, 0.25));
  const auto bytes = serialize_checkpoint(s);
  const GaussianScene back = deserialize_checkpoint(bytes);
  const GaussianScene q = quantize_to_float(s);
  CHECK(pack_parameters(back) == pack_parameters(q));
  CHECK(back.appearance.image_ids == s.appearance.image_ids);
  CHECK(back.modulator.enabled == s.modulator.enabled);
  CHECK(back.size() == s.size());
  CHECK(serialize_checkpoint(back) == bytes);

  const fs::path path = scratch_dir("ckpt") / "scene.ckpt";
  save_checkpoint(s, path);
  CHECK(pack_parameters(load_checkpoint(path)) == pack_parameters(q));

  GaussianScene empty = s;
  empty.gaussians.clear();
  empty.modulator.enabled = false;
  const GaussianScene e = deserialize_checkpoint(serialize_checkpoint(empty));
  CHECK(e.size() == 0);
  CHECK_FALSE(e.modulator.enabled);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Rng rng(3);
  const auto bytes = serialize_checkpoint(oracle::random_scene(rng, 3, false));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  bad = bytes;
  bad[4] = 9;
  try {
    deserialize_checkpoint(bad);
    FAIL("expected a checkpoint error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("version 9") != std::string::npos);
  }
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(deserialize_checkpoint(std::span(bytes.data(), cut)), CheckpointError);
  }
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  bad = bytes;
  bad[20] = 7;  // flags
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  bad = bytes;
  for (int i = 0; i < 4; ++i) bad[bad.size() - 1 - i] = 0xff;  // NaN payload
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(as_bytes("")), CheckpointError);
}

TEST_CASE("split manifest") {
  const auto m = parse_split_manifest("# names\na.png train-aerial\n\nb.png eval-ground\n");
  REQUIRE(m.size() == 2);
  CHECK(m.at("b.png") == Split::kEvalGround);
  CHECK(std::string(split_name(Split::kTrainAerial)) == "train-aerial");
  CHECK_THROWS_AS(parse_split_manifest("a.png test\n"), ParseError);
  CHECK_THROWS_AS(parse_split_manifest("a.png train-aerial\na.png eval-ground\n"), ParseError);
  CHECK_THROWS_AS(parse_split_manifest("a.png\n"), ParseError);
  DatasetBundle b;
  b.splits = m;
  CHECK(b.split_of("zzz.png") == Split::kTrainAerial);
}

TEST_CASE("datasets round trip through a directory") {
  SyntheticOptions o;
  o.seed = 2;
  o.width = 24;
  o.height = 16;
  o.aerial_count = 4;
  o.ground_count = 2;
  o.min_gaussians = 6;
  o.max_gaussians = 8;
  const SyntheticScene synth = make_synthetic_scene(o);
  DatasetBundle b;
  b.cameras[1] = synth.aerial[0].intrinsics;
  std::vector<Image> images;
  int id = 1;
  for (std::size_t i = 0; i < synth.aerial.size(); ++i) {
    const std::string name = "a" + std::to_string(i) + ".png";
    b.images.push_back({id++, 1, name, synth.aerial[i].pose});
    images.push_back(synth.aerial_images[i]);
  }
  for (std::size_t i = 0; i < synth.ground.size(); ++i) {
    const std::string name = "g" + std::to_string(i) + ".png";
    b.images.push_back({id++, 1, name, synth.ground[i].pose});
    b.splits[name] = Split::kEvalGround;
    images.push_back(synth.ground_images[i]);
  }
  b.points = synth.points;
  const fs::path dir = scratch_dir("dataset");
  write_dataset(dir, b, images);
  const DatasetBundle back = load_dataset(dir);
  CHECK(back.images.size() == b.images.size());
  CHECK(back.points.size() == b.points.size());
  CHECK(back.split_of("g1.png") == Split::kEvalGround);
  CHECK(back.split_of("a0.png") == Split::kTrainAerial);
  const ProgressiveInput in = dataset_progressive_input(back, InitOptions{});
  CHECK(in.views.size() == synth.aerial.size());
  CHECK(in.eval.size() == synth.ground.size());
  CHECK(in.scene.size() == synth.points.size());
  for (const auto& v : in.views) CHECK(v.appearance_id == v.id);
  CHECK_THROWS_AS(load_dataset(scratch_dir("empty")), std::exception);
}

TEST_CASE("stage records round trip through json") {
  RefinementStage s;
  s.stage = 2;
  s.altitude_factor = 0.7;
  s.strategy = TrajectoryStrategy::kForward;
  ViewRecord a;
  a.id = 3;
  a.source_id = 12;
  a.pose.center = Vec3(1, 2, 3);
  a.intrinsics = oracle::intrinsics(32, 24, 30.0);
  a.reference_index = 4;
  a.reference_view_id = 12;
  a.dssim = 0.123456789012345;
  a.accepted = true;
  a.weight = 0.75;
  ViewRecord b;
  b.id = 4;
  b.dssim = std::numeric_limits<double>::infinity();
  b.error = "fixer exited with status 3";
  s.views = {a, b};
  s.skipped = {{7, "camera has no downward viewing component"}};
  MetricsSnapshot m;
  m.stage = 2;
  m.mean_psnr = 21.5;
  m.mean_ssim = 0.6;
  m.psnr = {20.0, std::numeric_limits<double>::infinity()};
  m.ssim = {0.5, 0.7};
  m.plugin_means = {{"lpips", 0.2}};
  s.metrics = m;

  const RefinementStage r = stage_record_from_json(stage_record_to_json(s));
  CHECK(r.stage == 2);
  CHECK(r.altitude_factor == 0.7);
  CHECK(r.strategy == TrajectoryStrategy::kForward);
  REQUIRE(r.views.size() == 2);
  CHECK(r.views[0].source_id == 12);
  CHECK(r.views[0].pose.center == a.pose.center);
  CHECK(r.views[0].dssim == a.dssim);
  CHECK(r.views[0].weight == 0.75);
  CHECK(r.views[0].intrinsics.cx == a.intrinsics.cx);
  CHECK_FALSE(r.views[1].source_id.has_value());
  CHECK(std::isinf(r.views[1].dssim));
  CHECK(r.views[1].error == b.error);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].source_id == 7);
  REQUIRE(r.metrics.has_value());
  CHECK(std::isinf(r.metrics->psnr[1]));
  CHECK(r.metrics->plugin_means == m.plugin_means);

  CHECK_THROWS_AS(stage_record_from_json("{"), ParseError);
  CHECK_THROWS_AS(stage_record_from_json(R"({"stage": 1})"), ParseError);
}

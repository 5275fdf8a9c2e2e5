// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// COLMAP text models, PLY point clouds, scene checkpoints, dataset
// directories and stage-record JSON.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aerosplat/geometry.hpp"
#include "aerosplat/pipeline.hpp"
#include "aerosplat/scene.hpp"

namespace aerosplat {

// --- COLMAP text -----------------------------------------------------------

// cameras.txt: CAMERA_ID MODEL WIDTH HEIGHT PARAMS...; PINHOLE and
// SIMPLE_PINHOLE only. Throws ParseError (with line number) for malformed
// lines, duplicate ids and unsupported models.
std::map<int, CameraIntrinsics> parse_colmap_cameras(std::string_view text);
std::string export_colmap_cameras(const std::map<int, CameraIntrinsics>& cameras);

struct ColmapImage {
  int image_id = 0;
  int camera_id = 0;
  std::string name;
  CameraPose pose;  // camera-to-world
};

// images.txt: IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME, each followed by
// a (possibly empty) 2D-point line that is skipped. (q, t) map world to
// camera. Quaternions are normalized; a deviation of the norm from 1 by more
// than 1e-3 appends a message to `warnings` when given. When `cameras` is
// non-null, camera ids must exist in it.
std::vector<ColmapImage> parse_colmap_images(std::string_view text,
                                             const std::map<int, CameraIntrinsics>* cameras = nullptr,
                                             std::vector<std::string>* warnings = nullptr);
std::string export_colmap_images(const std::vector<ColmapImage>& images);

// points3D.txt: POINT3D_ID X Y Z R G B ERROR TRACK...
std::vector<ColoredPoint> parse_colmap_points(std::string_view text);
std::string export_colmap_points(const std::vector<ColoredPoint>& points);

// --- PLY -------------------------------------------------------------------

// ascii or binary_little_endian vertex clouds with x, y, z and optional
// red, green, blue (integer colors are scaled by the type maximum; float
// colors are taken as-is). Missing colors default to mid-gray.
std::vector<ColoredPoint> parse_ply_points(std::string_view bytes);
std::string write_ply_points(const std::vector<ColoredPoint>& points, bool binary);

// --- Checkpoints -----------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout documented in docs/checkpoint_format.md. Parameters are stored as
// little-endian float32, so a save/load round trip rounds every value to the
// nearest float; saving a loaded scene reproduces the file byte for byte.
std::vector<std::uint8_t> serialize_checkpoint(const GaussianScene& scene);
GaussianScene deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const GaussianScene& scene, const std::filesystem::path& path);
GaussianScene load_checkpoint(const std::filesystem::path& path);

// Rounds every parameter to float32 (the checkpoint precision).
GaussianScene quantize_to_float(const GaussianScene& scene);

// --- Datasets --------------------------------------------------------------

enum class Split : std::uint8_t { kTrainAerial, kEvalGround };
const char* split_name(Split s);

struct DatasetBundle {
  std::filesystem::path root;
  std::map<int, CameraIntrinsics> cameras;
  std::vector<ColmapImage> images;
  std::vector<ColoredPoint> points;
  std::map<std::string, Split> splits;  // image name -> split

  Split split_of(const std::string& name) const;
  std::filesystem::path image_path(const ColmapImage& image) const;
};

// splits.txt: "NAME SPLIT" per line, SPLIT in {train-aerial, eval-ground}.
std::map<std::string, Split> parse_split_manifest(std::string_view text);

// Directory layout: cameras.txt, images.txt, points3D.txt or points.ply,
// optional splits.txt (absent: everything is train-aerial) and images/NAME.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle,
                   const std::vector<Image>& images);

// Training views (train-aerial) with appearance ids = image ids, eval views
// (eval-ground), the initial scene from the points and the ground height
// from their 5th height percentile.
ProgressiveInput dataset_progressive_input(const DatasetBundle& bundle,
                                           const InitOptions& init);

// --- Reading text/binary files --------------------------------------------

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

// --- Stage records -----------------------------------------------------------

std::string stage_record_to_json(const RefinementStage& stage);
RefinementStage stage_record_from_json(std::string_view json);

}  // namespace aerosplat

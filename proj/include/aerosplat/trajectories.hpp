// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Novel camera sets for progressive lower-altitude refinement.
//
// "Altitude" is height above a horizontal ground plane z = ground. World z is
// up; cameras look along their third rotation column.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aerosplat/geometry.hpp"

namespace aerosplat {

enum class TrajectoryStrategy : std::uint8_t {
  kNovelElliptical,
  kScaled,
  kForward,
  kStochasticForward,
  kStochasticScaledForward,
};

const char* strategy_name(TrajectoryStrategy s);
// Accepts the names printed by strategy_name (case-insensitive, '-' or '_'
// separators allowed). Throws DomainError otherwise.
TrajectoryStrategy parse_strategy(std::string_view name);

struct TrajectoryParams {
  TrajectoryStrategy strategy = TrajectoryStrategy::kStochasticScaledForward;
  double altitude_factor = 0.9;  // s in (0, 1]
  double yaw_std_deg = 2.0;
  double pitch_std_deg = 2.0;
  // Share of the altitude drop covered by a forward move in the
  // scaled-forward strategy; the remainder is a vertical drop.
  double forward_fraction = 0.1;
  // Elliptical path: number of samples, 0 -> number of base cameras.
  int sample_count = 0;
  // Elliptical path: factor applied to the smallest ellipse that contains
  // every base camera's (x, y).
  double ellipse_margin = 1.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BaseCamera {
  int id = 0;
  Camera camera;
};

struct PlannedView {
  int id = 0;
  int stage = 0;
  CameraPose pose;
  CameraIntrinsics intrinsics;
  std::optional<int> source_id;
};

struct TrajectoryIssue {
  int source_id = 0;
  std::string message;
};

struct TrajectoryPlan {
  std::vector<PlannedView> views;
  std::vector<TrajectoryIssue> skipped;
};

// Camera-to-world pose at `position` looking at `target`; `up` fixes the
// roll so that the image "down" axis points away from it. Throws
// DegenerateGeometryError when position == target or up is parallel to the
// viewing direction.
CameraPose look_at(const Vec3& position, const Vec3& target, const Vec3& up);

double altitude(const CameraPose& pose, double ground_height);

TrajectoryPlan generate(const TrajectoryParams& params, std::span<const BaseCamera> base,
                        const Vec3& centroid, double ground_height, int stage = 0);

std::vector<double> default_altitude_schedule();
// Validates a schedule: strictly decreasing factors in (0, 1]. An empty list
// is a valid schedule with no stages.
std::vector<double> altitude_schedule(std::vector<double> levels);
// Parses "0.9,0.7,0.5"; empty or blank text yields an empty schedule.
std::vector<double> parse_altitude_schedule(std::string_view text);

// Percentile (in [0, 1]) of point heights, linear interpolation between
// order statistics. Throws DomainError for an empty set.
double ground_height(std::span<const Vec3> points, double percentile = 0.05);

// One camera per line:
//   id stage r00 r01 r02 c0 r10 r11 r12 c1 r20 r21 r22 c2 fx fy cx cy w h source
// where [r | c] is the camera-to-world rotation and center, and source is -1
// when the view has no source camera. '#' starts a comment line.
void write_trajectory(std::ostream& out, const TrajectoryPlan& plan);
TrajectoryPlan read_trajectory(std::istream& in);

}  // namespace aerosplat

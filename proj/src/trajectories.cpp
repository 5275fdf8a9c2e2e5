// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/trajectories.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "aerosplat/errors.hpp"

namespace aerosplat {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Yaw about world z, pitch about the camera's right axis; the center stays.
CameraPose perturb(const CameraPose& pose, double yaw_rad, double pitch_rad) {
  CameraPose out = pose;
  const Mat3 pitch = Eigen::AngleAxisd(pitch_rad, pose.right()).toRotationMatrix();
  const Mat3 yaw = Eigen::AngleAxisd(yaw_rad, Vec3::UnitZ()).toRotationMatrix();
  out.rotation = yaw * pitch * pose.rotation;
  return out;
}

double target_height(double ground, double factor, double height) {
  return ground + factor * (height - ground);
}

}  // namespace

const char* strategy_name(TrajectoryStrategy s) {
  switch (s) {
    case TrajectoryStrategy::kNovelElliptical: return "novel-elliptical";
    case TrajectoryStrategy::kScaled: return "scaled";
    case TrajectoryStrategy::kForward: return "forward";
    case TrajectoryStrategy::kStochasticForward: return "stochastic-forward";
    case TrajectoryStrategy::kStochasticScaledForward: return "stochastic-scaled-forward";
  }
  return "unknown";
}

TrajectoryStrategy parse_strategy(std::string_view name) {
  const std::string key = normalize_name(name);
  for (auto s : {TrajectoryStrategy::kNovelElliptical, TrajectoryStrategy::kScaled,
                 TrajectoryStrategy::kForward, TrajectoryStrategy::kStochasticForward,
                 TrajectoryStrategy::kStochasticScaledForward}) {
    if (normalize_name(strategy_name(s)) == key) return s;
  }
  if (key == "elliptical" || key == "novel") return TrajectoryStrategy::kNovelElliptical;
  throw DomainError("unknown trajectory strategy '" + std::string(name) + "'");
}

void TrajectoryParams::validate() const {
  if (!(altitude_factor > 0.0 && altitude_factor <= 1.0)) {
    throw DomainError("trajectory: altitude factor must be in (0, 1]");
  }
  if (!(yaw_std_deg >= 0.0) || !(pitch_std_deg >= 0.0)) {
    throw DomainError("trajectory: noise std must be >= 0");
  }
  if (!(forward_fraction >= 0.0 && forward_fraction <= 1.0)) {
    throw DomainError("trajectory: forward fraction must be in [0, 1]");
  }
  if (sample_count < 0) throw DomainError("trajectory: sample count must be >= 0");
  if (!(ellipse_margin >= 1.0)) throw DomainError("trajectory: ellipse margin must be >= 1");
}

CameraPose look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 dir = target - position;
  const double len = dir.norm();
  if (!(len > 0.0)) throw DegenerateGeometryError("look_at: position equals target");
  const Vec3 forward = dir / len;
  const Vec3 side = forward.cross(up);
  if (!(side.norm() > 1e-9 * std::max(1.0, up.norm()))) {
    throw DegenerateGeometryError("look_at: up vector parallel to viewing direction");
  }
  const Vec3 right = side.normalized();
  const Vec3 down = forward.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.center = position;
  return pose;
}

double altitude(const CameraPose& pose, double ground_height) {
  return pose.center.z() - ground_height;
}

TrajectoryPlan generate(const TrajectoryParams& params, std::span<const BaseCamera> base,
                        const Vec3& centroid, double ground, int stage) {
  params.validate();
  if (base.empty()) throw DomainError("trajectory: no base cameras");
  TrajectoryPlan plan;
  const double s = params.altitude_factor;

  if (params.strategy == TrajectoryStrategy::kNovelElliptical) {
    Vec2 center = Vec2::Zero();
    double mean_height = 0.0;
    for (const BaseCamera& b : base) {
      center += b.camera.pose.center.head<2>();
      mean_height += b.camera.pose.center.z();
    }
    center /= static_cast<double>(base.size());
    mean_height /= static_cast<double>(base.size());
    double ax = 0.0, ay = 0.0;
    for (const BaseCamera& b : base) {
      ax = std::max(ax, std::abs(b.camera.pose.center.x() - center.x()));
      ay = std::max(ay, std::abs(b.camera.pose.center.y() - center.y()));
    }
    if (ax == 0.0 && ay == 0.0) {
      throw DegenerateGeometryError("trajectory: base cameras have no horizontal extent");
    }
    if (ax == 0.0) ax = ay;
    if (ay == 0.0) ay = ax;
    double k = 0.0;
    for (const BaseCamera& b : base) {
      const double dx = (b.camera.pose.center.x() - center.x()) / ax;
      const double dy = (b.camera.pose.center.y() - center.y()) / ay;
      k = std::max(k, std::hypot(dx, dy));
    }
    ax *= k * params.ellipse_margin;
    ay *= k * params.ellipse_margin;
    const double z = target_height(ground, s, mean_height);
    const int n = params.sample_count > 0 ? params.sample_count : static_cast<int>(base.size());
    for (int i = 0; i < n; ++i) {
      const double theta = 2.0 * std::numbers::pi * i / n;
      const Vec3 pos(center.x() + ax * std::cos(theta), center.y() + ay * std::sin(theta), z);
      PlannedView v;
      v.id = i;
      v.stage = stage;
      v.pose = look_at(pos, centroid, Vec3::UnitZ());
      v.intrinsics = base[static_cast<std::size_t>(i) % base.size()].camera.intrinsics;
      plan.views.push_back(v);
    }
    return plan;
  }

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool stochastic = params.strategy == TrajectoryStrategy::kStochasticForward ||
                          params.strategy == TrajectoryStrategy::kStochasticScaledForward;
  int next_id = 0;
  for (const BaseCamera& b : base) {
    const CameraPose& old = b.camera.pose;
    const double target = target_height(ground, s, old.center.z());
    const double drop = old.center.z() - target;
    const double dz = old.forward().z();
    CameraPose pose = old;
    switch (params.strategy) {
      case TrajectoryStrategy::kScaled:
        pose.center.z() = target;
        break;
      case TrajectoryStrategy::kForward:
      case TrajectoryStrategy::kStochasticForward: {
        if (!(dz < 0.0)) {
          plan.skipped.push_back({b.id, "camera has no downward viewing component"});
          continue;
        }
        const double t = drop / -dz;
        pose.center = old.center + t * old.forward();
        pose.center.z() = target;  // exact despite rounding in t * d_z
        break;
      }
      case TrajectoryStrategy::kStochasticScaledForward: {
        if (dz < 0.0 && params.forward_fraction > 0.0) {
          const double shift = params.forward_fraction * drop;
          pose.center.z() = old.center.z() - (drop - shift);
          pose.center += (shift / -dz) * old.forward();
        }
        pose.center.z() = target;
        break;
      }
      case TrajectoryStrategy::kNovelElliptical:
        break;
    }
    if (stochastic) {
      const double yaw = normal(rng) * params.yaw_std_deg * kDegToRad;
      const double pitch = normal(rng) * params.pitch_std_deg * kDegToRad;
      if (params.yaw_std_deg > 0.0 || params.pitch_std_deg > 0.0) {
        pose = perturb(pose, yaw, pitch);
      }
    }
    PlannedView v;
    v.id = next_id++;
    v.stage = stage;
    v.pose = pose;
    v.intrinsics = b.camera.intrinsics;
    v.source_id = b.id;
    plan.views.push_back(v);
  }
  return plan;
}

std::vector<double> default_altitude_schedule() { return {0.9, 0.7, 0.5, 0.3, 0.1}; }

std::vector<double> altitude_schedule(std::vector<double> levels) {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] <= 1.0)) {
      throw DomainError("altitude schedule: factors must be in (0, 1]");
    }
    if (i > 0 && !(levels[i] < levels[i - 1])) {
      throw DomainError("altitude schedule: factors must be strictly decreasing");
    }
  }
  return levels;
}

std::vector<double> parse_altitude_schedule(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) {
      if (!out.empty() || ss.peek() != EOF) throw DomainError("altitude schedule: empty entry");
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw DomainError("altitude schedule: cannot parse '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw DomainError("altitude schedule: cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  return altitude_schedule(std::move(out));
}

double ground_height(std::span<const Vec3> points, double percentile) {
  if (points.empty()) throw DomainError("ground height: empty point set");
  if (!(percentile >= 0.0 && percentile <= 1.0)) {
    throw DomainError("ground height: percentile must be in [0, 1]");
  }
  std::vector<double> z;
  z.reserve(points.size());
  for (const Vec3& p : points) z.push_back(p.z());
  std::sort(z.begin(), z.end());
  const double pos = percentile * static_cast<double>(z.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, z.size() - 1);
  return z[lo] + (pos - static_cast<double>(lo)) * (z[hi] - z[lo]);
}

void write_trajectory(std::ostream& out, const TrajectoryPlan& plan) {
  out << "# id stage r00 r01 r02 c0 r10 r11 r12 c1 r20 r21 r22 c2 fx fy cx cy width height "
         "source\n";
  out << std::setprecision(17);
  for (const PlannedView& v : plan.views) {
    out << v.id << ' ' << v.stage;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << v.pose.rotation(r, c);
      out << ' ' << v.pose.center[r];
    }
    const auto& k = v.intrinsics;
    out << ' ' << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' '
        << k.height << ' ' << (v.source_id ? *v.source_id : -1) << '\n';
  }
}

TrajectoryPlan read_trajectory(std::istream& in) {
  TrajectoryPlan plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    PlannedView v;
    int source = -1;
    ls >> v.id >> v.stage;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) ls >> v.pose.rotation(r, c);
      ls >> v.pose.center[r];
    }
    auto& k = v.intrinsics;
    ls >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height >> source;
    if (!ls) throw ParseError("trajectory: expected 21 fields", line_no);
    std::string extra;
    if (ls >> extra) throw ParseError("trajectory: trailing field '" + extra + "'", line_no);
    try {
      v.pose.validate();
      k.validate();
    } catch (const DomainError& e) {
      throw ParseError(std::string("trajectory: ") + e.what(), line_no);
    }
    if (source >= 0) v.source_id = source;
    plan.views.push_back(v);
  }
  return plan;
}

}  // namespace aerosplat

// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "aerosplat/errors.hpp"
#include "aerosplat/synthetic.hpp"
#include "aerosplat/trajectories.hpp"
#include "oracles.hpp"

using namespace aerosplat;
using oracle::Rng;

namespace {

std::vector<BaseCamera> aerial_ring(int n, double height, double radius) {
  std::vector<BaseCamera> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    BaseCamera b;
    b.id = 100 + i;
    b.camera.intrinsics = oracle::intrinsics(64, 48, 50.0);
    b.camera.pose = oracle::pose_towards(Vec3(radius * std::cos(a), radius * std::sin(a), height),
                                         Vec3::Zero());
    out.push_back(b);
  }
  return out;
}

double heading(const CameraPose& p) {
  return std::atan2(p.forward().y(), p.forward().x());
}

bool same_pose(const CameraPose& a, const CameraPose& b) {
  return a.rotation == b.rotation && a.center == b.center;
}

}  // namespace

TEST_CASE("look_at") {
  const CameraPose p = look_at(Vec3(0, 0, 10), Vec3::Zero(), Vec3(0, 1, 0));
  CHECK((p.forward() - Vec3(0, 0, -1)).norm() < 1e-12);
  CHECK_NOTHROW(p.validate());
  CHECK((p.rotation.transpose() * p.rotation - Mat3::Identity()).norm() < 1e-12);
  // Image "down" points away from up.
  CHECK(p.down().dot(Vec3(0, 1, 0)) < 0.0);

  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 eye(oracle::uniform(rng, -9, 9), oracle::uniform(rng, -9, 9),
                   oracle::uniform(rng, 1, 9));
    const Vec3 target(oracle::uniform(rng, -2, 2), oracle::uniform(rng, -2, 2), 0.0);
    Camera cam;
    cam.intrinsics = oracle::intrinsics(64, 48, 40.0);
    cam.pose = look_at(eye, target, Vec3::UnitZ());
    CHECK((cam.project(target) - Vec2(cam.intrinsics.cx, cam.intrinsics.cy)).norm() < 1e-9);
    CHECK(std::abs(cam.pose.rotation.determinant() - 1.0) < 1e-12);
    CHECK(std::abs(cam.pose.right().z()) < 1e-12);  // no roll
  }
  CHECK_THROWS_AS(look_at(Vec3(1, 2, 3), Vec3(1, 2, 3), Vec3::UnitZ()), DegenerateGeometryError);
  CHECK_THROWS_AS(look_at(Vec3(0, 0, 5), Vec3::Zero(), Vec3::UnitZ()), DegenerateGeometryError);
}

TEST_CASE("scaled strategy lowers height and keeps orientation") {
  const auto base = aerial_ring(8, 12.0, 6.0);
  TrajectoryParams p;
  p.strategy = TrajectoryStrategy::kScaled;
  p.altitude_factor = 0.5;
  const double ground = 2.0;
  const TrajectoryPlan plan = generate(p, base, Vec3::Zero(), ground, 3);
  REQUIRE(plan.views.size() == base.size());
  CHECK(plan.skipped.empty());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const PlannedView& v = plan.views[i];
    const CameraPose& old = base[i].camera.pose;
    CHECK(v.stage == 3);
    CHECK(v.source_id == base[i].id);
    CHECK(v.pose.center.z() == ground + 0.5 * (12.0 - ground));
    CHECK(altitude(v.pose, ground) == doctest::Approx(0.5 * altitude(old, ground)));
    CHECK(v.pose.center.x() == old.center.x());
    CHECK(v.pose.center.y() == old.center.y());
    CHECK(v.pose.rotation == old.rotation);
    CHECK(v.intrinsics.fx == base[i].camera.intrinsics.fx);
  }
}

TEST_CASE("forward strategy moves along the viewing ray") {
  auto base = aerial_ring(6, 10.0, 5.0);
  BaseCamera level;
  level.id = 7;
  level.camera = base[0].camera;
  level.camera.pose = look_at(Vec3(3, 0, 10), Vec3(0, 0, 10), Vec3::UnitZ());
  base.push_back(level);
  TrajectoryParams p;
  p.strategy = TrajectoryStrategy::kForward;
  p.altitude_factor = 0.7;
  const TrajectoryPlan plan = generate(p, base, Vec3::Zero(), 0.0);
  REQUIRE(plan.views.size() == 6);
  REQUIRE(plan.skipped.size() == 1);
  CHECK(plan.skipped[0].source_id == 7);
  for (std::size_t i = 0; i < 6; ++i) {
    const CameraPose& old = base[i].camera.pose;
    const PlannedView& v = plan.views[i];
    CHECK(std::abs(v.pose.center.z() - 7.0) < 1e-9);
    const double t = (old.center.z() - 7.0) / -old.forward().z();
    CHECK((v.pose.center - (old.center + t * old.forward())).norm() < 1e-9);
    CHECK(heading(v.pose) == doctest::Approx(heading(old)));
    CHECK(v.pose.rotation == old.rotation);
  }
}

TEST_CASE("stochastic strategies without noise match their deterministic versions") {
  const auto base = aerial_ring(9, 15.0, 7.0);
  TrajectoryParams p;
  p.altitude_factor = 0.6;
  p.yaw_std_deg = 0.0;
  p.pitch_std_deg = 0.0;
  p.seed = 42;

  p.strategy = TrajectoryStrategy::kForward;
  const TrajectoryPlan fwd = generate(p, base, Vec3::Zero(), 1.0);
  p.strategy = TrajectoryStrategy::kStochasticForward;
  const TrajectoryPlan sfwd = generate(p, base, Vec3::Zero(), 1.0);
  REQUIRE(fwd.views.size() == sfwd.views.size());
  for (std::size_t i = 0; i < fwd.views.size(); ++i) {
    CHECK(same_pose(fwd.views[i].pose, sfwd.views[i].pose));
  }

  p.strategy = TrajectoryStrategy::kScaled;
  const TrajectoryPlan scaled = generate(p, base, Vec3::Zero(), 1.0);
  p.strategy = TrajectoryStrategy::kStochasticScaledForward;
  p.forward_fraction = 0.0;
  const TrajectoryPlan ssf = generate(p, base, Vec3::Zero(), 1.0);
  REQUIRE(scaled.views.size() == ssf.views.size());
  for (std::size_t i = 0; i < scaled.views.size(); ++i) {
    CHECK(same_pose(scaled.views[i].pose, ssf.views[i].pose));
  }

  // A full forward share reaches the same height as the forward strategy
  // along the same ray.
  p.forward_fraction = 1.0;
  const TrajectoryPlan all_forward = generate(p, base, Vec3::Zero(), 1.0);
  for (std::size_t i = 0; i < fwd.views.size(); ++i) {
    CHECK((all_forward.views[i].pose.center - fwd.views[i].pose.center).norm() < 1e-9);
  }
}

TEST_CASE("stochastic perturbations are seeded and bounded") {
  const auto base = aerial_ring(12, 15.0, 7.0);
  TrajectoryParams p;
  p.strategy = TrajectoryStrategy::kStochasticScaledForward;
  p.altitude_factor = 0.7;
  p.seed = 5;
  const TrajectoryPlan a = generate(p, base, Vec3::Zero(), 0.0);
  const TrajectoryPlan b = generate(p, base, Vec3::Zero(), 0.0);
  p.seed = 6;
  const TrajectoryPlan c = generate(p, base, Vec3::Zero(), 0.0);
  bool differs = false;
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    CHECK(same_pose(a.views[i].pose, b.views[i].pose));
    differs |= !same_pose(a.views[i].pose, c.views[i].pose);
    CHECK_NOTHROW(a.views[i].pose.validate());
    CHECK(std::abs(a.views[i].pose.center.z() - 0.7 * 15.0) < 1e-9);
    // Two-degree noise stays well under ten degrees in total.
    const double angle = rotation_angle_between(a.views[i].pose.rotation,
                                                base[i].camera.pose.rotation);
    CHECK(angle < 10.0 * std::numbers::pi / 180.0);
    CHECK(std::abs(a.views[i].pose.right().z()) < 0.2);
  }
  CHECK(differs);
}

TEST_CASE("elliptical path encloses the base cameras") {
  const auto base = aerial_ring(10, 20.0, 8.0);
  TrajectoryParams p;
  p.strategy = TrajectoryStrategy::kNovelElliptical;
  p.altitude_factor = 0.5;
  p.sample_count = 16;
  const Vec3 centroid(0.5, -0.3, 1.0);
  const TrajectoryPlan plan = generate(p, base, centroid, 0.0, 2);
  REQUIRE(plan.views.size() == 16);
  // Samples 0 and 4 sit on the semi-axes.
  Vec2 mid = Vec2::Zero();
  for (const BaseCamera& b : base) mid += b.camera.pose.center.head<2>() / base.size();
  const double ax = plan.views[0].pose.center.x() - mid.x();
  const double ay = plan.views[4].pose.center.y() - mid.y();
  double outermost = 0.0;
  for (const BaseCamera& b : base) {
    const Vec2 d = b.camera.pose.center.head<2>() - mid;
    outermost = std::max(outermost, std::hypot(d.x() / ax, d.y() / ay));
  }
  CHECK(outermost == doctest::Approx(1.0 / 1.2));
  for (const PlannedView& v : plan.views) {
    CHECK(v.stage == 2);
    CHECK_FALSE(v.source_id.has_value());
    CHECK(v.pose.center.z() == doctest::Approx(10.0));
    const Vec2 d = v.pose.center.head<2>() - mid;
    CHECK(std::hypot(d.x() / ax, d.y() / ay) == doctest::Approx(1.0));
    Camera cam{v.intrinsics, v.pose};
    CHECK((cam.project(centroid) - Vec2(v.intrinsics.cx, v.intrinsics.cy)).norm() < 1e-9);
  }
  std::vector<BaseCamera> stacked(2, base[0]);
  CHECK_THROWS_AS(generate(p, stacked, centroid, 0.0), DegenerateGeometryError);
}

TEST_CASE("trajectory parameter validation") {
  const auto base = aerial_ring(3, 10.0, 4.0);
  TrajectoryParams p;
  p.altitude_factor = 0.0;
  CHECK_THROWS_AS(generate(p, base, Vec3::Zero(), 0.0), DomainError);
  p = TrajectoryParams{};
  p.yaw_std_deg = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = TrajectoryParams{};
  p.forward_fraction = 1.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_THROWS_AS(generate(TrajectoryParams{}, std::span<const BaseCamera>{}, Vec3::Zero(), 0.0),
                  DomainError);
}

TEST_CASE("altitude schedules") {
  CHECK(default_altitude_schedule() == std::vector<double>{0.9, 0.7, 0.5, 0.3, 0.1});
  CHECK(altitude_schedule({1.0}) == std::vector<double>{1.0});
  CHECK(altitude_schedule({}).empty());
  CHECK_THROWS_AS(altitude_schedule({0.5, 0.9}), DomainError);
  CHECK_THROWS_AS(altitude_schedule({0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(altitude_schedule({1.2}), DomainError);
  CHECK_THROWS_AS(altitude_schedule({0.0}), DomainError);
  CHECK(parse_altitude_schedule("").empty());
  CHECK(parse_altitude_schedule("  ").empty());
  CHECK(parse_altitude_schedule("0.9, 0.7,0.5") == std::vector<double>{0.9, 0.7, 0.5});
  CHECK_THROWS_AS(parse_altitude_schedule("0.9,,0.5"), DomainError);
  CHECK_THROWS_AS(parse_altitude_schedule("0.9,abc"), DomainError);
  CHECK_THROWS_AS(parse_altitude_schedule("0.9x"), DomainError);
}

TEST_CASE("ground height percentile") {
  std::vector<Vec3> pts;
  for (int i = 0; i <= 100; ++i) pts.emplace_back(0, 0, 100 - i);
  CHECK(ground_height(pts) == doctest::Approx(5.0));
  CHECK(ground_height(pts, 0.0) == 0.0);
  CHECK(ground_height(pts, 1.0) == 100.0);
  const std::vector<Vec3> two{Vec3(0, 0, 1), Vec3(0, 0, 3)};
  CHECK(ground_height(two, 0.25) == doctest::Approx(1.5));
  CHECK_THROWS_AS(ground_height(std::span<const Vec3>{}), DomainError);
  CHECK_THROWS_AS(ground_height(pts, 1.5), DomainError);
}

TEST_CASE("trajectory files round trip") {
  const auto base = aerial_ring(5, 10.0, 4.0);
  TrajectoryParams p;
  p.seed = 3;
  TrajectoryPlan plan = generate(p, base, Vec3::Zero(), 0.0, 1);
  plan.views.back().source_id.reset();
  std::stringstream ss;
  write_trajectory(ss, plan);
  const TrajectoryPlan back = read_trajectory(ss);
  REQUIRE(back.views.size() == plan.views.size());
  for (std::size_t i = 0; i < plan.views.size(); ++i) {
    const PlannedView& a = plan.views[i];
    const PlannedView& b = back.views[i];
    CHECK(a.id == b.id);
    CHECK(a.stage == b.stage);
    CHECK(same_pose(a.pose, b.pose));
    CHECK(a.intrinsics.cx == b.intrinsics.cx);
    CHECK(a.intrinsics.width == b.intrinsics.width);
    CHECK(a.source_id == b.source_id);
  }

  std::stringstream bad("# header\n\n0 1 1 0 0 0 0 1 0 0 0 0 1 0 50 50 10 10 20 20\n");
  try {
    read_trajectory(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream skew("0 1 2 0 0 0 0 1 0 0 0 0 1 0 50 50 10 10 20 20 -1\n");
  CHECK_THROWS_AS(read_trajectory(skew), ParseError);
  std::stringstream extra("0 1 1 0 0 0 0 1 0 0 0 0 1 0 50 50 10 10 20 20 -1 9\n");
  CHECK_THROWS_AS(read_trajectory(extra), ParseError);
}

TEST_CASE("strategy names") {
  for (auto s : {TrajectoryStrategy::kNovelElliptical, TrajectoryStrategy::kScaled,
                 TrajectoryStrategy::kForward, TrajectoryStrategy::kStochasticForward,
                 TrajectoryStrategy::kStochasticScaledForward}) {
    CHECK(parse_strategy(strategy_name(s)) == s);
  }
  CHECK(parse_strategy("Stochastic_Scaled_Forward") == TrajectoryStrategy::kStochasticScaledForward);
  CHECK_THROWS_AS(parse_strategy("sideways"), DomainError);
}

TEST_CASE("lowered aerial views still see the scene") {
  SyntheticOptions opt;
  opt.seed = 4;
  opt.aerial_count = 12;
  opt.ground_count = 2;
  const SyntheticScene synth = make_synthetic_scene(opt);
  std::vector<BaseCamera> base;
  for (std::size_t i = 0; i < synth.aerial.size(); ++i) {
    base.push_back({static_cast<int>(i), synth.aerial[i]});
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& g : synth.hidden.gaussians) centroid += g.mu;
  centroid /= static_cast<double>(synth.hidden.gaussians.size());

  for (auto strategy : {TrajectoryStrategy::kScaled, TrajectoryStrategy::kStochasticScaledForward,
                        TrajectoryStrategy::kForward}) {
    for (double s : default_altitude_schedule()) {
      TrajectoryParams p;
      p.strategy = strategy;
      p.altitude_factor = s;
      const TrajectoryPlan plan = generate(p, base, centroid, 0.0);
      CHECK(plan.views.size() + plan.skipped.size() == base.size());
      for (const PlannedView& v : plan.views) {
        CHECK(v.pose.center.z() > 0.0);
        double depth = 0.0;
        Camera cam{v.intrinsics, v.pose};
        cam.project(centroid, &depth);
        CHECK(depth > 0.0);  // the scene stays in front of the camera
      }
    }
  }
}

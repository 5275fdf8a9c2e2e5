// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "aerosplat/errors.hpp"

namespace aerosplat {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw DomainError("camera intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw DomainError("camera intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw DomainError("camera intrinsics: principal point outside image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

bool CameraIntrinsics::contains(const Vec2& pixel) const {
  return pixel.x() >= -0.5 && pixel.x() <= width - 0.5 && pixel.y() >= -0.5 &&
         pixel.y() <= height - 0.5;
}

void CameraPose::validate() const {
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DomainError("camera pose: rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw DomainError("camera pose: rotation determinant is not +1");
  }
  if (!center.allFinite()) {
    throw DomainError("camera pose: non-finite center");
  }
}

Vec2 Camera::project(const Vec3& world, double* depth) const {
  const Vec3 p = pose.world_to_camera(world);
  if (depth) *depth = p.z();
  return {intrinsics.fx * p.x() / p.z() + intrinsics.cx,
          intrinsics.fy * p.y() / p.z() + intrinsics.cy};
}

Ray pixel_to_ray(const CameraIntrinsics& intr, const CameraPose& pose,
                 const Vec2& pixel) {
  if (!intr.contains(pixel)) {
    throw DomainError("pixel_to_ray: pixel outside image bounds");
  }
  const Vec3 local = intr.inverse_matrix() * Vec3(pixel.x(), pixel.y(), 1.0);
  return {pose.center, (pose.rotation * local).normalized()};
}

PluckerRay plucker_embedding(const Ray& ray) {
  if (std::abs(ray.direction.norm() - 1.0) > 1e-9) {
    throw DomainError("plucker_embedding: direction is not unit length");
  }
  return {ray.origin.cross(ray.direction), ray.direction};
}

RelativePose relative_pose(const CameraPose& a, const CameraPose& b) {
  return {a.rotation.transpose() * b.rotation,
          a.rotation.transpose() * (b.center - a.center)};
}

RelativePose compose(const RelativePose& ab, const RelativePose& bc) {
  return {ab.rotation * bc.rotation, ab.translation + ab.rotation * bc.translation};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 fundamental_matrix(const CameraIntrinsics& intr_a, const CameraPose& pose_a,
                        const CameraIntrinsics& intr_b, const CameraPose& pose_b) {
  const Vec3 baseline = pose_a.center - pose_b.center;
  const double scale =
      std::max({1.0, pose_a.center.norm(), pose_b.center.norm()});
  if (baseline.norm() <= 1e-12 * scale) {
    throw DegenerateGeometryError(
        "fundamental_matrix: camera centers coincide");
  }
  // Point transfer a -> b: X_b = R X_a + t.
  const Mat3 r = pose_b.rotation.transpose() * pose_a.rotation;
  const Vec3 t = pose_b.rotation.transpose() * baseline;
  const Mat3 essential = skew(t) * r;
  Mat3 f = intr_b.inverse_matrix().transpose() * essential *
           intr_a.inverse_matrix();
  return f / f.norm();
}

EpipolarLine epipolar_line(const Mat3& fundamental, const Vec2& point_a) {
  const Vec3 x(point_a.x(), point_a.y(), 1.0);
  const Vec3 l = fundamental * x;
  const double n = std::hypot(l.x(), l.y());
  if (n <= 1e-14 * fundamental.norm() * x.norm()) {
    throw DegenerateGeometryError("epipolar_line: point coincides with the epipole");
  }
  return {l.x() / n, l.y() / n, l.z() / n};
}

double camera_scene_distance(const CameraPose& pose, const Vec3& anchor) {
  return (pose.center - anchor).norm();
}

PoseDifference pose_difference_features(const RelativePose& rel) {
  PoseDifference out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[3 * r + c] = rel.rotation(r, c);
  }
  for (int i = 0; i < 3; ++i) out[9 + i] = rel.translation[i];
  return out;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace aerosplat

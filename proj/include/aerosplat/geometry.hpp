// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Pinhole cameras, rays and two-view epipolar geometry.
//
// Conventions used throughout the library:
//  * Poses are camera-to-world: a rotation whose columns are the camera's
//    right (x), down (y) and forward (z) axes in world coordinates, plus the
//    camera center. World points map to camera space as R^T (X - center).
//  * Pixel centers sit at integer coordinates with the origin at the top-left
//    pixel, so an image of width W spans u in [-0.5, W - 0.5].
//  * World z is "up"; altitude is measured along +z.

#pragma once

#include <Eigen/Core>
#include <array>

namespace aerosplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws DomainError unless fx, fy > 0 and the principal point is inside
  // the image.
  void validate() const;
  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
  bool contains(const Vec2& pixel) const;
};

struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  // Throws DomainError unless rotation is orthonormal with det +1 (1e-9).
  void validate() const;
  Vec3 right() const { return rotation.col(0); }
  Vec3 down() const { return rotation.col(1); }
  Vec3 forward() const { return rotation.col(2); }
  Vec3 world_to_camera(const Vec3& x) const {
    return rotation.transpose() * (x - center);
  }
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;

  // Pinhole projection of a world point; z of the camera-space point is
  // returned through `depth` when non-null.
  Vec2 project(const Vec3& world, double* depth = nullptr) const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct PluckerRay {
  Vec3 moment = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  std::array<double, 6> embedding() const {
    return {moment.x(), moment.y(), moment.z(),
            direction.x(), direction.y(), direction.z()};
  }
};

// Pose of camera B expressed in camera A's frame.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

// a*u + b*v + c = 0 with a^2 + b^2 = 1.
struct EpipolarLine {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;

  double signed_distance(const Vec2& p) const { return a * p.x() + b * p.y() + c; }
};

using PoseDifference = std::array<double, 12>;

Ray pixel_to_ray(const CameraIntrinsics& intr, const CameraPose& pose,
                 const Vec2& pixel);

PluckerRay plucker_embedding(const Ray& ray);

RelativePose relative_pose(const CameraPose& a, const CameraPose& b);

// compose(rel(a, b), rel(b, c)) == rel(a, c).
RelativePose compose(const RelativePose& ab, const RelativePose& bc);

// F with x_b^T F x_a = 0 for corresponding homogeneous pixels, normalized to
// unit Frobenius norm. Throws DegenerateGeometryError for coincident centers.
Mat3 fundamental_matrix(const CameraIntrinsics& intr_a, const CameraPose& pose_a,
                        const CameraIntrinsics& intr_b, const CameraPose& pose_b);

// Line in view B for a pixel of view A. Throws DegenerateGeometryError when
// the point is (numerically) the epipole.
EpipolarLine epipolar_line(const Mat3& fundamental, const Vec2& point_a);

double camera_scene_distance(const CameraPose& pose, const Vec3& anchor);

// Row-major rotation followed by translation.
PoseDifference pose_difference_features(const RelativePose& rel);

// Reserved embedding for the clean reference view.
constexpr PoseDifference reference_pose_difference() { return {}; }

Mat3 skew(const Vec3& v);

// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace aerosplat

#pragma once

// Rigid transforms, Plücker line coordinates, and the differentiable
// 6-vector rotation parameterization.
//
// Conventions:
//  - SE3 maps points from its source frame into its target frame:
//    p_target = R * p_source + t.
//  - A Plücker ray stores a unit direction d and moment m = o x d for any
//    point o on the line; m is independent of which point is chosen.
//  - The canonical origin d x m is the point on the line closest to the
//    world origin.

#include <Eigen/Dense>

#include "lucid/tensor.hpp"

namespace lucid {

struct SE3 {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static SE3 identity() { return {}; }
  SE3 operator*(const SE3& rhs) const;  // this after rhs
  SE3 inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
};

// Geodesic angle between two rotations, in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct PluckerRay {
  Eigen::Vector3d d;  // unit direction
  Eigen::Vector3d m;  // moment, perpendicular to d
};

// Builds a ray through point o with direction dir (not necessarily unit).
// DegeneracyError when |dir| is ~0.
PluckerRay plucker_from_point_dir(const Eigen::Vector3d& o,
                                  const Eigen::Vector3d& dir);

PluckerRay transform_ray(const SE3& T, const PluckerRay& r);

// Point on the line closest to the origin.
Eigen::Vector3d ray_canonical_origin(const PluckerRay& r);

// canonical_origin + t * d
Eigen::Vector3d ray_point_at(const PluckerRay& r, double t);

// ---- differentiable pieces (run on the active tape) ------------------------

// Two 3-vectors -> rotation matrix via Gram-Schmidt; the orthonormalized
// vectors become the first two columns, the third is their cross product.
// DegeneracyError when the first vector is ~0 or the pair is ~parallel.
ad::Tensor rot6d_to_matrix(const ad::Tensor& v6);

// [n,k] -> [n,k] with unit-norm rows. DegeneracyError on a ~zero row.
ad::Tensor rows_normalize(const ad::Tensor& x);

// Per-row cross product t x d for a single [3] against rows of [n,3].
ad::Tensor cross_rows(const ad::Tensor& t, const ad::Tensor& d);

// Rotates row vectors: each output row is R * row. ([n,3] x [3,3])
ad::Tensor rotate_rows(const ad::Tensor& rot, const ad::Tensor& d);

// Unit camera-frame directions + camera pose -> [n,6] Plücker rows
// (d_world | m). `rot`/`t` are the camera-to-world rotation and position.
ad::Tensor plucker_rows(const ad::Tensor& rot, const ad::Tensor& t,
                        const ad::Tensor& unit_dirs);

// Same for a camera sitting at the world origin with identity rotation.
ad::Tensor plucker_rows_identity(const ad::Tensor& unit_dirs);

}  // namespace lucid

#include "lucid/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lucid {

using ad::Tensor;

SE3 SE3::operator*(const SE3& rhs) const {
  SE3 out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

SE3 SE3::inverse() const {
  SE3 out;
  out.R = R.transpose();
  out.t = -(out.R * t);
  return out;
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  double c = ((a.transpose() * b).trace() - 1.0) * 0.5;
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

PluckerRay plucker_from_point_dir(const Eigen::Vector3d& o,
                                  const Eigen::Vector3d& dir) {
  double n = dir.norm();
  if (n < 1e-12) throw DegeneracyError("ray direction has ~zero norm");
  PluckerRay r;
  r.d = dir / n;
  r.m = o.cross(r.d);
  return r;
}

PluckerRay transform_ray(const SE3& T, const PluckerRay& r) {
  PluckerRay out;
  out.d = T.R * r.d;
  out.m = T.R * r.m + T.t.cross(out.d);
  return out;
}

Eigen::Vector3d ray_canonical_origin(const PluckerRay& r) {
  return r.d.cross(r.m);
}

Eigen::Vector3d ray_point_at(const PluckerRay& r, double t) {
  return ray_canonical_origin(r) + t * r.d;
}

// ---- differentiable pieces --------------------------------------------------

namespace {

// scalar [1] tensors for the components of a [3]
Tensor comp(const Tensor& v, std::size_t i) { return ad::slice(v, i, 1); }

ad::Tensor cross3(const Tensor& a, const Tensor& b) {
  Tensor ax = comp(a, 0), ay = comp(a, 1), az = comp(a, 2);
  Tensor bx = comp(b, 0), by = comp(b, 1), bz = comp(b, 2);
  return ad::concat({ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx});
}

}  // namespace

Tensor rot6d_to_matrix(const Tensor& v6) {
  if (!v6.defined() || v6.size() != 6) {
    throw DimensionError("rot6d_to_matrix expects [6], got " +
                         (v6.defined() ? ad::shape_str(v6.shape())
                                       : std::string("undefined")));
  }
  Tensor a1 = ad::slice(v6, 0, 3);
  Tensor a2 = ad::slice(v6, 3, 3);

  Tensor n1 = ad::sqrt(ad::reduce_sum(ad::square(a1)));
  if (n1.item() < 1e-12) {
    throw DegeneracyError("rot6d: first basis vector has ~zero norm");
  }
  Tensor b1 = a1 / n1;

  Tensor dot = ad::reduce_sum(b1 * a2);
  Tensor u2 = a2 - b1 * dot;
  Tensor n2 = ad::sqrt(ad::reduce_sum(ad::square(u2)));
  if (n2.item() < 1e-12) {
    throw DegeneracyError("rot6d: basis vectors are ~parallel");
  }
  Tensor b2 = u2 / n2;
  Tensor b3 = cross3(b1, b2);

  return ad::hconcat({b1, b2, b3});  // columns
}

Tensor rows_normalize(const Tensor& x) {
  if (!x.defined() || x.shape().size() != 2) {
    throw DimensionError("rows_normalize expects [n,k]");
  }
  double k = static_cast<double>(x.shape()[1]);
  Tensor sq = ad::scale(ad::row_mean(ad::square(x)), k);  // row sums
  Tensor norms = ad::sqrt(sq);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms.at(i) < 1e-12) {
      throw DegeneracyError("rows_normalize: row " + std::to_string(i) +
                            " has ~zero norm");
    }
  }
  Tensor inv = ad::div(Tensor::full({x.shape()[0]}, 1.0), norms);
  return ad::row_scale(x, inv);
}

Tensor cross_rows(const Tensor& t, const Tensor& d) {
  if (!t.defined() || t.size() != 3 || !d.defined() ||
      d.shape().size() != 2 || d.shape()[1] != 3) {
    throw DimensionError("cross_rows expects [3] and [n,3]");
  }
  Tensor tx = comp(t, 0), ty = comp(t, 1), tz = comp(t, 2);
  Tensor dx = ad::slice_col(d, 0);
  Tensor dy = ad::slice_col(d, 1);
  Tensor dz = ad::slice_col(d, 2);
  // t x d_row, written per component with scalar broadcast
  Tensor cx = ty * dz - tz * dy;
  Tensor cy = tz * dx - tx * dz;
  Tensor cz = tx * dy - ty * dx;
  return ad::hconcat({cx, cy, cz});
}

Tensor rotate_rows(const Tensor& rot, const Tensor& d) {
  if (!rot.defined() || rot.shape() != ad::Shape{3, 3}) {
    throw DimensionError("rotate_rows expects a [3,3] rotation");
  }
  return ad::matmul(d, ad::transpose(rot));
}

Tensor plucker_rows(const Tensor& rot, const Tensor& t,
                    const Tensor& unit_dirs) {
  Tensor dw = rotate_rows(rot, unit_dirs);
  Tensor m = cross_rows(t, dw);
  return ad::hconcat({dw, m});
}

Tensor plucker_rows_identity(const Tensor& unit_dirs) {
  if (!unit_dirs.defined() || unit_dirs.shape().size() != 2 ||
      unit_dirs.shape()[1] != 3) {
    throw DimensionError("plucker_rows_identity expects [n,3]");
  }
  Tensor zeros = Tensor::zeros({unit_dirs.shape()[0], 3});
  return ad::hconcat({unit_dirs, zeros});
}

}  // namespace lucid

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "egopoint/errors.hpp"
#include "egopoint/types.hpp"

namespace egopoint {

// SE(3) pose. Stored poses throughout the library are camera-to-world
// (the camera frame expressed in the world frame); world-to-camera is
// obtained with invert().
template <typename T>
struct RigidTransformT {
  Mat3T<T> rotation = Mat3T<T>::Identity();
  Vec3T<T> translation = Vec3T<T>::Zero();

  static RigidTransformT Identity() { return {}; }

  Vec3T<T> operator*(const Vec3T<T>& p) const { return rotation * p + translation; }
};

using RigidTransform = RigidTransformT<double>;

template <typename T>
struct CameraIntrinsicsT {
  T fx{}, fy{};  // focal lengths, pixels
  T cx{}, cy{};  // principal point, pixels
  int width = 0, height = 0;

  bool valid() const {
    return fx > T(0) && fy > T(0) && cx >= T(0) && cx < T(width) && cy >= T(0) &&
           cy < T(height);
  }
};

using CameraIntrinsics = CameraIntrinsicsT<double>;

template <typename T>
T orthonormality_drift(const Mat3T<T>& r) {
  return (r.transpose() * r - Mat3T<T>::Identity()).cwiseAbs().maxCoeff();
}

// Nearest rotation matrix in Frobenius norm (polar factor via SVD).
template <typename T>
Mat3T<T> orthonormalized(const Mat3T<T>& r) {
  Eigen::JacobiSVD<Mat3T<T>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3T<T> q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < T(0)) {
    Mat3T<T> flip = Mat3T<T>::Identity();
    flip(2, 2) = T(-1);
    q = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return q;
}

template <typename T>
bool is_valid_rotation(const Mat3T<T>& r, T tol = T(1e-9)) {
  return orthonormality_drift(r) < tol && std::abs(r.determinant() - T(1)) < tol;
}

// (a ∘ b)(x) = a(b(x)). Re-orthonormalizes when accumulated drift exceeds 1e-12.
template <typename T>
RigidTransformT<T> compose(const RigidTransformT<T>& a, const RigidTransformT<T>& b) {
  RigidTransformT<T> out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (orthonormality_drift(out.rotation) > T(1e-12)) {
    out.rotation = orthonormalized(out.rotation);
  }
  return out;
}

template <typename T>
RigidTransformT<T> invert(const RigidTransformT<T>& t) {
  RigidTransformT<T> out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

template <typename T>
Vec3T<T> transform_point(const RigidTransformT<T>& t, const Vec3T<T>& p) {
  return t.rotation * p + t.translation;
}

// Pinhole projection of a camera-frame point. Throws NonPositiveDepth for
// points on or behind the image plane.
template <typename T>
Vec2T<T> project(const CameraIntrinsicsT<T>& k, const Vec3T<T>& p_cam) {
  if (!(p_cam.z() > T(1e-9))) {
    throw NonPositiveDepth();
  }
  const T inv_z = T(1) / p_cam.z();
  return {k.fx * p_cam.x() * inv_z + k.cx, k.fy * p_cam.y() * inv_z + k.cy};
}

template <typename T>
Vec3T<T> unproject(const CameraIntrinsicsT<T>& k, const Vec2T<T>& px, T depth) {
  if (!(depth > T(0))) {
    throw NonPositiveDepth("unproject requires depth > 0");
  }
  return {(px.x() - k.cx) / k.fx * depth, (px.y() - k.cy) / k.fy * depth, depth};
}

template <typename T>
Mat3T<T> skew(const Vec3T<T>& v) {
  Mat3T<T> s;
  s << T(0), -v.z(), v.y(),
       v.z(), T(0), -v.x(),
      -v.y(), v.x(), T(0);
  return s;
}

// Fundamental matrix between two views of the same camera,
// F = K^-T [t_ij]x R_ij K^-1 with R_ij = R_j R_i^T, t_ij = t_j - R_ij t_i,
// where [R_i | t_i] is the world-to-camera map of view i. Inputs are the
// stored camera-to-world poses. Normalized to unit Frobenius norm so that
// algebraic residuals are comparable across pose pairs.
template <typename T>
Mat3T<T> fundamental_matrix(const CameraIntrinsicsT<T>& k, const RigidTransformT<T>& t_i,
                            const RigidTransformT<T>& t_j) {
  const RigidTransformT<T> wc_i = invert(t_i);
  const RigidTransformT<T> wc_j = invert(t_j);
  const Mat3T<T> r_ij = wc_j.rotation * wc_i.rotation.transpose();
  const Vec3T<T> t_ij = wc_j.translation - r_ij * wc_i.translation;
  if (t_ij.norm() < T(1e-9)) {
    throw DegenerateBaseline();
  }
  Mat3T<T> kmat;
  kmat << k.fx, T(0), k.cx, T(0), k.fy, k.cy, T(0), T(0), T(1);
  const Mat3T<T> k_inv = kmat.inverse();
  Mat3T<T> f = k_inv.transpose() * skew(t_ij) * r_ij * k_inv;
  return f / f.norm();
}

enum class EpipolarResidualMode {
  kSampson,    // first-order geometric distance, pixels
  kAlgebraic,  // raw |u_j^T F u_i| with F at unit Frobenius norm
};

// Residual of the correspondence (u_i, u_j) under F. Sampson mode is the
// default; it is symmetric under (u_i, F) <-> (u_j, F^T).
template <typename T>
T epipolar_residual(const Mat3T<T>& f, const Vec2T<T>& u_i, const Vec2T<T>& u_j,
                    EpipolarResidualMode mode = EpipolarResidualMode::kSampson) {
  const Vec3T<T> hi(u_i.x(), u_i.y(), T(1));
  const Vec3T<T> hj(u_j.x(), u_j.y(), T(1));
  const Vec3T<T> f_hi = f * hi;
  const Vec3T<T> ft_hj = f.transpose() * hj;
  const T algebraic = hj.dot(f_hi);
  if (mode == EpipolarResidualMode::kAlgebraic) {
    return std::abs(algebraic);
  }
  const T grad2 = f_hi.x() * f_hi.x() + f_hi.y() * f_hi.y() + ft_hj.x() * ft_hj.x() +
                  ft_hj.y() * ft_hj.y();
  if (grad2 <= T(0)) {
    return std::abs(algebraic) > T(0) ? std::numeric_limits<T>::infinity() : T(0);
  }
  return std::abs(algebraic) / std::sqrt(grad2);
}

// Rotation about a coordinate axis, radians.
template <typename T>
Mat3T<T> rotation_x(T a) {
  Mat3T<T> r;
  r << T(1), T(0), T(0), T(0), std::cos(a), -std::sin(a), T(0), std::sin(a), std::cos(a);
  return r;
}

template <typename T>
Mat3T<T> rotation_y(T a) {
  Mat3T<T> r;
  r << std::cos(a), T(0), std::sin(a), T(0), T(1), T(0), -std::sin(a), T(0), std::cos(a);
  return r;
}

template <typename T>
Mat3T<T> rotation_z(T a) {
  Mat3T<T> r;
  r << std::cos(a), -std::sin(a), T(0), std::sin(a), std::cos(a), T(0), T(0), T(0), T(1);
  return r;
}

}  // namespace egopoint

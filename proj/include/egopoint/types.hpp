#pragma once

#include <Eigen/Core>

namespace egopoint {

template <typename T> using Vec2T = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4T = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat3T = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat4T = Eigen::Matrix<T, 4, 4>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using Mat3 = Mat3T<double>;
using Mat4 = Mat4T<double>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Image-plane coordinates in pixels, (u, v).
using Pixel = Vec2;

}  // namespace egopoint

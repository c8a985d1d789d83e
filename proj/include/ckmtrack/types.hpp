#pragma once

#include <Eigen/Dense>

#include <complex>

namespace ckmtrack {

using Complex = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using CVecX = Eigen::VectorXcd;
using CMatX = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

// Propagation speed used by all delay/Doppler formulas.
inline constexpr double kSpeedOfLight = 3.0e8;

}  // namespace ckmtrack

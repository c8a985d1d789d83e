#pragma once

#include <functional>

#include "ckmtrack/env.hpp"
#include "ckmtrack/types.hpp"

namespace ckmtrack::cdomain {

// Filter state over alpha = [qx, qy, v].
struct CState {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
};

// Diagonal process and measurement noise variances. The LoS-absent covariance
// reuses the per-parameter variances across all P paths.
struct NoiseModel {
  double var_qx = 1e-6;
  double var_qy = 1e-6;
  double var_v = 1e-6;
  double var_tau = 1e-16;
  double var_mu = 400.0;
  double var_costheta = 1e-4;

  Mat3 q_alpha() const {
    return Vec3(var_qx, var_qy, var_v).asDiagonal();
  }
  Mat3 q_beta1() const {
    return Vec3(var_tau, var_mu, var_costheta).asDiagonal();
  }
  MatX q_beta2(int path_count) const;
};

// Constant-velocity transition: qx += dt * v.
Mat3 constant_velocity_transition(double dt);

// State prediction: mean <- E mean, cov <- E cov E^T + Q_alpha.
CState predict(const CState& s, const NoiseModel& noise, double dt);

// LoS measurement model g1 and its analytic Jacobian (rows tau, mu, cos;
// columns qx, qy, v), both derived from the same closed form the simulator
// uses. jacobian_g1 rejects near-singular geometry (range < 0.1 m).
Vec3 g1_measure(const Vec3& state, const Vec2& rsu_position,
                double carrier_freq);
Mat3 jacobian_g1(const Vec3& state, const Vec2& rsu_position,
                 double carrier_freq);

enum class MeasurementRegime { kLos, kNlos };

// Measurement function plus Jacobian, both evaluated at a state vector.
struct MeasurementModel {
  std::function<VecX(const Vec3&)> g;
  std::function<MatX(const Vec3&)> jacobian;
};

struct EkfUpdateResult {
  CState state;
  VecX innovation;
  MatX gain;
  bool regularized = false;  // innovation covariance needed a diagonal bump
};

// Standard EKF update linearized at the predicted mean. The innovation
// covariance is solved by LDLT; a numerically singular system is regularized
// with a 1e-12 diagonal bump and flagged. The posterior covariance is
// symmetrized and its negative eigenvalues clamped at zero.
EkfUpdateResult ekf_update(const CState& prediction, const VecX& z,
                           MeasurementRegime regime,
                           const MeasurementModel& model,
                           const NoiseModel& noise);

}  // namespace ckmtrack::cdomain

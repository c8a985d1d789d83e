#include "ckmtrack/cdomain.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ckmtrack::cdomain {

namespace {

Mat3 make_psd(const Mat3& m) {
  Mat3 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) {
    return sym;
  }
  Vec3 clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

MatX NoiseModel::q_beta2(int path_count) const {
  VecX d(3 * path_count);
  d.segment(0, path_count).setConstant(var_tau);
  d.segment(path_count, path_count).setConstant(var_mu);
  d.segment(2 * path_count, path_count).setConstant(var_costheta);
  return d.asDiagonal();
}

Mat3 constant_velocity_transition(double dt) {
  Mat3 e = Mat3::Identity();
  e(0, 2) = dt;
  return e;
}

CState predict(const CState& s, const NoiseModel& noise, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("predict: dt must be positive");
  }
  const Mat3 e = constant_velocity_transition(dt);
  CState out;
  out.mean = e * s.mean;
  out.cov = make_psd(e * s.cov * e.transpose() + noise.q_alpha());
  return out;
}

Vec3 g1_measure(const Vec3& state, const Vec2& rsu_position,
                double carrier_freq) {
  return env::los_observables(env::VehicleState::from_vec(state), rsu_position,
                              carrier_freq);
}

Mat3 jacobian_g1(const Vec3& state, const Vec2& rsu_position,
                 double carrier_freq) {
  const double rx = state[0] - rsu_position[0];
  const double ry = state[1] - rsu_position[1];
  const double v = state[2];
  const double r2 = rx * rx + ry * ry;
  const double r = std::sqrt(r2);
  if (r < 0.1) {
    throw std::invalid_argument("jacobian_g1: range below 0.1 m");
  }
  const double r3 = r2 * r;
  const double c = kSpeedOfLight;
  const double fc = carrier_freq;

  Mat3 g;
  // tau = 2 r / c
  g(0, 0) = 2.0 * rx / (c * r);
  g(0, 1) = 2.0 * ry / (c * r);
  g(0, 2) = 0.0;
  // mu = -2 fc v ry / (c r)
  g(1, 0) = 2.0 * fc * v * ry * rx / (c * r3);
  g(1, 1) = -2.0 * fc * v * rx * rx / (c * r3);
  g(1, 2) = -2.0 * fc * ry / (c * r);
  // cos(theta) = rx / r
  g(2, 0) = ry * ry / r3;
  g(2, 1) = -rx * ry / r3;
  g(2, 2) = 0.0;
  return g;
}

EkfUpdateResult ekf_update(const CState& prediction, const VecX& z,
                           MeasurementRegime regime,
                           const MeasurementModel& model,
                           const NoiseModel& noise) {
  const MatX g_jac = model.jacobian(prediction.mean);
  const VecX g_val = model.g(prediction.mean);
  const long m = z.size();
  if (g_val.size() != m || g_jac.rows() != m || g_jac.cols() != 3) {
    throw std::invalid_argument("ekf_update: dimension mismatch");
  }
  MatX q;
  if (regime == MeasurementRegime::kLos) {
    if (m != 3) throw std::invalid_argument("ekf_update: LoS expects z of size 3");
    q = noise.q_beta1();
  } else {
    if (m % 3 != 0) {
      throw std::invalid_argument("ekf_update: NLoS expects z of size 3P");
    }
    q = noise.q_beta2(static_cast<int>(m / 3));
  }

  MatX s = g_jac * prediction.cov * g_jac.transpose() + q;
  s = 0.5 * (s + s.transpose());

  EkfUpdateResult out;
  Eigen::LDLT<MatX> ldlt(s);
  // Rows of S can span many orders of magnitude (delay vs Doppler), which is
  // fine for LDLT on an SPD matrix; only actual non-positivity needs a bump.
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    s += 1e-12 * MatX::Identity(m, m);
    ldlt.compute(s);
    out.regularized = true;
  }

  // K = C G^T S^{-1}, via S X = G C (S symmetric).
  const MatX k = ldlt.solve(g_jac * prediction.cov).transpose();
  out.innovation = z - g_val;
  out.gain = k;
  out.state.mean = prediction.mean + k * out.innovation;
  out.state.cov = make_psd((Mat3::Identity() - k * g_jac) * prediction.cov);
  return out;
}

}  // namespace ckmtrack::cdomain

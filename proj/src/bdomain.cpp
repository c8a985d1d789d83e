#include "ckmtrack/bdomain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ckmtrack/signal.hpp"

namespace ckmtrack::bdomain {

namespace {

constexpr double kSupportThreshold = 1e-12;

void normalize(VecX& pmf) {
  const double sum = pmf.sum();
  if (!(sum > 0.0)) {
    throw std::runtime_error("belief lost all probability mass");
  }
  pmf /= sum;
}

}  // namespace

AngularBelief uniform_belief(const AngularGrid& grid) {
  AngularBelief b;
  b.pmf = VecX::Constant(grid.n, 1.0 / grid.n);
  return b;
}

VecX tpm_temporal_row_weights(double xi, int eps) {
  if (xi < 0.0 || xi > 1.0) {
    throw std::invalid_argument("tpm_temporal_row_weights: xi must be in [0,1]");
  }
  if (eps < 0) {
    throw std::invalid_argument("tpm_temporal_row_weights: eps must be >= 0");
  }
  VecX w(2 * eps + 1);
  for (int d = -eps; d <= eps; ++d) {
    w[d + eps] = d == 0 ? 1.0 : std::pow(xi, std::abs(d));
  }
  w /= w.sum();
  return w;
}

AngularBelief tpm_ckm_row(double predicted_angle, double sigma_ckm,
                          const AngularGrid& grid) {
  if (!(sigma_ckm > 0.0)) {
    throw std::invalid_argument("tpm_ckm_row: sigma_ckm must be positive");
  }
  // Work relative to the smallest squared offset so the peak entry is exp(0)
  // and a narrow kernel cannot underflow to an all-zero row.
  VecX d2(grid.n);
  double d2min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.n; ++j) {
    const double d = grid.angle(j) - predicted_angle;
    d2[j] = d * d;
    d2min = std::min(d2min, d2[j]);
  }
  AngularBelief row;
  row.pmf.resize(grid.n);
  const double inv = 1.0 / (2.0 * sigma_ckm * sigma_ckm);
  for (int j = 0; j < grid.n; ++j) {
    row.pmf[j] = std::exp(-(d2[j] - d2min) * inv);
  }
  normalize(row.pmf);
  return row;
}

AngularBelief propagate_belief(const AngularBelief& belief,
                               const TransitionSpec& spec,
                               const AngularGrid& grid) {
  if (belief.pmf.size() != grid.n) {
    throw std::invalid_argument("propagate_belief: belief/grid size mismatch");
  }
  if (spec.kind == TransitionKind::kUnpredictable) {
    return uniform_belief(grid);
  }

  const AngularBelief ckm_row =
      tpm_ckm_row(spec.predicted_angle, spec.sigma_ckm, grid);
  if (spec.kind == TransitionKind::kPredictable) {
    return ckm_row;
  }

  const int eps = spec.band_halfwidth;
  const int n = grid.n;
  // xi^|d| powers and prefix sums for O(1) truncated-band normalizers.
  std::vector<double> pow_xi(eps + 1, 1.0);
  for (int d = 1; d <= eps; ++d) {
    pow_xi[d] = spec.xi == 0.0 ? 0.0 : pow_xi[d - 1] * spec.xi;
  }
  std::vector<double> cum(eps + 1, 0.0);
  for (int d = 1; d <= eps; ++d) {
    cum[d] = cum[d - 1] + pow_xi[d];
  }

  VecX banded = VecX::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double mass = belief.pmf[j];
    if (mass == 0.0) continue;
    const int lo = std::min(eps, j);
    const int hi = std::min(eps, n - 1 - j);
    const double zeta = 1.0 / (1.0 + cum[lo] + cum[hi]);
    const double scaled = mass * zeta;
    for (int d = -lo; d <= hi; ++d) {
      banded[j + d] += scaled * pow_xi[std::abs(d)];
    }
  }

  AngularBelief out;
  out.pmf = (1.0 - spec.c_pi) * banded + spec.c_pi * ckm_row.pmf;
  normalize(out.pmf);
  return out;
}

double hard_predict(const AngularBelief& belief, const AngularGrid& grid) {
  int best = 0;
  for (int j = 1; j < grid.n; ++j) {
    if (belief.pmf[j] > belief.pmf[best]) best = j;
  }
  return grid.angle(best);
}

MapUpdateResult map_update(const AngularBelief& prior, const CMatX& r_i,
                           const CMatX& f, long frame_length, double sigma_z2,
                           const AngularGrid& grid) {
  if (prior.pmf.size() != grid.n) {
    throw std::invalid_argument("map_update: prior/grid size mismatch");
  }
  std::vector<int> support;
  support.reserve(grid.n);
  for (int j = 0; j < grid.n; ++j) {
    if (prior.pmf[j] > kSupportThreshold) support.push_back(j);
  }
  if (support.empty()) {
    // Degenerate prior; treat every cell as a candidate.
    for (int j = 0; j < grid.n; ++j) support.push_back(j);
  }

  VecX logpost(static_cast<long>(support.size()));
  double best_val = -std::numeric_limits<double>::infinity();
  int best_pos = -1;
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    const int j = support[idx];
    const double ll =
        signal::profile_loglik(r_i, grid.angle(j), f, frame_length, sigma_z2);
    const double lp = std::log(prior.pmf[j] > 0.0 ? prior.pmf[j]
                                                  : kSupportThreshold) +
                      ll;
    logpost[static_cast<long>(idx)] = lp;
    if (lp > best_val) {
      best_val = lp;
      best_pos = static_cast<int>(idx);
    }
  }

  MapUpdateResult out;
  if (best_pos < 0 || !std::isfinite(best_val)) {
    out.theta_hat = hard_predict(prior, grid);
    out.posterior = prior;
    out.misaligned = true;
    return out;
  }

  out.theta_hat = grid.angle(support[best_pos]);
  out.posterior.pmf = VecX::Zero(grid.n);
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    const double lp = logpost[static_cast<long>(idx)];
    if (std::isfinite(lp)) {
      out.posterior.pmf[support[idx]] = std::exp(lp - best_val);
    }
  }
  normalize(out.posterior.pmf);
  return out;
}

}  // namespace ckmtrack::bdomain

#pragma once

#include "ckmtrack/types.hpp"

namespace ckmtrack::bdomain {

// Uniform grid theta_j = pi * j / n over [0, pi).
struct AngularGrid {
  int n = 7200;

  double step() const { return kPi / n; }
  double angle(int index) const { return kPi * index / n; }
  int nearest_index(double theta) const {
    const long j = std::lround(theta / step());
    return static_cast<int>(std::clamp(j, 0l, static_cast<long>(n - 1)));
  }
};

// PMF of one path's AoA over the grid.
struct AngularBelief {
  VecX pmf;
};

AngularBelief uniform_belief(const AngularGrid& grid);

enum class TransitionKind { kStationary, kPredictable, kUnpredictable };

struct TransitionSpec {
  TransitionKind kind = TransitionKind::kStationary;
  double c_pi = 0.6;             // weight of the knowledge-map transition row
  double xi = 0.8;               // temporal angular variation speed
  int band_halfwidth = 1;        // epsilon, in grid cells
  double sigma_ckm = 1e-3;       // radians
  double predicted_angle = 0.0;  // radians, map-predicted AoA
};

// Geometric band weights zeta * xi^|offset| for offsets -eps..eps, normalized
// to sum to one over the full band (0^0 = 1, so xi = 0 gives a one-hot row).
VecX tpm_temporal_row_weights(double xi, int eps);

// Discretized Gaussian over grid angles centered at the predicted angle. All
// rows of the map-prior TPM are identical, so the row below is the whole
// rank-one matrix.
AngularBelief tpm_ckm_row(double predicted_angle, double sigma_ckm,
                          const AngularGrid& grid);

// One Markov propagation step. Stationary transitions blend the banded
// temporal pass with the map row; predictable transitions use the map row
// alone; unpredictable transitions fall back to the uniform PMF. The full
// n x n TPM is never materialized: the banded pass costs O(n * (2 eps + 1))
// and the rank-one term O(n). Boundary rows renormalize over the truncated
// band, so mass is conserved exactly.
AngularBelief propagate_belief(const AngularBelief& belief,
                               const TransitionSpec& spec,
                               const AngularGrid& grid);

// Grid angle of the maximal PMF entry; ties break toward the lowest index.
double hard_predict(const AngularBelief& belief, const AngularGrid& grid);

struct MapUpdateResult {
  double theta_hat = 0.0;
  AngularBelief posterior;
  bool misaligned = false;  // every candidate had -inf log-posterior
};

// MAP angle update from a separated path block. Only grid points with prior
// mass above 1e-12 are evaluated (a uniform prior therefore degenerates to a
// full-grid maximum-likelihood search). If no candidate has finite
// log-posterior the prior's hard prediction is returned and the slot flagged.
MapUpdateResult map_update(const AngularBelief& prior, const CMatX& r_i,
                           const CMatX& f, long frame_length, double sigma_z2,
                           const AngularGrid& grid);

}  // namespace ckmtrack::bdomain

#pragma once

#include <vector>

#include "ckmtrack/signal.hpp"
#include "ckmtrack/types.hpp"

namespace ckmtrack::beamform {

// Fisher information of one path's AoA under beamformer F (Nt x Ns):
// J = (L^2 |beta|^2 / sigma_z2) * ||(F^T kron db/dtheta) a*(theta)||^2.
double fisher_info(double theta, double gain_abs, const CMatX& f,
                   long frame_length, double sigma_z2, int nr);

// 1 / fisher_info; +inf when the angle is unestimable under this beamformer.
double crb(double theta, double gain_abs, const CMatX& f, long frame_length,
           double sigma_z2, int nr);

// Hard-predicted AoA and gain magnitude of one tracked path.
struct PredictedPath {
  double theta = 0.0;
  double gain_abs = 0.0;
  int path_id = 1;
};

// Steering matrix from hard predictions: the ns strongest paths win columns
// (ties toward the lower path id); selected columns are ordered by path id;
// with more beams than paths the strongest path is duplicated.
CMatX select_beams(const std::vector<PredictedPath>& predicted, int ns, int nt);

// c_{i,ns} coefficients of the power-allocation objective:
// c(theta_i) = (A^T kron b(theta_i)) a*(theta_i),
// c_{i,ns} = sum_g |c_{(ns-1)Nr+g}|^2 (g-1)^2. Returns a P x Ns matrix.
MatX allocation_coeffs(const CMatX& steering, const std::vector<double>& angles,
                       int nr);

struct AllocationProblem {
  MatX coeffs;      // P x Ns, nonnegative
  VecX amplitudes;  // a_i = |beta_i| sin(theta_i)
  double budget = 0.0;  // sum(gamma) cap, i.e. P_t / Nt
};

struct AllocationResult {
  VecX gamma;
  double t_star = 0.0;
  bool degenerate = false;  // some path is unestimable; equal split returned
};

// Exact solve of  max t  s.t.  t <= a_i^2 (c gamma)_i, sum gamma <= budget,
// gamma >= 0, by enumerating basic feasible points of the lifted polytope.
// Deterministic enumeration order makes non-unique optima reproducible.
AllocationResult allocate_power(const AllocationProblem& problem);

enum class BfMode { kNone, kEqual, kOptimized };

struct BeamformingPlan {
  CMatX steering;              // nt x ns
  VecX gamma;                  // ns
  std::vector<double> angles;  // angle carried by each column
  BfMode mode = BfMode::kEqual;

  signal::Beamformer beamformer() const { return {steering, gamma}; }
  CMatX matrix() const { return beamformer().matrix(); }
};

// Plan for the next slot from hard predictions. budget caps sum(gamma), so
// ||F||_F^2 = nt * sum(gamma) <= nt * budget = P_t.
BeamformingPlan build_plan(const std::vector<PredictedPath>& predicted, int ns,
                           int nt, int nr, double budget, BfMode mode);

}  // namespace ckmtrack::beamform

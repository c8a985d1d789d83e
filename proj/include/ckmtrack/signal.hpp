#pragma once

#include <vector>

#include "ckmtrack/env.hpp"
#include "ckmtrack/rng.hpp"
#include "ckmtrack/types.hpp"

namespace ckmtrack::signal {

// Half-wavelength ULA response, element m = exp(j*pi*m*cos(theta)).
CVecX steering_vector(double theta, int n);

// d/dtheta of steering_vector: j*pi*sin(theta) * diag(0..n-1) * a(theta).
CVecX steering_derivative(double theta, int n);

// One slot of i.i.d. standard circular Gaussian data streams, ns x L.
struct TxFrame {
  CMatX s;

  int streams() const { return static_cast<int>(s.rows()); }
  long length() const { return s.cols(); }

  static TxFrame draw(int ns, long length, RngStream& rng);
};

// F = A * diag(sqrt(gamma)); ||F||_F^2 = nt * sum(gamma).
struct Beamformer {
  CMatX steering;  // nt x ns, unit-modulus columns
  VecX gamma;      // ns nonnegative stream powers

  CMatX matrix() const {
    return steering * gamma.cwiseSqrt().asDiagonal();
  }
};

struct EchoFrame {
  CMatX r;       // nr x (L + l_max)
  long l_max = 0;
};

// Multipath echo of one slot: each alive path contributes
// beta * b(aoa) a(aoa)^H F S shifted by its delay index and phase-ramped by its
// Doppler index; dead paths contribute nothing. Noise is i.i.d. circular
// Gaussian with per-entry variance sigma_z2. nr is the receive array size.
EchoFrame synthesize_echo(const std::vector<env::PathParams>& paths,
                          const Beamformer& f, const TxFrame& tx, int nr,
                          double sigma_z2, RngStream& rng);

struct MfPeak {
  long delay_index = 0;
  double doppler_index = 0.0;
  double power = 0.0;
};

struct MfSearchResult {
  std::vector<MfPeak> peaks;  // sorted by power, descending
  bool complete = true;       // false when fewer peaks than requested exist
};

// Exhaustive delay/Doppler correlation search. Evaluates
// ||R Lambda_k^H S_l^H||_F^2 on the given grids and returns up to max_peaks
// local maxima after +-1-cell non-maximum suppression.
MfSearchResult matched_filter_search(const EchoFrame& echo, const TxFrame& tx,
                                     const std::vector<long>& delay_grid,
                                     const std::vector<double>& doppler_grid,
                                     int max_peaks);

// Matched-filter output for one (delay, Doppler) cell:
// R_i = R Lambda_k^H S_l^H, an nr x ns matrix. For a matched alive path this
// concentrates to L * beta * b a^H F plus filtered noise.
CMatX separate_path(const EchoFrame& echo, const TxFrame& tx, long delay_index,
                    double doppler_index);

// Concentrated log-likelihood of an AoA hypothesis given a separated path
// block, up to an additive constant. The unknown complex gain is profiled out
// by least squares; the noise covariance is sigma_z2 * L * I. Returns -inf if
// the beamformer is orthogonal to the hypothesized angle.
double profile_loglik(const CMatX& r_i, double theta, const CMatX& f,
                      long frame_length, double sigma_z2);

// Least-squares complex gain at a hypothesized angle,
// beta(theta) = c(theta)^H r / (L ||c(theta)||^2); zero if c vanishes.
Complex estimate_gain(const CMatX& r_i, double theta, const CMatX& f,
                      long frame_length);

}  // namespace ckmtrack::signal

#include "ckmtrack/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ckmtrack::signal {

namespace {

// diag(conj(ramp_k)) * S^H, the (L x ns) right factor of the matched filter.
CMatX ramped_adjoint(const TxFrame& tx, double doppler_index) {
  CMatX v = tx.s.adjoint();  // L x ns
  const long length = tx.length();
  for (long m = 0; m < length; ++m) {
    const double phase = -2.0 * kPi * doppler_index * static_cast<double>(m);
    v.row(m) *= Complex(std::cos(phase), std::sin(phase));
  }
  return v;
}

}  // namespace

CVecX steering_vector(double theta, int n) {
  if (n < 1) {
    throw std::invalid_argument("steering_vector: n must be >= 1");
  }
  CVecX a(n);
  const double c = std::cos(theta);
  for (int m = 0; m < n; ++m) {
    const double phase = kPi * m * c;
    a[m] = Complex(std::cos(phase), std::sin(phase));
  }
  return a;
}

CVecX steering_derivative(double theta, int n) {
  CVecX b = steering_vector(theta, n);
  const Complex factor(0.0, kPi * std::sin(theta));
  for (int m = 0; m < n; ++m) {
    b[m] *= factor * static_cast<double>(m);
  }
  return b;
}

TxFrame TxFrame::draw(int ns, long length, RngStream& rng) {
  TxFrame tx;
  tx.s.resize(ns, length);
  for (long col = 0; col < length; ++col) {
    for (int row = 0; row < ns; ++row) {
      tx.s(row, col) = rng.cgaussian(1.0);
    }
  }
  return tx;
}

EchoFrame synthesize_echo(const std::vector<env::PathParams>& paths,
                          const Beamformer& f, const TxFrame& tx, int nr,
                          double sigma_z2, RngStream& rng) {
  if (sigma_z2 < 0.0) {
    throw std::invalid_argument("synthesize_echo: sigma_z2 must be >= 0");
  }
  if (nr < 1) {
    throw std::invalid_argument("synthesize_echo: nr must be >= 1");
  }
  const CMatX fmat = f.matrix();
  if (fmat.cols() != tx.streams()) {
    throw std::invalid_argument("synthesize_echo: beamformer/stream mismatch");
  }
  long l_max = 0;
  for (const auto& p : paths) {
    if (p.delay_index < 0) {
      throw std::invalid_argument("synthesize_echo: negative delay index");
    }
    l_max = std::max(l_max, p.delay_index);
  }

  const long length = tx.length();
  EchoFrame echo;
  echo.l_max = l_max;
  echo.r = CMatX::Zero(nr, length + l_max);

  for (const auto& p : paths) {
    if (!p.alive) continue;
    const CVecX b = steering_vector(p.aoa, nr);
    const CVecX a = steering_vector(p.aoa, static_cast<int>(fmat.rows()));
    Eigen::RowVectorXcd u = (a.adjoint() * fmat) * tx.s;  // 1 x L
    for (long m = 0; m < length; ++m) {
      const double phase = 2.0 * kPi * p.doppler_index * static_cast<double>(m);
      u[m] *= Complex(std::cos(phase), std::sin(phase));
    }
    echo.r.middleCols(p.delay_index, length).noalias() += p.gain * (b * u);
  }

  if (sigma_z2 > 0.0) {
    for (long col = 0; col < echo.r.cols(); ++col) {
      for (int row = 0; row < nr; ++row) {
        echo.r(row, col) += rng.cgaussian(sigma_z2);
      }
    }
  }
  return echo;
}

MfSearchResult matched_filter_search(const EchoFrame& echo, const TxFrame& tx,
                                     const std::vector<long>& delay_grid,
                                     const std::vector<double>& doppler_grid,
                                     int max_peaks) {
  if (delay_grid.empty() || doppler_grid.empty()) {
    throw std::invalid_argument("matched_filter_search: empty grid");
  }
  const long length = tx.length();
  const int nl = static_cast<int>(delay_grid.size());
  const int nk = static_cast<int>(doppler_grid.size());

  MatX power(nl, nk);
  for (int ik = 0; ik < nk; ++ik) {
    const CMatX v = ramped_adjoint(tx, doppler_grid[ik]);
    for (int il = 0; il < nl; ++il) {
      const long l = delay_grid[il];
      if (l < 0 || l + length > echo.r.cols()) {
        power(il, ik) = -1.0;  // outside the frame; never a peak
        continue;
      }
      power(il, ik) = (echo.r.middleCols(l, length) * v).squaredNorm();
    }
  }

  // Local maxima over the 8-neighborhood, then +-1-cell suppression.
  std::vector<MfPeak> candidates;
  for (int il = 0; il < nl; ++il) {
    for (int ik = 0; ik < nk; ++ik) {
      const double p = power(il, ik);
      if (p < 0.0) continue;
      bool is_max = true;
      for (int dl = -1; dl <= 1 && is_max; ++dl) {
        for (int dk = -1; dk <= 1; ++dk) {
          if (dl == 0 && dk == 0) continue;
          const int jl = il + dl;
          const int jk = ik + dk;
          if (jl < 0 || jl >= nl || jk < 0 || jk >= nk) continue;
          const double q = power(jl, jk);
          // Strict on one side so plateaus yield a single candidate.
          if (q > p || (q == p && (dl < 0 || (dl == 0 && dk < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) {
        candidates.push_back({delay_grid[il], doppler_grid[ik], p});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MfPeak& a, const MfPeak& b) {
              if (a.power != b.power) return a.power > b.power;
              if (a.delay_index != b.delay_index)
                return a.delay_index < b.delay_index;
              return a.doppler_index < b.doppler_index;
            });

  // Grid steps for the suppression distance.
  const double kstep =
      nk > 1 ? std::abs(doppler_grid[1] - doppler_grid[0]) : 1.0;

  MfSearchResult result;
  for (const MfPeak& c : candidates) {
    if (static_cast<int>(result.peaks.size()) >= max_peaks) break;
    bool suppressed = false;
    for (const MfPeak& kept : result.peaks) {
      const long dl = std::abs(kept.delay_index - c.delay_index);
      const double dk =
          std::abs(kept.doppler_index - c.doppler_index) / kstep;
      if (dl <= 1 && dk <= 1.5) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) result.peaks.push_back(c);
  }
  result.complete = static_cast<int>(result.peaks.size()) >= max_peaks;
  return result;
}

CMatX separate_path(const EchoFrame& echo, const TxFrame& tx, long delay_index,
                    double doppler_index) {
  const long length = tx.length();
  if (delay_index < 0 || delay_index + length > echo.r.cols()) {
    throw std::invalid_argument("separate_path: delay index outside frame");
  }
  return echo.r.middleCols(delay_index, length) *
         ramped_adjoint(tx, doppler_index);
}

Complex estimate_gain(const CMatX& r_i, double theta, const CMatX& f,
                      long frame_length) {
  const int nr = static_cast<int>(r_i.rows());
  const int ns = static_cast<int>(r_i.cols());
  const CVecX a = steering_vector(theta, static_cast<int>(f.rows()));
  const CVecX b = steering_vector(theta, nr);
  const Eigen::RowVectorXcd chi = a.adjoint() * f;
  const double c_norm2 = static_cast<double>(nr) * chi.squaredNorm();
  if (!(c_norm2 > 1e-18 * nr * f.squaredNorm())) {
    return {0.0, 0.0};
  }
  Complex inner(0.0, 0.0);
  for (int col = 0; col < ns; ++col) {
    inner += std::conj(chi[col]) * (b.adjoint() * r_i.col(col)).value();
  }
  return inner / (static_cast<double>(frame_length) * c_norm2);
}

double profile_loglik(const CMatX& r_i, double theta, const CMatX& f,
                      long frame_length, double sigma_z2) {
  const int nr = static_cast<int>(r_i.rows());
  const int ns = static_cast<int>(r_i.cols());
  if (f.cols() != ns) {
    throw std::invalid_argument("profile_loglik: beamformer/stream mismatch");
  }
  const CVecX a = steering_vector(theta, static_cast<int>(f.rows()));
  const CVecX b = steering_vector(theta, nr);
  // c(theta) = (F^T kron b) a* = vec(b * (a^H F)).
  const Eigen::RowVectorXcd chi = a.adjoint() * f;  // 1 x ns
  // Relative cutoff: beams exactly orthogonal to the hypothesis land at
  // rounding-noise level, not at denormal magnitudes.
  const double c_norm2 = static_cast<double>(nr) * chi.squaredNorm();
  if (!(c_norm2 > 1e-18 * nr * f.squaredNorm())) {
    return -std::numeric_limits<double>::infinity();
  }
  // <c, r> accumulated without materializing the Kronecker vector.
  Complex inner(0.0, 0.0);
  for (int col = 0; col < ns; ++col) {
    inner += std::conj(chi[col]) * (b.adjoint() * r_i.col(col)).value();
  }
  const double r_norm2 = r_i.squaredNorm();
  const double residual = r_norm2 - std::norm(inner) / c_norm2;
  const double sigma_eff = std::max(sigma_z2, 1e-30);
  return -residual / (static_cast<double>(frame_length) * sigma_eff);
}

}  // namespace ckmtrack::signal

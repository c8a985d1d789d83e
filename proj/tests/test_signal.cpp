#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckmtrack/signal.hpp"

using namespace ckmtrack;
using namespace ckmtrack::signal;

namespace {

env::PathParams make_path(int id, Complex gain, double aoa, long l, double k) {
  env::PathParams p;
  p.path_id = id;
  p.gain = gain;
  p.aoa = aoa;
  p.alive = true;
  p.delay_index = l;
  p.doppler_index = k;
  return p;
}

Beamformer two_beam(double theta1, double theta2, int nt, double gamma_each) {
  Beamformer f;
  f.steering.resize(nt, 2);
  f.steering.col(0) = steering_vector(theta1, nt);
  f.steering.col(1) = steering_vector(theta2, nt);
  f.gamma = VecX::Constant(2, gamma_each);
  return f;
}

}  // namespace

TEST_CASE("steering vector basics") {
  const CVecX broadside = steering_vector(kPi / 2, 4);
  for (int m = 0; m < 4; ++m) {
    CHECK(broadside[m].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(broadside[m].imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
  const CVecX endfire = steering_vector(0.0, 2);
  CHECK(endfire[0].real() == doctest::Approx(1.0));
  CHECK(endfire[1].real() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(endfire[1].imag() == doctest::Approx(0.0).epsilon(1e-9));

  RngStream rng(1);
  for (int t = 0; t < 20; ++t) {
    const double theta = rng.uniform(0.0, kPi);
    CHECK(steering_vector(theta, 7).squaredNorm() == doctest::Approx(7.0));
  }
}

TEST_CASE("noise-only echo has the configured per-entry variance") {
  RngStream rng(2);
  const TxFrame tx = TxFrame::draw(2, 64, rng);
  Beamformer f = two_beam(1.0, 2.0, 4, 0.5);
  std::vector<env::PathParams> dead{make_path(1, {1.0, 0.0}, 1.0, 3, 0.0)};
  dead[0].alive = false;
  const double var = 0.25;
  double acc = 0.0;
  long count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const EchoFrame echo = synthesize_echo(dead, f, tx, 4, var, rng);
    acc += echo.r.squaredNorm();
    count += echo.r.size();
  }
  CHECK(acc / count == doctest::Approx(var).epsilon(0.05));
}

TEST_CASE("single noiseless path reproduces the outer-product model") {
  RngStream rng(3);
  const int nt = 8, nr = 4, ns = 2;
  const long L = 128;
  const TxFrame tx = TxFrame::draw(ns, L, rng);
  const Beamformer f = two_beam(1.2, 1.9, nt, 0.5);
  const Complex beta(3e-3, -1e-3);
  const double theta = 1.2;
  std::vector<env::PathParams> paths{make_path(1, beta, theta, 0, 0.0)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);

  const CVecX b = steering_vector(theta, nr);
  const CVecX a = steering_vector(theta, nt);
  const CMatX expected = beta * (b * (a.adjoint() * f.matrix() * tx.s));
  CHECK((echo.r - expected).norm() <= 1e-10 * expected.norm());
}

TEST_CASE("two-path frame energy matches the sum of per-path energies") {
  RngStream rng(4);
  const int nt = 8, nr = 8, ns = 2;
  const long L = 4096;
  const TxFrame tx = TxFrame::draw(ns, L, rng);
  const Beamformer f = two_beam(1.1, 2.0, nt, 0.25);
  const CMatX fmat = f.matrix();
  std::vector<env::PathParams> paths{
      make_path(1, {2e-3, 0.0}, 1.1, 2, 10.0 / L),
      make_path(2, {1e-3, 0.0}, 2.0, 9, -7.0 / L)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);

  double expected = 0.0;
  for (const auto& p : paths) {
    const CVecX a = steering_vector(p.aoa, nt);
    expected += static_cast<double>(L) * std::norm(p.gain) * nr *
                (a.adjoint() * fmat).squaredNorm();
  }
  CHECK(echo.r.squaredNorm() == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("matched filter finds the true cell of a single noiseless path") {
  RngStream rng(5);
  const long L = 256;
  const TxFrame tx = TxFrame::draw(2, L, rng);
  const Beamformer f = two_beam(1.3, 1.8, 8, 0.5);
  std::vector<env::PathParams> paths{
      make_path(1, {1e-3, 0.0}, 1.3, 5, 12.0 / L)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, 4, 0.0, rng);

  std::vector<long> delays;
  for (long l = 0; l <= echo.l_max; ++l) delays.push_back(l);
  std::vector<double> dopplers;
  for (long j = -20; j <= 20; ++j) dopplers.push_back(double(j) / L);

  const auto res = matched_filter_search(echo, tx, delays, dopplers, 1);
  REQUIRE(res.peaks.size() == 1);
  CHECK(res.peaks[0].delay_index == 5);
  CHECK(res.peaks[0].doppler_index == doctest::Approx(12.0 / L));
}

TEST_CASE("two separated paths are both recovered at L=1024") {
  RngStream rng(6);
  const long L = 1024;
  const TxFrame tx = TxFrame::draw(2, L, rng);
  const Beamformer f = two_beam(1.1, 2.0, 8, 0.5);
  std::vector<env::PathParams> paths{
      make_path(1, {2e-3, 0.0}, 1.1, 3, 15.0 / L),
      make_path(2, {1.5e-3, 0.0}, 2.0, 5, -9.0 / L)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, 8, 0.0, rng);

  std::vector<long> delays;
  for (long l = 0; l <= echo.l_max; ++l) delays.push_back(l);
  std::vector<double> dopplers;
  for (long j = -25; j <= 25; ++j) dopplers.push_back(double(j) / L);

  const auto res = matched_filter_search(echo, tx, delays, dopplers, 2);
  REQUIRE(res.peaks.size() == 2);
  CHECK(res.complete);
  bool found1 = false, found2 = false;
  for (const auto& pk : res.peaks) {
    if (pk.delay_index == 3 && std::abs(pk.doppler_index - 15.0 / L) < 1e-12)
      found1 = true;
    if (pk.delay_index == 5 && std::abs(pk.doppler_index + 9.0 / L) < 1e-12)
      found2 = true;
  }
  CHECK(found1);
  CHECK(found2);
}

TEST_CASE("noise-only search returns peaks at the filtered-noise power scale") {
  RngStream rng(7);
  const long L = 128;
  const int nr = 4, ns = 2;
  const double var = 1.0;
  std::vector<long> delays;
  for (long l = 0; l <= 10; ++l) delays.push_back(l);
  std::vector<double> dopplers;
  for (long j = -10; j <= 10; ++j) dopplers.push_back(double(j) / L);

  double acc = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    const Beamformer f = two_beam(1.0, 2.0, 8, 0.5);
    std::vector<env::PathParams> dead{make_path(1, {1.0, 0.0}, 1.0, 10, 0.0)};
    dead[0].alive = false;
    const EchoFrame echo = synthesize_echo(dead, f, tx, nr, var, rng);
    const auto res = matched_filter_search(echo, tx, delays, dopplers, 1);
    REQUIRE(!res.peaks.empty());
    acc += res.peaks[0].power;
  }
  const double floor = var * L * nr * ns;
  const double ratio = acc / trials / floor;
  CHECK(ratio > 1.0);
  CHECK(ratio < 4.0);  // max over ~200 cells of a concentrated statistic
}

TEST_CASE("separation error decays with frame length") {
  RngStream rng(8);
  const int nt = 8, nr = 8, ns = 2;
  auto rel_error = [&](long L) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    const Beamformer f = two_beam(1.2, 2.1, nt, 0.25);
    std::vector<env::PathParams> paths{
        make_path(1, {2e-3, 0.0}, 1.2, 2, 10.0 / L),
        make_path(2, {2e-3, 0.0}, 2.1, 9, -7.0 / L)};
    const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);
    const CMatX r1 = separate_path(echo, tx, 2, 10.0 / L);
    const CVecX b = steering_vector(1.2, nr);
    const CVecX a = steering_vector(1.2, nt);
    const CMatX target = paths[0].gain * (b * (a.adjoint() * f.matrix()));
    return (r1 / static_cast<double>(L) - target).norm() / target.norm();
  };
  const double e1 = rel_error(1024);
  const double e2 = rel_error(4096);
  CHECK(e1 <= 0.10);
  CHECK(e2 <= 0.05);
}

TEST_CASE("cross-path leakage is at the 1/L scale") {
  RngStream rng(9);
  const int nt = 8, nr = 8, ns = 1;
  const long L = 1024;
  double leak_acc = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    Beamformer f;
    f.steering = steering_vector(2.1, nt);
    f.gamma = VecX::Constant(1, 0.5);
    // Only the second path transmits; separate at the first path's cell.
    std::vector<env::PathParams> paths{
        make_path(2, {2e-3, 0.0}, 2.1, 9, -7.0 / L)};
    const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);
    // Path 1's cell, which must be mostly empty.
    EchoFrame padded = echo;
    if (padded.r.cols() < L + 9) {
      CMatX wide = CMatX::Zero(nr, L + 9);
      wide.leftCols(padded.r.cols()) = padded.r;
      padded.r = std::move(wide);
      padded.l_max = 9;
    }
    const CMatX leak = separate_path(padded, tx, 2, 10.0 / L);
    const CVecX b = steering_vector(2.1, nr);
    const CVecX a = steering_vector(2.1, nt);
    const double matched_power =
        std::norm(Complex(2e-3, 0.0)) * static_cast<double>(L) *
        static_cast<double>(L) * (b * (a.adjoint() * f.matrix())).squaredNorm();
    leak_acc += leak.squaredNorm() / matched_power;
  }
  CHECK(leak_acc / trials <= 2.0 / L);
}

TEST_CASE("noise-only separation has Lemma-2 energy") {
  RngStream rng(10);
  const int nr = 4, ns = 2;
  const long L = 256;
  const double var = 0.5;
  double acc = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    const Beamformer f = two_beam(1.0, 2.0, 8, 0.5);
    std::vector<env::PathParams> none;
    const EchoFrame echo = synthesize_echo(none, f, tx, nr, var, rng);
    const CMatX sep = separate_path(echo, tx, 0, 3.0 / L);
    acc += sep.squaredNorm();
  }
  const double expected = var * L * nr * ns;
  CHECK(acc / trials == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("empirical covariance of the filtered noise matches Lemma 2") {
  RngStream rng(11);
  const int nr = 2, ns = 2;
  const long L = 128;
  const double var = 1.0;
  const int dim = nr * ns;
  const int draws = 2000;
  CMatX cov = CMatX::Zero(dim, dim);
  for (int t = 0; t < draws; ++t) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    const Beamformer f = two_beam(1.0, 2.0, 4, 0.5);
    std::vector<env::PathParams> none;
    const EchoFrame echo = synthesize_echo(none, f, tx, nr, var, rng);
    const CMatX sep = separate_path(echo, tx, 0, 5.0 / L);
    const CVecX v = Eigen::Map<const CVecX>(sep.data(), dim);
    cov += v * v.adjoint();
  }
  cov /= draws;
  const double scale = var * L;
  double offdiag = 0.0;
  int offcount = 0;
  for (int i = 0; i < dim; ++i) {
    CHECK(cov(i, i).real() == doctest::Approx(scale).epsilon(0.05));
    for (int j = 0; j < dim; ++j) {
      if (i == j) continue;
      offdiag += std::abs(cov(i, j));
      ++offcount;
    }
  }
  CHECK(offdiag / offcount < 0.05 * scale);
}

TEST_CASE("matched output grows linearly in L at the true cell only") {
  RngStream rng(12);
  const int nt = 8, nr = 4, ns = 2;
  auto powers = [&](long L) {
    const TxFrame tx = TxFrame::draw(ns, L, rng);
    const Beamformer f = two_beam(1.3, 2.0, nt, 0.5);
    std::vector<env::PathParams> paths{
        make_path(1, {1e-3, 0.0}, 1.3, 2, 0.0)};
    const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);
    const double matched = separate_path(echo, tx, 2, 0.0).squaredNorm();
    const double mismatched =
        separate_path(echo, tx, 0, 40.0 / L).squaredNorm();
    return std::make_pair(matched, mismatched);
  };
  const auto [m256, x256] = powers(256);
  const auto [m1024, x1024] = powers(1024);
  const auto [m4096, x4096] = powers(4096);
  // Amplitude grows ~L at the true cell, ~sqrt(L) elsewhere.
  CHECK(m1024 / m256 == doctest::Approx(16.0).epsilon(0.25));
  CHECK(m4096 / m1024 == doctest::Approx(16.0).epsilon(0.25));
  CHECK(x1024 / x256 < 16.0 * 0.6);
  CHECK(x4096 / x1024 < 16.0 * 0.6);
}

TEST_CASE("profile likelihood peaks at the true angle without noise") {
  RngStream rng(13);
  const int nt = 8, nr = 8, ns = 2;
  const long L = 256;
  const TxFrame tx = TxFrame::draw(ns, L, rng);
  const double theta_true = kPi * 2501 / 7200;  // on the search grid
  Beamformer f = two_beam(theta_true, 2.2, nt, 0.5);
  std::vector<env::PathParams> paths{
      make_path(1, {1e-3, 5e-4}, theta_true, 0, 0.0)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);
  const CMatX r1 = separate_path(echo, tx, 0, 0.0);
  const CMatX fmat = f.matrix();

  double best = -1e300;
  double best_theta = -1.0;
  for (int j = 0; j < 7200; ++j) {
    const double theta = kPi * j / 7200;
    const double ll = profile_loglik(r1, theta, fmat, L, 1e-9);
    if (ll > best) {
      best = ll;
      best_theta = theta;
    }
  }
  CHECK(best_theta == doctest::Approx(theta_true).epsilon(1e-12));
  // At the exact angle the only residual is cross-stream self-interference,
  // which the profile gain cannot absorb; it is small relative to ||r||^2.
  const double ll_true = profile_loglik(r1, theta_true, fmat, L, 1.0);
  CHECK(std::abs(ll_true) * L < 0.05 * r1.squaredNorm());
}

TEST_CASE("profile likelihood is phase invariant and scale stable") {
  RngStream rng(14);
  const int nt = 4, nr = 4, ns = 2;
  const long L = 64;
  const TxFrame tx = TxFrame::draw(ns, L, rng);
  const Beamformer f = two_beam(1.0, 1.7, nt, 0.5);
  std::vector<env::PathParams> paths{make_path(1, {1e-2, 0.0}, 1.0, 0, 0.0)};
  EchoFrame echo = synthesize_echo(paths, f, tx, nr, 1e-4, rng);
  const CMatX r1 = separate_path(echo, tx, 0, 0.0);
  const CMatX fmat = f.matrix();

  const Complex phase = std::polar(1.0, 0.7);
  for (double theta : {0.4, 1.0, 2.3}) {
    const double a = profile_loglik(r1, theta, fmat, L, 1e-4);
    const double b = profile_loglik(phase * r1, theta, fmat, L, 1e-4);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  // Rescaling F by c with sigma^2 scaled by c^2 preserves the argmax exactly.
  const double c2 = 4.0;
  int arg1 = 0, arg2 = 0;
  double best1 = -1e300, best2 = -1e300;
  for (int j = 0; j < 720; ++j) {
    const double theta = kPi * j / 720;
    const double l1 = profile_loglik(r1, theta, fmat, L, 1e-4);
    const double l2 =
        profile_loglik(r1, theta, std::sqrt(c2) * fmat, L, c2 * 1e-4);
    if (l1 > best1) { best1 = l1; arg1 = j; }
    if (l2 > best2) { best2 = l2; arg2 = j; }
  }
  CHECK(arg1 == arg2);
}

TEST_CASE("orthogonal beamformer yields -inf") {
  // Nt = 4 beams at cos spacing 1/2 are exactly orthogonal.
  const int nt = 4, nr = 2;
  const double theta0 = kPi / 2;                    // cos = 0
  const double theta1 = std::acos(0.5);             // cos = 1/2
  Beamformer f;
  f.steering = steering_vector(theta1, nt);
  f.gamma = VecX::Constant(1, 1.0);
  const CMatX r = CMatX::Ones(nr, 1);
  const double ll = profile_loglik(r, theta0, f.matrix(), 16, 1.0);
  CHECK(std::isinf(ll));
  CHECK(ll < 0);
}

TEST_CASE("gain estimate recovers the true complex gain") {
  RngStream rng(15);
  const int nt = 8, nr = 8, ns = 2;
  const long L = 1024;
  const TxFrame tx = TxFrame::draw(ns, L, rng);
  const double theta = 1.3;
  const Beamformer f = two_beam(theta, 2.0, nt, 0.5);
  const Complex beta(2e-3, -1e-3);
  std::vector<env::PathParams> paths{make_path(1, beta, theta, 0, 0.0)};
  const EchoFrame echo = synthesize_echo(paths, f, tx, nr, 0.0, rng);
  const CMatX r1 = separate_path(echo, tx, 0, 0.0);
  const Complex est = estimate_gain(r1, theta, f.matrix(), L);
  CHECK(std::abs(est - beta) < 0.1 * std::abs(beta));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckmtrack/env.hpp"

using namespace ckmtrack;
using namespace ckmtrack::env;

namespace {

Scene default_scene() {
  Scene s;
  s.reflectors = {{20.0, 0.7}};
  return s;
}

}  // namespace

TEST_CASE("on-axis state with one reflector") {
  Scene s = default_scene();
  const auto paths = ground_truth_paths(s, {0.0, 10.0, 0.0});
  REQUIRE(paths.size() == 2);

  CHECK(paths[0].path_id == 1);
  CHECK(paths[0].delay == doctest::Approx(2.0 * 10.0 / kSpeedOfLight).epsilon(1e-12));
  CHECK(paths[0].doppler == doctest::Approx(0.0));
  CHECK(paths[0].aoa == doctest::Approx(kPi / 2).epsilon(1e-12));

  // Mirror across y=20 sits at (0, 30): one-way length 30 m, broadside AoA.
  CHECK(paths[1].path_id == 2);
  CHECK(paths[1].delay == doctest::Approx(2.0e-7).epsilon(1e-12));
  CHECK(paths[1].doppler == doctest::Approx(0.0));
  CHECK(paths[1].aoa == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("LoS observables at the nominal initial state") {
  Scene s = default_scene();
  const auto paths = ground_truth_paths(s, {-20.0, 10.0, 10.0});

  CHECK(std::hypot(-20.0, 10.0) == doctest::Approx(22.3607).epsilon(1e-4));
  CHECK(paths[0].delay == doctest::Approx(1.4907e-7).epsilon(1e-4));
  CHECK(std::cos(paths[0].aoa) == doctest::Approx(-0.8944).epsilon(1e-4));
  CHECK(paths[0].doppler == doctest::Approx(-894.43).epsilon(1e-4));
}

TEST_CASE("gain identity beta = eps * alpha^2 on random states") {
  Scene s = default_scene();
  s.reflection_coeff = 0.8;
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleState st{rng.uniform(-25.0, 25.0), rng.uniform(5.0, 15.0),
                    rng.uniform(-15.0, 15.0)};
    for (const auto& p : ground_truth_paths(s, st)) {
      CHECK(std::abs(p.gain) ==
            doctest::Approx(0.8 * p.amp_loss * p.amp_loss).epsilon(1e-12));
      CHECK(p.aoa > 0.0);
      CHECK(p.aoa < kPi);
    }
  }
}

TEST_CASE("LoS triple equals the measurement model at the same state") {
  Scene s = default_scene();
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleState st{rng.uniform(-25.0, 25.0), rng.uniform(5.0, 15.0),
                    rng.uniform(-15.0, 15.0)};
    const auto paths = ground_truth_paths(s, st);
    const Vec3 g1 = los_observables(st, s.rsu_position, s.carrier_freq);
    CHECK(paths[0].delay == doctest::Approx(g1[0]).epsilon(1e-14));
    CHECK(paths[0].doppler == doctest::Approx(g1[1]).epsilon(1e-14));
    CHECK(std::cos(paths[0].aoa) == doctest::Approx(g1[2]).epsilon(1e-12));
  }
}

TEST_CASE("NLoS delay exceeds LoS delay") {
  Scene s = default_scene();
  RngStream rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleState st{rng.uniform(-25.0, 25.0), rng.uniform(5.0, 15.0), 0.0};
    const auto paths = ground_truth_paths(s, st);
    CHECK(paths[1].delay > paths[0].delay);
  }
}

TEST_CASE("degenerate geometry rejected") {
  Scene s = default_scene();
  CHECK_THROWS_AS(ground_truth_paths(s, {0.0, -1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ground_truth_paths(s, {0.0, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("frame indices quantize delay and normalize Doppler") {
  Scene s = default_scene();
  auto paths = ground_truth_paths(s, {-20.0, 10.0, 10.0});
  set_frame_indices(paths, 1e-8, 0.02 / 256);
  for (const auto& p : paths) {
    CHECK(p.delay_index == std::lround(p.delay / 1e-8));
    CHECK(p.doppler_index == doctest::Approx(p.doppler * 0.02 / 256));
  }
}

TEST_CASE("constant-velocity step") {
  const VehicleState st{-20.0, 10.0, 10.0};
  const VehicleState next = evolve_state(st, 0.02);
  CHECK(next.qx == doctest::Approx(-19.8).epsilon(1e-12));
  CHECK(next.qy == doctest::Approx(10.0));
  CHECK(next.v == doctest::Approx(10.0));

  const VehicleState same = evolve_state(st, 0.0);
  CHECK(same.qx == st.qx);
  CHECK(same.qy == st.qy);
  CHECK(same.v == st.v);
}

TEST_CASE("noisy evolution has the configured per-slot spread") {
  RngStream rng(23);
  const double sigma = 1e-3;
  double acc = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vec3 w(rng.gaussian(0.0, sigma), rng.gaussian(0.0, sigma),
                 rng.gaussian(0.0, sigma));
    const VehicleState next = evolve_state({0.0, 10.0, 0.0}, 0.02, w);
    acc += (next.qy - 10.0) * (next.qy - 10.0);
  }
  CHECK(std::sqrt(acc / n) == doctest::Approx(sigma).epsilon(0.05));
}

TEST_CASE("blockage probabilities and the static window") {
  BlockageConfig zero{0.0, 140, 175};
  RngStream rng(3);
  for (long s = 0; s < 300; ++s) {
    const auto alive = blockage_step(zero, s, 2, rng);
    CHECK(alive[0] == !(s >= 140 && s <= 175));
    CHECK(alive[1]);
  }

  BlockageConfig cfg{0.15, 0, -1};  // empty window
  CHECK(cfg.nlos_block_prob() == doctest::Approx(0.2775).epsilon(1e-12));

  long los_blocked = 0;
  long nlos_blocked = 0;
  const long n = 100000;
  RngStream rng2(5);
  for (long s = 0; s < n; ++s) {
    const auto alive = blockage_step(cfg, s, 2, rng2);
    los_blocked += alive[0] ? 0 : 1;
    nlos_blocked += alive[1] ? 0 : 1;
  }
  CHECK(std::abs(static_cast<double>(los_blocked) / n - 0.15) < 0.01);
  CHECK(std::abs(static_cast<double>(nlos_blocked) / n - 0.2775) < 0.01);
}

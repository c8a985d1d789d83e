#include "ckmtrack/env.hpp"

#include <cmath>
#include <stdexcept>

namespace ckmtrack::env {

void Scene::validate() const {
  if (nt < 1 || nr < 1 || ns < 1) {
    throw std::invalid_argument("scene: antenna counts must be >= 1");
  }
  if (ns > nt) {
    throw std::invalid_argument("scene: ns must not exceed nt");
  }
  if (!(carrier_freq > 0.0)) {
    throw std::invalid_argument("scene: carrier_freq must be positive");
  }
  if (!(road_y > 0.0)) {
    throw std::invalid_argument("scene: road_y must be positive");
  }
  if (!(reflection_coeff > 0.0)) {
    throw std::invalid_argument("scene: reflection_coeff must be positive");
  }
  for (const Reflector& r : reflectors) {
    if (r.y == road_y) {
      throw std::invalid_argument("scene: reflector line coincides with road_y");
    }
    if (!(r.loss > 0.0) || r.loss > 1.0) {
      throw std::invalid_argument("scene: reflector loss must lie in (0, 1]");
    }
  }
}

Vec3 los_observables(const VehicleState& state, const Vec2& rsu_position,
                     double carrier_freq) {
  const double rx = state.qx - rsu_position[0];
  const double ry = state.qy - rsu_position[1];
  const double range = std::hypot(rx, ry);
  if (!(range > 0.0)) {
    throw std::invalid_argument("los_observables: vehicle collocated with RSU");
  }
  Vec3 out;
  out[0] = 2.0 * range / kSpeedOfLight;
  out[1] = -2.0 * state.v * ry * carrier_freq / (kSpeedOfLight * range);
  out[2] = rx / range;
  return out;
}

std::vector<PathParams> ground_truth_paths(const Scene& scene,
                                           const VehicleState& state) {
  if (!(state.qy > 0.0)) {
    throw std::invalid_argument("ground_truth_paths: requires qy > 0");
  }
  std::vector<PathParams> paths;
  paths.reserve(scene.path_count());

  const Vec3 los = los_observables(state, scene.rsu_position, scene.carrier_freq);
  PathParams p1;
  p1.path_id = 1;
  p1.delay = los[0];
  p1.doppler = los[1];
  p1.aoa = std::acos(los[2]);
  const double range = 0.5 * kSpeedOfLight * los[0];
  p1.amp_loss = 1.0 / (2.0 * range);
  p1.gain = Complex(scene.reflection_coeff * p1.amp_loss * p1.amp_loss, 0.0);
  paths.push_back(p1);

  int id = 2;
  for (const Reflector& r : scene.reflectors) {
    // Mirror the vehicle across the wall; the echo arrives along the ray from
    // the RSU to the mirror image, and the one-way length is that distance.
    const double mx = state.qx - scene.rsu_position[0];
    const double my = 2.0 * r.y - state.qy - scene.rsu_position[1];
    const double d = std::hypot(mx, my);
    if (!(my > 0.0) || !(d > 0.0)) {
      throw std::invalid_argument(
          "ground_truth_paths: reflector geometry puts the mirror image "
          "outside the array's field of view");
    }
    PathParams p;
    p.path_id = id++;
    p.delay = 2.0 * d / kSpeedOfLight;
    // d(t) = |(mx + v t, my)|, so d'(t) = v * mx / d.
    p.doppler = -2.0 * scene.carrier_freq * state.v * mx / (kSpeedOfLight * d);
    p.aoa = std::atan2(my, mx);
    p.amp_loss = r.loss / (2.0 * d);
    p.gain = Complex(scene.reflection_coeff * p.amp_loss * p.amp_loss, 0.0);
    paths.push_back(p);
  }
  return paths;
}

void set_frame_indices(std::vector<PathParams>& paths, double sample_interval,
                       double symbol_interval) {
  if (!(sample_interval > 0.0) || !(symbol_interval > 0.0)) {
    throw std::invalid_argument("set_frame_indices: intervals must be positive");
  }
  for (PathParams& p : paths) {
    p.delay_index = std::lround(p.delay / sample_interval);
    p.doppler_index = p.doppler * symbol_interval;
  }
}

VehicleState evolve_state(const VehicleState& state, double dt,
                          const Vec3& noise) {
  if (dt < 0.0) {
    throw std::invalid_argument("evolve_state: dt must be >= 0");
  }
  VehicleState next;
  next.qx = state.qx + dt * state.v + noise[0];
  next.qy = state.qy + noise[1];
  next.v = state.v + noise[2];
  return next;
}

std::vector<bool> blockage_step(const BlockageConfig& cfg, long slot,
                                int path_count, RngStream& rng) {
  if (slot < 0) {
    throw std::invalid_argument("blockage_step: slot must be >= 0");
  }
  std::vector<bool> alive(path_count, true);
  for (int i = 0; i < path_count; ++i) {
    const double u = rng.uniform01();
    if (i == 0) {
      alive[i] = (u < 1.0 - cfg.p_blk) && !cfg.in_window(slot);
    } else {
      alive[i] = u < 1.0 - cfg.nlos_block_prob();
    }
  }
  return alive;
}

}  // namespace ckmtrack::env

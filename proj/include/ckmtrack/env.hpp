#pragma once

#include <vector>

#include "ckmtrack/rng.hpp"
#include "ckmtrack/types.hpp"

namespace ckmtrack::env {

// Axis-parallel mirror wall y = const with a one-bounce amplitude loss factor.
struct Reflector {
  double y = 0.0;
  double loss = 1.0;  // in (0, 1]
};

struct Scene {
  Vec2 rsu_position{0.0, 0.0};
  int nt = 32;
  int nr = 32;
  int ns = 2;
  double carrier_freq = 30e9;           // Hz
  double road_y = 10.0;                 // lane offset of the vehicle path, m
  std::vector<Reflector> reflectors;    // one NLoS path per reflector
  double reflection_coeff = 1.0;        // epsilon in beta = eps * alpha^2

  int path_count() const { return 1 + static_cast<int>(reflectors.size()); }

  // Throws std::invalid_argument on an inconsistent scene.
  void validate() const;
};

// C-domain state alpha = [qx, qy, v]; v is signed motion along the x axis.
struct VehicleState {
  double qx = 0.0;  // m
  double qy = 0.0;  // m
  double v = 0.0;   // m/s

  Vec3 vec() const { return {qx, qy, v}; }
  static VehicleState from_vec(const Vec3& a) { return {a[0], a[1], a[2]}; }
};

struct PathParams {
  int path_id = 1;          // 1 = LoS, j > 1 = reflector j-1
  Complex gain{0.0, 0.0};   // beta
  double amp_loss = 0.0;    // alpha, one-way amplitude loss
  double aoa = 0.0;         // radians, strictly inside (0, pi)
  double delay = 0.0;       // round-trip, s
  double doppler = 0.0;     // round-trip, Hz
  bool alive = true;
  long delay_index = 0;     // l = round(delay / sample_interval)
  double doppler_index = 0; // k = doppler * symbol_interval
};

struct BlockageConfig {
  double p_blk = 0.0;
  // Inclusive slot interval of deterministic LoS blockage; empty if start > end.
  long window_start = 0;
  long window_end = -1;

  bool in_window(long slot) const {
    return slot >= window_start && slot <= window_end;
  }
  // An NLoS bounce concatenates two LoS-like legs.
  double nlos_block_prob() const { return 1.0 - (1.0 - p_blk) * (1.0 - p_blk); }
};

// Noiseless LoS observable triple [tau; mu; cos(aoa)] of a state relative to
// the RSU. This is the single source of truth shared by the simulator and the
// C-domain LoS measurement model.
Vec3 los_observables(const VehicleState& state, const Vec2& rsu_position,
                     double carrier_freq);

// All path parameters (LoS first, then one single-bounce path per reflector)
// at the given ground-truth state. Frame indices are left at zero; call
// set_frame_indices before handing paths to the echo synthesizer.
std::vector<PathParams> ground_truth_paths(const Scene& scene,
                                           const VehicleState& state);

// Quantizes delays onto the sample grid and normalizes Doppler onto the
// per-symbol phase increment used by the frame synthesizer.
void set_frame_indices(std::vector<PathParams>& paths, double sample_interval,
                       double symbol_interval);

// Constant-velocity step: qx += dt*v, with additive per-component noise.
VehicleState evolve_state(const VehicleState& state, double dt,
                          const Vec3& noise = Vec3::Zero());

// Per-path alive flags for one slot. Exactly path_count draws are consumed in
// path-id order regardless of the window, so paired schemes stay aligned.
std::vector<bool> blockage_step(const BlockageConfig& cfg, long slot,
                                int path_count, RngStream& rng);

}  // namespace ckmtrack::env

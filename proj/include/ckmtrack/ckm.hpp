#pragma once

#include <iosfwd>
#include <vector>

#include "ckmtrack/env.hpp"
#include "ckmtrack/types.hpp"

namespace ckmtrack::ckm {

// Per-path channel knowledge stored at one sampled location. Doppler is kept
// as a per-unit-velocity factor so a single map serves every speed; angles are
// kept in the cosine domain, which is monotone on (0, pi) and is also the
// coordinate the C-domain measurement uses.
struct CkmPathEntry {
  double amp_loss = 0.0;       // alpha
  double cos_aoa = 0.0;        // cos(theta)
  double delay = 0.0;          // tau, s
  double doppler_per_v = 0.0;  // d, Hz per (m/s); mu = d * v
};

struct CkmSample {
  Vec2 location{0.0, 0.0};
  std::vector<CkmPathEntry> paths;  // indexed by path_id - 1
};

struct ChannelKnowledgeMap {
  std::vector<CkmSample> samples;
  int k = 4;              // neighbor count
  double idw_power = 2.0;
  int path_count = 0;
};

// Interpolated tuple returned by a map query.
struct PathTuple {
  double amp_loss = 0.0;
  double aoa = 0.0;      // radians
  double delay = 0.0;    // s
  double doppler = 0.0;  // Hz
};

// Evaluates the scene's ground-truth paths at each location (unit velocity for
// the Doppler factor) and stores the per-path tuples. Duplicate locations are
// rejected.
ChannelKnowledgeMap build_ckm(const env::Scene& scene,
                              const std::vector<Vec2>& sample_locations,
                              int k = 4, double idw_power = 2.0);

// IDW over the K nearest samples, with an exact-hit short circuit below 1e-9 m.
// Angles are interpolated in the cosine domain.
std::vector<PathTuple> query_ckm(const ChannelKnowledgeMap& map, const Vec2& q,
                                 double v);

// Raw interpolated entries (cosine-domain angle); used by g2_measure so the
// measurement never round-trips through acos/cos.
std::vector<CkmPathEntry> interpolate_ckm(const ChannelKnowledgeMap& map,
                                          const Vec2& q);

// CKM measurement function g2: stacks [tau_1..tau_P; mu_1..mu_P;
// cos(theta_1)..cos(theta_P)] at the given state.
VecX g2_measure(const ChannelKnowledgeMap& map, const env::VehicleState& state);

// Forward finite differences of g2_measure, columns [qx, qy, v].
MatX jacobian_g2(const ChannelKnowledgeMap& map, const env::VehicleState& state,
                 const Vec3& steps = Vec3(0.01, 0.01, 0.01));

// Flat text table: one row per sample, "x y" then alpha, cos_aoa, tau, d per path.
void write_ckm_table(const ChannelKnowledgeMap& map, std::ostream& os);

}  // namespace ckmtrack::ckm

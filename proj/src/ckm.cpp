#include "ckmtrack/ckm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ckmtrack::ckm {

namespace {

constexpr double kExactHitDistance = 1e-9;  // m

struct Neighbor {
  double dist2;
  int index;
};

}  // namespace

ChannelKnowledgeMap build_ckm(const env::Scene& scene,
                              const std::vector<Vec2>& sample_locations,
                              int k, double idw_power) {
  if (sample_locations.empty()) {
    throw std::invalid_argument("build_ckm: no sample locations");
  }
  if (k < 1 || k > static_cast<int>(sample_locations.size())) {
    throw std::invalid_argument("build_ckm: k must lie in [1, #samples]");
  }
  if (!(idw_power > 0.0)) {
    throw std::invalid_argument("build_ckm: idw_power must be positive");
  }

  {
    std::vector<Vec2> sorted = sample_locations;
    std::sort(sorted.begin(), sorted.end(), [](const Vec2& a, const Vec2& b) {
      return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] == sorted[i - 1]) {
        throw std::invalid_argument("build_ckm: duplicate sample location");
      }
    }
  }

  ChannelKnowledgeMap map;
  map.k = k;
  map.idw_power = idw_power;
  map.path_count = scene.path_count();
  map.samples.reserve(sample_locations.size());

  for (const Vec2& loc : sample_locations) {
    env::VehicleState state{loc[0], loc[1], 1.0};  // unit velocity
    const auto paths = env::ground_truth_paths(scene, state);
    CkmSample sample;
    sample.location = loc;
    sample.paths.reserve(paths.size());
    for (const auto& p : paths) {
      CkmPathEntry e;
      e.amp_loss = p.amp_loss;
      e.cos_aoa = std::cos(p.aoa);
      e.delay = p.delay;
      e.doppler_per_v = p.doppler;  // evaluated at v = 1
      sample.paths.push_back(e);
    }
    map.samples.push_back(std::move(sample));
  }
  return map;
}

std::vector<CkmPathEntry> interpolate_ckm(const ChannelKnowledgeMap& map,
                                          const Vec2& q) {
  const int n = static_cast<int>(map.samples.size());
  if (n == 0) {
    throw std::invalid_argument("interpolate_ckm: empty map");
  }
  const int k = std::min(map.k, n);

  std::vector<Neighbor> neighbors(n);
  for (int i = 0; i < n; ++i) {
    neighbors[i] = {(map.samples[i].location - q).squaredNorm(), i};
  }
  std::partial_sort(neighbors.begin(), neighbors.begin() + k, neighbors.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.dist2 != b.dist2 ? a.dist2 < b.dist2
                                                : a.index < b.index;
                    });

  if (neighbors[0].dist2 < kExactHitDistance * kExactHitDistance) {
    return map.samples[neighbors[0].index].paths;
  }

  std::vector<double> weights(k);
  double wsum = 0.0;
  for (int j = 0; j < k; ++j) {
    const double dist = std::sqrt(neighbors[j].dist2);
    weights[j] = 1.0 / std::pow(dist, map.idw_power);
    wsum += weights[j];
  }

  std::vector<CkmPathEntry> out(map.path_count);
  for (int j = 0; j < k; ++j) {
    const double w = weights[j] / wsum;
    const CkmSample& s = map.samples[neighbors[j].index];
    for (int i = 0; i < map.path_count; ++i) {
      out[i].amp_loss += w * s.paths[i].amp_loss;
      out[i].cos_aoa += w * s.paths[i].cos_aoa;
      out[i].delay += w * s.paths[i].delay;
      out[i].doppler_per_v += w * s.paths[i].doppler_per_v;
    }
  }
  return out;
}

std::vector<PathTuple> query_ckm(const ChannelKnowledgeMap& map, const Vec2& q,
                                 double v) {
  const auto entries = interpolate_ckm(map, q);
  std::vector<PathTuple> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out[i].amp_loss = entries[i].amp_loss;
    out[i].aoa = std::acos(std::clamp(entries[i].cos_aoa, -1.0, 1.0));
    out[i].delay = entries[i].delay;
    out[i].doppler = entries[i].doppler_per_v * v;
  }
  return out;
}

VecX g2_measure(const ChannelKnowledgeMap& map,
                const env::VehicleState& state) {
  const auto entries = interpolate_ckm(map, Vec2(state.qx, state.qy));
  const int p = static_cast<int>(entries.size());
  VecX z(3 * p);
  for (int i = 0; i < p; ++i) {
    z[i] = entries[i].delay;
    z[p + i] = entries[i].doppler_per_v * state.v;
    z[2 * p + i] = entries[i].cos_aoa;
  }
  return z;
}

MatX jacobian_g2(const ChannelKnowledgeMap& map, const env::VehicleState& state,
                 const Vec3& steps) {
  if (!(steps.minCoeff() > 0.0)) {
    throw std::invalid_argument("jacobian_g2: steps must be positive");
  }
  const VecX base = g2_measure(map, state);
  MatX jac(base.size(), 3);
  for (int c = 0; c < 3; ++c) {
    env::VehicleState bumped = state;
    switch (c) {
      case 0: bumped.qx += steps[0]; break;
      case 1: bumped.qy += steps[1]; break;
      default: bumped.v += steps[2]; break;
    }
    jac.col(c) = (g2_measure(map, bumped) - base) / steps[c];
  }
  return jac;
}

void write_ckm_table(const ChannelKnowledgeMap& map, std::ostream& os) {
  char buf[64];
  auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof(buf), "%.12g%c", x, sep);
    os << buf;
  };
  for (const CkmSample& s : map.samples) {
    put(s.location[0], ' ');
    put(s.location[1], ' ');
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
      const CkmPathEntry& e = s.paths[i];
      put(e.amp_loss, ' ');
      put(e.cos_aoa, ' ');
      put(e.delay, ' ');
      put(e.doppler_per_v, i + 1 == s.paths.size() ? '\n' : ' ');
    }
  }
}

}  // namespace ckmtrack::ckm

#include "ckmtrack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ckmtrack/beamform.hpp"
#include "ckmtrack/rng.hpp"
#include "ckmtrack/signal.hpp"

namespace ckmtrack::harness {

namespace {

constexpr std::uint64_t kPurposeInit = 1;
constexpr std::uint64_t kPurposeTrajectory = 2;
constexpr std::uint64_t kPurposeBlockage = 3;
constexpr std::uint64_t kPurposeSignal = 4;
constexpr std::uint64_t kPurposeBaseline = 5;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double rad2deg(double x) { return x * 180.0 / kPi; }

// Wraparound-guarded AoA error in degrees.
double aoa_error_deg(double a_rad, double b_rad) {
  const double d = std::abs(a_rad - b_rad);
  return rad2deg(std::min(d, kPi - d));
}

// Map-predicted per-path frame cells and angle/gain at one state.
struct PathPrediction {
  long delay_index = 0;
  double doppler_index = 0.0;
  double angle = 0.0;
  double gain = 0.0;
};

std::vector<PathPrediction> predict_paths(const ckm::ChannelKnowledgeMap& map,
                                          const Vec3& state,
                                          const SimConfig& cfg) {
  const auto entries = ckm::interpolate_ckm(map, Vec2(state[0], state[1]));
  std::vector<PathPrediction> out(entries.size());
  const double t_symb = cfg.symbol_interval();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double mu = entries[i].doppler_per_v * state[2];
    out[i].delay_index = std::lround(entries[i].delay / cfg.sample_interval);
    out[i].doppler_index = mu * t_symb;
    out[i].angle = std::acos(std::clamp(entries[i].cos_aoa, -1.0, 1.0));
    out[i].gain = cfg.scene.reflection_coeff * entries[i].amp_loss *
                  entries[i].amp_loss;
  }
  return out;
}

struct RunOutputs {
  std::vector<SlotRecord> proposed;
  std::vector<SlotRecord> baseline;
};

struct RunInputs {
  std::vector<env::VehicleState> truth;          // per slot
  std::vector<std::vector<bool>> alive;          // per slot, per path
  std::vector<std::vector<env::PathParams>> paths;  // alive flags applied
  Vec3 init_mean;
  Mat3 init_cov;
};

RunInputs make_run_inputs(const SimConfig& cfg, long run) {
  const long slots = cfg.slot_count();
  const int p = cfg.scene.path_count();

  RngStream init_rng(derive_seed(cfg.seed, run, kPurposeInit));
  RngStream traj_rng(derive_seed(cfg.seed, run, kPurposeTrajectory));
  RngStream blk_rng(derive_seed(cfg.seed, run, kPurposeBlockage));

  RunInputs in;
  in.init_mean = cfg.initial.vec() +
                 cfg.init_std * Vec3(init_rng.gaussian(), init_rng.gaussian(),
                                     init_rng.gaussian());
  in.init_cov = Vec3::Constant(cfg.init_std * cfg.init_std).asDiagonal();

  const env::BlockageConfig blk{cfg.p_blk, cfg.window_start, cfg.window_end};
  env::VehicleState state = cfg.initial;
  in.truth.reserve(slots);
  in.alive.reserve(slots);
  in.paths.reserve(slots);
  for (long s = 0; s < slots; ++s) {
    const Vec3 w(traj_rng.gaussian(0.0, cfg.sigma_qx),
                 traj_rng.gaussian(0.0, cfg.sigma_qy),
                 traj_rng.gaussian(0.0, cfg.sigma_v));
    state = env::evolve_state(state, cfg.dt, w);
    in.truth.push_back(state);
    in.alive.push_back(env::blockage_step(blk, s, p, blk_rng));

    auto paths = env::ground_truth_paths(cfg.scene, state);
    env::set_frame_indices(paths, cfg.sample_interval, cfg.symbol_interval());
    for (int i = 0; i < p; ++i) paths[i].alive = in.alive.back()[i];
    in.paths.push_back(std::move(paths));
  }
  return in;
}

std::vector<SlotRecord> run_proposed(const SimConfig& cfg,
                                     const ckm::ChannelKnowledgeMap& map,
                                     long run, const RunInputs& in) {
  const long slots = cfg.slot_count();
  const int p = cfg.scene.path_count();
  const int nt = cfg.scene.nt;
  const int nr = cfg.scene.nr;
  const int ns = cfg.scene.ns;
  const long frame = cfg.frame_length;
  const double t_symb = cfg.symbol_interval();
  const Vec2 rsu = cfg.scene.rsu_position;
  const double fc = cfg.scene.carrier_freq;
  const bdomain::AngularGrid grid{cfg.n_theta};
  const Vec3 fd_steps(cfg.ckm_step_qx, cfg.ckm_step_qy, cfg.ckm_step_v);

  cdomain::NoiseModel noise;
  noise.var_qx = cfg.sigma_qx * cfg.sigma_qx;
  noise.var_qy = cfg.sigma_qy * cfg.sigma_qy;
  noise.var_v = cfg.sigma_v * cfg.sigma_v;
  noise.var_tau = cfg.sigma_tau * cfg.sigma_tau;
  noise.var_mu = cfg.sigma_mu * cfg.sigma_mu;
  noise.var_costheta = cfg.sigma_costheta * cfg.sigma_costheta;

  const cdomain::MeasurementModel los_model{
      [&](const Vec3& x) { return VecX(cdomain::g1_measure(x, rsu, fc)); },
      [&](const Vec3& x) { return MatX(cdomain::jacobian_g1(x, rsu, fc)); }};
  const cdomain::MeasurementModel nlos_model{
      [&](const Vec3& x) {
        return ckm::g2_measure(map, env::VehicleState::from_vec(x));
      },
      [&](const Vec3& x) {
        return ckm::jacobian_g2(map, env::VehicleState::from_vec(x), fd_steps);
      }};

  RngStream sig_rng(derive_seed(cfg.seed, run, kPurposeSignal));

  cdomain::CState pred{in.init_mean, in.init_cov};
  std::vector<PathPrediction> pred_paths = predict_paths(map, pred.mean, cfg);
  std::vector<bdomain::AngularBelief> beliefs(p);
  std::vector<int> kind_into(p, 1);
  std::vector<double> est_gain(p);
  for (int i = 0; i < p; ++i) {
    beliefs[i] =
        bdomain::tpm_ckm_row(pred_paths[i].angle, cfg.tpm_sigma_ckm, grid);
    est_gain[i] = pred_paths[i].gain;
  }
  auto make_plan = [&](const std::vector<PathPrediction>& pp) {
    std::vector<beamform::PredictedPath> pred_list(p);
    for (int i = 0; i < p; ++i) {
      pred_list[i].theta = bdomain::hard_predict(beliefs[i], grid);
      pred_list[i].gain_abs = cfg.bf_gain_source == GainSource::kCkm
                                  ? pp[i].gain
                                  : est_gain[i];
      pred_list[i].path_id = i + 1;
    }
    return beamform::build_plan(pred_list, ns, nt, nr, cfg.gamma_budget(),
                                cfg.bf_mode);
  };
  beamform::BeamformingPlan plan = make_plan(pred_paths);

  std::vector<SlotRecord> records;
  records.reserve(slots);

  for (long s = 0; s < slots; ++s) {
    const env::VehicleState& truth = in.truth[s];
    const auto& paths = in.paths[s];

    // Echo for this slot under the predictive beamformer.
    const signal::TxFrame tx = signal::TxFrame::draw(ns, frame, sig_rng);
    const signal::Beamformer bf = plan.beamformer();
    const signal::EchoFrame echo =
        signal::synthesize_echo(paths, bf, tx, nr, cfg.sigma_z2, sig_rng);
    const CMatX fmat = bf.matrix();

    // Search grids: windows around the map-predicted cells. The map's
    // delay/Doppler geometry stays valid across blockage, so windows cover
    // every reachable cell of this scene; the index caps bound them.
    std::set<long> delay_cells;
    std::set<long> doppler_cells;
    for (int i = 0; i < p; ++i) {
      const long dlo = pred_paths[i].delay_index - cfg.mf_window_delay;
      const long dhi = pred_paths[i].delay_index + cfg.mf_window_delay;
      const long cap = std::min(echo.l_max, cfg.mf_max_delay_index);
      for (long l = std::max(0l, dlo); l <= std::min(cap, dhi); ++l) {
        delay_cells.insert(l);
      }
      const long j0 = std::lround(pred_paths[i].doppler_index * frame);
      const long klo =
          std::max(j0 - cfg.mf_window_doppler, -cfg.mf_max_doppler_index);
      const long khi =
          std::min(j0 + cfg.mf_window_doppler, cfg.mf_max_doppler_index);
      for (long j = klo; j <= khi; ++j) doppler_cells.insert(j);
    }
    std::vector<long> delay_grid(delay_cells.begin(), delay_cells.end());
    std::vector<double> doppler_grid;
    doppler_grid.reserve(doppler_cells.size());
    for (long j : doppler_cells) {
      doppler_grid.push_back(static_cast<double>(j) /
                             static_cast<double>(frame));
    }

    const auto mf =
        signal::matched_filter_search(echo, tx, delay_grid, doppler_grid, p);

    // Greedy association of confident peaks to map-predicted cells.
    const double noise_floor = cfg.sigma_z2 * static_cast<double>(frame) *
                               static_cast<double>(nr) *
                               static_cast<double>(ns);
    const double threshold = cfg.mf_conf_factor * noise_floor;
    std::vector<bool> detected(p, false);
    std::vector<long> l_hat(p, 0);
    std::vector<double> k_hat(p, 0.0);
    for (const auto& peak : mf.peaks) {
      if (!(peak.power > threshold) || !(peak.power > 0.0)) continue;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < p; ++i) {
        if (detected[i]) continue;
        const double dl =
            static_cast<double>(peak.delay_index - pred_paths[i].delay_index);
        const double dk =
            (peak.doppler_index - pred_paths[i].doppler_index) * frame;
        const double dist = dl * dl + dk * dk;
        if (dist < best_d) {
          best_d = dist;
          best = i;
        }
      }
      if (best >= 0) {
        detected[best] = true;
        l_hat[best] = peak.delay_index;
        k_hat[best] = peak.doppler_index;
      }
    }

    // B-domain MAP updates.
    std::vector<double> theta_hat(p);
    std::vector<bdomain::AngularBelief> posterior(p);
    std::vector<bool> misaligned(p, false);
    std::vector<bool> missing(p, false);
    for (int i = 0; i < p; ++i) {
      if (detected[i]) {
        const CMatX r_i = signal::separate_path(echo, tx, l_hat[i], k_hat[i]);
        auto res = bdomain::map_update(beliefs[i], r_i, fmat, frame,
                                       cfg.sigma_z2, grid);
        theta_hat[i] = res.theta_hat;
        posterior[i] = std::move(res.posterior);
        misaligned[i] = res.misaligned;
        if (cfg.bf_gain_source == GainSource::kEstimated && !res.misaligned) {
          est_gain[i] = std::abs(
              signal::estimate_gain(r_i, theta_hat[i], fmat, frame));
        }
      } else {
        theta_hat[i] = bdomain::hard_predict(beliefs[i], grid);
        posterior[i] = beliefs[i];
        missing[i] = true;
      }
    }

    // C-domain update: LoS regime when the LoS path is both present (oracle)
    // and usable; otherwise the stacked CKM regime. Paths without a usable
    // echo contribute model-predicted entries, i.e. zero innovation.
    const bool los_present = in.alive[s][0];
    const bool los_regime = los_present && detected[0];
    cdomain::EkfUpdateResult upd;
    if (los_regime) {
      VecX z(3);
      z[0] = static_cast<double>(l_hat[0]) * cfg.sample_interval;
      z[1] = k_hat[0] / t_symb;
      z[2] = std::cos(theta_hat[0]);
      upd = cdomain::ekf_update(pred, z, cdomain::MeasurementRegime::kLos,
                                los_model, noise);
    } else {
      const VecX z_model = ckm::g2_measure(
          map, env::VehicleState::from_vec(pred.mean));
      VecX z = z_model;
      for (int i = 0; i < p; ++i) {
        if (!detected[i]) continue;
        z[i] = static_cast<double>(l_hat[i]) * cfg.sample_interval;
        z[p + i] = k_hat[i] / t_symb;
        z[2 * p + i] = std::cos(theta_hat[i]);
      }
      upd = cdomain::ekf_update(pred, z, cdomain::MeasurementRegime::kNlos,
                                nlos_model, noise);
    }
    const cdomain::CState post = upd.state;

    SlotRecord rec;
    rec.run_id = run;
    rec.slot = s;
    rec.scheme = "proposed";
    rec.regime = los_regime ? "los" : "nlos";
    rec.los_present = los_present;
    rec.true_qx = truth.qx;
    rec.true_qy = truth.qy;
    rec.true_v = truth.v;
    rec.est_qx = post.mean[0];
    rec.est_qy = post.mean[1];
    rec.est_v = post.mean[2];
    rec.pos_error = std::hypot(truth.qx - post.mean[0], truth.qy - post.mean[1]);
    for (int i = 0; i < p; ++i) {
      rec.aoa_true_deg.push_back(rad2deg(paths[i].aoa));
      rec.aoa_est_deg.push_back(rad2deg(theta_hat[i]));
      rec.aoa_err_deg.push_back(aoa_error_deg(paths[i].aoa, theta_hat[i]));
      rec.kind.push_back(kind_into[i]);
      rec.missing.push_back(missing[i]);
      rec.misaligned.push_back(misaligned[i]);
    }
    for (int j = 0; j < ns; ++j) {
      rec.beam_angle_deg.push_back(rad2deg(plan.angles[j]));
      rec.beam_gamma.push_back(plan.gamma[j]);
    }
    records.push_back(std::move(rec));

    if (s + 1 >= slots) break;

    // Predict, refresh map-based path predictions, classify the transition
    // into the next slot, propagate beliefs, and rebuild the beam plan.
    pred = cdomain::predict(post, noise, cfg.dt);
    std::vector<PathPrediction> pred_next = predict_paths(map, pred.mean, cfg);

    const double jump_rad = cfg.tpm_jump_deg * kPi / 180.0;
    for (int i = 0; i < p; ++i) {
      if (!in.alive[s][i] && in.alive[s + 1][i]) {
        kind_into[i] = 3;
      } else if (std::abs(pred_next[i].angle - pred_paths[i].angle) >
                 jump_rad) {
        kind_into[i] = 2;
      } else {
        kind_into[i] = 1;
      }
    }

    const double displacement = std::abs(pred.mean[2]) * cfg.dt;
    const long band = std::lround(displacement * std::sin(pred_next[0].angle) *
                                  static_cast<double>(cfg.n_theta) / 20.0);
    const int eps = static_cast<int>(
        std::clamp(band, 1l, static_cast<long>(cfg.n_theta / 4)));

    for (int i = 0; i < p; ++i) {
      bdomain::TransitionSpec spec;
      spec.kind = kind_into[i] == 3 ? bdomain::TransitionKind::kUnpredictable
                  : kind_into[i] == 2 ? bdomain::TransitionKind::kPredictable
                                      : bdomain::TransitionKind::kStationary;
      spec.c_pi = cfg.tpm_c_pi;
      spec.xi = cfg.tpm_xi;
      spec.band_halfwidth = eps;
      spec.sigma_ckm = cfg.tpm_sigma_ckm;
      spec.predicted_angle = pred_next[i].angle;
      beliefs[i] = bdomain::propagate_belief(posterior[i], spec, grid);
    }

    pred_paths = std::move(pred_next);
    plan = make_plan(pred_paths);
  }
  return records;
}

std::vector<SlotRecord> run_baseline(const SimConfig& cfg, long run,
                                     const RunInputs& in) {
  const long slots = cfg.slot_count();
  const int p = cfg.scene.path_count();
  const Vec2 rsu = cfg.scene.rsu_position;
  const double fc = cfg.scene.carrier_freq;

  cdomain::NoiseModel noise;
  noise.var_qx = cfg.sigma_qx * cfg.sigma_qx;
  noise.var_qy = cfg.sigma_qy * cfg.sigma_qy;
  noise.var_v = cfg.sigma_v * cfg.sigma_v;
  noise.var_tau = cfg.sigma_tau * cfg.sigma_tau;
  noise.var_mu = cfg.sigma_mu * cfg.sigma_mu;
  noise.var_costheta = cfg.sigma_costheta * cfg.sigma_costheta;

  const cdomain::MeasurementModel los_model{
      [&](const Vec3& x) { return VecX(cdomain::g1_measure(x, rsu, fc)); },
      [&](const Vec3& x) { return MatX(cdomain::jacobian_g1(x, rsu, fc)); }};

  RngStream meas_rng(derive_seed(cfg.seed, run, kPurposeBaseline));

  cdomain::CState pred{in.init_mean, in.init_cov};
  std::vector<SlotRecord> records;
  records.reserve(slots);

  for (long s = 0; s < slots; ++s) {
    const env::VehicleState& truth = in.truth[s];
    // Draws are consumed every slot so the stream stays aligned across
    // blockage configurations.
    const Vec3 w(meas_rng.gaussian(0.0, cfg.sigma_tau),
                 meas_rng.gaussian(0.0, cfg.sigma_mu),
                 meas_rng.gaussian(0.0, cfg.sigma_costheta));

    const bool los_present = in.alive[s][0];
    cdomain::CState post;
    if (los_present) {
      const VecX z =
          VecX(cdomain::g1_measure(truth.vec(), rsu, fc)) + VecX(w);
      post = cdomain::ekf_update(pred, z, cdomain::MeasurementRegime::kLos,
                                 los_model, noise)
                 .state;
    } else {
      post = pred;  // prediction only
    }

    SlotRecord rec;
    rec.run_id = run;
    rec.slot = s;
    rec.scheme = "baseline";
    rec.regime = los_present ? "los" : "pred";
    rec.los_present = los_present;
    rec.true_qx = truth.qx;
    rec.true_qy = truth.qy;
    rec.true_v = truth.v;
    rec.est_qx = post.mean[0];
    rec.est_qy = post.mean[1];
    rec.est_v = post.mean[2];
    rec.pos_error = std::hypot(truth.qx - post.mean[0], truth.qy - post.mean[1]);

    const double rx = post.mean[0] - rsu[0];
    const double ry = post.mean[1] - rsu[1];
    const double range = std::hypot(rx, ry);
    const double aoa_est =
        range > 0.0 ? std::acos(std::clamp(rx / range, -1.0, 1.0)) : 0.0;
    for (int i = 0; i < p; ++i) {
      rec.aoa_true_deg.push_back(rad2deg(in.paths[s][i].aoa));
      if (i == 0) {
        rec.aoa_est_deg.push_back(rad2deg(aoa_est));
        rec.aoa_err_deg.push_back(aoa_error_deg(in.paths[s][i].aoa, aoa_est));
      } else {
        rec.aoa_est_deg.push_back(kNaN);
        rec.aoa_err_deg.push_back(kNaN);
      }
      rec.kind.push_back(0);
      rec.missing.push_back(false);
      rec.misaligned.push_back(false);
    }
    records.push_back(std::move(rec));

    pred = cdomain::predict(post, noise, cfg.dt);
  }
  return records;
}

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void write_csv(const SimConfig& cfg, const std::vector<SlotRecord>& records,
               std::ostream& os) {
  const int p = cfg.scene.path_count();
  const int ns = cfg.scene.ns;
  os << "run,slot,scheme,regime,los_present,true_qx,true_qy,true_v,"
        "est_qx,est_qy,est_v,pos_err_m";
  for (int i = 1; i <= p; ++i) {
    os << ",aoa_true_deg_" << i << ",aoa_est_deg_" << i << ",aoa_err_deg_" << i
       << ",kind_" << i << ",missing_" << i << ",misaligned_" << i;
  }
  for (int j = 1; j <= ns; ++j) {
    os << ",beam_angle_deg_" << j << ",beam_gamma_" << j;
  }
  os << "\n";
  for (const SlotRecord& r : records) {
    os << r.run_id << ',' << r.slot << ',' << r.scheme << ',' << r.regime
       << ',' << (r.los_present ? 1 : 0) << ',' << fmt9(r.true_qx) << ','
       << fmt9(r.true_qy) << ',' << fmt9(r.true_v) << ',' << fmt9(r.est_qx)
       << ',' << fmt9(r.est_qy) << ',' << fmt9(r.est_v) << ','
       << fmt9(r.pos_error);
    for (int i = 0; i < p; ++i) {
      os << ',' << fmt9(r.aoa_true_deg[i]) << ',' << fmt9(r.aoa_est_deg[i])
         << ',' << fmt9(r.aoa_err_deg[i]) << ',' << r.kind[i] << ','
         << (r.missing[i] ? 1 : 0) << ',' << (r.misaligned[i] ? 1 : 0);
    }
    for (int j = 0; j < ns; ++j) {
      if (j < static_cast<int>(r.beam_angle_deg.size())) {
        os << ',' << fmt9(r.beam_angle_deg[j]) << ',' << fmt9(r.beam_gamma[j]);
      } else {
        os << ",nan,nan";
      }
    }
    os << "\n";
  }
}

double percentile(const std::vector<double>& sorted, double q) {
  const long n = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(q * n)) - 1;
  idx = std::clamp(idx, 0l, n - 1);
  return sorted[idx];
}

SchemeSummary summarize_scheme(const SimConfig& cfg,
                               const std::vector<SlotRecord>& records) {
  const long slots = cfg.slot_count();
  const int p = cfg.scene.path_count();
  SchemeSummary out;
  out.rmse_per_slot.assign(slots, 0.0);
  std::vector<long> counts(slots, 0);
  for (const SlotRecord& r : records) {
    out.rmse_per_slot[r.slot] += r.pos_error * r.pos_error;
    ++counts[r.slot];
  }
  double total = 0.0;
  for (long s = 0; s < slots; ++s) {
    out.rmse_per_slot[s] =
        counts[s] > 0 ? std::sqrt(out.rmse_per_slot[s] / counts[s]) : 0.0;
    total += out.rmse_per_slot[s];
  }
  out.mean_rmse = slots > 0 ? total / slots : 0.0;

  out.aoa.resize(p);
  const char* kind_names[] = {"", "stationary", "predictable", "unpredictable"};
  for (int i = 0; i < p; ++i) {
    std::vector<double> pool;
    std::map<int, std::pair<double, long>> by_kind;
    for (const SlotRecord& r : records) {
      const double e = r.aoa_err_deg[i];
      if (!std::isfinite(e)) continue;
      pool.push_back(e);
      if (r.kind[i] >= 1 && r.kind[i] <= 3) {
        auto& acc = by_kind[r.kind[i]];
        acc.first += e;
        ++acc.second;
      }
    }
    AoaSummary& a = out.aoa[i];
    if (!pool.empty()) {
      a.mean_err_deg =
          std::accumulate(pool.begin(), pool.end(), 0.0) / pool.size();
      std::sort(pool.begin(), pool.end());
      a.cdf_percentiles_deg["p50"] = percentile(pool, 0.50);
      a.cdf_percentiles_deg["p80"] = percentile(pool, 0.80);
      a.cdf_percentiles_deg["p90"] = percentile(pool, 0.90);
      a.cdf_percentiles_deg["p95"] = percentile(pool, 0.95);
    } else {
      a.mean_err_deg = kNaN;
    }
    for (const auto& [k, acc] : by_kind) {
      a.mean_err_by_kind_deg[kind_names[k]] = acc.first / acc.second;
    }
  }
  return out;
}

void write_summary_json(const SimConfig& cfg, const ExperimentOutput& out,
                        std::ostream& os) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg_echo;
  for (const auto& [k, v] : cfg.to_key_values()) {
    cfg_echo[k] = v;
  }
  j["config"] = std::move(cfg_echo);
  j["slot_count"] = cfg.slot_count();
  j["path_count"] = cfg.scene.path_count();

  nlohmann::ordered_json schemes;
  for (const auto& [name, summary] : out.schemes) {
    nlohmann::ordered_json sj;
    sj["mean_rmse_m"] = summary.mean_rmse;
    sj["rmse_per_slot_m"] = summary.rmse_per_slot;
    nlohmann::ordered_json aoa;
    for (std::size_t i = 0; i < summary.aoa.size(); ++i) {
      nlohmann::ordered_json pj;
      const AoaSummary& a = summary.aoa[i];
      if (std::isfinite(a.mean_err_deg)) {
        pj["mean_err_deg"] = a.mean_err_deg;
      } else {
        pj["mean_err_deg"] = nullptr;
      }
      nlohmann::ordered_json pct;
      for (const auto& [k, v] : a.cdf_percentiles_deg) pct[k] = v;
      pj["cdf_percentiles_deg"] = std::move(pct);
      nlohmann::ordered_json kinds;
      for (const auto& [k, v] : a.mean_err_by_kind_deg) kinds[k] = v;
      pj["mean_err_by_kind_deg"] = std::move(kinds);
      aoa["path_" + std::to_string(i + 1)] = std::move(pj);
    }
    sj["aoa"] = std::move(aoa);
    schemes[name] = std::move(sj);
  }
  j["schemes"] = std::move(schemes);
  os << j.dump(2) << "\n";
}

}  // namespace

ckm::ChannelKnowledgeMap build_experiment_ckm(const SimConfig& cfg) {
  const double x_start = cfg.initial.qx;
  const double x_end = cfg.initial.qx + cfg.initial.v * cfg.t_max;
  const double x_lo = std::min(x_start, x_end) - cfg.ckm_x_margin;
  const double x_hi = std::max(x_start, x_end) + cfg.ckm_x_margin;

  const long rows = cfg.ckm_rows;
  const long cols = std::max(1l, cfg.ckm_samples / rows);
  std::vector<Vec2> locations;
  locations.reserve(rows * cols);
  for (long c = 0; c < cols; ++c) {
    const double x =
        cols > 1 ? x_lo + (x_hi - x_lo) * c / static_cast<double>(cols - 1)
                 : 0.5 * (x_lo + x_hi);
    for (long r = 0; r < rows; ++r) {
      const double y =
          rows > 1 ? cfg.scene.road_y - cfg.ckm_y_halfwidth +
                         2.0 * cfg.ckm_y_halfwidth * r /
                             static_cast<double>(rows - 1)
                   : cfg.scene.road_y;
      locations.emplace_back(x, y);
    }
  }
  return ckm::build_ckm(cfg.scene, locations, cfg.ckm_k, cfg.ckm_idw_power);
}

ExperimentOutput run_experiment(const SimConfig& config,
                                const std::string& out_dir, int threads) {
  config.validate();
  const long runs = config.mc_runs;

  const ckm::ChannelKnowledgeMap map = build_experiment_ckm(config);

  int t = threads;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  t = std::clamp<long>(t, 1, runs);

  std::vector<RunOutputs> per_run(runs);
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      for (long r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
        const RunInputs in = make_run_inputs(config, r);
        RunOutputs ro;
        if (config.scheme != Scheme::kBaseline) {
          ro.proposed = run_proposed(config, map, r, in);
        }
        if (config.scheme != Scheme::kProposed) {
          ro.baseline = run_baseline(config, r, in);
        }
        per_run[r] = std::move(ro);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  ExperimentOutput out;
  std::vector<SlotRecord> proposed_rows;
  std::vector<SlotRecord> baseline_rows;
  for (long r = 0; r < runs; ++r) {
    for (auto& rec : per_run[r].proposed) proposed_rows.push_back(std::move(rec));
    for (auto& rec : per_run[r].baseline) baseline_rows.push_back(std::move(rec));
  }
  if (!proposed_rows.empty()) {
    out.schemes["proposed"] = summarize_scheme(config, proposed_rows);
  }
  if (!baseline_rows.empty()) {
    out.schemes["baseline"] = summarize_scheme(config, baseline_rows);
  }
  out.records = std::move(proposed_rows);
  for (auto& rec : baseline_rows) out.records.push_back(std::move(rec));

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    {
      std::ofstream csv(out_dir + "/slots.csv", std::ios::binary);
      if (!csv) throw std::runtime_error("cannot write " + out_dir + "/slots.csv");
      write_csv(config, out.records, csv);
    }
    {
      std::ofstream js(out_dir + "/summary.json", std::ios::binary);
      if (!js) throw std::runtime_error("cannot write " + out_dir + "/summary.json");
      write_summary_json(config, out, js);
    }
  }
  return out;
}

std::vector<SweepRow> sweep(const SimConfig& config, const std::string& param,
                            const std::vector<double>& values,
                            const std::string& out_dir, int threads) {
  if (values.empty()) {
    throw std::invalid_argument("sweep: no values given");
  }
  {
    // Reject non-numeric keys up front.
    SimConfig probe = config;
    probe.set_numeric(param, values.front());
  }
  std::string key_tag = param;
  std::replace(key_tag.begin(), key_tag.end(), '.', '_');

  std::vector<SweepRow> rows;
  for (double v : values) {
    SimConfig cfg_v = config;
    cfg_v.set_numeric(param, v);
    cfg_v.validate();
    std::string sub;
    if (!out_dir.empty()) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      sub = out_dir + "/" + key_tag + "_" + buf;
    }
    const ExperimentOutput out = run_experiment(cfg_v, sub, threads);
    const SchemeSummary& summary =
        out.schemes.count("proposed") ? out.schemes.at("proposed")
                                      : out.schemes.at("baseline");
    SweepRow row;
    row.value = v;
    for (const AoaSummary& a : summary.aoa) {
      row.mean_aoa_err_deg.push_back(a.mean_err_deg);
    }
    row.mean_rmse = summary.mean_rmse;
    row.final_rmse =
        summary.rmse_per_slot.empty() ? 0.0 : summary.rmse_per_slot.back();
    rows.push_back(std::move(row));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(out_dir + "/sweep_summary.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write sweep_summary.csv");
    os << "value";
    for (std::size_t i = 1; i <= rows.front().mean_aoa_err_deg.size(); ++i) {
      os << ",mean_aoa_err_deg_" << i;
    }
    os << ",mean_rmse_m,final_rmse_m\n";
    for (const SweepRow& r : rows) {
      os << fmt9(r.value);
      for (double e : r.mean_aoa_err_deg) os << ',' << fmt9(e);
      os << ',' << fmt9(r.mean_rmse) << ',' << fmt9(r.final_rmse) << "\n";
    }
  }
  return rows;
}

}  // namespace ckmtrack::harness

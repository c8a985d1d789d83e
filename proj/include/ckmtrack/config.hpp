#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ckmtrack/beamform.hpp"
#include "ckmtrack/cdomain.hpp"
#include "ckmtrack/env.hpp"

namespace ckmtrack::harness {

enum class Scheme { kProposed, kBaseline, kBoth };
enum class GainSource { kCkm, kEstimated };

/**
 * Full experiment configuration. Every field maps to one flat key in the
 * config file ("key = value" lines, '#' comments); unknown keys are rejected
 * with the offending key named. The same table drives parsing, the config echo
 * in summary.json, and numeric-key lookup for sweeps.
 */
struct SimConfig {
  env::Scene scene;                       // scene.*
  env::VehicleState initial{-20.0, 10.0, 10.0};  // vehicle.*

  // sim.*
  double t_max = 4.0;             // s
  double dt = 0.02;               // slot duration, s
  long frame_length = 256;        // symbols per slot used by the receiver
  double sample_interval = 1e-8;  // delay quantization step, s
  double total_power = 16.0;      // W
  int n_theta = 7200;

  // noise.* (standard deviations except sigma_z2, which is a variance)
  double sigma_z2 = 1e-6;
  double sigma_qx = 1e-3;
  double sigma_qy = 1e-3;
  double sigma_v = 1e-3;
  double sigma_tau = 1e-8;
  double sigma_mu = 20.0;
  double sigma_costheta = 0.01;

  // tpm.*
  double tpm_xi = 0.8;
  double tpm_c_pi = 0.6;
  double tpm_sigma_ckm = 1e-3;
  double tpm_jump_deg = 10.0;  // map-geometry jump threshold for kind II

  // blockage.*
  double p_blk = 0.15;
  long window_start = 140;
  long window_end = 175;

  // ckm.*
  long ckm_samples = 3200;
  int ckm_k = 4;
  double ckm_idw_power = 2.0;
  long ckm_rows = 8;           // sample rows across the lane
  double ckm_x_margin = 2.5;   // m beyond the trajectory endpoints
  double ckm_y_halfwidth = 0.35;
  double ckm_step_qx = 0.01;   // finite-difference steps for the g2 Jacobian
  double ckm_step_qy = 0.01;
  double ckm_step_v = 0.01;

  // mf.*
  long mf_window_delay = 8;     // search halfwidth around the predicted cell
  long mf_window_doppler = 8;
  long mf_max_delay_index = 100;
  long mf_max_doppler_index = 100;
  double mf_conf_factor = 10.0;  // noise-floor multiple for peak confidence

  // mc.*
  long mc_runs = 100;
  std::uint64_t seed = 1;

  // init.*
  double init_std = 0.5;  // per-component std of the initial mean perturbation

  beamform::BfMode bf_mode = beamform::BfMode::kOptimized;  // bf.mode
  GainSource bf_gain_source = GainSource::kCkm;             // bf.gain_source
  Scheme scheme = Scheme::kBoth;                            // scheme

  long slot_count() const {
    return std::lround(t_max / dt);
  }
  double symbol_interval() const {
    return dt / static_cast<double>(frame_length);
  }
  // sum(gamma) cap; ||F||_F^2 = nt * sum(gamma) <= total_power.
  double gamma_budget() const { return total_power / scene.nt; }

  void validate() const;

  // Applies "key = value"; throws std::invalid_argument on unknown keys or
  // unparsable values.
  void apply(const std::string& key, const std::string& value);

  // Numeric-only setter used by sweeps; rejects non-numeric keys.
  void set_numeric(const std::string& key, double value);

  // Canonical (key, value) echo in table order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;

  static SimConfig from_file(const std::string& path);
  static SimConfig from_text(const std::string& text);
};

}  // namespace ckmtrack::harness

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ckmtrack/bdomain.hpp"
#include "ckmtrack/ckm.hpp"
#include "ckmtrack/config.hpp"

namespace ckmtrack::harness {

// One slot of one run of one scheme; one CSV row.
struct SlotRecord {
  long run_id = 0;
  long slot = 0;
  std::string scheme;  // "proposed" or "baseline"
  std::string regime;  // "los", "nlos", or "pred" (baseline prediction-only)
  bool los_present = false;  // oracle flag for this slot

  double true_qx = 0, true_qy = 0, true_v = 0;
  double est_qx = 0, est_qy = 0, est_v = 0;
  double pos_error = 0;  // Euclidean distance on (qx, qy), m

  // Per path (index 0 = LoS). Baseline entries beyond path 1 are NaN.
  std::vector<double> aoa_true_deg;
  std::vector<double> aoa_est_deg;
  std::vector<double> aoa_err_deg;  // min(|d|, 180 - |d|)
  std::vector<int> kind;            // transition kind into this slot, 1/2/3; 0 = n/a
  std::vector<bool> missing;        // no usable matched-filter peak this slot
  std::vector<bool> misaligned;     // MAP update had no finite candidate

  // Beam plan used in this slot (per stream). Empty for the baseline.
  std::vector<double> beam_angle_deg;
  std::vector<double> beam_gamma;
};

struct AoaSummary {
  double mean_err_deg = 0.0;
  std::map<std::string, double> cdf_percentiles_deg;  // p50/p80/p90/p95
  // Keyed stationary/predictable/unpredictable; absent when no slot had that kind.
  std::map<std::string, double> mean_err_by_kind_deg;
};

struct SchemeSummary {
  std::vector<double> rmse_per_slot;  // across runs, m
  double mean_rmse = 0.0;
  std::vector<AoaSummary> aoa;  // per path
};

struct ExperimentOutput {
  // Rows ordered by (scheme, run, slot); proposed before baseline.
  std::vector<SlotRecord> records;
  std::map<std::string, SchemeSummary> schemes;
};

// Runs the configured Monte Carlo experiment. If out_dir is non-empty, writes
// slots.csv and summary.json there (created if needed); both files are
// byte-stable for a fixed config. threads <= 0 selects the hardware count.
ExperimentOutput run_experiment(const SimConfig& config,
                                const std::string& out_dir, int threads = 1);

struct SweepRow {
  double value = 0.0;
  std::vector<double> mean_aoa_err_deg;  // per path
  double mean_rmse = 0.0;
  double final_rmse = 0.0;
};

// Runs one experiment per value of a numeric config key; per-value outputs go
// to subdirectories of out_dir and a sweep_summary.csv accumulates one row per
// value. Rows are also returned for programmatic use.
std::vector<SweepRow> sweep(const SimConfig& config, const std::string& param,
                            const std::vector<double>& values,
                            const std::string& out_dir, int threads = 1);

// The map the experiment builds before running: a regular grid over the road
// strip sized by ckm.* (exposed for tests and the ckm-table command).
ckm::ChannelKnowledgeMap build_experiment_ckm(const SimConfig& config);

}  // namespace ckmtrack::harness

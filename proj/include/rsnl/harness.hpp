#pragma once

#include "rsnl/bm_bcd.hpp"
#include "rsnl/esdp_bcd.hpp"
#include "rsnl/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rsnl::harness {

struct RunConfig {
  ScenarioSpec scenario;
  std::string method = "bm_bcd";  // bm_bcd | esdp_bcd
  bm::BmConfig bm;
  esdp::EsdpConfig esdp;
  int trials = 1;
  std::uint64_t seed_base = 1;
  std::string out_dir = ".";
  bool all_pairs_rmse = false;
  double fail_threshold = 0.6;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::string k;  // "34" for BM, "3+13" for ESDP
  int iters_total = 0;
  int comm_rounds = 0;
  double st = 0.0;
  double pt = 0.0;
  double rmse = 0.0;
  std::optional<double> rmse_a;  // ESDP pre-refinement diagnostic
  bool failed = false;
  bool converged = false;
  bool error = false;
  std::string error_msg;
};

struct Aggregate {
  int trials = 0;
  double fr = 0.0;
  double mean_rmse = 0.0;
  double mean_rmse_a = 0.0;  // NaN-free: 0 when absent
  double mean_iters = 0.0;
  double mean_k_esdp = 0.0;
  double mean_k_refine = 0.0;
  double mean_st = 0.0;
  double mean_pt = 0.0;
  int errors = 0;
};

TrialResult run_trial(const RunConfig& cfg, int trial);
Aggregate aggregate(const std::vector<TrialResult>& trials, double fail_threshold);

// Runs `trials` seeded experiments, writes results.csv plus realization dumps
// of the first trial into out_dir. Returns a process exit status.
int cmd_run(const RunConfig& cfg);

// One aggregate CSV row per axis value into sweep_results.csv.
// axis in {r, rho, eta, anchors}.
int cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values);

// Exposed for tests: in-memory variants of the CSV emitters.
std::string run_csv(const RunConfig& cfg, std::vector<TrialResult>* out_trials = nullptr);
std::string sweep_csv(const RunConfig& cfg, const std::string& axis,
                      const std::vector<double>& values);

}  // namespace rsnl::harness

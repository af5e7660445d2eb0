#include "rsnl/harness.hpp"

#include "rsnl/io.hpp"
#include "rsnl/recover.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rsnl::harness {

namespace {

// decorrelates the initialization stream from the scenario stream
constexpr std::uint64_t kInitSeedOffset = 0x9E3779B97F4A7C15ull;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_time(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct TrialArtifacts {
  Realization truth;
  Realization initial;
  Realization final_p;
  std::optional<Realization> esdp_p;
};

TrialResult run_trial_impl(const RunConfig& cfg, int trial, TrialArtifacts* artifacts) {
  TrialResult tr;
  ScenarioSpec spec = cfg.scenario;
  spec.seed = cfg.seed_base + static_cast<std::uint64_t>(trial);
  tr.seed = spec.seed;
  try {
    const ProblemInstance inst = generate_scenario(spec);
    const Realization p0 = sample_initialization(inst, spec.rho, spec.seed + kInitSeedOffset);
    Realization p_final;
    std::vector<PoseEstimate> poses;
    if (cfg.method == "bm_bcd") {
      bm::BmConfig bmc = cfg.bm;
      bmc.seed = spec.seed;
      const bm::BmResult res = bm::run_bm_bcd(inst, p0, bmc);
      tr.k = std::to_string(res.stats.iterations);
      tr.iters_total = res.stats.iterations;
      tr.comm_rounds = res.stats.comm_rounds;
      tr.st = res.stats.st;
      tr.pt = res.stats.pt;
      tr.converged = res.converged;
      p_final = res.p;
      poses = res.poses;
    } else if (cfg.method == "esdp_bcd") {
      esdp::EsdpConfig ec = cfg.esdp;
      ec.seed = spec.seed;
      ec.refine.seed = spec.seed;
      const esdp::EsdpResult res = esdp::run_esdp_bcd(inst, ec, &p0);
      tr.k = std::to_string(res.k_esdp) + "+" + std::to_string(res.k_refine);
      tr.iters_total = res.stats.iterations;
      tr.comm_rounds = res.stats.comm_rounds;
      tr.st = res.stats.st;
      tr.pt = res.stats.pt;
      tr.converged = res.converged;
      tr.rmse_a = rmse_absolute(res.p_esdp, inst);
      p_final = res.p;
      poses = res.poses;
      if (artifacts) artifacts->esdp_p = res.p_esdp;
    } else {
      throw std::invalid_argument("unknown method: " + cfg.method);
    }
    tr.rmse = rmse_body(poses, inst.truth->poses, inst.graph, cfg.all_pairs_rmse);
    tr.failed = !(tr.rmse <= cfg.fail_threshold);
    if (artifacts) {
      artifacts->truth = inst.truth->p;
      artifacts->initial = p0;
      artifacts->final_p = p_final;
    }
  } catch (const std::exception& e) {
    tr.error = true;
    tr.failed = true;
    tr.error_msg = e.what();
  }
  return tr;
}

}  // namespace

TrialResult run_trial(const RunConfig& cfg, int trial) {
  return run_trial_impl(cfg, trial, nullptr);
}

Aggregate aggregate(const std::vector<TrialResult>& trials, double fail_threshold) {
  Aggregate agg;
  agg.trials = static_cast<int>(trials.size());
  if (trials.empty()) return agg;
  int rmse_a_count = 0;
  int fails = 0;
  for (const TrialResult& t : trials) {
    if (t.error) {
      ++agg.errors;
      ++fails;
      continue;
    }
    if (t.rmse > fail_threshold) ++fails;
    agg.mean_rmse += t.rmse;
    agg.mean_iters += t.iters_total;
    agg.mean_st += t.st;
    agg.mean_pt += t.pt;
    if (t.rmse_a) {
      agg.mean_rmse_a += *t.rmse_a;
      ++rmse_a_count;
    }
    const auto plus = t.k.find('+');
    if (plus != std::string::npos) {
      agg.mean_k_esdp += std::stod(t.k.substr(0, plus));
      agg.mean_k_refine += std::stod(t.k.substr(plus + 1));
    }
  }
  const int ok = agg.trials - agg.errors;
  if (ok > 0) {
    agg.mean_rmse /= ok;
    agg.mean_iters /= ok;
    agg.mean_st /= ok;
    agg.mean_pt /= ok;
    agg.mean_k_esdp /= ok;
    agg.mean_k_refine /= ok;
  }
  if (rmse_a_count > 0) agg.mean_rmse_a /= rmse_a_count;
  agg.fr = double(fails) / double(agg.trials);
  return agg;
}

std::string run_csv(const RunConfig& cfg, std::vector<TrialResult>* out_trials) {
  std::ostringstream csv;
  csv << "schema,trial,seed,method,k,iters_total,comm_rounds,st_s,pt_s,rmse_m,rmse_a_m,"
         "failed,converged,error,error_msg\n";
  std::vector<TrialResult> trials;
  for (int t = 0; t < cfg.trials; ++t) {
    const TrialResult tr = run_trial(cfg, t);
    csv << "rsnl-run-1," << t << "," << tr.seed << "," << cfg.method << "," << tr.k << ","
        << tr.iters_total << "," << tr.comm_rounds << "," << fmt_time(tr.st) << ","
        << fmt_time(tr.pt) << "," << fmt(tr.rmse) << ","
        << (tr.rmse_a ? fmt(*tr.rmse_a) : "") << "," << (tr.failed ? 1 : 0) << ","
        << (tr.converged ? 1 : 0) << "," << (tr.error ? 1 : 0) << ","
        << io::csv_field(tr.error_msg) << "\n";
    trials.push_back(tr);
  }
  const Aggregate agg = aggregate(trials, cfg.fail_threshold);
  const std::string k_agg = cfg.method == "esdp_bcd"
                                ? fmt(agg.mean_k_esdp) + "+" + fmt(agg.mean_k_refine)
                                : fmt(agg.mean_iters);
  csv << "rsnl-run-1,aggregate," << cfg.seed_base << "," << cfg.method << "," << k_agg << ","
      << fmt(agg.mean_iters) << ",," << fmt_time(agg.mean_st) << "," << fmt_time(agg.mean_pt)
      << "," << fmt(agg.mean_rmse) << ","
      << (cfg.method == "esdp_bcd" ? fmt(agg.mean_rmse_a) : "") << "," << fmt(agg.fr) << ",,"
      << agg.errors << ",\n";
  if (out_trials) *out_trials = std::move(trials);
  return csv.str();
}

int cmd_run(const RunConfig& cfg) {
  try {
    std::filesystem::create_directories(cfg.out_dir);
    // re-run trial 0 with artifact capture for the realization dumps
    TrialArtifacts artifacts;
    const TrialResult first = run_trial_impl(cfg, 0, &artifacts);
    const std::string csv = run_csv(cfg);
    std::ofstream(cfg.out_dir + "/results.csv") << csv;
    if (!first.error) {
      io::save_realization(cfg.out_dir + "/truth_realization.txt", artifacts.truth);
      io::save_realization(cfg.out_dir + "/initial_realization.txt", artifacts.initial);
      io::save_realization(cfg.out_dir + "/final_realization.txt", artifacts.final_p);
      if (artifacts.esdp_p)
        io::save_realization(cfg.out_dir + "/esdp_realization.txt", *artifacts.esdp_p);
    }
    std::cout << csv;
    return first.error && cfg.trials == 1 ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string sweep_csv(const RunConfig& cfg, const std::string& axis,
                      const std::vector<double>& values) {
  std::ostringstream csv;
  csv << "schema,axis,value,trials,fr,mean_rmse_m,mean_rmse_a_m,mean_iters,mean_k_esdp,"
         "mean_k_refine,mean_st_s,mean_pt_s,errors\n";
  for (double v : values) {
    RunConfig point = cfg;
    if (axis == "r") {
      if (point.method == "esdp_bcd") point.esdp.refine.rank = static_cast<int>(v);
      else point.bm.rank = static_cast<int>(v);
    } else if (axis == "rho") {
      point.scenario.rho = v;
    } else if (axis == "eta") {
      point.scenario.eta = v;
    } else if (axis == "anchors") {
      point.scenario.anchor_count = static_cast<int>(v);
    } else {
      throw std::invalid_argument("unknown sweep axis: " + axis);
    }
    std::vector<TrialResult> trials;
    for (int t = 0; t < point.trials; ++t) trials.push_back(run_trial(point, t));
    const Aggregate agg = aggregate(trials, point.fail_threshold);
    csv << "rsnl-sweep-1," << axis << "," << fmt(v) << "," << agg.trials << "," << fmt(agg.fr)
        << "," << fmt(agg.mean_rmse) << ","
        << (point.method == "esdp_bcd" ? fmt(agg.mean_rmse_a) : "") << ","
        << fmt(agg.mean_iters) << "," << fmt(agg.mean_k_esdp) << "," << fmt(agg.mean_k_refine)
        << "," << fmt_time(agg.mean_st) << "," << fmt_time(agg.mean_pt) << "," << agg.errors
        << "\n";
  }
  return csv.str();
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values) {
  try {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    std::filesystem::create_directories(cfg.out_dir);
    const std::string csv = sweep_csv(cfg, axis, values);
    std::ofstream(cfg.out_dir + "/sweep_results.csv") << csv;
    std::cout << csv;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rsnl::harness

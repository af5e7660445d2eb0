#include "rsnl/bm_bcd.hpp"

#include "rsnl/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace rsnl::bm {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTiny = 1e-300;

// Measurement record for the sensor pair {own, nb} on a given edge.
const DistanceMeasurement& edge_measurement(const MeasurementGraph& g, int edge,
                                            SensorIndex own, SensorIndex nb) {
  const auto& [i, j] = g.edges[edge];
  const int u = own.robot == i ? own.side : nb.side;
  const int v = own.robot == i ? nb.side : own.side;
  (void)j;
  return g.edge_meas[edge][2 * u + v];
}

double uv_gap_ratio(const FactorPair& fp) {
  const double denom = fp.u.norm() + fp.v.norm();
  if (denom < kTiny) return 0.0;
  return 4.0 * (fp.u - fp.v).norm() / denom;
}

void average_factors(FactorPair& fp) {
  fp.u = 0.5 * (fp.u + fp.v);
  fp.v = fp.u;
}

// Factor gap of one robot's two columns, same normalization as uv_gap_ratio.
double local_uv_gap(const FactorPair& fp, int robot) {
  const int c0 = 2 * robot, c1 = c0 + 1;
  const double diff = std::sqrt((fp.u.col(c0) - fp.v.col(c0)).squaredNorm() +
                                (fp.u.col(c1) - fp.v.col(c1)).squaredNorm());
  const double denom = std::sqrt(fp.u.col(c0).squaredNorm() + fp.u.col(c1).squaredNorm()) +
                       std::sqrt(fp.v.col(c0).squaredNorm() + fp.v.col(c1).squaredNorm());
  if (denom < kTiny) return 0.0;
  return 4.0 * diff / denom;
}

}  // namespace

Mat fixed_projection(int rank, int d) {
  Mat q = Mat::Zero(rank, d);
  q.topRows(d).setIdentity();
  return q;
}

PenaltyState initial_penalties(const ProblemInstance& inst, const BmConfig& cfg) {
  PenaltyState pen;
  pen.sigma_gap.resize(inst.n);
  pen.coupling.resize(inst.n);
  if (inst.d == 3) pen.sigma_z.resize(inst.n);

  for (int i = 0; i < inst.n; ++i) {
    pen.sigma_gap[i] = 0.2 * inst.sensor_gap_sq[i];
    if (inst.d == 3) {
      // sensitivity of the tilted z-gap to the two tilt angles, evaluated at
      // the priors; a 4-degree tilt error scales it into a penalty sigma
      const Vec gap = inst.offsets[i].sensor0 - inst.offsets[i].sensor1;
      const double cp = std::cos(inst.priors[i].pitch), sp = std::sin(inst.priors[i].pitch);
      const double cr = std::cos(inst.priors[i].roll), sr = std::sin(inst.priors[i].roll);
      const double d_roll = -cr * gap[0] - sr * sp * gap[1] - sr * cp * gap[2];
      const double d_pitch = cr * cp * gap[1] - cr * sp * gap[2];
      pen.sigma_z[i] = std::max(std::abs(d_roll + d_pitch) * kPi / 45.0, 1e-3);
    }
    double wsum = 0.0;
    int count = 0;
    for (int e : inst.graph.incident[i])
      for (const auto& m : inst.graph.edge_meas[e]) {
        wsum += weight_of(m);
        ++count;
      }
    pen.coupling[i] = cfg.coupling_init_factor * (count > 0 ? wsum / count : 1.0);
  }
  if (cfg.coupling_global && inst.n > 0) {
    pen.coupling.setConstant(pen.coupling.mean());
  }
  return pen;
}

double cost_F(const FactorPair& fp, const ProblemInstance& inst, const PenaltyState& pen) {
  double f = 0.0;
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e)
    for (const auto& m : inst.graph.edge_meas[e]) {
      const int a = m.a.flat(), b = m.b.flat();
      const double val = (fp.u.col(a) - fp.u.col(b)).dot(fp.v.col(a) - fp.v.col(b));
      const double res = val - m.squared_range;
      f += weight_of(m) * res * res;
    }
  const Vec qz = inst.d == 3 ? Vec(fp.proj.col(2)) : Vec();
  for (int i = 0; i < inst.n; ++i) {
    const int c0 = 2 * i, c1 = 2 * i + 1;
    const Vec du = fp.u.col(c0) - fp.u.col(c1);
    const Vec dv = fp.v.col(c0) - fp.v.col(c1);
    const double wg = 1.0 / (pen.sigma_gap[i] * pen.sigma_gap[i]);
    const double gap_res = du.dot(dv) - inst.sensor_gap_sq[i];
    f += wg * gap_res * gap_res;
    if (inst.d == 3) {
      const double wz = 0.5 / (pen.sigma_z[i] * pen.sigma_z[i]);
      const double ru = qz.dot(du) - inst.sensor_gap_z[i];
      const double rv = qz.dot(dv) - inst.sensor_gap_z[i];
      f += wz * (ru * ru + rv * rv);
    }
    f += pen.coupling[i] * ((fp.u.col(c0) - fp.v.col(c0)).squaredNorm() +
                            (fp.u.col(c1) - fp.v.col(c1)).squaredNorm());
  }
  return f;
}

double local_cost_F(const FactorPair& fp, const ProblemInstance& inst,
                    const PenaltyState& pen, int robot, bool include_coupling) {
  double f = 0.0;
  for (int e : inst.graph.incident[robot])
    for (const auto& m : inst.graph.edge_meas[e]) {
      const int a = m.a.flat(), b = m.b.flat();
      const double val = (fp.u.col(a) - fp.u.col(b)).dot(fp.v.col(a) - fp.v.col(b));
      const double res = val - m.squared_range;
      f += weight_of(m) * res * res;
    }
  const int c0 = 2 * robot, c1 = 2 * robot + 1;
  const Vec du = fp.u.col(c0) - fp.u.col(c1);
  const Vec dv = fp.v.col(c0) - fp.v.col(c1);
  const double wg = 1.0 / (pen.sigma_gap[robot] * pen.sigma_gap[robot]);
  const double gap_res = du.dot(dv) - inst.sensor_gap_sq[robot];
  f += wg * gap_res * gap_res;
  if (inst.d == 3) {
    const Vec qz = fp.proj.col(2);
    const double wz = 0.5 / (pen.sigma_z[robot] * pen.sigma_z[robot]);
    const double ru = qz.dot(du) - inst.sensor_gap_z[robot];
    const double rv = qz.dot(dv) - inst.sensor_gap_z[robot];
    f += wz * (ru * ru + rv * rv);
  }
  if (include_coupling)
    f += pen.coupling[robot] * ((fp.u.col(c0) - fp.v.col(c0)).squaredNorm() +
                                (fp.u.col(c1) - fp.v.col(c1)).squaredNorm());
  return f;
}

ColumnSystem assemble_column_system(const FactorPair& fp, int factor, SensorIndex s,
                                    const ProblemInstance& inst, const PenaltyState& pen,
                                    const Vec* own_factor_col, std::vector<int>* read_log) {
  const int r = fp.rank();
  const int i = s.robot;
  const int col = s.flat();
  const int other = s.other().flat();
  // diffs come from the opposite factor, partner reads from the factor being
  // updated; own_factor_col substitutes the fresh own column during V updates
  const Mat& diff_src = factor == 0 ? fp.v : fp.u;
  const Mat& part_src = factor == 0 ? fp.u : fp.v;
  auto diff_col = [&](int c) -> Vec {
    if (read_log) read_log->push_back(c);
    if (factor == 1 && own_factor_col && c == col) return *own_factor_col;
    return diff_src.col(c);
  };
  auto part_col = [&](int c) -> Vec {
    if (read_log) read_log->push_back(c);
    return part_src.col(c);
  };

  ColumnSystem sys;
  sys.a = pen.coupling[i] * Mat::Identity(r, r);
  sys.b = pen.coupling[i] * diff_col(col);

  const Vec own_diff = diff_col(col);
  for (int e : inst.graph.incident[i]) {
    const auto& [ea, eb] = inst.graph.edges[e];
    const int j = ea == i ? eb : ea;
    for (int v = 0; v < 2; ++v) {
      const SensorIndex nb{j, v};
      const auto& m = edge_measurement(inst.graph, e, s, nb);
      const double w = weight_of(m);
      const Vec diff = own_diff - diff_col(nb.flat());
      sys.a += w * diff * diff.transpose();
      sys.b += w * (diff.dot(part_col(nb.flat())) + m.squared_range) * diff;
    }
  }

  const double wg = 1.0 / (pen.sigma_gap[i] * pen.sigma_gap[i]);
  const Vec gap_diff = own_diff - diff_col(other);
  sys.a += wg * gap_diff * gap_diff.transpose();
  sys.b += wg * (gap_diff.dot(part_col(other)) + inst.sensor_gap_sq[i]) * gap_diff;

  if (inst.d == 3) {
    const Vec qz = fp.proj.col(2);
    const double wz = 0.5 / (pen.sigma_z[i] * pen.sigma_z[i]);
    const double sign = s.side == 0 ? 1.0 : -1.0;
    sys.a += wz * qz * qz.transpose();
    sys.b += wz * (qz.dot(part_col(other)) + sign * inst.sensor_gap_z[i]) * qz;
  }
  return sys;
}

Vec block_update_column(const FactorPair& fp, int factor, SensorIndex s,
                        const ProblemInstance& inst, const PenaltyState& pen,
                        const Vec* own_factor_col, std::vector<int>* read_log) {
  const ColumnSystem sys =
      assemble_column_system(fp, factor, s, inst, pen, own_factor_col, read_log);
  return solve_spd(sys.a, sys.b);
}

FactorPair lift_initialization(const Realization& p0, int rank, RandomStream& rng,
                               double noise_scale) {
  const int d = static_cast<int>(p0.rows());
  if (rank < d) throw std::invalid_argument("lift_initialization: rank below dimension");
  FactorPair fp;
  fp.u = Mat::Zero(rank, p0.cols());
  fp.u.topRows(d) = p0;
  for (int c = 0; c < p0.cols(); ++c)
    for (int row = d; row < rank; ++row) fp.u(row, c) = rng.gauss(0.0, noise_scale);
  fp.v = fp.u;
  fp.proj = fixed_projection(rank, d);
  return fp;
}

int gauge_robot(const ProblemInstance& inst) {
  int best = 0;
  for (int i = 1; i < inst.n; ++i)
    if (inst.graph.degree(i) > inst.graph.degree(best)) best = i;
  return best;
}

namespace {

class BmAdapter final : public BcdAdapter {
 public:
  BmAdapter(FactorPair& fp, const ProblemInstance& inst, const PenaltyState& pen,
            std::vector<SensorIndex> blocks, const BmHooks* hooks)
      : fp_(fp), inst_(inst), pen_(pen), blocks_(std::move(blocks)), hooks_(hooks) {
    u_prev_ = fp_.u;
    v_prev_ = fp_.v;
  }

  int block_count() const override { return static_cast<int>(blocks_.size()); }

  BlockUpdate compute(int block) const override {
    const SensorIndex s = blocks_[block];
    std::vector<int>* log = hooks_ ? hooks_->read_log : nullptr;
    const Vec xu = block_update_column(fp_, 0, s, inst_, pen_, nullptr, log);
    if (hooks_ && hooks_->on_column) hooks_->on_column(0, s, xu);
    const Vec xv = block_update_column(fp_, 1, s, inst_, pen_, &xu, log);
    if (hooks_ && hooks_->on_column) hooks_->on_column(1, s, xv);
    BlockUpdate up;
    up.values.resize(2 * fp_.rank());
    Eigen::Map<Vec>(up.values.data(), fp_.rank()) = xu;
    Eigen::Map<Vec>(up.values.data() + fp_.rank(), fp_.rank()) = xv;
    return up;
  }

  void apply(int block, const BlockUpdate& up) override {
    const int r = fp_.rank();
    const int col = blocks_[block].flat();
    fp_.u.col(col) = Eigen::Map<const Vec>(up.values.data(), r);
    fp_.v.col(col) = Eigen::Map<const Vec>(up.values.data() + r, r);
  }

  double sweep_change() override {
    const double rel_u = (fp_.u - u_prev_).norm() / std::max(u_prev_.norm(), kTiny);
    const double rel_v = (fp_.v - v_prev_).norm() / std::max(v_prev_.norm(), kTiny);
    u_prev_ = fp_.u;
    v_prev_ = fp_.v;
    last_change_ = std::max(rel_u, rel_v);
    return last_change_;
  }

  double last_change() const { return last_change_; }

 private:
  FactorPair& fp_;
  const ProblemInstance& inst_;
  const PenaltyState& pen_;
  std::vector<SensorIndex> blocks_;
  const BmHooks* hooks_;
  Mat u_prev_, v_prev_;
  double last_change_ = 0.0;
};

std::vector<SensorIndex> sensor_blocks(const ProblemInstance& inst, int skip_robot) {
  std::vector<SensorIndex> blocks;
  blocks.reserve(2 * inst.n);
  for (int i = 0; i < inst.n; ++i) {
    if (i == skip_robot) continue;
    blocks.push_back({i, 0});
    blocks.push_back({i, 1});
  }
  return blocks;
}

ColorClasses color_sensor_blocks(const ProblemInstance& inst,
                                 const std::vector<SensorIndex>& blocks) {
  std::vector<int> block_of(2 * inst.n, -1);
  for (std::size_t k = 0; k < blocks.size(); ++k) block_of[blocks[k].flat()] = static_cast<int>(k);
  DependencyGraph g;
  g.count = static_cast<int>(blocks.size());
  auto link = [&](int fa, int fb) {
    if (block_of[fa] >= 0 && block_of[fb] >= 0) g.edges.emplace_back(block_of[fa], block_of[fb]);
  };
  for (int i = 0; i < inst.n; ++i) link(2 * i, 2 * i + 1);
  for (const auto& [i, j] : inst.graph.edges)
    for (int u = 0; u < 2; ++u)
      for (int v = 0; v < 2; ++v) link(2 * i + u, 2 * j + v);
  return greedy_coloring(g);
}

struct PhaseCaps {
  int warmup = 500;
  int continuation = 500;
};

// One pass of the algorithm body: coupling warm-up until the compound
// condition fires, factor averaging, then continuation rounds with the gauge
// robot held fixed and penalties shrinking geometrically.
void trace_phase(const char* name, const FactorPair& fp, const ProblemInstance& inst) {
  if (!std::getenv("RSNL_TRACE_BM")) return;
  const Realization p = fp.realization();
  const auto poses = recover_poses(p, inst);
  std::fprintf(stderr, "  [%s] rmse=%.4f\n", name, rmse_body(poses, inst.truth->poses, inst.graph));
}

void run_algorithm_body(FactorPair& fp, PenaltyState& pen, const ProblemInstance& inst,
                        const BmConfig& cfg, const BmHooks* hooks, const std::string& prefix,
                        const PhaseCaps& caps, RoundStats& total, bool& converged) {
  const Vec coupling_cap = cfg.coupling_cap_factor * pen.coupling;

  {
    BmAdapter adapter(fp, inst, pen, sensor_blocks(inst, -1), hooks);
    const ColorClasses colors = color_sensor_blocks(inst, sensor_blocks(inst, -1));
    double f_prev = cost_F(fp, inst, pen);
    double f_ratio = 1.0;
    std::vector<double> local_prev(inst.n);
    for (int i = 0; i < inst.n; ++i) local_prev[i] = local_cost_F(fp, inst, pen, i, false);

    BcdOptions opts;
    opts.tol_change = -1.0;  // warm-up stops only through the compound condition
    opts.max_sweeps = caps.warmup;
    opts.schedule = cfg.schedule;
    opts.after_sweep = [&](int) {
      const double f_cur = cost_F(fp, inst, pen);
      f_ratio = f_prev > kTiny ? (f_prev - f_cur) / f_prev : 0.0;
      f_prev = f_cur;
      // stalled local progress tightens the difference penalty so the factors
      // are driven together before they are averaged
      if (cfg.coupling_global) {
        if (f_ratio < cfg.coupling_grow_threshold && uv_gap_ratio(fp) > cfg.warmup_gap_tol)
          pen.coupling = (2.0 * pen.coupling).cwiseMin(coupling_cap);
      } else {
        for (int i = 0; i < inst.n; ++i) {
          const double cur = local_cost_F(fp, inst, pen, i, false);
          // growth stops once this robot's factor pair is tight, so the weight
          // settles near the local curvature instead of freezing the block
          if (local_prev[i] > kTiny &&
              (local_prev[i] - cur) / local_prev[i] < cfg.coupling_grow_threshold &&
              local_uv_gap(fp, i) > cfg.warmup_gap_tol)
            pen.coupling[i] = std::min(2.0 * pen.coupling[i], coupling_cap[i]);
          local_prev[i] = cur;
        }
      }
    };
    opts.extra_stop = [&](int sweep) {
      if (std::getenv("RSNL_TRACE_BM"))
        std::fprintf(stderr, "warmup sweep %d F=%.6g ratio=%.3g gap=%.3g change=%.3g coupl=%.3g\n",
                     sweep, f_prev, f_ratio, uv_gap_ratio(fp), adapter.last_change(),
                     pen.coupling.mean());
      return (f_ratio < cfg.tol_obj_decrease && uv_gap_ratio(fp) < cfg.warmup_gap_tol) ||
             std::max(uv_gap_ratio(fp), adapter.last_change()) < cfg.tol_change;
    };
    const RoundStats phase = run_bcd(adapter, colors, opts);
    converged = converged && phase.converged;
    total.add_phase(prefix + "warmup", phase);
  }
  average_factors(fp);
  trace_phase((prefix + "warmup").c_str(), fp, inst);
  // final coupling: per-robot curvature of the smooth terms at the averaged
  // point, so every factor pair stays tight but mobile through continuation
  for (int i = 0; i < inst.n; ++i) {
    double curvature = 0.0;
    for (int u = 0; u < 2; ++u) {
      PenaltyState probe = pen;
      probe.coupling.setZero();
      const ColumnSystem sys = assemble_column_system(fp, 0, {i, u}, inst, probe);
      curvature = std::max(curvature, sys.a.trace() / fp.rank());
    }
    pen.coupling[i] = std::max(curvature, pen.coupling[i]);
  }

  const int fixed = gauge_robot(inst);
  const std::vector<SensorIndex> blocks = sensor_blocks(inst, fixed);
  const ColorClasses colors = color_sensor_blocks(inst, blocks);
  for (int round = 1; round <= cfg.continuation_rounds; ++round) {
    BmAdapter adapter(fp, inst, pen, blocks, hooks);
    BcdOptions opts;
    opts.tol_change = cfg.tol_change;
    opts.max_sweeps = caps.continuation;
    opts.schedule = cfg.schedule;
    const RoundStats phase = run_bcd(adapter, colors, opts);
    converged = converged && phase.converged;
    total.add_phase(prefix + "continuation", phase);
    average_factors(fp);
    trace_phase((prefix + "continuation").c_str(), fp, inst);
    pen.sigma_gap *= std::sqrt(cfg.shrink_gap);
    if (inst.d == 3) pen.sigma_z *= std::sqrt(cfg.shrink_z);
  }
}

}  // namespace

BmResult run_bm_bcd(const ProblemInstance& inst, const Realization& p0, const BmConfig& cfg,
                    const BmHooks* hooks) {
  if (!inst.graph.connected()) throw std::invalid_argument("run_bm_bcd: graph disconnected");
  const int d = inst.d;
  const int rank = cfg.rank > 0 ? cfg.rank : d + 1;
  if (rank < d) throw std::invalid_argument("run_bm_bcd: rank below dimension");
  if (p0.rows() != d || p0.cols() != 2 * inst.n)
    throw std::invalid_argument("run_bm_bcd: initialization shape mismatch");

  RandomStream rng(cfg.seed);
  FactorPair fp = lift_initialization(p0, rank, rng, cfg.lift_noise_factor * inst.spacing);

  BmResult result;
  result.converged = true;

  PenaltyState pen = initial_penalties(inst, cfg);
  run_algorithm_body(fp, pen, inst, cfg, hooks, "",
                     {cfg.max_sweeps_warmup, cfg.max_sweeps_continuation}, result.stats,
                     result.converged);

  if (rank != d) {
    // refinement: restart the loop at rank d, seeded with the embedded realization
    FactorPair refined;
    refined.u = fp.realization();
    refined.v = refined.u;
    refined.proj = fixed_projection(d, d);
    fp = std::move(refined);
    PenaltyState pen2 = initial_penalties(inst, cfg);
    run_algorithm_body(fp, pen2, inst, cfg, hooks, "refine_",
                       {cfg.max_sweeps_refine, cfg.max_sweeps_refine}, result.stats,
                       result.converged);
    pen = std::move(pen2);
  }

  result.p = fp.realization();
  result.poses = recover_poses(result.p, inst);
  result.stats.final_objective = cost_F(fp, inst, pen);
  result.stats.converged = result.converged;
  return result;
}

}  // namespace rsnl::bm

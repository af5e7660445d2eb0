#pragma once

#include "rsnl/engine.hpp"
#include "rsnl/model.hpp"
#include "rsnl/recover.hpp"
#include "rsnl/types.hpp"

#include <functional>
#include <optional>

namespace rsnl::bm {

// Factor pair of the rank-restricted model. The projection is fixed to
// [I_d; 0], so the realization embedded in a factor is its first d rows.
struct FactorPair {
  Mat u;     // r x 2n
  Mat v;     // r x 2n
  Mat proj;  // r x d

  int rank() const { return static_cast<int>(u.rows()); }
  int columns() const { return static_cast<int>(u.cols()); }
  Realization realization() const { return proj.transpose() * u; }
};

Mat fixed_projection(int rank, int d);  // [I_d; 0]

// Live penalty coefficients. sigma_gap and sigma_z shrink across continuation
// rounds; coupling is the per-robot weight on ||U_i - V_i||^2.
struct PenaltyState {
  Vec sigma_gap;  // per robot
  Vec sigma_z;    // per robot, 3D only
  Vec coupling;   // per robot
};

struct BmConfig {
  int rank = 0;                    // 0 = d + 1
  double tol_change = 5e-4;        // relative-change termination
  double tol_obj_decrease = 1e-3;  // warm-up objective-decrease threshold
  double warmup_gap_tol = 0.05;    // factor gap required before the decrease stop
  double shrink_gap = 1.0 / 20;    // continuation factor for sigma_gap^2
  double shrink_z = 1.0 / 20;
  int continuation_rounds = 3;
  double coupling_init_factor = 0.1;
  double coupling_grow_threshold = 0.01;  // stall level that doubles the coupling weight
  double coupling_cap_factor = 1e6;       // cap = factor * initial coupling
  bool coupling_global = false;  // one shared coupling weight instead of per robot
  int max_sweeps_warmup = 500;
  int max_sweeps_continuation = 500;
  int max_sweeps_refine = 1000;
  double lift_noise_factor = 0.1;  // extra-row noise scale = factor * spacing
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::Sequential;
};

// Test/instrumentation hooks; on_column fires after every single-column exact
// solve, in update order (U column then V column of each block).
struct BmHooks {
  std::function<void(int factor, SensorIndex s, const Vec& col)> on_column;
  std::vector<int>* read_log = nullptr;  // flat column indices read by solves
};

PenaltyState initial_penalties(const ProblemInstance& inst, const BmConfig& cfg);

// Full model cost: weighted squared-range residuals, gap and z penalties
// (z split half/half between the two factor orders), and the coupling term.
double cost_F(const FactorPair& fp, const ProblemInstance& inst, const PenaltyState& pen);

// Terms of cost_F that touch robot i (its incident measurements, its own
// penalties and coupling). The coupling-weight maintenance rule monitors it
// with the coupling term excluded so weight changes do not mask stalls.
double local_cost_F(const FactorPair& fp, const ProblemInstance& inst,
                    const PenaltyState& pen, int robot, bool include_coupling = true);

struct ColumnSystem {
  Mat a;  // r x r, SPD for coupling > 0
  Vec b;
};

// Normal equations of the cost restricted to one column of one factor
// (factor 0 = U, 1 = V), everything else fixed. When updating a V column,
// own_factor_col overrides the same sensor's U column (intra-block
// Gauss-Seidel). The restricted cost is c(x) = x'Ax - 2b'x + const.
ColumnSystem assemble_column_system(const FactorPair& fp, int factor, SensorIndex s,
                                    const ProblemInstance& inst, const PenaltyState& pen,
                                    const Vec* own_factor_col = nullptr,
                                    std::vector<int>* read_log = nullptr);

// Exact minimizer of the restricted cost (solves the SPD system above).
Vec block_update_column(const FactorPair& fp, int factor, SensorIndex s,
                        const ProblemInstance& inst, const PenaltyState& pen,
                        const Vec* own_factor_col = nullptr,
                        std::vector<int>* read_log = nullptr);

// U = [p0; Gaussian rows at noise_scale], V = U.
FactorPair lift_initialization(const Realization& p0, int rank, RandomStream& rng,
                               double noise_scale);

// Gauge anchor: the two sensors of the highest-degree robot (ties by id).
int gauge_robot(const ProblemInstance& inst);

struct BmResult {
  Realization p;
  std::vector<PoseEstimate> poses;
  RoundStats stats;
  bool converged = true;
};

// Full solver: coupling warm-up, continuation rounds with shrinking
// penalties, then a rank-d refinement pass over the same loop.
BmResult run_bm_bcd(const ProblemInstance& inst, const Realization& p0, const BmConfig& cfg,
                    const BmHooks* hooks = nullptr);

}  // namespace rsnl::bm

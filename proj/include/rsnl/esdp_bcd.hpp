#pragma once

#include "rsnl/bm_bcd.hpp"
#include "rsnl/engine.hpp"
#include "rsnl/model.hpp"
#include "rsnl/recover.hpp"
#include "rsnl/types.hpp"

#include <functional>
#include <vector>

namespace rsnl::esdp {

// Sparse Gram-relaxation state: besides the realization, only the entries of
// X touched by some constraint are kept (per-sensor diagonal, per-robot
// intra pair, per-measurement cross entry).
struct EsdpState {
  Realization p;  // d x 2n; anchor columns carry the anchor estimates
  Vec x_diag;     // 2n
  Vec x_intra;    // n
  std::vector<std::array<double, 4>> x_edge;  // per graph edge, slot 2u+v

  double& edge_entry(int edge, int u, int v) { return x_edge[edge][2 * u + v]; }
  double edge_entry(int edge, int u, int v) const { return x_edge[edge][2 * u + v]; }
};

// Relaxation slack x_diag - ||p||^2 of one sensor, floored away from zero so
// it can serve as a denominator in neighboring blocks.
double relaxation_error(const EsdpState& state, SensorIndex s);

struct BarrierConfig {
  double initial_weight = 1.0;
  double decrease = 0.1;
  double outer_tol = 1e-8;  // stop once weight * (#inequalities) drops below
  double newton_tol = 1e-9;
  int max_newton_steps = 50;
};

// Convex block subproblem for one robot. Variables are laid out as
// [p0 (d), p1 (d), x_diag0, x_diag1, x_intra, cross entries...].
struct SubproblemModel {
  int robot = 0;
  int d = 3;
  int var_count = 0;

  // objective: sum_k weight_k * (row_k . xi - const_k)^2
  std::vector<Vec> obj_rows;
  std::vector<double> obj_consts;
  std::vector<double> obj_weights;

  struct NormCon {
    int x_idx;
    int p_off;
  };
  // fixed-neighbor Schur constraint: err * (x - ||p||^2) >= (xe - p . nb_p)^2;
  // xe_idx < 0 means the cross entry is externally owned and held at xe_fixed
  struct EdgeCon {
    int x_idx;
    int p_off;
    int xe_idx;
    double xe_fixed;
    Vec nb_p;
    double nb_err;
  };
  std::vector<NormCon> norm_cons;
  std::vector<EdgeCon> edge_cons;
  bool has_intra = true;

  Mat eq_a;  // equality rows
  Vec eq_b;

  Vec start;                                  // current state values (warm data)
  std::vector<std::pair<int, int>> xe_slots;  // (edge id, slot) per cross variable

  int p_offset(int side) const { return side * d; }
  int x_index(int side) const { return 2 * d + side; }
  int intra_index() const { return 2 * d + 2; }

  double objective(const Vec& xi) const;
  Vec objective_gradient(const Vec& xi) const;
  Mat objective_hessian() const;
};

// Cross-entry ownership between the two endpoint robots of an edge.
enum class EdgeOwnership {
  Shared,    // both endpoints treat the entry as their own variable (default)
  Disjoint,  // smaller robot id owns it; the other holds it fixed
};

// Builds the convex program for one robot's block. Anchor-incident
// measurements enter through the affine anchor form (their cross entries are
// eliminated); throws "unconstrained block" when the robot has neither
// measurements nor anchors.
SubproblemModel assemble_subproblem(const EsdpState& state, int robot,
                                    const ProblemInstance& inst,
                                    EdgeOwnership ownership = EdgeOwnership::Shared);

// Exact solve by a log-barrier Newton method; equality constraints are
// eliminated through a null-space basis inside each Newton step.
Vec solve_subproblem(const SubproblemModel& model, const BarrierConfig& cfg);

void apply_block_values(EsdpState& state, const SubproblemModel& model, const Vec& xi);

// Full relaxation objective over measurement and anchor edges.
double cost_G(const EsdpState& state, const ProblemInstance& inst);

// Smallest eigenvalue over the pairwise relaxation blocks touching `robot`
// (all blocks when robot < 0); feasible states keep it above -1e-7.
double min_constraint_eig(const EsdpState& state, const ProblemInstance& inst,
                          int robot = -1);

// Strictly feasible state at a given realization: Gram entries with the
// diagonal inflated by one.
EsdpState initial_state(const Realization& p0, const ProblemInstance& inst);

struct EsdpConfig {
  BarrierConfig barrier;
  double tol_change = 5e-2;  // loose: the refinement polishes
  int max_sweeps = 200;
  EdgeOwnership ownership = EdgeOwnership::Shared;
  bm::BmConfig refine;  // refine.rank == 0 selects d + 1
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::Sequential;
};

struct EsdpHooks {
  std::function<void(int robot)> after_block;  // fires after each block commit
};

struct EsdpResult {
  Realization p_esdp;  // extracted before refinement
  Realization p;       // after BM refinement
  std::vector<PoseEstimate> poses;
  RoundStats stats;
  int k_esdp = 0;
  int k_refine = 0;
  double final_g = 0.0;
  bool converged = true;
};

// Anchored ESDP sweeps followed by a rank-(d+1) BM refinement; p0 may be null
// (anchors' centroid plus Gaussian scatter is used).
EsdpResult run_esdp_bcd(const ProblemInstance& inst, const EsdpConfig& cfg,
                        const Realization* p0 = nullptr, const EsdpHooks* hooks = nullptr);

}  // namespace rsnl::esdp

#pragma once

#include "rsnl/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rsnl {

// Blocks are numbered 0..count-1 by the adapter; the dependency graph has an
// edge where two blocks read each other's variables.
struct DependencyGraph {
  int count = 0;
  std::vector<std::pair<int, int>> edges;
};

// Ordered color classes; blocks within a class are mutually independent.
using ColorClasses = std::vector<std::vector<int>>;

// Greedy coloring over a deterministic vertex order (descending degree, ties
// by id). Uses at most max_degree + 1 colors.
ColorClasses greedy_coloring(const DependencyGraph& graph);

bool coloring_valid(const DependencyGraph& graph, const ColorClasses& colors);

// One solved block, opaque to the engine.
struct BlockUpdate {
  std::vector<double> values;
};

// Exact-block-solve problem adapter. compute() must not mutate shared state;
// apply() commits the values. Blocks within one color class never read each
// other, which is what makes the two schedules below equivalent.
class BcdAdapter {
 public:
  virtual ~BcdAdapter() = default;
  virtual int block_count() const = 0;
  virtual BlockUpdate compute(int block) const = 0;
  virtual void apply(int block, const BlockUpdate& update) = 0;
  // Relative change of the shared estimate since the previous sweep; called
  // once per sweep and expected to refresh its reference snapshot.
  virtual double sweep_change() = 0;
};

enum class Schedule {
  Sequential,     // apply each block as soon as it is computed
  ColorParallel,  // compute a whole color class from the pre-round state, then apply
};

struct RoundStats {
  int iterations = 0;   // sweeps over all color classes
  int comm_rounds = 0;  // one per color class per sweep
  double st = 0.0;      // serial time: sum of block-solve durations (s)
  double pt = 0.0;      // modeled parallel time: sum of per-round maxima (s)
  double final_objective = 0.0;
  bool converged = false;

  struct Phase {
    std::string name;
    int iterations = 0;
    int comm_rounds = 0;
    double st = 0.0;
    double pt = 0.0;
  };
  std::vector<Phase> phases;

  void add_phase(const std::string& name, const RoundStats& phase);
};

struct BcdOptions {
  double tol_change = 5e-4;  // stop when sweep_change() drops below this
  int max_sweeps = 500;
  Schedule schedule = Schedule::Sequential;
  // extra stop test evaluated after the change criterion (may be empty)
  std::function<bool(int sweep)> extra_stop;
  // called at the end of every sweep, before the stop tests
  std::function<void(int sweep)> after_sweep;
};

// Cyclic synchronous sweeps over the color classes until the adapter's
// relative-change criterion (or the extra stop test, or the sweep cap) fires.
RoundStats run_bcd(BcdAdapter& adapter, const ColorClasses& colors, const BcdOptions& opts);

}  // namespace rsnl

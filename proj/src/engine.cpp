#include "rsnl/engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace rsnl {

ColorClasses greedy_coloring(const DependencyGraph& graph) {
  std::vector<std::vector<int>> adj(graph.count);
  for (const auto& [a, b] : graph.edges) {
    if (a == b) throw std::invalid_argument("greedy_coloring: self-loop");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> order(graph.count);
  for (int i = 0; i < graph.count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (adj[a].size() != adj[b].size()) return adj[a].size() > adj[b].size();
    return a < b;
  });

  std::vector<int> color(graph.count, -1);
  int classes = 0;
  for (int v : order) {
    std::vector<char> used(adj[v].size() + 1, 0);
    for (int nb : adj[v]) {
      if (color[nb] >= 0 && color[nb] < static_cast<int>(used.size())) used[color[nb]] = 1;
    }
    int c = 0;
    while (used[c]) ++c;
    color[v] = c;
    classes = std::max(classes, c + 1);
  }

  ColorClasses out(classes);
  for (int v = 0; v < graph.count; ++v) out[color[v]].push_back(v);  // ids ascend per class
  return out;
}

bool coloring_valid(const DependencyGraph& graph, const ColorClasses& colors) {
  std::vector<int> color(graph.count, -1);
  int assigned = 0;
  for (std::size_t c = 0; c < colors.size(); ++c)
    for (int v : colors[c]) {
      if (v < 0 || v >= graph.count || color[v] >= 0) return false;
      color[v] = static_cast<int>(c);
      ++assigned;
    }
  if (assigned != graph.count) return false;
  for (const auto& [a, b] : graph.edges)
    if (color[a] == color[b]) return false;
  return true;
}

void RoundStats::add_phase(const std::string& name, const RoundStats& phase) {
  iterations += phase.iterations;
  comm_rounds += phase.comm_rounds;
  st += phase.st;
  pt += phase.pt;
  phases.push_back({name, phase.iterations, phase.comm_rounds, phase.st, phase.pt});
}

RoundStats run_bcd(BcdAdapter& adapter, const ColorClasses& colors, const BcdOptions& opts) {
  using Clock = std::chrono::steady_clock;
  RoundStats stats;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (const auto& cls : colors) {
      double round_max = 0.0;
      std::vector<BlockUpdate> pending;
      if (opts.schedule == Schedule::ColorParallel) pending.reserve(cls.size());
      for (int block : cls) {
        const auto t0 = Clock::now();
        BlockUpdate u = adapter.compute(block);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        stats.st += secs;
        round_max = std::max(round_max, secs);
        if (opts.schedule == Schedule::Sequential) {
          adapter.apply(block, u);
        } else {
          pending.push_back(std::move(u));
        }
      }
      if (opts.schedule == Schedule::ColorParallel) {
        for (std::size_t k = 0; k < cls.size(); ++k) adapter.apply(cls[k], pending[k]);
      }
      stats.pt += round_max;
      stats.comm_rounds += 1;
    }
    stats.iterations = sweep;
    if (opts.after_sweep) opts.after_sweep(sweep);
    const double change = adapter.sweep_change();
    if (change <= opts.tol_change || (opts.extra_stop && opts.extra_stop(sweep))) {
      stats.converged = true;
      break;
    }
  }
  return stats;
}

}  // namespace rsnl

#include "rsnl/recover.hpp"

#include <cmath>
#include <stdexcept>

namespace rsnl {

std::vector<PoseEstimate> recover_poses(const Realization& p, const ProblemInstance& inst) {
  std::vector<PoseEstimate> out(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    const Vec gap_body = [&] {
      const Vec raw = inst.offsets[i].sensor0 - inst.offsets[i].sensor1;
      if (inst.d == 2) return raw;
      return Vec(pose_rotation(0.0, inst.priors[i], 3) * raw);
    }();
    const double denom = gap_body[0] * gap_body[0] + gap_body[1] * gap_body[1];
    if (denom <= 1e-9) throw std::runtime_error("recover_poses: degenerate sensor offsets");

    const Vec dp = p.col(2 * i) - p.col(2 * i + 1);
    const double sin_yaw = (gap_body[0] * dp[1] - gap_body[1] * dp[0]) / denom;
    const double cos_yaw = (gap_body[0] * dp[0] + gap_body[1] * dp[1]) / denom;

    PoseEstimate est;
    est.yaw = std::atan2(sin_yaw, cos_yaw);
    if (inst.d == 3) {
      est.pitch = inst.priors[i].pitch;
      est.roll = inst.priors[i].roll;
    }
    est.rotation = pose_rotation(est.yaw, {est.pitch, est.roll}, inst.d);
    est.t = 0.5 * (p.col(2 * i) - est.rotation * inst.offsets[i].sensor0) +
            0.5 * (p.col(2 * i + 1) - est.rotation * inst.offsets[i].sensor1);
    out[i] = std::move(est);
  }
  return out;
}

double rmse_body(const std::vector<PoseEstimate>& estimates, const std::vector<Pose>& truth,
                 const MeasurementGraph& graph, bool all_pairs) {
  const int n = static_cast<int>(estimates.size());
  if (n == 0) throw std::invalid_argument("rmse_body: empty estimate set");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> peers;
    if (all_pairs) {
      for (int j = 0; j < n; ++j)
        if (j != i) peers.push_back(j);
    } else {
      peers = graph.neighbors(i);
    }
    if (peers.empty()) throw std::invalid_argument("rmse_body: robot with no neighbors");

    const Mat rot_true =
        pose_rotation(truth[i].yaw, {truth[i].pitch, truth[i].roll},
                      static_cast<int>(estimates[i].t.size()));
    double sq = 0.0;
    for (int j : peers) {
      const Vec rel_est = estimates[i].rotation.transpose() * (estimates[j].t - estimates[i].t);
      const Vec rel_true = rot_true.transpose() * (truth[j].t - truth[i].t);
      sq += (rel_est - rel_true).squaredNorm();
    }
    total += std::sqrt(sq / double(peers.size()));
  }
  return total / double(n);
}

double rmse_absolute(const Realization& p, const ProblemInstance& inst) {
  if (!inst.truth) throw std::invalid_argument("rmse_absolute: no ground truth");
  double sq = 0.0;
  int count = 0;
  for (int i = 0; i < inst.n; ++i) {
    if (inst.anchors.is_anchor(i)) continue;
    const Vec center = 0.5 * (p.col(2 * i) + p.col(2 * i + 1));
    const Vec true_center = 0.5 * (inst.truth->p.col(2 * i) + inst.truth->p.col(2 * i + 1));
    sq += (center - true_center).squaredNorm();
    ++count;
  }
  if (count == 0) throw std::invalid_argument("rmse_absolute: all robots are anchors");
  return std::sqrt(sq / double(count));
}

double failure_rate(const std::vector<double>& rmse_values, double threshold) {
  if (rmse_values.empty()) throw std::invalid_argument("failure_rate: empty input");
  int failures = 0;
  for (double v : rmse_values)
    if (v > threshold) ++failures;
  return double(failures) / double(rmse_values.size());
}

Realization rankd_project(const SymMatrix& x, int d) {
  const auto [vals, vecs] = eig_sym(x);
  Realization p(d, x.order());
  for (int k = 0; k < d; ++k)
    p.row(k) = std::sqrt(std::max(vals[k], 0.0)) * vecs.col(k).transpose();
  return p;
}

}  // namespace rsnl

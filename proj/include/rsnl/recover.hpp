#pragma once

#include "rsnl/model.hpp"
#include "rsnl/numerics.hpp"
#include "rsnl/types.hpp"

#include <vector>

namespace rsnl {

struct PoseEstimate {
  double yaw = 0.0;
  double pitch = 0.0;  // copied from the prior (3D)
  double roll = 0.0;
  Vec t;
  Mat rotation;  // d x d, orthonormal, det +1
};

struct MetricReport {
  double rmse = 0.0;    // body-frame relative-translation RMSE, averaged over robots
  double rmse_a = 0.0;  // absolute robot-position RMSE (pre-refinement diagnostic)
  double fr = 0.0;      // fraction of trials above the failure threshold
};

// Closed-form pose recovery from sensor coordinates. The yaw comes from the
// horizontal components of the in-robot sensor gap (sin/cos fed to atan2
// unnormalized); the translation averages the two sensors' implied values.
std::vector<PoseEstimate> recover_poses(const Realization& p, const ProblemInstance& inst);

// Body-frame relative translation error, per-robot RMSE over its neighbor set,
// averaged over robots. With all_pairs the neighbor set becomes every other
// robot.
double rmse_body(const std::vector<PoseEstimate>& estimates, const std::vector<Pose>& truth,
                 const MeasurementGraph& graph, bool all_pairs = false);

// Absolute robot-center position RMSE (no orientation involved); anchor robots
// are excluded when an anchor set is present.
double rmse_absolute(const Realization& p, const ProblemInstance& inst);

// Fraction of values strictly above the threshold (paper convention: 0.6 m).
double failure_rate(const std::vector<double>& rmse_values, double threshold = 0.6);

// Rank-d spectral rounding of a Gram-like matrix: the d largest eigenvalues
// (clamped at zero) and their eigenvectors give a d x 2n realization.
Realization rankd_project(const SymMatrix& x, int d);

}  // namespace rsnl

#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace rsnl {

using Scalar = double;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// One of the two ranging sensors mounted on a robot. Sensors are laid out
// column-wise in a realization matrix, sensor (robot, side) at column
// 2*robot + side.
struct SensorIndex {
  int robot = 0;
  int side = 0;  // in {0, 1}

  int flat() const { return 2 * robot + side; }
  SensorIndex other() const { return {robot, 1 - side}; }

  friend bool operator==(const SensorIndex&, const SensorIndex&) = default;
};

inline SensorIndex sensor_from_flat(int flat) { return {flat / 2, flat % 2}; }

// A realization is a d x 2n matrix of sensor coordinates; column 2i+u holds
// the position of sensor (i, u) in the common frame. Plain Mat is used so the
// whole Eigen expression toolkit applies.
using Realization = Mat;

}  // namespace rsnl

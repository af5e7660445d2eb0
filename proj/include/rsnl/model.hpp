#pragma once

#include "rsnl/types.hpp"

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rsnl {

// Seeded random stream with a fixed, documented draw discipline: every
// distribution is reset before sampling, so a draw consumes a reproducible
// slice of the underlying engine regardless of what was drawn before it.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double gauss(double mean = 0.0, double std = 1.0);
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  Vec unit_vector(int d);           // uniform on the unit sphere/circle

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Positions of the two ranging sensors in the robot body frame.
struct BodyOffset {
  Vec sensor0;  // body-frame position of sensor 0
  Vec sensor1;  // body-frame position of sensor 1
};

// Measured pitch/roll for a robot (3D only). The yaw is the quantity being
// estimated; tilt is assumed observable from an IMU.
struct AttitudePrior {
  double pitch = 0.0;
  double roll = 0.0;
};

// One noisy squared-range measurement between sensors on distinct robots.
struct DistanceMeasurement {
  SensorIndex a;
  SensorIndex b;
  double range = 0.0;              // measured distance (m)
  double squared_range = 0.0;      // debiased squared distance: range^2 - sigma^2 (m^2)
  double squared_range_std = 1.0;  // std of the squared-range noise (m^2), floored > 0
};

double weight_of(const DistanceMeasurement& m);  // 1 / squared_range_std^2

// Undirected robot-level measurement graph; every edge carries the four
// sensor-pair measurements, slot 2u+v for sensor pair (i,u)-(j,v) with i < j.
struct MeasurementGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j
  std::vector<std::array<DistanceMeasurement, 4>> edge_meas;
  std::vector<std::vector<int>> incident;  // robot -> edge ids

  std::vector<int> neighbors(int robot) const;
  int degree(int robot) const { return static_cast<int>(incident[robot].size()); }
  bool connected() const;
};

// Externally localized robots. `estimates` maps flat sensor index to the
// (imperfect) position estimate; `edges` holds the extra long-range
// anchor-to-node measurements (a = anchor sensor, b = non-anchor sensor).
struct AnchorSet {
  std::vector<int> robots;
  std::vector<std::pair<int, Vec>> estimates;
  std::vector<DistanceMeasurement> edges;

  bool empty() const { return robots.empty(); }
  bool is_anchor(int robot) const;
  const Vec& estimate(SensorIndex s) const;
};

struct Pose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  Vec t;
};

struct GroundTruth {
  std::vector<Pose> poses;
  Realization p;  // d x 2n sensor coordinates implied by the poses
};

struct ProblemInstance {
  int d = 3;
  int n = 0;
  MeasurementGraph graph;
  std::vector<BodyOffset> offsets;
  std::vector<AttitudePrior> priors;  // empty when d == 2
  std::vector<double> sensor_gap_sq;  // ||sensor0 - sensor1||^2 per robot
  std::vector<double> sensor_gap_z;   // tilted z-component of the gap (3D)
  AnchorSet anchors;
  std::optional<GroundTruth> truth;

  // scenario metadata used by initialization sampling and solver defaults
  double spacing = 1.0;           // lattice spacing b (m)
  double init_radius_unit = 1.0;  // (l - 1) * b; initialization radius = rho * unit
  double noise_level = 0.0;       // sigma of the range noise (m)

  int columns() const { return 2 * n; }
};

enum class Shape { Cube, Pyramid, Hexagon, Rectangle, Custom };

Shape shape_from_string(const std::string& s);
std::string to_string(Shape s);

struct ScenarioSpec {
  Shape shape = Shape::Cube;
  int levels = 0;      // lattice scale; 0 = full-scale default for the shape
  int rows = 0;        // rectangle / custom grids
  int cols = 0;
  int depth = 1;       // custom only; depth > 1 makes the lattice 3D
  double b = 3.0;      // neighbor spacing (m)
  double sigma = 0.1;  // range noise level (m)
  double comm_radius = 0.0;  // 0 = default 1.8 * b
  double rho = 0.5;          // initialization quality
  int anchor_count = 0;
  double eta = 0.3;           // anchor-to-node measurement probability
  double anchor_noise = 0.1;  // std of the anchor position estimates (m)
  std::uint64_t seed = 1;
  double tilt_range_deg = 5.0;    // ground-truth pitch/roll ~ U[-range, range]
  double tilt_prior_noise = 0.0;  // std of the measured tilt error (rad)
  double sensor_arm = 0.35;       // body-frame sensor offset along y (m)
};

// Lattice of ground-truth robot positions for a spec (centered at the origin).
// Exposed for tests; generate_scenario uses it internally.
std::vector<Vec> lattice_points(const ScenarioSpec& spec);
int lattice_dimension(const ScenarioSpec& spec);
int lattice_levels(const ScenarioSpec& spec);  // the l in radius = rho*(l-1)*b

// Squared-range measurement from a true distance and a noise draw:
//   range = dist + eps, squared_range = range^2 - sigma^2,
//   squared_range_std = sqrt((2*sigma*range)^2 + 2*sigma^4), floored at 1e-6.
DistanceMeasurement make_measurement(SensorIndex a, SensorIndex b, double true_dist,
                                     double eps, double sigma);

std::vector<DistanceMeasurement> simulate_measurements(
    const Realization& true_p, double sigma,
    const std::vector<std::pair<SensorIndex, SensorIndex>>& pairs, RandomStream& rng);

// Rotation of a pose: yaw about z composed with the tilt rotations
// (Ry(roll) * Rx(pitch)); 2D poses rotate by yaw only.
Mat pose_rotation(double yaw, const AttitudePrior& tilt, int d);

// Realization from poses; tilt angles are taken from `tilts` (pass the true
// tilts to build ground truth, the measured priors to build estimates).
Realization poses_to_realization(const std::vector<Pose>& poses,
                                 const std::vector<BodyOffset>& offsets,
                                 const std::vector<AttitudePrior>& tilts, int d);

ProblemInstance generate_scenario(const ScenarioSpec& spec);

// Initial guess: per robot, translation uniform on the sphere/circle of
// radius rho * (l-1) * b around the true translation, yaw uniform.
Realization sample_initialization(const ProblemInstance& inst, double rho,
                                  std::uint64_t seed);

}  // namespace rsnl

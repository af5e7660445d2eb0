#include "rsnl/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rsnl {

namespace {
constexpr double kSquaredRangeStdFloor = 1e-6;  // keeps weights finite at sigma = 0
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double RandomStream::gauss(double mean, double std) {
  std::normal_distribution<double> d(mean, std);
  d.reset();
  return d(engine_);
}

double RandomStream::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  d.reset();
  return d(engine_);
}

int RandomStream::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  d.reset();
  return d(engine_);
}

Vec RandomStream::unit_vector(int d) {
  Vec v(d);
  double norm = 0.0;
  do {
    for (int k = 0; k < d; ++k) v[k] = gauss();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

double weight_of(const DistanceMeasurement& m) {
  return 1.0 / (m.squared_range_std * m.squared_range_std);
}

std::vector<int> MeasurementGraph::neighbors(int robot) const {
  std::vector<int> out;
  out.reserve(incident[robot].size());
  for (int e : incident[robot]) {
    const auto& [i, j] = edges[e];
    out.push_back(i == robot ? j : i);
  }
  return out;
}

bool MeasurementGraph::connected() const {
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int count = 1;
  while (!queue.empty()) {
    int r = queue.front();
    queue.pop_front();
    for (int nb : neighbors(r)) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++count;
        queue.push_back(nb);
      }
    }
  }
  return count == n;
}

bool AnchorSet::is_anchor(int robot) const {
  return std::find(robots.begin(), robots.end(), robot) != robots.end();
}

const Vec& AnchorSet::estimate(SensorIndex s) const {
  for (const auto& [flat, est] : estimates) {
    if (flat == s.flat()) return est;
  }
  throw std::out_of_range("AnchorSet: no estimate for sensor");
}

Shape shape_from_string(const std::string& s) {
  if (s == "cube") return Shape::Cube;
  if (s == "pyramid") return Shape::Pyramid;
  if (s == "hexagon") return Shape::Hexagon;
  if (s == "rectangle") return Shape::Rectangle;
  if (s == "custom") return Shape::Custom;
  throw std::invalid_argument("unknown shape: " + s);
}

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Cube: return "cube";
    case Shape::Pyramid: return "pyramid";
    case Shape::Hexagon: return "hexagon";
    case Shape::Rectangle: return "rectangle";
    case Shape::Custom: return "custom";
  }
  return "?";
}

int lattice_dimension(const ScenarioSpec& spec) {
  switch (spec.shape) {
    case Shape::Cube:
    case Shape::Pyramid: return 3;
    case Shape::Hexagon:
    case Shape::Rectangle: return 2;
    case Shape::Custom: return spec.depth > 1 ? 3 : 2;
  }
  return 3;
}

int lattice_levels(const ScenarioSpec& spec) {
  switch (spec.shape) {
    case Shape::Cube: return spec.levels > 0 ? spec.levels : 5;
    case Shape::Pyramid: return spec.levels > 0 ? spec.levels : 7;
    case Shape::Hexagon: return spec.levels > 0 ? spec.levels : 9;
    case Shape::Rectangle: {
      int r = spec.rows > 0 ? spec.rows : 10;
      int c = spec.cols > 0 ? spec.cols : 20;
      return std::min(r, c);
    }
    case Shape::Custom: {
      // smallest extent above 1 sets the initialization-radius unit
      int best = 0;
      for (int dim : {spec.rows, spec.cols, spec.depth}) {
        if (dim > 1 && (best == 0 || dim < best)) best = dim;
      }
      return best > 0 ? best : std::max({spec.rows, spec.cols, spec.depth, 1});
    }
  }
  return 1;
}

std::vector<Vec> lattice_points(const ScenarioSpec& spec) {
  std::vector<Vec> pts;
  const double b = spec.b;
  switch (spec.shape) {
    case Shape::Cube: {
      const int l = lattice_levels(spec);
      for (int x = 0; x < l; ++x)
        for (int y = 0; y < l; ++y)
          for (int z = 0; z < l; ++z) pts.push_back(b * Vec{{double(x), double(y), double(z)}});
      break;
    }
    case Shape::Pyramid: {
      // regular tetrahedral stacking: triangular layers shrinking with height
      const int l = lattice_levels(spec);
      const Vec e1{{1.0, 0.0, 0.0}};
      const Vec e2{{0.5, std::sqrt(3.0) / 2.0, 0.0}};
      const Vec e3{{0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}};
      for (int h = 0; h < l; ++h) {
        const int m = l - h;
        for (int a = 0; a < m; ++a)
          for (int c = 0; c < m - a; ++c) pts.push_back(b * (a * e1 + c * e2 + h * e3));
      }
      break;
    }
    case Shape::Hexagon: {
      const int s = lattice_levels(spec);  // robots per hexagon side
      for (int q = -(s - 1); q <= s - 1; ++q)
        for (int r = -(s - 1); r <= s - 1; ++r) {
          if (std::abs(q + r) > s - 1) continue;
          pts.push_back(b * Vec{{q + 0.5 * r, r * std::sqrt(3.0) / 2.0}});
        }
      break;
    }
    case Shape::Rectangle: {
      const int rows = spec.rows > 0 ? spec.rows : 10;
      const int cols = spec.cols > 0 ? spec.cols : 20;
      for (int x = 0; x < cols; ++x)
        for (int y = 0; y < rows; ++y) pts.push_back(b * Vec{{double(x), double(y)}});
      break;
    }
    case Shape::Custom: {
      const int rows = std::max(spec.rows, 1);
      const int cols = std::max(spec.cols, 1);
      const int depth = std::max(spec.depth, 1);
      const int d = lattice_dimension(spec);
      for (int x = 0; x < cols; ++x)
        for (int y = 0; y < rows; ++y)
          for (int z = 0; z < depth; ++z) {
            Vec p = d == 3 ? Vec{{double(x), double(y), double(z)}} : Vec{{double(x), double(y)}};
            pts.push_back(b * p);
          }
      break;
    }
  }
  // center the formation at the origin
  if (!pts.empty()) {
    Vec centroid = Vec::Zero(pts[0].size());
    for (const Vec& p : pts) centroid += p;
    centroid /= double(pts.size());
    for (Vec& p : pts) p -= centroid;
  }
  return pts;
}

DistanceMeasurement make_measurement(SensorIndex a, SensorIndex b, double true_dist,
                                     double eps, double sigma) {
  DistanceMeasurement m;
  m.a = a;
  m.b = b;
  m.range = true_dist + eps;
  m.squared_range = m.range * m.range - sigma * sigma;
  const double var = 4.0 * sigma * sigma * m.range * m.range + 2.0 * std::pow(sigma, 4);
  m.squared_range_std = std::max(std::sqrt(var), kSquaredRangeStdFloor);
  return m;
}

std::vector<DistanceMeasurement> simulate_measurements(
    const Realization& true_p, double sigma,
    const std::vector<std::pair<SensorIndex, SensorIndex>>& pairs, RandomStream& rng) {
  if (sigma < 0) throw std::invalid_argument("simulate_measurements: sigma < 0");
  std::vector<DistanceMeasurement> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a.robot == b.robot)
      throw std::invalid_argument("simulate_measurements: intra-robot pair");
    const double dist = (true_p.col(a.flat()) - true_p.col(b.flat())).norm();
    const double eps = sigma * rng.gauss();
    out.push_back(make_measurement(a, b, dist, eps, sigma));
  }
  return out;
}

Mat pose_rotation(double yaw, const AttitudePrior& tilt, int d) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  if (d == 2) {
    Mat r(2, 2);
    r << cy, -sy, sy, cy;
    return r;
  }
  const double cp = std::cos(tilt.pitch), sp = std::sin(tilt.pitch);
  const double cr = std::cos(tilt.roll), sr = std::sin(tilt.roll);
  Mat rz(3, 3), ry(3, 3), rx(3, 3);
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  ry << cr, 0, sr, 0, 1, 0, -sr, 0, cr;
  rx << 1, 0, 0, 0, cp, -sp, 0, sp, cp;
  return rz * ry * rx;
}

Realization poses_to_realization(const std::vector<Pose>& poses,
                                 const std::vector<BodyOffset>& offsets,
                                 const std::vector<AttitudePrior>& tilts, int d) {
  const int n = static_cast<int>(poses.size());
  Realization p(d, 2 * n);
  for (int i = 0; i < n; ++i) {
    const AttitudePrior tilt = d == 3 ? tilts.at(i) : AttitudePrior{};
    const Mat r = pose_rotation(poses[i].yaw, tilt, d);
    p.col(2 * i + 0) = r * offsets[i].sensor0 + poses[i].t;
    p.col(2 * i + 1) = r * offsets[i].sensor1 + poses[i].t;
  }
  return p;
}

namespace {

// Tilt-corrected body gap: Ry(roll)*Rx(pitch)*(sensor0 - sensor1). Its z entry
// is the equality target for the z constraint; its horizontal norm is the
// yaw-recovery denominator.
Vec tilted_gap(const BodyOffset& off, const AttitudePrior& tilt) {
  return pose_rotation(0.0, tilt, 3) * (off.sensor0 - off.sensor1);
}

std::vector<int> select_anchors(const std::vector<Vec>& pts, const MeasurementGraph& graph,
                                int count) {
  const int n = static_cast<int>(pts.size());
  if (count > n) throw std::invalid_argument("anchor_count exceeds robot count");
  std::vector<double> dist_to_centroid(n);
  for (int i = 0; i < n; ++i) dist_to_centroid[i] = pts[i].norm();  // lattice is centered

  auto closer = [&](int a, int b) {
    if (dist_to_centroid[a] != dist_to_centroid[b])
      return dist_to_centroid[a] < dist_to_centroid[b];
    return a < b;
  };

  std::vector<int> anchors;
  std::vector<char> taken(n, 0);
  // seed with the most central robot, then grow through graph neighbors so the
  // anchors form a connected, "neighboring" cluster
  int seed = 0;
  for (int i = 1; i < n; ++i)
    if (closer(i, seed)) seed = i;
  anchors.push_back(seed);
  taken[seed] = 1;
  while (static_cast<int>(anchors.size()) < count) {
    int best = -1;
    for (int a : anchors) {
      for (int nb : graph.neighbors(a)) {
        if (!taken[nb] && (best < 0 || closer(nb, best))) best = nb;
      }
    }
    if (best < 0) {  // disconnected fallback: nearest unused robot
      for (int i = 0; i < n; ++i)
        if (!taken[i] && (best < 0 || closer(i, best))) best = i;
    }
    anchors.push_back(best);
    taken[best] = 1;
  }
  std::sort(anchors.begin(), anchors.end());
  return anchors;
}

}  // namespace

ProblemInstance generate_scenario(const ScenarioSpec& spec) {
  if (spec.b <= 0) throw std::invalid_argument("spacing must be positive");
  if (spec.sigma < 0) throw std::invalid_argument("sigma must be nonnegative");
  if (spec.eta < 0 || spec.eta > 1) throw std::invalid_argument("eta must be in [0,1]");

  ProblemInstance inst;
  inst.d = lattice_dimension(spec);
  const std::vector<Vec> pts = lattice_points(spec);
  inst.n = static_cast<int>(pts.size());
  if (inst.n == 0) throw std::invalid_argument("empty lattice");

  RandomStream rng(spec.seed);

  // Draw order (fixed for reproducibility):
  //  1. per robot: yaw, then for 3D pitch, roll, and two tilt-prior noise draws
  //  2. per edge, per sensor pair (0,0),(0,1),(1,0),(1,1): range noise
  //  3. per anchor robot, per side: anchor estimate noise (d draws)
  //  4. per anchor robot, per side, per non-anchor robot: Bernoulli(eta),
  //     then on a hit the target side and the range noise
  std::vector<Pose> poses(inst.n);
  std::vector<AttitudePrior> true_tilt(inst.n);
  const double tilt_range = spec.tilt_range_deg * kPi / 180.0;
  for (int i = 0; i < inst.n; ++i) {
    poses[i].t = pts[i];
    poses[i].yaw = rng.uniform(0.0, 2.0 * kPi);
    if (inst.d == 3) {
      true_tilt[i].pitch = rng.uniform(-tilt_range, tilt_range);
      true_tilt[i].roll = rng.uniform(-tilt_range, tilt_range);
      AttitudePrior prior;
      prior.pitch = true_tilt[i].pitch + spec.tilt_prior_noise * rng.gauss();
      prior.roll = true_tilt[i].roll + spec.tilt_prior_noise * rng.gauss();
      inst.priors.push_back(prior);
      poses[i].pitch = true_tilt[i].pitch;
      poses[i].roll = true_tilt[i].roll;
    }
  }

  inst.offsets.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    Vec s0 = Vec::Zero(inst.d), s1 = Vec::Zero(inst.d);
    s0[1] = spec.sensor_arm;
    s1[1] = -spec.sensor_arm;
    inst.offsets[i] = {s0, s1};
  }

  GroundTruth truth;
  truth.poses = poses;
  truth.p = poses_to_realization(poses, inst.offsets, true_tilt, inst.d);

  inst.sensor_gap_sq.resize(inst.n);
  inst.sensor_gap_z.assign(inst.n, 0.0);
  for (int i = 0; i < inst.n; ++i) {
    inst.sensor_gap_sq[i] = (inst.offsets[i].sensor0 - inst.offsets[i].sensor1).squaredNorm();
    if (inst.d == 3) inst.sensor_gap_z[i] = tilted_gap(inst.offsets[i], inst.priors[i])[2];
  }

  const double radius = spec.comm_radius > 0 ? spec.comm_radius : 1.8 * spec.b;
  inst.graph.n = inst.n;
  inst.graph.incident.resize(inst.n);
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j) {
      if ((pts[i] - pts[j]).norm() <= radius) {
        inst.graph.incident[i].push_back(static_cast<int>(inst.graph.edges.size()));
        inst.graph.incident[j].push_back(static_cast<int>(inst.graph.edges.size()));
        inst.graph.edges.emplace_back(i, j);
      }
    }

  inst.graph.edge_meas.resize(inst.graph.edges.size());
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e) {
    const auto& [i, j] = inst.graph.edges[e];
    for (int u = 0; u < 2; ++u)
      for (int v = 0; v < 2; ++v) {
        const SensorIndex a{i, u}, b{j, v};
        const double dist = (truth.p.col(a.flat()) - truth.p.col(b.flat())).norm();
        const double eps = spec.sigma * rng.gauss();
        inst.graph.edge_meas[e][2 * u + v] = make_measurement(a, b, dist, eps, spec.sigma);
      }
  }

  if (!inst.graph.connected())
    throw std::runtime_error("scenario graph is disconnected; increase comm_radius");

  if (spec.anchor_count > 0) {
    inst.anchors.robots = select_anchors(pts, inst.graph, spec.anchor_count);
    for (int k : inst.anchors.robots)
      for (int v = 0; v < 2; ++v) {
        const SensorIndex s{k, v};
        Vec noise(inst.d);
        for (int c = 0; c < inst.d; ++c) noise[c] = rng.gauss();
        inst.anchors.estimates.emplace_back(s.flat(),
                                            truth.p.col(s.flat()) + spec.anchor_noise * noise);
      }
    for (int k : inst.anchors.robots)
      for (int v = 0; v < 2; ++v)
        for (int j = 0; j < inst.n; ++j) {
          if (inst.anchors.is_anchor(j)) continue;
          if (rng.uniform(0.0, 1.0) >= spec.eta) continue;
          const int u = rng.uniform_int(0, 1);
          const SensorIndex a{k, v}, b{j, u};
          const double dist = (truth.p.col(a.flat()) - truth.p.col(b.flat())).norm();
          const double eps = spec.sigma * rng.gauss();
          inst.anchors.edges.push_back(make_measurement(a, b, dist, eps, spec.sigma));
        }
  }

  inst.truth = std::move(truth);
  inst.spacing = spec.b;
  inst.init_radius_unit = (lattice_levels(spec) - 1) * spec.b;
  inst.noise_level = spec.sigma;
  return inst;
}

Realization sample_initialization(const ProblemInstance& inst, double rho,
                                  std::uint64_t seed) {
  if (!inst.truth) throw std::invalid_argument("sample_initialization: no ground truth");
  if (rho < 0) throw std::invalid_argument("sample_initialization: rho < 0");
  RandomStream rng(seed);
  const double radius = rho * inst.init_radius_unit;
  std::vector<Pose> poses(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    poses[i].t = inst.truth->poses[i].t + radius * rng.unit_vector(inst.d);
    poses[i].yaw = rng.uniform(0.0, 2.0 * kPi);
    if (inst.d == 3) {
      poses[i].pitch = inst.priors[i].pitch;
      poses[i].roll = inst.priors[i].roll;
    }
  }
  return poses_to_realization(poses, inst.offsets, inst.priors, inst.d);
}

}  // namespace rsnl

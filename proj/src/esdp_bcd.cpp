#include "rsnl/esdp_bcd.hpp"

#include "rsnl/numerics.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rsnl::esdp {

namespace {
constexpr double kTiny = 1e-300;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double relaxation_error(const EsdpState& state, SensorIndex s) {
  const int c = s.flat();
  const double raw = state.x_diag[c] - state.p.col(c).squaredNorm();
  const double floor = 1e-8 * std::max(1.0, state.x_diag[c]);
  return std::max(raw, floor);
}

double SubproblemModel::objective(const Vec& xi) const {
  double f = 0.0;
  for (std::size_t k = 0; k < obj_rows.size(); ++k) {
    const double r = obj_rows[k].dot(xi) - obj_consts[k];
    f += obj_weights[k] * r * r;
  }
  return f;
}

Vec SubproblemModel::objective_gradient(const Vec& xi) const {
  Vec g = Vec::Zero(var_count);
  for (std::size_t k = 0; k < obj_rows.size(); ++k) {
    const double r = obj_rows[k].dot(xi) - obj_consts[k];
    g += 2.0 * obj_weights[k] * r * obj_rows[k];
  }
  return g;
}

Mat SubproblemModel::objective_hessian() const {
  Mat h = Mat::Zero(var_count, var_count);
  for (std::size_t k = 0; k < obj_rows.size(); ++k)
    h += 2.0 * obj_weights[k] * obj_rows[k] * obj_rows[k].transpose();
  return h;
}

namespace {

// Measurement record plus the sides it assigns to the two endpoint robots.
struct IncidentMeas {
  const DistanceMeasurement* m;
  int own_side;
  int nb_side;
  int edge;
  int slot;
};

std::vector<IncidentMeas> incident_measurements(const ProblemInstance& inst, int robot,
                                                int edge) {
  std::vector<IncidentMeas> out;
  const auto& [i, j] = inst.graph.edges[edge];
  (void)j;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) {
      const int slot = 2 * u + v;
      const DistanceMeasurement& m = inst.graph.edge_meas[edge][slot];
      out.push_back({&m, robot == i ? u : v, robot == i ? v : u, edge, slot});
    }
  return out;
}

}  // namespace

SubproblemModel assemble_subproblem(const EsdpState& state, int robot,
                                    const ProblemInstance& inst, EdgeOwnership ownership) {
  if (inst.anchors.is_anchor(robot))
    throw std::invalid_argument("assemble_subproblem: anchor blocks never update");
  const int d = inst.d;
  SubproblemModel model;
  model.robot = robot;
  model.d = d;

  for (int e : inst.graph.incident[robot]) {
    const auto& [i, j] = inst.graph.edges[e];
    const int other = i == robot ? j : i;
    if (inst.anchors.is_anchor(other)) continue;
    const bool owned = ownership == EdgeOwnership::Shared || robot < other;
    if (!owned) continue;
    for (int slot = 0; slot < 4; ++slot) model.xe_slots.emplace_back(e, slot);
  }
  model.var_count = 2 * d + 3 + static_cast<int>(model.xe_slots.size());

  auto xe_var_of = [&](int edge, int slot) {
    for (std::size_t k = 0; k < model.xe_slots.size(); ++k)
      if (model.xe_slots[k] == std::make_pair(edge, slot))
        return 2 * d + 3 + static_cast<int>(k);
    return -1;
  };

  model.start = Vec::Zero(model.var_count);
  model.start.segment(0, d) = state.p.col(2 * robot);
  model.start.segment(d, d) = state.p.col(2 * robot + 1);
  model.start[model.x_index(0)] = state.x_diag[2 * robot];
  model.start[model.x_index(1)] = state.x_diag[2 * robot + 1];
  model.start[model.intra_index()] = state.x_intra[robot];
  for (std::size_t k = 0; k < model.xe_slots.size(); ++k)
    model.start[2 * d + 3 + k] = state.x_edge[model.xe_slots[k].first][model.xe_slots[k].second];

  for (int u = 0; u < 2; ++u) model.norm_cons.push_back({model.x_index(u), model.p_offset(u)});

  for (int e : inst.graph.incident[robot]) {
    const auto& [i, j] = inst.graph.edges[e];
    const int other = i == robot ? j : i;
    if (inst.anchors.is_anchor(other)) {
      // anchor-incident proximity edge: affine anchor form, cross entries eliminated
      for (const IncidentMeas& im : incident_measurements(inst, robot, e)) {
        const Vec& a_hat = inst.anchors.estimate({other, im.nb_side});
        Vec row = Vec::Zero(model.var_count);
        row[model.x_index(im.own_side)] = 1.0;
        row.segment(model.p_offset(im.own_side), d) = -2.0 * a_hat;
        model.obj_rows.push_back(std::move(row));
        model.obj_consts.push_back(im.m->squared_range - a_hat.squaredNorm());
        model.obj_weights.push_back(weight_of(*im.m));
      }
      continue;
    }
    for (const IncidentMeas& im : incident_measurements(inst, robot, e)) {
      const SensorIndex nb{other, im.nb_side};
      const int xe = xe_var_of(im.edge, im.slot);
      const double xe_fixed = state.x_edge[im.edge][im.slot];
      Vec row = Vec::Zero(model.var_count);
      row[model.x_index(im.own_side)] = 1.0;
      double shift = state.x_diag[nb.flat()];  // neighbor diagonal is held fixed
      if (xe >= 0) {
        row[xe] = -2.0;
      } else {
        shift -= 2.0 * xe_fixed;
      }
      model.obj_rows.push_back(std::move(row));
      model.obj_consts.push_back(im.m->squared_range - shift);
      model.obj_weights.push_back(weight_of(*im.m));

      SubproblemModel::EdgeCon con;
      con.x_idx = model.x_index(im.own_side);
      con.p_off = model.p_offset(im.own_side);
      con.xe_idx = xe;
      con.xe_fixed = xe_fixed;
      con.nb_p = state.p.col(nb.flat());
      con.nb_err = relaxation_error(state, nb);
      model.edge_cons.push_back(std::move(con));
    }
  }

  // long-range anchor measurements
  for (const DistanceMeasurement& m : inst.anchors.edges) {
    if (m.b.robot != robot) continue;
    const Vec& a_hat = inst.anchors.estimate(m.a);
    Vec row = Vec::Zero(model.var_count);
    row[model.x_index(m.b.side)] = 1.0;
    row.segment(model.p_offset(m.b.side), d) = -2.0 * a_hat;
    model.obj_rows.push_back(std::move(row));
    model.obj_consts.push_back(m.squared_range - a_hat.squaredNorm());
    model.obj_weights.push_back(weight_of(m));
  }

  if (model.obj_rows.empty()) throw std::runtime_error("assemble_subproblem: unconstrained block");

  const int n_eq = d == 3 ? 2 : 1;
  model.eq_a = Mat::Zero(n_eq, model.var_count);
  model.eq_b = Vec::Zero(n_eq);
  model.eq_a(0, model.x_index(0)) = 1.0;
  model.eq_a(0, model.x_index(1)) = 1.0;
  model.eq_a(0, model.intra_index()) = -2.0;
  model.eq_b[0] = inst.sensor_gap_sq[robot];
  if (d == 3) {
    model.eq_a(1, model.p_offset(0) + 2) = 1.0;
    model.eq_a(1, model.p_offset(1) + 2) = -1.0;
    model.eq_b[1] = inst.sensor_gap_z[robot];
  }
  return model;
}

namespace {

std::vector<double> constraint_margins(const SubproblemModel& m, const Vec& xi) {
  std::vector<double> g;
  g.reserve(m.norm_cons.size() + m.edge_cons.size() + 1);
  for (const auto& c : m.norm_cons)
    g.push_back(xi[c.x_idx] - xi.segment(c.p_off, m.d).squaredNorm());
  for (const auto& c : m.edge_cons) {
    const double s = xi[c.x_idx] - xi.segment(c.p_off, m.d).squaredNorm();
    const double xe = c.xe_idx >= 0 ? xi[c.xe_idx] : c.xe_fixed;
    const double w = xe - xi.segment(c.p_off, m.d).dot(c.nb_p);
    g.push_back(c.nb_err * s - w * w);
  }
  if (m.has_intra) {
    const double s0 = xi[m.x_index(0)] - xi.segment(m.p_offset(0), m.d).squaredNorm();
    const double s1 = xi[m.x_index(1)] - xi.segment(m.p_offset(1), m.d).squaredNorm();
    const double w = xi[m.intra_index()] -
                     xi.segment(m.p_offset(0), m.d).dot(xi.segment(m.p_offset(1), m.d));
    g.push_back(s0 * s1 - w * w);
  }
  return g;
}

bool strictly_feasible(const std::vector<double>& margins) {
  for (double g : margins)
    if (!(g > 0.0)) return false;
  return true;
}

double barrier_value(const std::vector<double>& margins) {
  double v = 0.0;
  for (double g : margins) v -= std::log(g);
  return v;
}

// Gradient and Hessian of -sum log g at a strictly feasible point.
void barrier_derivatives(const SubproblemModel& m, const Vec& xi, Vec& grad, Mat& hess) {
  const int n = m.var_count;
  grad.setZero(n);
  hess.setZero(n, n);

  auto rank1 = [&](const Vec& v, double c) { hess += c * v * v.transpose(); };

  for (const auto& c : m.norm_cons) {
    const Vec p = xi.segment(c.p_off, m.d);
    const double g = xi[c.x_idx] - p.squaredNorm();
    Vec dg = Vec::Zero(n);
    dg[c.x_idx] = 1.0;
    dg.segment(c.p_off, m.d) = -2.0 * p;
    grad -= dg / g;
    rank1(dg, 1.0 / (g * g));
    hess.block(c.p_off, c.p_off, m.d, m.d) += (2.0 / g) * Mat::Identity(m.d, m.d);
  }

  for (const auto& c : m.edge_cons) {
    const Vec p = xi.segment(c.p_off, m.d);
    const double s = xi[c.x_idx] - p.squaredNorm();
    const double xe = c.xe_idx >= 0 ? xi[c.xe_idx] : c.xe_fixed;
    const double w = xe - p.dot(c.nb_p);
    const double g = c.nb_err * s - w * w;
    Vec ds = Vec::Zero(n);
    ds[c.x_idx] = 1.0;
    ds.segment(c.p_off, m.d) = -2.0 * p;
    Vec dw = Vec::Zero(n);
    if (c.xe_idx >= 0) dw[c.xe_idx] = 1.0;
    dw.segment(c.p_off, m.d) = -c.nb_p;
    const Vec dg = c.nb_err * ds - 2.0 * w * dw;
    grad -= dg / g;
    rank1(dg, 1.0 / (g * g));
    hess.block(c.p_off, c.p_off, m.d, m.d) += (2.0 * c.nb_err / g) * Mat::Identity(m.d, m.d);
    rank1(dw, 2.0 / g);
  }

  if (m.has_intra) {
    const Vec p0 = xi.segment(m.p_offset(0), m.d);
    const Vec p1 = xi.segment(m.p_offset(1), m.d);
    const double s0 = xi[m.x_index(0)] - p0.squaredNorm();
    const double s1 = xi[m.x_index(1)] - p1.squaredNorm();
    const double w = xi[m.intra_index()] - p0.dot(p1);
    const double g = s0 * s1 - w * w;
    Vec ds0 = Vec::Zero(n), ds1 = Vec::Zero(n), dw = Vec::Zero(n);
    ds0[m.x_index(0)] = 1.0;
    ds0.segment(m.p_offset(0), m.d) = -2.0 * p0;
    ds1[m.x_index(1)] = 1.0;
    ds1.segment(m.p_offset(1), m.d) = -2.0 * p1;
    dw[m.intra_index()] = 1.0;
    dw.segment(m.p_offset(0), m.d) = -p1;
    dw.segment(m.p_offset(1), m.d) = -p0;
    const Vec dg = s1 * ds0 + s0 * ds1 - 2.0 * w * dw;
    grad -= dg / g;
    rank1(dg, 1.0 / (g * g));
    hess.block(m.p_offset(0), m.p_offset(0), m.d, m.d) += (2.0 * s1 / g) * Mat::Identity(m.d, m.d);
    hess.block(m.p_offset(1), m.p_offset(1), m.d, m.d) += (2.0 * s0 / g) * Mat::Identity(m.d, m.d);
    hess -= (ds0 * ds1.transpose() + ds1 * ds0.transpose()) / g;
    rank1(dw, 2.0 / g);
    hess.block(m.p_offset(0), m.p_offset(1), m.d, m.d) += (2.0 * w / g) * Mat::Identity(m.d, m.d);
    hess.block(m.p_offset(1), m.p_offset(0), m.d, m.d) += (2.0 * w / g) * Mat::Identity(m.d, m.d);
  }
}

// Strictly feasible start satisfying the equalities (whose right-hand sides
// carry the body gap targets): the sensor pair is pulled inside its body gap,
// the diagonals are lifted, the intra entry follows from the gap equality and
// the cross entries sit at their Gram values.
Vec strict_start(const SubproblemModel& m) {
  const int d = m.d;
  const double gap_sq = m.eq_b[0];
  const double gap_z = d == 3 ? m.eq_b[1] : 0.0;

  Vec xi = m.start;
  Vec p0 = xi.segment(m.p_offset(0), d);
  Vec p1 = xi.segment(m.p_offset(1), d);
  if (d == 3) {
    const double mid_z = 0.5 * (p0[2] + p1[2]);
    p0[2] = mid_z + 0.5 * gap_z;
    p1[2] = mid_z - 0.5 * gap_z;
  }
  Vec h = p0 - p1;
  if (d == 3) h[2] = 0.0;
  const double target_h2 = gap_sq - gap_z * gap_z;  // > 0 by the offset invariant
  if (target_h2 <= 0) throw std::runtime_error("esdp: degenerate sensor offsets");
  if (h.squaredNorm() > 0.9 * target_h2) {
    const double cur = h.norm();
    h *= cur > 1e-12 ? std::sqrt(0.9 * target_h2) / cur : 0.0;
  }
  Vec gap = h;
  if (d == 3) gap[2] = gap_z;
  const Vec mid = 0.5 * (p0 + p1);
  p0 = mid + 0.5 * gap;
  p1 = mid - 0.5 * gap;
  xi.segment(m.p_offset(0), d) = p0;
  xi.segment(m.p_offset(1), d) = p1;

  const double slack = gap_sq - gap.squaredNorm();  // >= 0.1 * target_h2
  double lift = std::max(1.0, slack);
  for (const auto& c : m.edge_cons) {
    if (c.xe_idx >= 0) {
      xi[c.xe_idx] = xi.segment(c.p_off, d).dot(c.nb_p);
    } else {
      const double w = c.xe_fixed - xi.segment(c.p_off, d).dot(c.nb_p);
      lift = std::max(lift, 2.0 * w * w / c.nb_err + 1e-3);
    }
  }
  xi[m.x_index(0)] = p0.squaredNorm() + lift;
  xi[m.x_index(1)] = p1.squaredNorm() + lift;
  xi[m.intra_index()] = 0.5 * (xi[m.x_index(0)] + xi[m.x_index(1)] - gap_sq);
  return xi;
}

Vec spd_solve_with_ridge(const Mat& a, const Vec& b) {
  double ridge = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    try {
      Mat m = a;
      if (ridge > 0) m.diagonal().array() += ridge;
      return solve_spd(m, b);
    } catch (const std::runtime_error&) {
      const double scale = std::max(a.diagonal().maxCoeff(), 1.0);
      ridge = ridge == 0.0 ? 1e-12 * scale : 10.0 * ridge;
    }
  }
  throw std::runtime_error("esdp subproblem: Newton system not positive definite");
}

}  // namespace

Vec solve_subproblem(const SubproblemModel& model, const BarrierConfig& cfg) {
  const int n_ineq = static_cast<int>(model.norm_cons.size() + model.edge_cons.size()) +
                     (model.has_intra ? 1 : 0);

  Eigen::FullPivLU<Mat> lu(model.eq_a);
  const Mat basis = lu.kernel();  // var_count x (var_count - #eq)
  const Mat hess_obj = model.objective_hessian();

  Vec xi = strict_start(model);
  {
    const auto margins = constraint_margins(model, xi);
    if (!strictly_feasible(margins))
      throw std::runtime_error("esdp subproblem: failed to construct interior start");
  }

  Vec grad_bar(model.var_count);
  Mat hess_bar(model.var_count, model.var_count);
  for (double mu = cfg.initial_weight;; mu *= cfg.decrease) {
    for (int step = 0; step < cfg.max_newton_steps; ++step) {
      barrier_derivatives(model, xi, grad_bar, hess_bar);
      const Vec grad = model.objective_gradient(xi) + mu * grad_bar;
      const Mat hess = hess_obj + mu * hess_bar;
      const Vec gy = basis.transpose() * grad;
      const Mat hy = basis.transpose() * hess * basis;
      const Vec dy = spd_solve_with_ridge(hy, -gy);
      const double decrement_sq = -gy.dot(dy);
      if (decrement_sq * 0.5 <= cfg.newton_tol) break;

      const Vec dir = basis * dy;
      const double h0 = model.objective(xi) + mu * barrier_value(constraint_margins(model, xi));
      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-16) {
        const Vec trial = xi + alpha * dir;
        const auto margins = constraint_margins(model, trial);
        if (strictly_feasible(margins)) {
          const double h = model.objective(trial) + mu * barrier_value(margins);
          if (h <= h0 - 0.25 * alpha * decrement_sq) {
            xi = trial;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (decrement_sq * 0.5 > 1e3 * cfg.newton_tol) {
          std::ostringstream msg;
          msg << "esdp subproblem: Newton stalled (robot " << model.robot << ", weight " << mu
              << ", decrement " << decrement_sq << ")";
          throw std::runtime_error(msg.str());
        }
        break;
      }
    }
    if (mu * n_ineq < cfg.outer_tol) break;
  }
  return xi;
}

void apply_block_values(EsdpState& state, const SubproblemModel& model, const Vec& xi) {
  const int d = model.d;
  state.p.col(2 * model.robot) = xi.segment(model.p_offset(0), d);
  state.p.col(2 * model.robot + 1) = xi.segment(model.p_offset(1), d);
  state.x_diag[2 * model.robot] = xi[model.x_index(0)];
  state.x_diag[2 * model.robot + 1] = xi[model.x_index(1)];
  state.x_intra[model.robot] = xi[model.intra_index()];
  for (std::size_t k = 0; k < model.xe_slots.size(); ++k)
    state.x_edge[model.xe_slots[k].first][model.xe_slots[k].second] = xi[2 * d + 3 + k];
}

double cost_G(const EsdpState& state, const ProblemInstance& inst) {
  double g = 0.0;
  auto anchor_term = [&](const Vec& a_hat, SensorIndex node, const DistanceMeasurement& m) {
    const double val = state.x_diag[node.flat()] - 2.0 * a_hat.dot(state.p.col(node.flat())) +
                       a_hat.squaredNorm();
    const double r = val - m.squared_range;
    g += weight_of(m) * r * r;
  };
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e) {
    const auto& [i, j] = inst.graph.edges[e];
    const bool ai = inst.anchors.is_anchor(i), aj = inst.anchors.is_anchor(j);
    for (int slot = 0; slot < 4; ++slot) {
      const DistanceMeasurement& m = inst.graph.edge_meas[e][slot];
      if (!ai && !aj) {
        const double val = state.x_diag[m.a.flat()] - 2.0 * state.x_edge[e][slot] +
                           state.x_diag[m.b.flat()];
        const double r = val - m.squared_range;
        g += weight_of(m) * r * r;
      } else if (ai && aj) {
        const double val =
            (inst.anchors.estimate(m.a) - inst.anchors.estimate(m.b)).squaredNorm();
        const double r = val - m.squared_range;
        g += weight_of(m) * r * r;
      } else if (ai) {
        anchor_term(inst.anchors.estimate(m.a), m.b, m);
      } else {
        anchor_term(inst.anchors.estimate(m.b), m.a, m);
      }
    }
  }
  for (const DistanceMeasurement& m : inst.anchors.edges)
    anchor_term(inst.anchors.estimate(m.a), m.b, m);
  return g;
}

double min_constraint_eig(const EsdpState& state, const ProblemInstance& inst, int robot) {
  const int d = inst.d;
  double min_eig = std::numeric_limits<double>::infinity();
  auto check_pair = [&](SensorIndex a, SensorIndex b, double cross) {
    Mat m = Mat::Identity(2 + d, 2 + d);
    m(0, 0) = state.x_diag[a.flat()];
    m(1, 1) = state.x_diag[b.flat()];
    m(0, 1) = m(1, 0) = cross;
    m.block(2, 0, d, 1) = state.p.col(a.flat());
    m.block(0, 2, 1, d) = state.p.col(a.flat()).transpose();
    m.block(2, 1, d, 1) = state.p.col(b.flat());
    m.block(1, 2, 1, d) = state.p.col(b.flat()).transpose();
    const auto [vals, vecs] = eig_sym(m);
    min_eig = std::min(min_eig, vals[vals.size() - 1]);
  };
  auto cross_of = [&](SensorIndex a, SensorIndex b, int edge, int slot) {
    const bool aa = inst.anchors.is_anchor(a.robot), ab = inst.anchors.is_anchor(b.robot);
    if (!aa && !ab) return state.x_edge[edge][slot];
    if (aa && ab)
      return inst.anchors.estimate(a).dot(inst.anchors.estimate(b));
    // eliminated anchor cross entry
    if (aa) return inst.anchors.estimate(a).dot(state.p.col(b.flat()));
    return inst.anchors.estimate(b).dot(state.p.col(a.flat()));
  };
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e) {
    const auto& [i, j] = inst.graph.edges[e];
    if (robot >= 0 && i != robot && j != robot) continue;
    for (int slot = 0; slot < 4; ++slot) {
      const DistanceMeasurement& m = inst.graph.edge_meas[e][slot];
      check_pair(m.a, m.b, cross_of(m.a, m.b, static_cast<int>(e), slot));
    }
  }
  for (int i = 0; i < inst.n; ++i) {
    if (robot >= 0 && i != robot) continue;
    check_pair({i, 0}, {i, 1}, state.x_intra[i]);
  }
  return min_eig;
}

EsdpState initial_state(const Realization& p0, const ProblemInstance& inst) {
  EsdpState state;
  state.p = p0;
  for (int k : inst.anchors.robots)
    for (int v = 0; v < 2; ++v) state.p.col(2 * k + v) = inst.anchors.estimate({k, v});
  state.x_diag.resize(2 * inst.n);
  for (int c = 0; c < 2 * inst.n; ++c) {
    const bool anchor = inst.anchors.is_anchor(c / 2);
    state.x_diag[c] = state.p.col(c).squaredNorm() + (anchor ? 0.0 : 1.0);
  }
  state.x_intra.resize(inst.n);
  for (int i = 0; i < inst.n; ++i)
    state.x_intra[i] = state.p.col(2 * i).dot(state.p.col(2 * i + 1));
  state.x_edge.resize(inst.graph.edges.size());
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e)
    for (int u = 0; u < 2; ++u)
      for (int v = 0; v < 2; ++v) {
        const auto& m = inst.graph.edge_meas[e][2 * u + v];
        state.x_edge[e][2 * u + v] = state.p.col(m.a.flat()).dot(state.p.col(m.b.flat()));
      }
  return state;
}

namespace {

class EsdpAdapter final : public BcdAdapter {
 public:
  EsdpAdapter(EsdpState& state, const ProblemInstance& inst, const EsdpConfig& cfg,
              std::vector<int> blocks, const EsdpHooks* hooks)
      : state_(state), inst_(inst), cfg_(cfg), blocks_(std::move(blocks)), hooks_(hooks) {
    p_prev_ = state_.p;
  }

  int block_count() const override { return static_cast<int>(blocks_.size()); }

  BlockUpdate compute(int block) const override {
    const int robot = blocks_[block];
    const SubproblemModel model = assemble_subproblem(state_, robot, inst_, cfg_.ownership);
    const Vec xi = solve_subproblem(model, cfg_.barrier);
    BlockUpdate up;
    up.values.assign(xi.data(), xi.data() + xi.size());
    return up;
  }

  void apply(int block, const BlockUpdate& up) override {
    const int robot = blocks_[block];
    // layout depends only on the graph and ownership, not on state values
    const SubproblemModel model = assemble_subproblem(state_, robot, inst_, cfg_.ownership);
    apply_block_values(state_, model,
                       Eigen::Map<const Vec>(up.values.data(), up.values.size()));
    if (hooks_ && hooks_->after_block) hooks_->after_block(robot);
  }

  double sweep_change() override {
    const double change = (state_.p - p_prev_).norm() / std::max(p_prev_.norm(), kTiny);
    p_prev_ = state_.p;
    return change;
  }

 private:
  EsdpState& state_;
  const ProblemInstance& inst_;
  const EsdpConfig& cfg_;
  std::vector<int> blocks_;
  const EsdpHooks* hooks_;
  Mat p_prev_;
};

}  // namespace

EsdpResult run_esdp_bcd(const ProblemInstance& inst, const EsdpConfig& cfg,
                        const Realization* p0, const EsdpHooks* hooks) {
  if (inst.anchors.empty()) throw std::invalid_argument("run_esdp_bcd: anchors required");

  Realization start;
  if (p0) {
    if (p0->rows() != inst.d || p0->cols() != 2 * inst.n)
      throw std::invalid_argument("run_esdp_bcd: initialization shape mismatch");
    start = *p0;
  } else {
    // anchors' centroid plus Gaussian scatter of scale b
    Vec centroid = Vec::Zero(inst.d);
    for (const auto& [flat, est] : inst.anchors.estimates) centroid += est;
    centroid /= double(inst.anchors.estimates.size());
    RandomStream rng(cfg.seed);
    std::vector<Pose> poses(inst.n);
    for (int i = 0; i < inst.n; ++i) {
      poses[i].t = centroid;
      if (inst.anchors.is_anchor(i)) continue;  // overwritten by estimates anyway
      Vec scatter(inst.d);
      for (int c = 0; c < inst.d; ++c) scatter[c] = rng.gauss();
      poses[i].t = centroid + inst.spacing * scatter;
      poses[i].yaw = rng.uniform(0.0, 2.0 * kPi);
      if (inst.d == 3) {
        poses[i].pitch = inst.priors[i].pitch;
        poses[i].roll = inst.priors[i].roll;
      }
    }
    start = poses_to_realization(poses, inst.offsets, inst.priors, inst.d);
  }

  EsdpState state = initial_state(start, inst);

  std::vector<int> blocks;
  for (int i = 0; i < inst.n; ++i)
    if (!inst.anchors.is_anchor(i)) blocks.push_back(i);

  DependencyGraph dep;
  dep.count = static_cast<int>(blocks.size());
  {
    std::vector<int> block_of(inst.n, -1);
    for (std::size_t k = 0; k < blocks.size(); ++k) block_of[blocks[k]] = static_cast<int>(k);
    for (const auto& [i, j] : inst.graph.edges)
      if (block_of[i] >= 0 && block_of[j] >= 0) dep.edges.emplace_back(block_of[i], block_of[j]);
  }
  const ColorClasses colors = greedy_coloring(dep);

  EsdpResult result;
  EsdpAdapter adapter(state, inst, cfg, blocks, hooks);
  BcdOptions opts;
  opts.tol_change = cfg.tol_change;
  opts.max_sweeps = cfg.max_sweeps;
  opts.schedule = cfg.schedule;
  RoundStats esdp_phase;
  if (!blocks.empty()) esdp_phase = run_bcd(adapter, colors, opts);
  else esdp_phase.converged = true;  // fully anchored: nothing to optimize

  result.p_esdp = state.p;
  result.final_g = cost_G(state, inst);
  result.k_esdp = esdp_phase.iterations;
  result.stats.add_phase("esdp", esdp_phase);

  bm::BmConfig refine = cfg.refine;
  if (refine.rank == 0) refine.rank = inst.d + 1;
  const bm::BmResult bres = bm::run_bm_bcd(inst, result.p_esdp, refine);
  for (const auto& ph : bres.stats.phases) {
    RoundStats tmp;
    tmp.iterations = ph.iterations;
    tmp.comm_rounds = ph.comm_rounds;
    tmp.st = ph.st;
    tmp.pt = ph.pt;
    result.stats.add_phase("bm_" + ph.name, tmp);
  }
  result.k_refine = bres.stats.iterations;
  result.p = bres.p;
  result.poses = bres.poses;
  result.converged = esdp_phase.converged && bres.converged;
  result.stats.converged = result.converged;
  result.stats.final_objective = result.final_g;
  return result;
}

}  // namespace rsnl::esdp

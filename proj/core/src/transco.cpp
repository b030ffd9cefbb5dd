#include "gridclear/transco.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <Eigen/Cholesky>

namespace gridclear {

namespace {

constexpr double kPi = std::numbers::pi;

/// Angle maximization in a coordinate block: some coordinates pinned to zero,
/// edges between local coordinates, optional proximal augmentation. Shared by
/// the per-region subproblem and the joint reference solve.
struct AngleBlock {
  int dim = 0;                     // local coordinates
  std::vector<char> pinned;        // per local coordinate
  std::vector<Line> edges;         // endpoints are local coordinate indices
  Vector price;                    // per local coordinate
};

struct Constraint {
  enum class Kind { flow_forward, flow_reverse, angle_upper, angle_lower, box_upper, box_lower };
  Kind kind;
  int edge = -1;  // for edge constraints
  int coord = -1; // for box constraints
};

double delta_of(const AngleBlock& block, const Vector& theta, int edge) {
  const Line& l = block.edges[edge];
  return theta[l.from] - theta[l.to];
}

/// Constraint value c(theta) <= 0 form.
double constraint_value(const AngleBlock& block, const Constraint& c, const Vector& theta) {
  switch (c.kind) {
    case Constraint::Kind::flow_forward: {
      const Line& l = block.edges[c.edge];
      const double d = delta_of(block, theta, c.edge);
      return l.susceptance * d + 0.5 * l.conductance * d * d - l.limit;
    }
    case Constraint::Kind::flow_reverse: {
      const Line& l = block.edges[c.edge];
      const double d = delta_of(block, theta, c.edge);
      return -l.susceptance * d + 0.5 * l.conductance * d * d - l.limit;
    }
    case Constraint::Kind::angle_upper:
      return delta_of(block, theta, c.edge) - block.edges[c.edge].angle_max;
    case Constraint::Kind::angle_lower:
      return block.edges[c.edge].angle_min - delta_of(block, theta, c.edge);
    case Constraint::Kind::box_upper:
      return theta[c.coord] - kPi;
    case Constraint::Kind::box_lower:
      return -kPi - theta[c.coord];
  }
  return 0.0;
}

/// d c / d delta for edge constraints; box constraints handled separately.
double constraint_ddelta(const AngleBlock& block, const Constraint& c, double delta) {
  const Line& l = c.edge >= 0 ? block.edges[c.edge] : Line{};
  switch (c.kind) {
    case Constraint::Kind::flow_forward:
      return l.susceptance + l.conductance * delta;
    case Constraint::Kind::flow_reverse:
      return -l.susceptance + l.conductance * delta;
    case Constraint::Kind::angle_upper:
      return 1.0;
    case Constraint::Kind::angle_lower:
      return -1.0;
    default:
      return 0.0;
  }
}

double constraint_d2delta(const AngleBlock& block, const Constraint& c) {
  switch (c.kind) {
    case Constraint::Kind::flow_forward:
    case Constraint::Kind::flow_reverse:
      return block.edges[c.edge].conductance;
    default:
      return 0.0;
  }
}

std::vector<Constraint> build_constraints(const AngleBlock& block) {
  std::vector<Constraint> cs;
  for (int e = 0; e < static_cast<int>(block.edges.size()); ++e) {
    const Line& l = block.edges[e];
    if (block.pinned[l.from] && block.pinned[l.to]) continue;  // constant, feasible since K > 0
    cs.push_back({Constraint::Kind::flow_forward, e, -1});
    cs.push_back({Constraint::Kind::flow_reverse, e, -1});
    cs.push_back({Constraint::Kind::angle_upper, e, -1});
    cs.push_back({Constraint::Kind::angle_lower, e, -1});
  }
  for (int i = 0; i < block.dim; ++i) {
    if (block.pinned[i]) continue;
    cs.push_back({Constraint::Kind::box_upper, -1, i});
    cs.push_back({Constraint::Kind::box_lower, -1, i});
  }
  return cs;
}

/// Surplus value/gradient/Hessian in local coordinates. The Hessian is the
/// negated weighted Laplacian with weights (lambda_n + lambda_m) G.
double surplus_value(const AngleBlock& block, const Vector& theta) {
  double value = 0.0;
  for (const Line& l : block.edges) {
    const double d = theta[l.from] - theta[l.to];
    const double tilt = (block.price[l.to] - block.price[l.from]) * l.susceptance;
    const double weight = (block.price[l.from] + block.price[l.to]) * l.conductance;
    value += tilt * d - 0.5 * weight * d * d;
  }
  return value;
}

void surplus_gradient(const AngleBlock& block, const Vector& theta, Vector& grad) {
  grad.setZero();
  for (const Line& l : block.edges) {
    const double d = theta[l.from] - theta[l.to];
    const double tilt = (block.price[l.to] - block.price[l.from]) * l.susceptance;
    const double weight = (block.price[l.from] + block.price[l.to]) * l.conductance;
    const double g = tilt - weight * d;
    grad[l.from] += g;
    grad[l.to] -= g;
  }
}

void surplus_hessian_local(const AngleBlock& block, Matrix& hess) {
  hess.setZero();
  for (const Line& l : block.edges) {
    const double weight = (block.price[l.from] + block.price[l.to]) * l.conductance;
    hess(l.from, l.from) -= weight;
    hess(l.to, l.to) -= weight;
    hess(l.from, l.to) += weight;
    hess(l.to, l.from) += weight;
  }
}

struct BarrierWork {
  std::vector<int> free_of_local;   // local -> free index or -1
  std::vector<int> local_of_free;
  std::vector<Constraint> constraints;
};

BarrierWork plan(const AngleBlock& block) {
  BarrierWork w;
  w.free_of_local.assign(block.dim, -1);
  for (int i = 0; i < block.dim; ++i) {
    if (block.pinned[i]) continue;
    w.free_of_local[i] = static_cast<int>(w.local_of_free.size());
    w.local_of_free.push_back(i);
  }
  w.constraints = build_constraints(block);
  return w;
}

Vector assemble_theta(const AngleBlock& block, const BarrierWork& w, const Vector& x) {
  Vector theta = Vector::Zero(block.dim);
  for (std::size_t f = 0; f < w.local_of_free.size(); ++f) theta[w.local_of_free[f]] = x[f];
  return theta;
}

double min_slack(const AngleBlock& block, const BarrierWork& w, const Vector& theta) {
  double slack = std::numeric_limits<double>::infinity();
  for (const Constraint& c : w.constraints)
    slack = std::min(slack, -constraint_value(block, c, theta));
  return slack;
}

/// Value/gradient/Hessian of the barrier objective in free coordinates:
///   surplus + augmentation + mu * sum log(-c).
/// Returns -inf when infeasible.
double barrier_eval(const AngleBlock& block, const BarrierWork& w, const Vector* z,
                    const Vector* y, double rho, double mu, const Vector& x, Vector* grad,
                    Matrix* hess) {
  const int n = static_cast<int>(w.local_of_free.size());
  const Vector theta = assemble_theta(block, w, x);

  double value = surplus_value(block, theta);
  Vector grad_local(block.dim);
  Matrix hess_local;
  if (grad != nullptr) surplus_gradient(block, theta, grad_local);
  if (hess != nullptr) {
    hess_local.resize(block.dim, block.dim);
    surplus_hessian_local(block, hess_local);
  }

  if (z != nullptr) {
    for (int i = 0; i < block.dim; ++i) {
      const double dev = theta[i] - (*z)[i];
      value -= (*y)[i] * dev + 0.5 * rho * dev * dev;
      if (grad != nullptr) grad_local[i] -= (*y)[i] + rho * dev;
      if (hess != nullptr) hess_local(i, i) -= rho;
    }
  }

  if (grad != nullptr) {
    grad->resize(n);
    for (int f = 0; f < n; ++f) (*grad)[f] = grad_local[w.local_of_free[f]];
  }
  if (hess != nullptr) {
    hess->resize(n, n);
    for (int fi = 0; fi < n; ++fi)
      for (int fj = 0; fj < n; ++fj)
        (*hess)(fi, fj) = hess_local(w.local_of_free[fi], w.local_of_free[fj]);
  }

  for (const Constraint& c : w.constraints) {
    const double cv = constraint_value(block, c, theta);
    if (cv >= 0.0) return -std::numeric_limits<double>::infinity();
    const double slack = -cv;
    value += mu * std::log(slack);
    if (grad == nullptr && hess == nullptr) continue;

    // Map the constraint gradient into free coordinates (at most two entries).
    int idx_a = -1, idx_b = -1;
    double ga = 0.0, gb = 0.0;
    double curv = 0.0;  // d2 c / d delta2 (edge constraints only)
    if (c.coord >= 0) {
      idx_a = w.free_of_local[c.coord];
      ga = c.kind == Constraint::Kind::box_upper ? 1.0 : -1.0;
    } else {
      const Line& l = block.edges[c.edge];
      const double dc = constraint_ddelta(block, c, delta_of(block, theta, c.edge));
      curv = constraint_d2delta(block, c);
      idx_a = w.free_of_local[l.from];
      idx_b = w.free_of_local[l.to];
      ga = dc;
      gb = -dc;
    }

    const double gfac = mu / slack;        // multiplier estimate
    const double hfac = mu / (slack * slack);
    if (grad != nullptr) {
      if (idx_a >= 0) (*grad)[idx_a] -= gfac * ga;
      if (idx_b >= 0) (*grad)[idx_b] -= gfac * gb;
    }
    if (hess != nullptr) {
      // -mu * (c'' / s + (c' c'^T) / s^2), with c'' having Laplacian pattern.
      if (curv != 0.0) {
        const double cc = gfac * curv;
        if (idx_a >= 0) (*hess)(idx_a, idx_a) -= cc;
        if (idx_b >= 0) (*hess)(idx_b, idx_b) -= cc;
        if (idx_a >= 0 && idx_b >= 0) {
          (*hess)(idx_a, idx_b) += cc;
          (*hess)(idx_b, idx_a) += cc;
        }
      }
      if (idx_a >= 0) (*hess)(idx_a, idx_a) -= hfac * ga * ga;
      if (idx_b >= 0) (*hess)(idx_b, idx_b) -= hfac * gb * gb;
      if (idx_a >= 0 && idx_b >= 0) {
        (*hess)(idx_a, idx_b) -= hfac * ga * gb;
        (*hess)(idx_b, idx_a) -= hfac * ga * gb;
      }
    }
  }
  return value;
}

SubproblemResult maximize_block(const AngleBlock& block, const Vector* z, const Vector* y,
                                double rho, const SubproblemConfig& cfg) {
  SubproblemResult result;
  const BarrierWork w = plan(block);
  const int n = static_cast<int>(w.local_of_free.size());
  if (n == 0) {
    result.theta = Vector::Zero(block.dim);
    result.converged = true;
    return result;
  }

  // Start at z clamped into the box (design: proximal center is usually
  // feasible); fall back to the origin, interior whenever limits are strict.
  Vector x = Vector::Zero(n);
  if (z != nullptr) {
    for (int f = 0; f < n; ++f)
      x[f] = std::clamp((*z)[w.local_of_free[f]], -kPi + 1e-9, kPi - 1e-9);
    if (min_slack(block, w, assemble_theta(block, w, x)) <= 1e-12) x.setZero();
  }
  if (min_slack(block, w, assemble_theta(block, w, x)) <= 0.0) {
    result.theta = assemble_theta(block, w, x);
    result.message = "no strictly feasible interior point for barrier initialization";
    return result;
  }

  Vector grad(n), xt(n);
  Matrix hess(n, n);
  double mu = cfg.initial_barrier_weight;
  bool last_stage = false;
  while (true) {
    last_stage = mu <= cfg.barrier_floor;
    const double stage_tol = last_stage ? cfg.inner_tolerance : std::max(cfg.inner_tolerance, 1e-2 * mu);

    int iters = 0;
    while (true) {
      double value = barrier_eval(block, w, z, y, rho, mu, x, &grad, &hess);
      result.grad_norm = grad.norm();
      if (result.grad_norm <= stage_tol) break;
      if (++iters > cfg.max_newton_iters) {
        result.theta = assemble_theta(block, w, x);
        result.newton_iters += iters;
        result.complementarity = mu;
        result.message = "newton did not reach tolerance " + std::to_string(stage_tol) +
                         " at barrier weight " + std::to_string(mu) + "; gradient norm " +
                         std::to_string(result.grad_norm);
        return result;
      }

      // Newton direction for a concave model: d = (-H)^{-1} g, with an
      // escalating ridge if the factorization is not positive definite.
      Matrix neg_h = -hess;
      double ridge = 0.0;
      Eigen::LLT<Matrix> llt(neg_h);
      while (llt.info() != Eigen::Success) {
        ridge = ridge == 0.0 ? 1e-10 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
        llt.compute(neg_h + ridge * Matrix::Identity(n, n));
        if (ridge > 1e12) break;
      }
      Vector dir = llt.info() == Eigen::Success ? llt.solve(grad).eval() : grad;

      const double slope = grad.dot(dir);
      double step = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        xt = x + step * dir;
        const double trial = barrier_eval(block, w, z, y, rho, mu, xt, nullptr, nullptr);
        if (std::isfinite(trial) && trial >= value + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // stalled; stage tolerance check will report
      x = xt;
    }
    result.newton_iters += iters;
    if (last_stage) break;
    mu *= cfg.barrier_decrease;
  }

  result.theta = assemble_theta(block, w, x);
  result.converged = result.grad_norm <= cfg.inner_tolerance;
  result.complementarity = mu;
  if (!result.converged)
    result.message = "final stage stalled at gradient norm " + std::to_string(result.grad_norm);
  return result;
}

AngleBlock region_block(const TransCo& t, const PriceVector& lambda) {
  AngleBlock block;
  block.dim = t.region_size();
  block.pinned.assign(block.dim, 0);
  block.price.resize(block.dim);
  const auto& region = t.region_buses();
  for (int i = 0; i < block.dim; ++i) {
    block.price[i] = lambda[region[i]];
    if (region[i] == t.slack_bus()) block.pinned[i] = 1;
  }
  block.edges.reserve(t.edges().size());
  for (const Line& l : t.edges()) {
    Line local = l;
    local.from = t.region_index(l.from);
    local.to = t.region_index(l.to);
    block.edges.push_back(local);
  }
  return block;
}

void require_assumption4(const std::vector<Line>& edges, const AngleBlock& block,
                         const std::string& owner) {
  std::vector<int> bad;
  for (std::size_t e = 0; e < block.edges.size(); ++e) {
    const Line& l = block.edges[e];
    if (!(block.price[l.from] + block.price[l.to] > 0.0)) bad.push_back(static_cast<int>(e));
  }
  if (!bad.empty()) {
    std::string msg = owner + ": edge-wise price sums must be strictly positive; violating edges:";
    for (int e : bad)
      msg += " (" + std::to_string(edges[e].from) + "," + std::to_string(edges[e].to) + ")";
    throw PriceSumViolation(msg, bad);
  }
}

}  // namespace

TransCo TransCo::build(const Network& net, std::string id, const std::vector<int>& line_indices) {
  std::vector<ValidationIssue> issues;
  if (line_indices.empty()) issues.push_back({"empty_transco", "transco " + id + " owns no lines"});

  TransCo t;
  t.id_ = std::move(id);
  std::set<int> region;
  std::set<int> used;
  for (int li : line_indices) {
    if (li < 0 || li >= static_cast<int>(net.lines().size())) {
      issues.push_back({"unknown_line", "transco " + t.id_ + ": line index " + std::to_string(li)});
      continue;
    }
    if (!used.insert(li).second) {
      issues.push_back({"duplicate_line", "transco " + t.id_ + ": line index " + std::to_string(li) +
                                              " listed twice"});
      continue;
    }
    t.edges_.push_back(net.lines()[li]);
    region.insert(net.lines()[li].from);
    region.insert(net.lines()[li].to);
  }
  t.region_.assign(region.begin(), region.end());

  int slack_count = 0;
  for (int b : t.region_) {
    if (net.is_slack(b)) {
      ++slack_count;
      t.slack_bus_ = b;
    }
  }
  if (slack_count != 1)
    issues.push_back({slack_count == 0 ? "missing_slack_in_region" : "multiple_slack_in_region",
                      "transco " + t.id_ + " region must contain exactly one slack bus, found " +
                          std::to_string(slack_count)});

  if (!issues.empty()) throw ValidationError(std::move(issues));
  return t;
}

int TransCo::region_index(int bus) const {
  const auto it = std::lower_bound(region_.begin(), region_.end(), bus);
  if (it == region_.end() || *it != bus) return -1;
  return static_cast<int>(it - region_.begin());
}

double merch_surplus(const TransCo& t, const Vector& theta_region, const PriceVector& lambda) {
  if (theta_region.size() != t.region_size())
    throw std::invalid_argument("theta profile does not match region size");
  double sum = 0.0;
  // Literal directed sum over both orientations, halved.
  for (const Line& l : t.edges()) {
    const double theta_n = theta_region[t.region_index(l.from)];
    const double theta_m = theta_region[t.region_index(l.to)];
    const double ln = lambda[l.from];
    const double lm = lambda[l.to];
    sum += (lm - ln) * dc_component(l, theta_n, theta_m) -
           (ln + lm) * loss_component(l, theta_n, theta_m);
    sum += (ln - lm) * dc_component(l, theta_m, theta_n) -
           (lm + ln) * loss_component(l, theta_m, theta_n);
  }
  return 0.5 * sum;
}

double total_merch_surplus(const Network& net, const std::vector<TransCo>& transcos,
                           const OperatingPoint& point, const PriceVector& lambda) {
  const double direct = -lambda.dot(injections(net, point));
  double partition = 0.0;
  for (const TransCo& t : transcos) {
    Vector theta_region(t.region_size());
    for (int i = 0; i < t.region_size(); ++i) theta_region[i] = point.theta[t.region_buses()[i]];
    partition += merch_surplus(t, theta_region, lambda);
  }
  if (std::abs(direct - partition) > 1e-8 * (1.0 + std::abs(direct)))
    throw std::logic_error("merchandizing-surplus partition does not cover the line set: " +
                           std::to_string(direct) + " vs " + std::to_string(partition));
  return direct;
}

double augmented_objective(const TransCo& t, const Vector& theta_region, const Vector& z_region,
                           const Vector& y_region, double rho, const PriceVector& lambda) {
  const Vector dev = theta_region - z_region;
  return merch_surplus(t, theta_region, lambda) - y_region.dot(dev) - 0.5 * rho * dev.squaredNorm();
}

SubproblemResult solve_subproblem(const TransCo& t, const Vector& z_region,
                                  const Vector& y_region, double rho, const PriceVector& lambda,
                                  const SubproblemConfig& cfg) {
  AngleBlock block = region_block(t, lambda);
  require_assumption4(t.edges(), block, "transco " + t.id());
  return maximize_block(block, &z_region, &y_region, rho, cfg);
}

Matrix surplus_hessian(const TransCo& t, const PriceVector& lambda) {
  const AngleBlock block = region_block(t, lambda);
  Matrix full(block.dim, block.dim);
  surplus_hessian_local(block, full);

  const int slack_local = t.region_index(t.slack_bus());
  const int n = block.dim - 1;
  Matrix reduced(n, n);
  for (int i = 0, ri = 0; i < block.dim; ++i) {
    if (i == slack_local) continue;
    for (int j = 0, rj = 0; j < block.dim; ++j) {
      if (j == slack_local) continue;
      reduced(ri, rj) = full(i, j);
      ++rj;
    }
    ++ri;
  }
  return reduced;
}

std::vector<int> check_assumption4(const Network& net, const PriceVector& lambda) {
  std::vector<int> violations;
  for (std::size_t li = 0; li < net.lines().size(); ++li) {
    const Line& l = net.lines()[li];
    if (!(lambda[l.from] + lambda[l.to] > 0.0)) violations.push_back(static_cast<int>(li));
  }
  return violations;
}

SubproblemResult solve_monolithic(const Network& net, const PriceVector& lambda,
                                  const SubproblemConfig& cfg) {
  AngleBlock block;
  block.dim = net.bus_count();
  block.pinned.assign(block.dim, 0);
  for (int s : net.slack_set()) block.pinned[s] = 1;
  block.price = lambda;
  block.edges = net.lines();
  require_assumption4(net.lines(), block, "network");
  return maximize_block(block, nullptr, nullptr, 0.0, cfg);
}

}  // namespace gridclear

#include "gridclear/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gridclear {

namespace {

constexpr double kPi = std::numbers::pi;

struct Interval {
  double lo = -kPi;
  double hi = kPi;

  bool empty() const { return lo > hi; }
};

Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

/// Feasible range for theta_from - theta_to on one line: angle bounds
/// intersected with both directional flow sublevel sets (quadratics in the
/// difference, each an interval because G > 0).
Interval delta_interval(const Line& l) {
  Interval range{l.angle_min, l.angle_max};
  const double disc = std::sqrt(l.susceptance * l.susceptance + 2.0 * l.conductance * l.limit);
  range = intersect(range, {(-l.susceptance - disc) / l.conductance,
                            (-l.susceptance + disc) / l.conductance});
  range = intersect(range, {(l.susceptance - disc) / l.conductance,
                            (l.susceptance + disc) / l.conductance});
  return range;
}

/// Per-bus angle ranges by constraint propagation from the slack pins;
/// necessary (not tight) bounds that keep the grid small.
std::vector<Interval> bus_ranges(const Network& net) {
  std::vector<Interval> range(net.bus_count(), Interval{-kPi, kPi});
  for (int s : net.slack_set()) range[s] = {0.0, 0.0};
  for (int pass = 0; pass < net.bus_count(); ++pass) {
    bool changed = false;
    for (const Line& l : net.lines()) {
      const Interval d = delta_interval(l);
      const Interval from_via{range[l.to].lo + d.lo, range[l.to].hi + d.hi};
      const Interval to_via{range[l.from].lo - d.hi, range[l.from].hi - d.lo};
      const Interval nf = intersect(range[l.from], from_via);
      const Interval nt = intersect(range[l.to], to_via);
      if (nf.lo != range[l.from].lo || nf.hi != range[l.from].hi) {
        range[l.from] = nf;
        changed = true;
      }
      if (nt.lo != range[l.to].lo || nt.hi != range[l.to].hi) {
        range[l.to] = nt;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return range;
}

bool point_feasible(const Network& net, const Vector& theta) {
  for (const Line& l : net.lines()) {
    const double d = theta[l.from] - theta[l.to];
    if (d < l.angle_min || d > l.angle_max) return false;
    if (flow(l, theta[l.from], theta[l.to]) > l.limit) return false;
    if (flow(l, theta[l.to], theta[l.from]) > l.limit) return false;
  }
  for (int b = 0; b < net.bus_count(); ++b)
    if (std::abs(theta[b]) > kPi) return false;
  return true;
}

struct BusUnits {
  std::vector<const ElasticLoadUnit*> elastic;
  std::vector<const GenerationUnit*> generation;
  double inelastic = 0.0;
  double supply_min = 0.0;  // sum p_min - sum e_max
  double supply_max = 0.0;  // sum p_max - sum e_min
  double price_lo = 0.0;    // bracket for the shadow-price bisection
  double price_hi = 0.0;
};

std::vector<BusUnits> group_units(const System& sys) {
  std::vector<BusUnits> buses(sys.bus_count());
  for (const DistCo& d : sys.distcos) {
    for (const ElasticLoadUnit& u : d.elastic) buses[u.bus].elastic.push_back(&u);
    for (const InelasticLoadUnit& u : d.inelastic) buses[u.bus].inelastic += u.demand;
  }
  for (const GenCo& g : sys.gencos)
    for (const GenerationUnit& u : g.units) buses[u.bus].generation.push_back(&u);

  for (BusUnits& b : buses) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const GenerationUnit* u : b.generation) {
      b.supply_min += u->min_output;
      b.supply_max += u->max_output;
      lo = std::min(lo, u->cost.marginal(u->min_output));
      hi = std::max(hi, u->cost.marginal(u->max_output));
    }
    for (const ElasticLoadUnit* u : b.elastic) {
      b.supply_min -= u->max_level;
      b.supply_max -= u->min_level;
      lo = std::min(lo, u->utility.marginal(u->max_level));
      hi = std::max(hi, u->utility.marginal(u->min_level));
    }
    if (!b.elastic.empty() || !b.generation.empty()) {
      b.price_lo = lo - 1.0;
      b.price_hi = hi + 1.0;
    }
  }
  return buses;
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

/// Net supply at a bus when every unit equalizes its marginal to nu.
double bus_supply(const BusUnits& bus, double nu) {
  double supply = 0.0;
  for (const GenerationUnit* u : bus.generation)
    supply += clamp((nu - u->cost.linear) / u->cost.curvature, u->min_output, u->max_output);
  for (const ElasticLoadUnit* u : bus.elastic)
    supply -= clamp((u->utility.linear - nu) / u->utility.curvature, u->min_level, u->max_level);
  return supply;
}

struct BusAllocation {
  bool feasible = false;
  double welfare = 0.0;
  double nu = 0.0;
};

/// Welfare-maximizing split of required net supply w across the bus's units:
/// separable concave allocation solved by bisection on the shared marginal.
BusAllocation allocate_bus(const BusUnits& bus, double w, double tol, int max_iters) {
  BusAllocation out;
  if (bus.elastic.empty() && bus.generation.empty()) return out;  // caller handles
  if (w < bus.supply_min - tol || w > bus.supply_max + tol) return out;

  double lo = bus.price_lo, hi = bus.price_hi;
  for (int i = 0; i < max_iters && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (bus_supply(bus, mid) < w)
      lo = mid;
    else
      hi = mid;
  }
  out.nu = 0.5 * (lo + hi);
  out.feasible = std::abs(bus_supply(bus, out.nu) - w) <= std::max(tol, 1e-9);
  for (const GenerationUnit* u : bus.generation) {
    const double p = clamp((out.nu - u->cost.linear) / u->cost.curvature, u->min_output, u->max_output);
    out.welfare -= u->cost.value(p);
  }
  for (const ElasticLoadUnit* u : bus.elastic) {
    const double e =
        clamp((u->utility.linear - out.nu) / u->utility.curvature, u->min_level, u->max_level);
    out.welfare += u->utility.value(e);
  }
  return out;
}

struct GridSpec {
  std::vector<int> free_buses;
  std::vector<double> origin;
  std::vector<double> step;
  std::vector<int> count;

  std::size_t total() const {
    std::size_t n = 1;
    for (int c : count) n *= static_cast<std::size_t>(c);
    return n;
  }
};

GridSpec make_grid(const std::vector<int>& free_buses, const std::vector<Interval>& ranges,
                   double resolution) {
  GridSpec grid;
  grid.free_buses = free_buses;
  for (int b : free_buses) {
    const Interval r = ranges[b];
    const double width = std::max(0.0, r.hi - r.lo);
    const int count = static_cast<int>(std::floor(width / resolution)) + 1;
    grid.origin.push_back(r.lo);
    grid.step.push_back(count > 1 ? width / (count - 1) : 0.0);
    grid.count.push_back(count);
  }
  return grid;
}

struct Incumbent {
  bool found = false;
  double welfare = -std::numeric_limits<double>::infinity();
  Vector theta;
  std::vector<double> nu;  // per bus shadow price (only meaningful with units)
};

void sweep(const System& sys, const std::vector<BusUnits>& buses, const GridSpec& grid,
           double alloc_tol, int bisect_iters, double unitless_tol, Incumbent& best) {
  const int dims = static_cast<int>(grid.free_buses.size());
  const int n = sys.bus_count();
  std::vector<int> idx(dims, 0);
  Vector theta = Vector::Zero(n);
  std::vector<double> nu(n, 0.0);

  bool done = false;
  while (!done) {
    for (int d = 0; d < dims; ++d)
      theta[grid.free_buses[d]] = grid.origin[d] + grid.step[d] * idx[d];

    if (point_feasible(sys.network, theta)) {
      double welfare = 0.0;
      bool feasible = true;
      for (int b = 0; b < n && feasible; ++b) {
        const double w = bus_injection(sys.network, {theta}, b) + buses[b].inelastic;
        if (buses[b].elastic.empty() && buses[b].generation.empty()) {
          if (std::abs(w) > unitless_tol) feasible = false;
          continue;
        }
        const BusAllocation alloc = allocate_bus(buses[b], w, alloc_tol, bisect_iters);
        if (!alloc.feasible) {
          feasible = false;
          break;
        }
        welfare += alloc.welfare;
        nu[b] = alloc.nu;
      }
      // Strict improvement keeps the lexicographically first maximizer.
      if (feasible && welfare > best.welfare) {
        best.found = true;
        best.welfare = welfare;
        best.theta = theta;
        best.nu = nu;
      }
    }

    done = true;
    for (int d = dims - 1; d >= 0; --d) {
      if (++idx[d] < grid.count[d]) {
        done = false;
        break;
      }
      idx[d] = 0;
    }
    if (dims == 0) break;
  }
}

double unitless_balance_tol(const System& sys, double resolution) {
  // A zero-injection bus can only balance up to the grid's angular slop;
  // admit |f_n + s_n| below the local flow Lipschitz constant times one step.
  double lipschitz = 0.0;
  for (const Line& l : sys.network.lines())
    lipschitz = std::max(lipschitz, l.susceptance + l.conductance * (2.0 * kPi));
  return 4.0 * lipschitz * resolution;
}

}  // namespace

OracleSolution centralized_solve_small(const System& sys, const OracleConfig& cfg) {
  OracleSolution out;
  std::vector<int> free_buses;
  for (int b = 0; b < sys.bus_count(); ++b)
    if (!sys.network.is_slack(b)) free_buses.push_back(b);
  if (free_buses.size() > 3)
    throw std::invalid_argument("centralized oracle supports at most 3 non-slack buses, got " +
                                std::to_string(free_buses.size()));

  const std::vector<Interval> ranges = bus_ranges(sys.network);
  for (const Interval& r : ranges)
    if (r.empty()) {
      out.message = "angle ranges are inconsistent; the case is infeasible";
      return out;
    }

  const std::vector<BusUnits> buses = group_units(sys);
  const double alloc_tol = cfg.bus_alloc_tolerance_mw / sys.base_mva;

  GridSpec coarse = make_grid(free_buses, ranges, cfg.coarse_resolution);
  if (coarse.total() > cfg.max_grid_points)
    throw std::invalid_argument("coarse grid would need " + std::to_string(coarse.total()) +
                                " points; raise the resolution");
  out.coarse_points = coarse.total();

  Incumbent best;
  sweep(sys, buses, coarse, alloc_tol, cfg.bisection_max_iters,
        unitless_balance_tol(sys, cfg.coarse_resolution), best);
  if (!best.found) {
    out.message = "no feasible grid point at resolution " + std::to_string(cfg.coarse_resolution) +
                  "; the case is infeasible or the grid is too coarse";
    return out;
  }

  // Second pass: a fine window one coarse step wide around the incumbent.
  std::vector<Interval> window(sys.bus_count(), Interval{0.0, 0.0});
  for (std::size_t d = 0; d < free_buses.size(); ++d) {
    const int b = free_buses[d];
    window[b] = intersect(ranges[b], {best.theta[b] - cfg.coarse_resolution,
                                      best.theta[b] + cfg.coarse_resolution});
  }
  GridSpec fine = make_grid(free_buses, window, cfg.fine_resolution);
  if (fine.total() <= cfg.max_grid_points) {
    out.refined_points = fine.total();
    sweep(sys, buses, fine, alloc_tol, cfg.bisection_max_iters,
          unitless_balance_tol(sys, cfg.fine_resolution), best);
  }

  out.feasible_found = true;
  out.welfare = best.welfare;
  out.theta = OperatingPoint{best.theta};

  // Per-unit levels from each bus's equalized marginal.
  out.elastic_levels.reserve(sys.distcos.size());
  for (const DistCo& d : sys.distcos) {
    std::vector<double> levels;
    levels.reserve(d.elastic.size());
    for (const ElasticLoadUnit& u : d.elastic)
      levels.push_back(clamp((u.utility.linear - best.nu[u.bus]) / u.utility.curvature,
                             u.min_level, u.max_level));
    out.elastic_levels.push_back(std::move(levels));
  }
  out.generation_levels.reserve(sys.gencos.size());
  for (const GenCo& g : sys.gencos) {
    std::vector<double> levels;
    levels.reserve(g.units.size());
    for (const GenerationUnit& u : g.units)
      levels.push_back(
          clamp((best.nu[u.bus] - u.cost.linear) / u.cost.curvature, u.min_output, u.max_output));
    out.generation_levels.push_back(std::move(levels));
  }
  return out;
}

Vector finite_diff_dual_gradient(const System& sys, const PriceVector& lambda, double delta,
                                 const ConsensusConfig& consensus_cfg,
                                 const SubproblemConfig& solver_cfg) {
  auto phi = [&](const PriceVector& at) {
    const ExchangeResult exchange =
        run_message_exchange(sys.transcos, sys.bus_count(), at, consensus_cfg, solver_cfg);
    std::vector<std::vector<double>> e_levels, p_levels;
    e_levels.reserve(sys.distcos.size());
    for (const DistCo& d : sys.distcos) e_levels.push_back(distco_response(d, at));
    p_levels.reserve(sys.gencos.size());
    for (const GenCo& g : sys.gencos) p_levels.push_back(genco_response(g, at));
    return dual_value(sys, e_levels, p_levels, exchange.theta, at);
  };

  Vector grad(sys.bus_count());
  for (int b = 0; b < sys.bus_count(); ++b) {
    PriceVector up = lambda, down = lambda;
    up[b] += delta;
    down[b] -= delta;
    grad[b] = (phi(up) - phi(down)) / (2.0 * delta);
  }
  return grad;
}

Matrix finite_diff_hessian(const std::function<double(const Vector&)>& objective,
                           const Vector& at, double delta) {
  const int n = static_cast<int>(at.size());
  Matrix hess(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Vector pp = at, pm = at, mp = at, mm = at;
      pp[i] += delta;
      pp[j] += delta;
      pm[i] += delta;
      pm[j] -= delta;
      mp[i] -= delta;
      mp[j] += delta;
      mm[i] -= delta;
      mm[j] -= delta;
      const double value =
          (objective(pp) - objective(pm) - objective(mp) + objective(mm)) / (4.0 * delta * delta);
      hess(i, j) = value;
      hess(j, i) = value;
    }
  }
  return hess;
}

}  // namespace gridclear

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gridclear/consensus.hpp"
#include "gridclear/market_operator.hpp"
#include "gridclear/system.hpp"
#include "gridclear/types.hpp"

namespace gridclear {

struct OracleConfig {
  double coarse_resolution = 1e-3;   // radians per grid step, first pass
  double fine_resolution = 1e-5;     // second pass around the incumbent
  double bus_alloc_tolerance_mw = 1e-9;
  int bisection_max_iters = 60;
  std::size_t max_grid_points = 40000000;
};

struct OracleSolution {
  bool feasible_found = false;
  OperatingPoint theta;
  std::vector<std::vector<double>> elastic_levels;     // per DistCo, unit order
  std::vector<std::vector<double>> generation_levels;  // per GenCo, unit order
  double welfare = 0.0;
  std::size_t coarse_points = 0;
  std::size_t refined_points = 0;
  std::string message;
};

/// Centralized ground truth for desk-scale cases (at most 3 non-slack buses):
/// exhaustive grid over the free angles subject to the line/angle/box
/// constraints; at each grid point the power balance fixes the net supply per
/// bus and a marginal-equalization allocation (bisection on the bus-local
/// shadow price) maximizes welfare within bounds. The incumbent is refined by
/// a second, finer pass around it.
OracleSolution centralized_solve_small(const System& sys, const OracleConfig& cfg = {});

/// Central finite differences of the dual function: each evaluation runs the
/// agent responses plus a full (cold started) message exchange. Compare
/// against mismatch(x(lambda)).
Vector finite_diff_dual_gradient(const System& sys, const PriceVector& lambda, double delta,
                                 const ConsensusConfig& consensus_cfg,
                                 const SubproblemConfig& solver_cfg = {});

/// Dense symmetric second-difference Hessian of an arbitrary objective.
Matrix finite_diff_hessian(const std::function<double(const Vector&)>& objective,
                           const Vector& at, double delta);

}  // namespace gridclear

#pragma once

#include <string>
#include <vector>

#include "gridclear/network.hpp"
#include "gridclear/types.hpp"

namespace gridclear {

/// Solver knobs for the damped-Newton log-barrier interior point used by the
/// per-region subproblem and the joint reference solve.
struct SubproblemConfig {
  double inner_tolerance = 1e-9;     // gradient-norm threshold at the final stage
  int max_newton_iters = 100;        // per barrier stage
  double barrier_decrease = 0.2;     // mu multiplier between stages
  double initial_barrier_weight = 1.0;
  double barrier_floor = 1e-11;      // last stage runs at or below this mu
};

/// A transmission owner: an edge set, its endpoint (region) buses, and the
/// single slack bus pinning the region's angle reference.
class TransCo {
 public:
  /// Builds from line indices into the network; throws ValidationError if the
  /// edge set is empty or the region does not contain exactly one slack bus.
  static TransCo build(const Network& net, std::string id, const std::vector<int>& line_indices);

  const std::string& id() const { return id_; }
  const std::vector<Line>& edges() const { return edges_; }
  /// Region buses, ascending; angles handed to/from this TransCo use this order.
  const std::vector<int>& region_buses() const { return region_; }
  int slack_bus() const { return slack_bus_; }
  int region_size() const { return static_cast<int>(region_.size()); }
  /// Position of a bus within region_buses(), or -1.
  int region_index(int bus) const;

 private:
  std::string id_;
  std::vector<Line> edges_;
  std::vector<int> region_;
  int slack_bus_ = -1;
};

/// Merchandizing surplus of one TransCo at a region angle profile: half the
/// sum over both orientations of owned lines of
///   (lambda_m - lambda_n) * dc - (lambda_n + lambda_m) * loss.
double merch_surplus(const TransCo& t, const Vector& theta_region, const PriceVector& lambda);

/// Total merchandizing surplus -sum_n lambda_n f_n(theta). Also evaluates the
/// per-TransCo partition sum and checks the two routes agree; a gross
/// disagreement indicates a broken partition and throws.
double total_merch_surplus(const Network& net, const std::vector<TransCo>& transcos,
                           const OperatingPoint& point, const PriceVector& lambda);

/// Objective of the consensus subproblem:
///   merch_surplus - y'(theta - z) - rho/2 |theta - z|^2, strongly concave.
double augmented_objective(const TransCo& t, const Vector& theta_region, const Vector& z_region,
                           const Vector& y_region, double rho, const PriceVector& lambda);

struct SubproblemResult {
  Vector theta;             // region order (or bus order for the joint solve)
  bool converged = false;
  int newton_iters = 0;
  double grad_norm = 0.0;   // stationarity residual at exit
  double complementarity = 0.0;
  std::string message;
};

/// Maximizes the augmented objective over the region's feasible angle set
/// (directional flow limits, angle-difference bounds, [-pi, pi] box, slack
/// pin). Throws PriceSumViolation if any owned edge has lambda_n+lambda_m <= 0.
SubproblemResult solve_subproblem(const TransCo& t, const Vector& z_region,
                                  const Vector& y_region, double rho, const PriceVector& lambda,
                                  const SubproblemConfig& cfg = {});

/// Analytic Hessian of merch_surplus over the region's non-slack angles
/// (ascending bus order): a grounded weighted Laplacian with edge weights
/// (lambda_n + lambda_m) * G, negated. Constant in theta.
Matrix surplus_hessian(const TransCo& t, const PriceVector& lambda);

/// Line indices whose endpoint price sum is not strictly positive.
std::vector<int> check_assumption4(const Network& net, const PriceVector& lambda);

/// Joint maximization of the total merchandizing surplus over the full
/// feasible set (every line constraint, every slack pinned). The centralized
/// reference the message exchange must match.
SubproblemResult solve_monolithic(const Network& net, const PriceVector& lambda,
                                  const SubproblemConfig& cfg = {});

}  // namespace gridclear

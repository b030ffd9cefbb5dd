#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridclear/consensus.hpp"
#include "gridclear/system.hpp"
#include "gridclear/types.hpp"

namespace gridclear {

struct PricingConfig {
  /// Initial price level, uniform across buses, currency/MWh. When unset,
  /// the mean marginal cost of generation at midpoint output is used,
  /// floored at a strictly positive value.
  std::optional<double> lambda0;
  /// Step-size scale for alpha_t = beta / t. When unset, 1/max(1, ||h(1)||_inf)
  /// so the first step is well conditioned across case scales.
  std::optional<double> beta;
  int max_outer_iters = 5000;
  double mismatch_tol = 1e-3;   // per-unit power, infinity norm
  bool warm_start = true;       // reuse (z, y) across price updates
  /// Re-run the exchange at tight tolerances once the loop criterion is met,
  /// so the reported solution satisfies the balance test on its own.
  bool final_refine = true;
};

/// Per-bus power balance residual h = f(theta) - p + e + s.
Vector mismatch(const Network& net, const BusProfiles& profiles, const OperatingPoint& point);

/// alpha_t = beta / t for t >= 1.
double step_size(int t, double beta);

/// lambda - alpha * h, componentwise.
PriceVector price_update(const PriceVector& lambda, const Vector& h, double alpha);

/// J = sum of utilities minus sum of costs at the given per-agent profiles.
double social_welfare(const std::vector<DistCo>& distcos, const std::vector<GenCo>& gencos,
                      const std::vector<std::vector<double>>& elastic_levels,
                      const std::vector<std::vector<double>>& generation_levels);

/// L = J - lambda' h.
double lagrangian_value(double welfare, const PriceVector& lambda, const Vector& h);

/// phi(lambda) as the sum of realized optimal surpluses: the DistCo and GenCo
/// surpluses at their responses plus the merchandizing surplus at theta(lambda).
double dual_value(const System& sys, const std::vector<std::vector<double>>& elastic_levels,
                  const std::vector<std::vector<double>>& generation_levels,
                  const OperatingPoint& point, const PriceVector& lambda);

/// Prices with the full response and diagnostics of one converged (or final)
/// outer iterate.
struct EquilibriumPoint {
  PriceVector lambda;
  OperatingPoint theta;
  std::vector<std::vector<double>> elastic_levels;      // per DistCo, unit order
  std::vector<std::vector<double>> generation_levels;   // per GenCo, unit order
  BusProfiles profiles;
  Vector mismatch;
  double welfare = 0.0;      // J
  double dual = 0.0;         // phi
};

/// phi(lambda*) - J(x*), recomputed from the stored point.
double duality_gap(const System& sys, const EquilibriumPoint& point);

/// Block-diagonal Hessian of the Lagrangian in (e, p, theta_free): diagonal
/// utility curvatures, negated cost curvatures, then the network block over
/// non-slack buses. Constant in x for quadratic agents.
Matrix lagrangian_hessian(const System& sys, const PriceVector& lambda);

struct EquilibriumReport {
  bool balance_ok = false;         // condition (i): |h_n| < eps for all n
  double max_abs_mismatch = 0.0;
  bool responses_ok = false;       // condition (ii): re-solving moves nothing
  double max_component_change = 0.0;
  std::vector<std::string> violations;

  bool passed() const { return balance_ok && responses_ok; }
};

/// Checks both competitive-equilibrium conditions at (x, lambda): per-bus
/// balance within eps, and re-solving every agent problem (and the joint
/// transmission problem) changes no component by more than 1e-6.
EquilibriumReport verify_equilibrium(const System& sys, const EquilibriumPoint& point,
                                     double eps);

struct IterationRecord {
  int t = 0;
  PriceVector lambda;
  Vector elastic;            // bus-aggregated e
  Vector generation;         // bus-aggregated p
  OperatingPoint theta;
  Vector mismatch;
  double mismatch_inf = 0.0;
  double mismatch_l2 = 0.0;
  double welfare = 0.0;      // J
  double dual = 0.0;         // phi
  std::vector<double> distco_surpluses;
  std::vector<double> genco_surpluses;
  std::vector<double> transco_surpluses;
  int admm_rounds = 0;
  std::vector<RoundResiduals> admm_trace;
};

enum class PricingStatus { converged, max_iterations, assumption4_violation };

struct PricingOutcome {
  PricingStatus status = PricingStatus::max_iterations;
  bool converged = false;
  int iterations = 0;
  double beta_used = 0.0;
  EquilibriumPoint point;    // final (refined when converged) iterate
  std::vector<IterationRecord> trajectory;
  std::string message;
};

/// The outer pricing loop: broadcast lambda, collect responses, run the
/// message exchange, measure mismatch, update prices with alpha_t = beta/t.
/// Stops when ||h||_inf < mismatch_tol (validated at tight exchange
/// tolerances when final_refine is on) or at max_outer_iters, and aborts with
/// guidance if edge-wise price sums stop being positive.
PricingOutcome run_pricing_process(const System& sys, const PricingConfig& pricing_cfg,
                                   const ConsensusConfig& consensus_cfg,
                                   const SubproblemConfig& solver_cfg = {});

}  // namespace gridclear

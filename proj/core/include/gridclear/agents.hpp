#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gridclear/types.hpp"

namespace gridclear {

/// u(e) = a*e - b/2 * e^2 with b > 0 (strongly concave).
struct QuadraticUtility {
  double linear = 0.0;     // a, currency/MWh
  double curvature = 0.0;  // b, currency/MWh^2

  double value(double e) const { return linear * e - 0.5 * curvature * e * e; }
  double marginal(double e) const { return linear - curvature * e; }
};

/// c(p) = c1*p + c2/2 * p^2 with c1 >= 0, c2 > 0 (strongly convex).
struct QuadraticCost {
  double linear = 0.0;     // c1
  double curvature = 0.0;  // c2

  double value(double p) const { return linear * p + 0.5 * curvature * p * p; }
  double marginal(double p) const { return linear + curvature * p; }
};

struct ElasticLoadUnit {
  int bus = 0;
  double min_level = 0.0;
  double max_level = 0.0;
  QuadraticUtility utility;
};

struct InelasticLoadUnit {
  int bus = 0;
  double demand = 0.0;  // s >= 0, fixed
};

struct GenerationUnit {
  int bus = 0;
  double min_output = 0.0;
  double max_output = 0.0;
  QuadraticCost cost;
};

struct DistCo {
  std::string id;
  std::vector<ElasticLoadUnit> elastic;
  std::vector<InelasticLoadUnit> inelastic;
};

struct GenCo {
  std::string id;
  std::vector<GenerationUnit> units;
};

/// Surplus of one DistCo at the given elastic profile (one entry per elastic
/// unit, in unit order): sum of u(e) - lambda*e over elastic units minus
/// lambda*s over inelastic units.
double distco_surplus(const DistCo& d, const std::vector<double>& elastic_profile,
                      const PriceVector& lambda);

/// Surplus of one GenCo at the given output profile: sum of lambda*p - c(p).
double genco_surplus(const GenCo& g, const std::vector<double>& output_profile,
                     const PriceVector& lambda);

/// Unique surplus-maximizing elastic profile at the given prices. Separable:
/// per unit, clamp((a - lambda_bus)/b, bounds).
std::vector<double> distco_response(const DistCo& d, const PriceVector& lambda);

/// Unique surplus-maximizing output profile: per unit,
/// clamp((lambda_bus - c1)/c2, bounds).
std::vector<double> genco_response(const GenCo& g, const PriceVector& lambda);

/// Bus-aggregated elastic demand, inelastic demand, and generation at the
/// given prices; the inputs to the mismatch computation.
struct BusProfiles {
  Vector elastic;     // e
  Vector inelastic;   // s
  Vector generation;  // p
};

BusProfiles net_profiles(const std::vector<DistCo>& distcos, const std::vector<GenCo>& gencos,
                         const PriceVector& lambda, int bus_count);

/// Maximizer of a concave scalar objective on [lo, hi] given its (strictly
/// decreasing) derivative, by bisection to the given tolerance. Hook for
/// non-quadratic utility/cost forms; the quadratic paths use closed forms.
double maximize_concave_scalar(const std::function<double(double)>& derivative, double lo,
                               double hi, double tol = 1e-10);

}  // namespace gridclear

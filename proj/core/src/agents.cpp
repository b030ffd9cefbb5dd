#include "gridclear/agents.hpp"

#include <algorithm>
#include <stdexcept>

namespace gridclear {

namespace {

double price_at(const PriceVector& lambda, int bus) {
  if (bus < 0 || bus >= lambda.size())
    throw std::out_of_range("price vector has no entry for bus " + std::to_string(bus));
  return lambda[bus];
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

double distco_surplus(const DistCo& d, const std::vector<double>& elastic_profile,
                      const PriceVector& lambda) {
  if (elastic_profile.size() != d.elastic.size())
    throw std::invalid_argument("elastic profile size does not match unit count");
  double surplus = 0.0;
  for (std::size_t i = 0; i < d.elastic.size(); ++i) {
    const ElasticLoadUnit& unit = d.elastic[i];
    const double e = elastic_profile[i];
    surplus += unit.utility.value(e) - price_at(lambda, unit.bus) * e;
  }
  for (const InelasticLoadUnit& unit : d.inelastic)
    surplus -= price_at(lambda, unit.bus) * unit.demand;
  return surplus;
}

double genco_surplus(const GenCo& g, const std::vector<double>& output_profile,
                     const PriceVector& lambda) {
  if (output_profile.size() != g.units.size())
    throw std::invalid_argument("output profile size does not match unit count");
  double surplus = 0.0;
  for (std::size_t i = 0; i < g.units.size(); ++i) {
    const GenerationUnit& unit = g.units[i];
    const double p = output_profile[i];
    surplus += price_at(lambda, unit.bus) * p - unit.cost.value(p);
  }
  return surplus;
}

std::vector<double> distco_response(const DistCo& d, const PriceVector& lambda) {
  std::vector<double> levels(d.elastic.size());
  for (std::size_t i = 0; i < d.elastic.size(); ++i) {
    const ElasticLoadUnit& unit = d.elastic[i];
    const double unconstrained =
        (unit.utility.linear - price_at(lambda, unit.bus)) / unit.utility.curvature;
    levels[i] = clamp(unconstrained, unit.min_level, unit.max_level);
  }
  return levels;
}

std::vector<double> genco_response(const GenCo& g, const PriceVector& lambda) {
  std::vector<double> levels(g.units.size());
  for (std::size_t i = 0; i < g.units.size(); ++i) {
    const GenerationUnit& unit = g.units[i];
    const double unconstrained =
        (price_at(lambda, unit.bus) - unit.cost.linear) / unit.cost.curvature;
    levels[i] = clamp(unconstrained, unit.min_output, unit.max_output);
  }
  return levels;
}

BusProfiles net_profiles(const std::vector<DistCo>& distcos, const std::vector<GenCo>& gencos,
                         const PriceVector& lambda, int bus_count) {
  BusProfiles out{Vector::Zero(bus_count), Vector::Zero(bus_count), Vector::Zero(bus_count)};
  for (const DistCo& d : distcos) {
    const std::vector<double> levels = distco_response(d, lambda);
    for (std::size_t i = 0; i < d.elastic.size(); ++i) out.elastic[d.elastic[i].bus] += levels[i];
    for (const InelasticLoadUnit& unit : d.inelastic) out.inelastic[unit.bus] += unit.demand;
  }
  for (const GenCo& g : gencos) {
    const std::vector<double> levels = genco_response(g, lambda);
    for (std::size_t i = 0; i < g.units.size(); ++i) out.generation[g.units[i].bus] += levels[i];
  }
  return out;
}

double maximize_concave_scalar(const std::function<double(double)>& derivative, double lo,
                               double hi, double tol) {
  if (lo > hi) throw std::invalid_argument("empty interval");
  if (derivative(lo) <= 0.0) return lo;
  if (derivative(hi) >= 0.0) return hi;
  // Derivative is positive at lo and negative at hi; bisect the sign change.
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (derivative(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace gridclear

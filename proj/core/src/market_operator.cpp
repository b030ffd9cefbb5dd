#include "gridclear/market_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gridclear/log.hpp"

namespace gridclear {

namespace {

struct Responses {
  std::vector<std::vector<double>> elastic;     // per DistCo
  std::vector<std::vector<double>> generation;  // per GenCo
  BusProfiles profiles;
};

Responses collect_responses(const System& sys, const PriceVector& lambda) {
  Responses r;
  const int n = sys.bus_count();
  r.profiles = BusProfiles{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  r.elastic.reserve(sys.distcos.size());
  for (const DistCo& d : sys.distcos) {
    r.elastic.push_back(distco_response(d, lambda));
    const auto& levels = r.elastic.back();
    for (std::size_t i = 0; i < d.elastic.size(); ++i)
      r.profiles.elastic[d.elastic[i].bus] += levels[i];
    for (const InelasticLoadUnit& unit : d.inelastic) r.profiles.inelastic[unit.bus] += unit.demand;
  }
  r.generation.reserve(sys.gencos.size());
  for (const GenCo& g : sys.gencos) {
    r.generation.push_back(genco_response(g, lambda));
    const auto& levels = r.generation.back();
    for (std::size_t i = 0; i < g.units.size(); ++i)
      r.profiles.generation[g.units[i].bus] += levels[i];
  }
  return r;
}

double default_lambda0(const System& sys) {
  double sum = 0.0;
  int count = 0;
  for (const GenCo& g : sys.gencos) {
    for (const GenerationUnit& u : g.units) {
      sum += u.cost.marginal(0.5 * (u.min_output + u.max_output));
      ++count;
    }
  }
  const double mean = count > 0 ? sum / count : 1.0;
  return std::max(mean, 1.0);
}

Vector region_slice(const TransCo& t, const Vector& full) {
  Vector out(t.region_size());
  for (int k = 0; k < t.region_size(); ++k) out[k] = full[t.region_buses()[k]];
  return out;
}

}  // namespace

Vector mismatch(const Network& net, const BusProfiles& profiles, const OperatingPoint& point) {
  return injections(net, point) - profiles.generation + profiles.elastic + profiles.inelastic;
}

double step_size(int t, double beta) {
  if (t < 1) throw std::invalid_argument("step index starts at 1");
  return beta / t;
}

PriceVector price_update(const PriceVector& lambda, const Vector& h, double alpha) {
  return lambda - alpha * h;
}

double social_welfare(const std::vector<DistCo>& distcos, const std::vector<GenCo>& gencos,
                      const std::vector<std::vector<double>>& elastic_levels,
                      const std::vector<std::vector<double>>& generation_levels) {
  double welfare = 0.0;
  for (std::size_t d = 0; d < distcos.size(); ++d)
    for (std::size_t i = 0; i < distcos[d].elastic.size(); ++i)
      welfare += distcos[d].elastic[i].utility.value(elastic_levels[d][i]);
  for (std::size_t g = 0; g < gencos.size(); ++g)
    for (std::size_t i = 0; i < gencos[g].units.size(); ++i)
      welfare -= gencos[g].units[i].cost.value(generation_levels[g][i]);
  return welfare;
}

double lagrangian_value(double welfare, const PriceVector& lambda, const Vector& h) {
  return welfare - lambda.dot(h);
}

double dual_value(const System& sys, const std::vector<std::vector<double>>& elastic_levels,
                  const std::vector<std::vector<double>>& generation_levels,
                  const OperatingPoint& point, const PriceVector& lambda) {
  double phi = 0.0;
  for (std::size_t d = 0; d < sys.distcos.size(); ++d)
    phi += distco_surplus(sys.distcos[d], elastic_levels[d], lambda);
  for (std::size_t g = 0; g < sys.gencos.size(); ++g)
    phi += genco_surplus(sys.gencos[g], generation_levels[g], lambda);
  phi += total_merch_surplus(sys.network, sys.transcos, point, lambda);
  return phi;
}

double duality_gap(const System& sys, const EquilibriumPoint& point) {
  const double phi = dual_value(sys, point.elastic_levels, point.generation_levels, point.theta,
                                point.lambda);
  const double welfare =
      social_welfare(sys.distcos, sys.gencos, point.elastic_levels, point.generation_levels);
  return phi - welfare;
}

Matrix lagrangian_hessian(const System& sys, const PriceVector& lambda) {
  int elastic_count = 0;
  for (const DistCo& d : sys.distcos) elastic_count += static_cast<int>(d.elastic.size());
  int gen_count = 0;
  for (const GenCo& g : sys.gencos) gen_count += static_cast<int>(g.units.size());
  const int free_buses = sys.bus_count() - static_cast<int>(sys.network.slack_set().size());

  const int dim = elastic_count + gen_count + free_buses;
  Matrix hess = Matrix::Zero(dim, dim);

  int at = 0;
  for (const DistCo& d : sys.distcos) {
    for (const ElasticLoadUnit& u : d.elastic) {
      hess(at, at) = -u.utility.curvature;
      ++at;
    }
  }
  for (const GenCo& g : sys.gencos) {
    for (const GenerationUnit& u : g.units) {
      hess(at, at) = -u.cost.curvature;
      ++at;
    }
  }

  // Network block: negated weighted Laplacian over non-slack buses with edge
  // weights (lambda_n + lambda_m) G, slack rows/columns removed.
  std::vector<int> free_of_bus(sys.bus_count(), -1);
  int fi = at;
  for (int b = 0; b < sys.bus_count(); ++b)
    if (!sys.network.is_slack(b)) free_of_bus[b] = fi++;
  for (const Line& l : sys.network.lines()) {
    const double weight = (lambda[l.from] + lambda[l.to]) * l.conductance;
    const int a = free_of_bus[l.from];
    const int b = free_of_bus[l.to];
    if (a >= 0) hess(a, a) -= weight;
    if (b >= 0) hess(b, b) -= weight;
    if (a >= 0 && b >= 0) {
      hess(a, b) += weight;
      hess(b, a) += weight;
    }
  }
  return hess;
}

EquilibriumReport verify_equilibrium(const System& sys, const EquilibriumPoint& point,
                                     double eps) {
  EquilibriumReport report;

  const Vector h = mismatch(sys.network, point.profiles, point.theta);
  report.max_abs_mismatch = h.size() > 0 ? h.cwiseAbs().maxCoeff() : 0.0;
  report.balance_ok = report.max_abs_mismatch < eps;
  if (!report.balance_ok)
    report.violations.push_back("power balance violated: max |h_n| = " +
                                std::to_string(report.max_abs_mismatch) + " >= " +
                                std::to_string(eps));

  constexpr double kComponentTol = 1e-6;
  double worst = 0.0;

  for (std::size_t d = 0; d < sys.distcos.size(); ++d) {
    const auto fresh = distco_response(sys.distcos[d], point.lambda);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      const double change = std::abs(fresh[i] - point.elastic_levels[d][i]);
      if (change > worst) worst = change;
      if (change > kComponentTol)
        report.violations.push_back("distco " + sys.distcos[d].id + " unit " + std::to_string(i) +
                                    " is not surplus-maximizing (off by " + std::to_string(change) +
                                    ")");
    }
  }
  for (std::size_t g = 0; g < sys.gencos.size(); ++g) {
    const auto fresh = genco_response(sys.gencos[g], point.lambda);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      const double change = std::abs(fresh[i] - point.generation_levels[g][i]);
      if (change > worst) worst = change;
      if (change > kComponentTol)
        report.violations.push_back("genco " + sys.gencos[g].id + " unit " + std::to_string(i) +
                                    " is not surplus-maximizing (off by " + std::to_string(change) +
                                    ")");
    }
  }

  if (!sys.transcos.empty()) {
    SubproblemConfig tight;
    tight.inner_tolerance = 1e-10;
    const SubproblemResult joint = solve_monolithic(sys.network, point.lambda, tight);
    if (!joint.converged) {
      report.violations.push_back("joint transmission re-solve failed: " + joint.message);
      worst = std::numeric_limits<double>::infinity();
    } else {
      for (int b = 0; b < sys.bus_count(); ++b) {
        const double change = std::abs(joint.theta[b] - point.theta.theta[b]);
        if (change > worst) worst = change;
        if (change > kComponentTol)
          report.violations.push_back("operating point is not surplus-maximizing at bus " +
                                      std::to_string(b) + " (off by " + std::to_string(change) +
                                      ")");
      }
    }
  }

  report.max_component_change = worst;
  report.responses_ok = worst <= kComponentTol;
  return report;
}

PricingOutcome run_pricing_process(const System& sys, const PricingConfig& pricing_cfg,
                                   const ConsensusConfig& consensus_cfg,
                                   const SubproblemConfig& solver_cfg) {
  PricingOutcome outcome;
  const int n = sys.bus_count();

  const double level = pricing_cfg.lambda0.value_or(default_lambda0(sys));
  PriceVector lambda = Vector::Constant(n, level);
  double beta = pricing_cfg.beta.value_or(0.0);

  ConsensusState state = init_consensus_state(sys.transcos, n, consensus_cfg.rho);
  ConsensusState* warm = pricing_cfg.warm_start ? &state : nullptr;

  auto capture_point = [&](const PriceVector& at_lambda, const Responses& r,
                           const OperatingPoint& theta, const Vector& h) {
    EquilibriumPoint p;
    p.lambda = at_lambda;
    p.theta = theta;
    p.elastic_levels = r.elastic;
    p.generation_levels = r.generation;
    p.profiles = r.profiles;
    p.mismatch = h;
    p.welfare = social_welfare(sys.distcos, sys.gencos, r.elastic, r.generation);
    p.dual = dual_value(sys, r.elastic, r.generation, theta, at_lambda);
    return p;
  };

  for (int t = 1; t <= pricing_cfg.max_outer_iters; ++t) {
    outcome.iterations = t;

    if (!lambda.allFinite()) {
      outcome.status = PricingStatus::max_iterations;
      outcome.message = "price vector became non-finite at iteration " + std::to_string(t) +
                        "; lower beta";
      break;
    }
    if (!check_assumption4(sys.network, lambda).empty()) {
      outcome.status = PricingStatus::assumption4_violation;
      outcome.message =
          "edge-wise price sums stopped being positive at iteration " + std::to_string(t) +
          "; raise the initial price level or lower beta";
      break;
    }

    ExchangeResult exchange =
        run_message_exchange(sys.transcos, n, lambda, consensus_cfg, solver_cfg, warm);
    Responses responses = collect_responses(sys, lambda);
    Vector h = mismatch(sys.network, responses.profiles, exchange.theta);
    double h_inf = h.size() > 0 ? h.cwiseAbs().maxCoeff() : 0.0;

    IterationRecord record;
    record.t = t;
    record.lambda = lambda;
    record.elastic = responses.profiles.elastic;
    record.generation = responses.profiles.generation;
    record.theta = exchange.theta;
    record.admm_rounds = exchange.rounds;
    record.admm_trace = exchange.trace;

    bool accepted = false;
    if (h_inf < pricing_cfg.mismatch_tol) {
      if (pricing_cfg.final_refine && !sys.transcos.empty()) {
        // Validate the candidate at tight exchange tolerances; the refined
        // state also serves as the warm start if the loop must continue.
        ConsensusConfig tight = consensus_cfg;
        tight.eps_primal = std::min(consensus_cfg.eps_primal, 1e-9);
        tight.eps_dual = std::min(consensus_cfg.eps_dual, 1e-10);
        tight.max_rounds = std::max(consensus_cfg.max_rounds, 50000);
        ExchangeResult refined =
            run_message_exchange(sys.transcos, n, lambda, tight, solver_cfg, &state);
        record.admm_rounds += refined.rounds;
        for (const RoundResiduals& rr : refined.trace) record.admm_trace.push_back(rr);
        exchange.theta = refined.theta;
        h = mismatch(sys.network, responses.profiles, exchange.theta);
        h_inf = h.size() > 0 ? h.cwiseAbs().maxCoeff() : 0.0;
      }
      accepted = h_inf < pricing_cfg.mismatch_tol;
    }

    record.mismatch = h;
    record.mismatch_inf = h_inf;
    record.mismatch_l2 = h.norm();
    record.welfare = social_welfare(sys.distcos, sys.gencos, responses.elastic, responses.generation);
    record.dual = dual_value(sys, responses.elastic, responses.generation, exchange.theta, lambda);
    record.distco_surpluses.reserve(sys.distcos.size());
    for (std::size_t d = 0; d < sys.distcos.size(); ++d)
      record.distco_surpluses.push_back(
          distco_surplus(sys.distcos[d], responses.elastic[d], lambda));
    record.genco_surpluses.reserve(sys.gencos.size());
    for (std::size_t g = 0; g < sys.gencos.size(); ++g)
      record.genco_surpluses.push_back(
          genco_surplus(sys.gencos[g], responses.generation[g], lambda));
    record.transco_surpluses.reserve(sys.transcos.size());
    for (const TransCo& tc : sys.transcos)
      record.transco_surpluses.push_back(
          merch_surplus(tc, region_slice(tc, exchange.theta.theta), lambda));
    outcome.trajectory.push_back(std::move(record));

    if (log::enabled(log::Level::info) && (t % 100 == 1 || accepted))
      log::info("t=" + std::to_string(t) + " |h|_inf=" + std::to_string(h_inf) +
                " rounds=" + std::to_string(outcome.trajectory.back().admm_rounds));

    if (accepted) {
      outcome.status = PricingStatus::converged;
      outcome.converged = true;
      outcome.point = capture_point(lambda, responses, exchange.theta, h);
      break;
    }

    if (beta <= 0.0) beta = 1.0 / std::max(1.0, h_inf);
    lambda = price_update(lambda, h, step_size(t, beta));
  }

  outcome.beta_used = beta;
  if (!outcome.converged && outcome.message.empty() &&
      outcome.status == PricingStatus::max_iterations)
    outcome.message = "mismatch tolerance not reached within " +
                      std::to_string(pricing_cfg.max_outer_iters) + " iterations";

  if (!outcome.converged && !outcome.trajectory.empty()) {
    // Surface the last iterate so callers can inspect the best-known point.
    const IterationRecord& last = outcome.trajectory.back();
    Responses responses = collect_responses(sys, last.lambda);
    outcome.point = capture_point(last.lambda, responses, last.theta, last.mismatch);
  }
  return outcome;
}

}  // namespace gridclear

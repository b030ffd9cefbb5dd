#include "gridclear/consensus.hpp"

#include <cmath>
#include <future>
#include <stdexcept>

#include "gridclear/log.hpp"

namespace gridclear {

namespace {

/// Owner counts |T_n| restricted to buses that appear in some region.
std::vector<int> owner_counts(const std::vector<TransCo>& transcos, int bus_count) {
  std::vector<int> counts(bus_count, 0);
  for (const TransCo& t : transcos)
    for (int b : t.region_buses()) ++counts[b];
  return counts;
}

}  // namespace

ConsensusState init_consensus_state(const std::vector<TransCo>& transcos, int bus_count,
                                    double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("consensus penalty rho must be positive");
  ConsensusState state;
  state.round = 0;
  state.rho = rho;
  state.z = Vector::Zero(bus_count);
  state.z_prev = Vector::Zero(bus_count);
  state.y.reserve(transcos.size());
  state.theta.reserve(transcos.size());
  for (const TransCo& t : transcos) {
    state.y.push_back(Vector::Zero(t.region_size()));
    state.theta.push_back(Vector::Zero(t.region_size()));
  }
  return state;
}

ResidualPair residuals(const ConsensusState& state, const std::vector<TransCo>& transcos) {
  int total = 0;
  for (const TransCo& t : transcos) total += t.region_size();
  ResidualPair out{Vector::Zero(total), Vector::Zero(total)};
  int at = 0;
  for (std::size_t i = 0; i < transcos.size(); ++i) {
    const auto& region = transcos[i].region_buses();
    for (int k = 0; k < transcos[i].region_size(); ++k, ++at) {
      out.primal[at] = state.theta[i][k] - state.z[region[k]];
      out.dual[at] = -state.rho * (state.z[region[k]] - state.z_prev[region[k]]);
    }
  }
  return out;
}

std::pair<double, double> residual_norms(const ConsensusState& state,
                                         const std::vector<TransCo>& transcos) {
  const ResidualPair r = residuals(state, transcos);
  return {r.primal.norm(), r.dual.norm()};
}

void exchange_round(ConsensusState& state, const std::vector<TransCo>& transcos,
                    const PriceVector& lambda, const ConsensusConfig& cfg,
                    const SubproblemConfig& solver_cfg) {
  if (state.y.size() != transcos.size())
    throw std::invalid_argument("consensus state does not match the TransCo set");

  // Phase 1: every TransCo solves its augmented subproblem at (z, y).
  // Solves are independent; results land in per-TransCo slots, so the
  // parallel path is deterministic.
  auto solve_one = [&](std::size_t i) {
    const TransCo& t = transcos[i];
    Vector z_region(t.region_size());
    for (int k = 0; k < t.region_size(); ++k) z_region[k] = state.z[t.region_buses()[k]];
    SubproblemResult res = solve_subproblem(t, z_region, state.y[i], state.rho, lambda, solver_cfg);
    if (!res.converged)
      throw std::runtime_error("transco " + t.id() + " subproblem failed: " + res.message);
    if (!res.theta.allFinite())
      throw std::runtime_error("transco " + t.id() + " produced non-finite angles");
    state.theta[i] = std::move(res.theta);
  };

  if (cfg.parallel_solves && transcos.size() > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(transcos.size());
    for (std::size_t i = 0; i < transcos.size(); ++i)
      jobs.push_back(std::async(std::launch::async, solve_one, i));
    for (auto& job : jobs) job.get();
  } else {
    for (std::size_t i = 0; i < transcos.size(); ++i) solve_one(i);
  }

  // Phase 2: average shared-bus proposals into z (single owners average over
  // themselves), then update duals against the fresh z.
  state.z_prev = state.z;
  const std::vector<int> owners = owner_counts(transcos, static_cast<int>(state.z.size()));
  Vector sums = Vector::Zero(state.z.size());
  for (std::size_t i = 0; i < transcos.size(); ++i) {
    const auto& region = transcos[i].region_buses();
    for (int k = 0; k < transcos[i].region_size(); ++k) sums[region[k]] += state.theta[i][k];
  }
  for (int b = 0; b < state.z.size(); ++b)
    if (owners[b] > 0) state.z[b] = sums[b] / owners[b];

  for (std::size_t i = 0; i < transcos.size(); ++i) {
    const auto& region = transcos[i].region_buses();
    for (int k = 0; k < transcos[i].region_size(); ++k)
      state.y[i][k] += state.rho * (state.theta[i][k] - state.z[region[k]]);
  }

  const auto [r_norm, s_norm] = residual_norms(state, transcos);
  if (!std::isfinite(r_norm) || !std::isfinite(s_norm))
    throw std::runtime_error("non-finite consensus residuals");
  state.primal_norm = r_norm;
  state.dual_norm = s_norm;
  state.has_residuals = true;
  state.round += 1;
}

ExchangeResult run_message_exchange(const std::vector<TransCo>& transcos, int bus_count,
                                    const PriceVector& lambda, const ConsensusConfig& cfg,
                                    const SubproblemConfig& solver_cfg, ConsensusState* state) {
  ConsensusState local;
  ConsensusState& st = state != nullptr ? *state : local;
  if (state == nullptr || st.y.size() != transcos.size() ||
      st.z.size() != static_cast<Eigen::Index>(bus_count) || st.rho != cfg.rho)
    st = init_consensus_state(transcos, bus_count, cfg.rho);

  ExchangeResult result;
  if (transcos.empty()) {
    // No transmission owners: the operating point is the zero profile.
    result.theta.theta = Vector::Zero(bus_count);
    result.converged = true;
    return result;
  }

  while (result.rounds < cfg.max_rounds) {
    exchange_round(st, transcos, lambda, cfg, solver_cfg);
    result.rounds += 1;
    result.trace.push_back({st.primal_norm, st.dual_norm});
    if (st.primal_norm < cfg.eps_primal && st.dual_norm < cfg.eps_dual) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged)
    log::info("message exchange hit max_rounds=" + std::to_string(cfg.max_rounds) +
              " (r=" + std::to_string(st.primal_norm) + ", s=" + std::to_string(st.dual_norm) + ")");

  result.theta.theta = st.z;
  return result;
}

double max_shared_disagreement(const ConsensusState& state, const std::vector<TransCo>& transcos) {
  double worst = 0.0;
  for (std::size_t i = 0; i < transcos.size(); ++i) {
    for (std::size_t j = i + 1; j < transcos.size(); ++j) {
      for (int k = 0; k < transcos[i].region_size(); ++k) {
        const int bus = transcos[i].region_buses()[k];
        const int pos = transcos[j].region_index(bus);
        if (pos < 0) continue;
        worst = std::max(worst, std::abs(state.theta[i][k] - state.theta[j][pos]));
      }
    }
  }
  return worst;
}

}  // namespace gridclear

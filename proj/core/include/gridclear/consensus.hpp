#pragma once

#include <vector>

#include "gridclear/transco.hpp"
#include "gridclear/types.hpp"

namespace gridclear {

struct ConsensusConfig {
  double rho = 0.21;          // augmentation weight
  double eps_primal = 5e-5;   // threshold on ||r||_2
  double eps_dual = 5e-6;     // threshold on ||s||_2
  int max_rounds = 10000;
  bool parallel_solves = true;  // phase-1 solves may run on worker threads
};

/// State carried across rounds (and, when warm starting, across price
/// updates): the global profile z, per-TransCo duals y and last proposals.
struct ConsensusState {
  int round = 0;
  Vector z;                      // N entries; slack entries stay 0
  Vector z_prev;                 // previous round's z, for the dual residual
  std::vector<Vector> y;         // per TransCo, region order
  std::vector<Vector> theta;     // per TransCo, last proposal, region order
  double rho = 0.0;
  bool has_residuals = false;
  double primal_norm = 0.0;      // ||r||_2 of the last completed round
  double dual_norm = 0.0;        // ||s||_2
};

/// Fresh state per Alg. 1 line 1: k = 0, y = 0, z = 0.
ConsensusState init_consensus_state(const std::vector<TransCo>& transcos, int bus_count,
                                    double rho);

/// Stacked primal residual (theta^i - z^i) and dual residual
/// -rho (z^i - z_prev^i), per TransCo over its region buses.
struct ResidualPair {
  Vector primal;
  Vector dual;
};

ResidualPair residuals(const ConsensusState& state, const std::vector<TransCo>& transcos);

/// Euclidean norms (||r||_2, ||s||_2) of the stacked residuals.
std::pair<double, double> residual_norms(const ConsensusState& state,
                                         const std::vector<TransCo>& transcos);

/// One round: parallel subproblem solves at (z, y), shared-bus averaging,
/// dual updates, residual refresh. Throws on subproblem failure or non-finite
/// values.
void exchange_round(ConsensusState& state, const std::vector<TransCo>& transcos,
                    const PriceVector& lambda, const ConsensusConfig& cfg,
                    const SubproblemConfig& solver_cfg);

struct RoundResiduals {
  double primal_norm = 0.0;
  double dual_norm = 0.0;
};

struct ExchangeResult {
  OperatingPoint theta;                 // z at termination
  int rounds = 0;
  bool converged = false;
  std::vector<RoundResiduals> trace;    // one entry per round
};

/// Runs rounds until ||r||_2 < eps_primal and ||s||_2 < eps_dual (at least
/// one round), or max_rounds. When `state` is supplied the exchange resumes
/// from it (warm start across price updates) and leaves the final state in
/// it; otherwise a cold state is used.
ExchangeResult run_message_exchange(const std::vector<TransCo>& transcos, int bus_count,
                                    const PriceVector& lambda, const ConsensusConfig& cfg,
                                    const SubproblemConfig& solver_cfg = {},
                                    ConsensusState* state = nullptr);

/// Largest |theta_n^i - theta_n^j| over buses shared by two TransCos, from
/// the last proposals. Diagnostic for consensus quality.
double max_shared_disagreement(const ConsensusState& state, const std::vector<TransCo>& transcos);

}  // namespace gridclear

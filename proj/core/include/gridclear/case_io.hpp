#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridclear/market_operator.hpp"
#include "gridclear/system.hpp"
#include "gridclear/types.hpp"

namespace gridclear {

/// Case files carry natural units: power in MW, prices in currency/MWh,
/// admittances in per-unit. build_system converts onto base_mva.
struct CaseLine {
  int from = 0;
  int to = 0;
  double conductance = 0.0;
  double susceptance = 0.0;
  double limit_mw = 0.0;
  std::optional<double> angle_min;  // radians; default -pi/3
  std::optional<double> angle_max;  // radians; default +pi/3
};

struct CaseElasticUnit {
  int bus = 0;
  double min_mw = 0.0;
  double max_mw = 0.0;
  double utility_linear = 0.0;     // a, currency/MWh
  double utility_curvature = 0.0;  // b, currency/MWh^2
};

struct CaseInelasticUnit {
  int bus = 0;
  double demand_mw = 0.0;
};

struct CaseGenerationUnit {
  int bus = 0;
  double min_mw = 0.0;
  double max_mw = 0.0;
  double cost_linear = 0.0;     // c1
  double cost_curvature = 0.0;  // c2
};

struct CaseDistCo {
  std::string id;
  std::vector<CaseElasticUnit> elastic;
  std::vector<CaseInelasticUnit> inelastic;
};

struct CaseGenCo {
  std::string id;
  std::vector<CaseGenerationUnit> units;
};

struct CaseTransCo {
  std::string id;
  std::vector<std::pair<int, int>> edges;  // bus-id pairs
};

struct CaseDefaults {
  double rho = 0.21;
  double eps_primal = 5e-5;
  double eps_dual = 5e-6;
  std::optional<double> beta;
  std::optional<double> lambda0;  // uniform level, currency/MWh
  double mismatch_tol = 1e-3;     // per-unit power
};

struct CaseFile {
  int schema_version = 1;
  std::string name;
  std::vector<std::string> comments;
  double base_mva = 100.0;
  std::vector<int> bus_ids;
  std::vector<int> slack_ids;
  std::vector<CaseLine> lines;
  std::vector<CaseTransCo> transcos;
  std::vector<CaseGenCo> gencos;
  std::vector<CaseDistCo> distcos;
  CaseDefaults defaults;
};

/// Every semantic problem in the case, not just the first: unknown/duplicate
/// ids, non-positive admittances or curvatures, partition violations, slack
/// structure, disconnection.
std::vector<ValidationIssue> validate_case(const CaseFile& c);

/// Parses and fully validates; throws ValidationError carrying all findings
/// (parse errors carry the byte position).
CaseFile load_case(const std::filesystem::path& path);

std::string case_to_json(const CaseFile& c);
void save_case(const CaseFile& c, const std::filesystem::path& path);

/// Converts to model units (power per-unit on base_mva, currency scaled by
/// 1/base_mva; prices stay currency/MWh). Throws ValidationError when
/// validate_case reports anything.
System build_system(const CaseFile& c);

ConsensusConfig consensus_config_from(const CaseDefaults& d);
PricingConfig pricing_config_from(const CaseDefaults& d);

/// Final state of one pricing run in natural units, as stored in result.json.
struct RunResult {
  std::string case_name;
  bool converged = false;
  std::string status;
  int iterations = 0;
  double beta_used = 0.0;
  std::vector<double> lambda;                            // currency/MWh, bus order
  std::vector<double> theta;                             // radians
  std::vector<std::vector<double>> elastic_levels_mw;    // per DistCo
  std::vector<std::vector<double>> generation_levels_mw; // per GenCo
  std::vector<double> mismatch_pu;
  double mismatch_inf_pu = 0.0;
  double welfare = 0.0;  // currency
  double dual = 0.0;     // currency
  double gap = 0.0;      // currency
  std::string message;
};

RunResult make_run_result(const System& sys, const PricingOutcome& outcome);
void write_run_result(const RunResult& r, const std::filesystem::path& path);
RunResult read_run_result(const std::filesystem::path& path);

/// Rebuilds the model-unit equilibrium point a stored run describes.
EquilibriumPoint to_equilibrium_point(const System& sys, const RunResult& r);

}  // namespace gridclear

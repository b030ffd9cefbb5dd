#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridclear/case_io.hpp"
#include "gridclear/log.hpp"
#include "gridclear/oracle.hpp"
#include "gridclear/trajectory.hpp"

namespace fs = std::filesystem;
using namespace gridclear;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

void print_price_table(const System& sys, const std::vector<double>& lambda) {
  std::printf("  bus   lambda [currency/MWh]\n");
  for (std::size_t b = 0; b < lambda.size(); ++b)
    std::printf("  %3d   %s\n", sys.external_bus_ids[b], format_number(lambda[b]).c_str());
}

int cmd_validate(const std::string& case_path) {
  try {
    const CaseFile c = load_case(case_path);
    const System sys = build_system(c);
    std::printf("case \"%s\" is valid: %d buses, %zu lines, %zu gencos, %zu distcos, %zu transcos\n",
                c.name.c_str(), sys.bus_count(), sys.network.lines().size(), sys.gencos.size(),
                sys.distcos.size(), sys.transcos.size());
    return kExitOk;
  } catch (const ValidationError& err) {
    std::fprintf(stderr, "case is invalid:\n");
    for (const ValidationIssue& issue : err.issues())
      std::fprintf(stderr, "  [%s] %s\n", issue.code.c_str(), issue.message.c_str());
    return kExitError;
  }
}

struct RunFlags {
  std::optional<double> rho, eps_primal, eps_dual, beta, lambda0, mismatch_tol;
  std::optional<int> max_iters;
  bool cold_start = false;
};

int cmd_run(const std::string& case_path, const std::string& out_dir, const RunFlags& flags) {
  const CaseFile c = load_case(case_path);
  const System sys = build_system(c);

  ConsensusConfig ccfg = consensus_config_from(c.defaults);
  PricingConfig pcfg = pricing_config_from(c.defaults);
  if (flags.rho) ccfg.rho = *flags.rho;
  if (flags.eps_primal) ccfg.eps_primal = *flags.eps_primal;
  if (flags.eps_dual) ccfg.eps_dual = *flags.eps_dual;
  if (flags.beta) pcfg.beta = *flags.beta;
  if (flags.lambda0) pcfg.lambda0 = *flags.lambda0;
  if (flags.mismatch_tol) pcfg.mismatch_tol = *flags.mismatch_tol;
  if (flags.max_iters) pcfg.max_outer_iters = *flags.max_iters;
  pcfg.warm_start = !flags.cold_start;

  const auto start = std::chrono::steady_clock::now();
  const PricingOutcome outcome = run_pricing_process(sys, pcfg, ccfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out_dir);
  TrajectoryLog log{sys.external_bus_ids, sys.base_mva, &outcome.trajectory};
  write_trajectory(log, out_dir);
  const RunResult result = make_run_result(sys, outcome);
  write_run_result(result, fs::path(out_dir) / "result.json");
  save_case(c, fs::path(out_dir) / "case.json");

  std::printf("status: %s after %d iterations (%.2f s)\n", result.status.c_str(),
              result.iterations, seconds);
  std::printf("final |h|_inf = %s p.u., J = %s, phi = %s, gap = %s\n",
              format_number(result.mismatch_inf_pu).c_str(), format_number(result.welfare).c_str(),
              format_number(result.dual).c_str(), format_number(result.gap).c_str());
  if (!result.message.empty()) std::printf("note: %s\n", result.message.c_str());
  std::printf("outputs written to %s\n", out_dir.c_str());
  return outcome.converged ? kExitOk : kExitNotConverged;
}

int cmd_report(const std::string& run_dir) {
  const CaseFile c = load_case(fs::path(run_dir) / "case.json");
  const System sys = build_system(c);
  const RunResult result = read_run_result(fs::path(run_dir) / "result.json");

  const EquilibriumPoint point = to_equilibrium_point(sys, result);
  const double eps = c.defaults.mismatch_tol;
  const EquilibriumReport report = verify_equilibrium(sys, point, eps);

  std::printf("case: %s\n", result.case_name.c_str());
  std::printf("status: %s after %d iterations\n", result.status.c_str(), result.iterations);
  print_price_table(sys, result.lambda);
  std::printf("welfare J = %s, dual phi = %s, gap = %s\n", format_number(result.welfare).c_str(),
              format_number(result.dual).c_str(), format_number(result.gap).c_str());
  std::printf("equilibrium verification: %s\n", report.passed() ? "PASS" : "FAIL");
  std::printf("  balance: max |h_n| = %s (threshold %s): %s\n",
              format_number(report.max_abs_mismatch).c_str(), format_number(eps).c_str(),
              report.balance_ok ? "ok" : "violated");
  std::printf("  responses: max component change on re-solve = %s: %s\n",
              format_number(report.max_component_change).c_str(),
              report.responses_ok ? "ok" : "violated");
  for (const std::string& v : report.violations) std::printf("  - %s\n", v.c_str());
  return result.converged && report.passed() ? kExitOk : kExitNotConverged;
}

int cmd_oracle_compare(const std::string& case_path, const std::string& run_dir,
                       const std::string& out_dir) {
  const CaseFile c = load_case(case_path);
  const System sys = build_system(c);
  const RunResult result = read_run_result(fs::path(run_dir) / "result.json");

  const OracleSolution oracle = centralized_solve_small(sys);
  if (!oracle.feasible_found) {
    std::fprintf(stderr, "oracle found no feasible point: %s\n", oracle.message.c_str());
    return kExitError;
  }

  const double oracle_welfare = oracle.welfare * sys.base_mva;
  const double rel_diff = std::abs(result.welfare - oracle_welfare) /
                          std::max(1.0, std::abs(oracle_welfare));
  const bool within = rel_diff <= 1e-3;

  fs::create_directories(out_dir);
  std::FILE* out = std::fopen((fs::path(out_dir) / "oracle_comparison.json").string().c_str(), "wb");
  if (out == nullptr) {
    std::fprintf(stderr, "cannot write comparison report\n");
    return kExitError;
  }
  std::fprintf(out,
               "{\n  \"welfare_run\": %s,\n  \"welfare_oracle\": %s,\n  \"relative_difference\": "
               "%s,\n  \"within_tolerance\": %s,\n  \"oracle_grid_points\": %zu\n}\n",
               format_number(result.welfare).c_str(), format_number(oracle_welfare).c_str(),
               format_number(rel_diff).c_str(), within ? "true" : "false",
               oracle.coarse_points + oracle.refined_points);
  std::fclose(out);

  std::printf("run welfare:    %s\n", format_number(result.welfare).c_str());
  std::printf("oracle welfare: %s (grid %zu + %zu points)\n", format_number(oracle_welfare).c_str(),
              oracle.coarse_points, oracle.refined_points);
  std::printf("relative difference: %s (%s)\n", format_number(rel_diff).c_str(),
              within ? "within 1e-3" : "outside 1e-3");
  return within ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized energy-market pricing simulator"};
  app.require_subcommand(1);

  std::string case_path, out_dir, run_dir;
  RunFlags flags;

  CLI::App* validate = app.add_subcommand("validate", "Check a case file and report every problem");
  validate->add_option("--case", case_path, "case file (JSON)")->required();

  CLI::App* run = app.add_subcommand("run", "Run the pricing process and write trajectory CSVs");
  run->add_option("--case", case_path, "case file (JSON)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  double rho = 0, epsp = 0, epsd = 0, beta = 0, lambda0 = 0, mtol = 0;
  int max_iters = 0;
  run->add_option("--rho", rho, "consensus penalty weight")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.rho = rho; });
  run->add_option("--eps-primal", epsp, "consensus primal tolerance")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.eps_primal = epsp; });
  run->add_option("--eps-dual", epsd, "consensus dual tolerance")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.eps_dual = epsd; });
  run->add_option("--beta", beta, "price step scale (alpha_t = beta/t)")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.beta = beta; });
  run->add_option("--lambda0", lambda0, "initial uniform price level")
      ->each([&](const std::string&) { flags.lambda0 = lambda0; });
  run->add_option("--mismatch-tol", mtol, "outer stopping tolerance on |h|_inf")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.mismatch_tol = mtol; });
  run->add_option("--max-iters", max_iters, "outer iteration cap")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { flags.max_iters = max_iters; });
  run->add_flag("--cold-start", flags.cold_start,
                "reset the consensus state at every price update");

  CLI::App* oracle = app.add_subcommand(
      "oracle-compare", "Compare a finished run against the centralized oracle (tiny cases)");
  oracle->add_option("--case", case_path, "case file (JSON)")->required();
  oracle->add_option("--run", run_dir, "directory written by `run`")->required();
  oracle->add_option("--out", out_dir, "output directory for the comparison report")->required();

  CLI::App* report =
      app.add_subcommand("report", "Summarize a finished run and verify the equilibrium conditions");
  report->add_option("--run", run_dir, "directory written by `run`")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(case_path);
    if (run->parsed()) return cmd_run(case_path, out_dir, flags);
    if (oracle->parsed()) return cmd_oracle_compare(case_path, run_dir, out_dir);
    if (report->parsed()) return cmd_report(run_dir);
  } catch (const ValidationError& err) {
    std::fprintf(stderr, "error:\n");
    for (const ValidationIssue& issue : err.issues())
      std::fprintf(stderr, "  [%s] %s\n", issue.code.c_str(), issue.message.c_str());
    return kExitError;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitError;
  }
  return kExitError;
}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridclear/market_operator.hpp"

namespace gridclear {

/// Everything the CSV writers need: the per-iteration records plus the bus id
/// mapping and currency scale for natural-unit output.
struct TrajectoryLog {
  std::vector<int> external_bus_ids;
  double base_mva = 100.0;
  const std::vector<IterationRecord>* rows = nullptr;
};

/// Writes prices.csv (t,bus,lambda), mismatch.csv (t,bus,h), summary.csv
/// (t,h_inf,J,phi,admm_rounds) and admm_residuals.csv (t,k,r_norm,s_norm)
/// with deterministic row order and 12-significant-digit numbers.
void write_trajectory(const TrajectoryLog& log, const std::filesystem::path& out_dir);

/// %.12g rendering used by every writer.
std::string format_number(double value);

}  // namespace gridclear

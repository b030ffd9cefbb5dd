#include "gridclear/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gridclear {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_trajectory(const TrajectoryLog& log, const std::filesystem::path& out_dir) {
  if (log.rows == nullptr) throw std::invalid_argument("trajectory log has no rows");
  std::filesystem::create_directories(out_dir);
  const auto& rows = *log.rows;

  {
    std::ofstream out = open_csv(out_dir / "prices.csv");
    out << "t,bus,lambda\n";
    for (const IterationRecord& row : rows)
      for (int b = 0; b < row.lambda.size(); ++b)
        out << row.t << ',' << log.external_bus_ids[b] << ',' << format_number(row.lambda[b])
            << '\n';
  }
  {
    std::ofstream out = open_csv(out_dir / "mismatch.csv");
    out << "t,bus,h\n";
    for (const IterationRecord& row : rows)
      for (int b = 0; b < row.mismatch.size(); ++b)
        out << row.t << ',' << log.external_bus_ids[b] << ',' << format_number(row.mismatch[b])
            << '\n';
  }
  {
    std::ofstream out = open_csv(out_dir / "summary.csv");
    out << "t,h_inf,J,phi,admm_rounds\n";
    for (const IterationRecord& row : rows)
      out << row.t << ',' << format_number(row.mismatch_inf) << ','
          << format_number(row.welfare * log.base_mva) << ','
          << format_number(row.dual * log.base_mva) << ',' << row.admm_rounds << '\n';
  }
  {
    std::ofstream out = open_csv(out_dir / "admm_residuals.csv");
    out << "t,k,r_norm,s_norm\n";
    for (const IterationRecord& row : rows) {
      int k = 1;
      for (const RoundResiduals& rr : row.admm_trace)
        out << row.t << ',' << k++ << ',' << format_number(rr.primal_norm) << ','
            << format_number(rr.dual_norm) << '\n';
    }
  }
}

}  // namespace gridclear

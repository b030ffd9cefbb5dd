#pragma once

#include <string>
#include <vector>

#include "gridclear/agents.hpp"
#include "gridclear/network.hpp"
#include "gridclear/transco.hpp"

namespace gridclear {

/// A complete market case in model units: power in per-unit on base_mva,
/// prices in currency/MWh, currency-valued quantities scaled by 1/base_mva.
struct System {
  std::string name;
  double base_mva = 100.0;
  Network network;
  std::vector<DistCo> distcos;
  std::vector<GenCo> gencos;
  std::vector<TransCo> transcos;
  /// External (case file) bus id per internal index, for reporting.
  std::vector<int> external_bus_ids;

  int bus_count() const { return network.bus_count(); }
};

}  // namespace gridclear

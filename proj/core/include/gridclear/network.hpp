#pragma once

#include <set>
#include <vector>

#include "gridclear/types.hpp"

namespace gridclear {

struct Bus {
  int id = 0;
  bool is_slack = false;
};

/// Undirected transmission line stored with canonical endpoint order
/// (from < to). Directed quantities come from evaluation order.
struct Line {
  int from = 0;
  int to = 0;
  double conductance = 0.0;   // G, per-unit, > 0 for stored lines
  double susceptance = 0.0;   // B, per-unit, > 0 for stored lines
  double limit = 0.0;         // K, per-unit power, > 0, same both directions
  double angle_min = 0.0;     // lower bound on theta_from - theta_to, <= 0
  double angle_max = 0.0;     // upper bound, >= 0
};

/// Power flow from the first to the second argument's bus:
///   B * (theta_n - theta_m) + G/2 * (theta_n - theta_m)^2.
/// Asymmetric in argument order; total for any inputs.
double flow(const Line& line, double theta_n, double theta_m);

/// Linear (DC) part of the flow, B * (theta_n - theta_m).
double dc_component(const Line& line, double theta_n, double theta_m);

/// Convex loss part, G/2 * (theta_n - theta_m)^2; symmetric and >= 0.
double loss_component(const Line& line, double theta_n, double theta_m);

/// Total real loss on the line, G * (theta_n - theta_m)^2. Equals
/// flow(n,m) + flow(m,n) exactly.
double line_loss(const Line& line, double theta_n, double theta_m);

class Network {
 public:
  /// Validates local invariants (contiguous ids, distinct endpoints, simple
  /// graph, G/B/K > 0, angle bounds straddling zero, nonempty slack set) and
  /// throws ValidationError listing every violation. Connectivity and
  /// partition structure are validate_topology's job.
  static Network create(int bus_count, std::vector<Line> lines, std::set<int> slack_set);

  int bus_count() const { return static_cast<int>(buses_.size()); }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::set<int>& slack_set() const { return slack_; }
  bool is_slack(int bus) const { return slack_.count(bus) > 0; }

  /// Indices into lines() incident to the given bus.
  const std::vector<int>& incident_lines(int bus) const { return incidence_[bus]; }

  bool connected() const;

 private:
  Network() = default;

  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::set<int> slack_;
  std::vector<std::vector<int>> incidence_;
};

/// Net injection at one bus: sum of flow() over incident lines oriented
/// outward from the bus.
double bus_injection(const Network& net, const OperatingPoint& point, int bus);

/// All bus injections f(theta).
Vector injections(const Network& net, const OperatingPoint& point);

/// Checks the ownership partition and slack structure: every line covered
/// exactly once, each region's bus set holds exactly one slack bus, and the
/// grid is connected. Returns one issue per violated condition.
std::vector<ValidationIssue> validate_topology(
    const Network& net, const std::vector<std::vector<int>>& transco_line_sets);

bool within_angle_limits(const Network& net, const OperatingPoint& point);

}  // namespace gridclear

#include "gridclear/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

namespace gridclear {

double flow(const Line& line, double theta_n, double theta_m) {
  const double d = theta_n - theta_m;
  return line.susceptance * d + 0.5 * line.conductance * d * d;
}

double dc_component(const Line& line, double theta_n, double theta_m) {
  return line.susceptance * (theta_n - theta_m);
}

double loss_component(const Line& line, double theta_n, double theta_m) {
  const double d = theta_n - theta_m;
  return 0.5 * line.conductance * d * d;
}

double line_loss(const Line& line, double theta_n, double theta_m) {
  const double d = theta_n - theta_m;
  return line.conductance * d * d;
}

Network Network::create(int bus_count, std::vector<Line> lines, std::set<int> slack_set) {
  std::vector<ValidationIssue> issues;
  if (bus_count <= 0) {
    issues.push_back({"empty_network", "network must contain at least one bus"});
    throw ValidationError(std::move(issues));
  }

  for (auto& line : lines) {
    if (line.from > line.to) {
      std::swap(line.from, line.to);
      std::swap(line.angle_min, line.angle_max);
      line.angle_min = -line.angle_min;
      line.angle_max = -line.angle_max;
    }
  }

  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Line& l = lines[i];
    const std::string tag = "line " + std::to_string(i) + " (" + std::to_string(l.from) +
                            "," + std::to_string(l.to) + ")";
    if (l.from == l.to) issues.push_back({"self_loop", tag + ": endpoints must differ"});
    if (l.from < 0 || l.to >= bus_count)
      issues.push_back({"unknown_bus", tag + ": endpoint outside 0.." + std::to_string(bus_count - 1)});
    if (!seen.insert({l.from, l.to}).second)
      issues.push_back({"duplicate_line", tag + ": at most one line per bus pair"});
    if (!(l.conductance > 0.0)) issues.push_back({"nonpositive_conductance", tag});
    if (!(l.susceptance > 0.0)) issues.push_back({"nonpositive_susceptance", tag});
    if (!(l.limit > 0.0)) issues.push_back({"nonpositive_limit", tag});
    if (!(l.angle_min <= 0.0 && 0.0 <= l.angle_max))
      issues.push_back({"bad_angle_bounds", tag + ": bounds must straddle zero"});
  }

  if (slack_set.empty()) issues.push_back({"no_slack", "slack set must be nonempty"});
  for (int s : slack_set)
    if (s < 0 || s >= bus_count)
      issues.push_back({"unknown_bus", "slack bus " + std::to_string(s) + " does not exist"});

  if (!issues.empty()) throw ValidationError(std::move(issues));

  Network net;
  net.buses_.resize(bus_count);
  for (int b = 0; b < bus_count; ++b) net.buses_[b] = Bus{b, slack_set.count(b) > 0};
  net.lines_ = std::move(lines);
  net.slack_ = std::move(slack_set);
  net.incidence_.assign(bus_count, {});
  for (std::size_t i = 0; i < net.lines_.size(); ++i) {
    net.incidence_[net.lines_[i].from].push_back(static_cast<int>(i));
    net.incidence_[net.lines_[i].to].push_back(static_cast<int>(i));
  }
  return net;
}

bool Network::connected() const {
  std::vector<char> seen(buses_.size(), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!frontier.empty()) {
    const int bus = frontier.front();
    frontier.pop();
    for (int li : incidence_[bus]) {
      const Line& l = lines_[li];
      const int other = l.from == bus ? l.to : l.from;
      if (!seen[other]) {
        seen[other] = 1;
        ++visited;
        frontier.push(other);
      }
    }
  }
  return visited == bus_count();
}

double bus_injection(const Network& net, const OperatingPoint& point, int bus) {
  double sum = 0.0;
  for (int li : net.incident_lines(bus)) {
    const Line& l = net.lines()[li];
    const int other = l.from == bus ? l.to : l.from;
    sum += flow(l, point.theta[bus], point.theta[other]);
  }
  return sum;
}

Vector injections(const Network& net, const OperatingPoint& point) {
  Vector f = Vector::Zero(net.bus_count());
  for (int b = 0; b < net.bus_count(); ++b) f[b] = bus_injection(net, point, b);
  return f;
}

std::vector<ValidationIssue> validate_topology(
    const Network& net, const std::vector<std::vector<int>>& transco_line_sets) {
  std::vector<ValidationIssue> issues;

  std::vector<int> owner(net.lines().size(), -1);
  for (std::size_t t = 0; t < transco_line_sets.size(); ++t) {
    for (int li : transco_line_sets[t]) {
      if (li < 0 || li >= static_cast<int>(net.lines().size())) {
        issues.push_back({"unknown_line", "transco " + std::to_string(t) +
                                              " references line index " + std::to_string(li)});
        continue;
      }
      if (owner[li] >= 0)
        issues.push_back({"edge_overlap", "line " + std::to_string(li) + " owned by transcos " +
                                              std::to_string(owner[li]) + " and " + std::to_string(t)});
      else
        owner[li] = static_cast<int>(t);
    }
    if (transco_line_sets[t].empty())
      issues.push_back({"empty_transco", "transco " + std::to_string(t) + " owns no lines"});
  }
  for (std::size_t li = 0; li < owner.size(); ++li)
    if (owner[li] < 0)
      issues.push_back({"edge_not_covered", "line " + std::to_string(li) + " is owned by no transco"});

  for (std::size_t t = 0; t < transco_line_sets.size(); ++t) {
    std::set<int> region;
    for (int li : transco_line_sets[t]) {
      if (li < 0 || li >= static_cast<int>(net.lines().size())) continue;
      region.insert(net.lines()[li].from);
      region.insert(net.lines()[li].to);
    }
    int slack_count = 0;
    for (int b : region) slack_count += net.is_slack(b) ? 1 : 0;
    if (slack_count == 0)
      issues.push_back({"missing_slack_in_region",
                        "transco " + std::to_string(t) + " has no slack bus in its region"});
    else if (slack_count > 1)
      issues.push_back({"multiple_slack_in_region",
                        "transco " + std::to_string(t) + " has " + std::to_string(slack_count) +
                            " slack buses in its region"});
  }

  if (!net.connected()) issues.push_back({"disconnected_graph", "network graph is not connected"});
  return issues;
}

bool within_angle_limits(const Network& net, const OperatingPoint& point) {
  constexpr double pi = std::numbers::pi;
  for (int b = 0; b < net.bus_count(); ++b) {
    if (std::abs(point.theta[b]) > pi) return false;
    if (net.is_slack(b) && point.theta[b] != 0.0) return false;
  }
  return true;
}

}  // namespace gridclear

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridclear {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-bus locational marginal price, currency/MWh.
using PriceVector = Eigen::VectorXd;

/// Per-bus voltage angles in radians; slack entries are pinned to zero by
/// every producer of an OperatingPoint.
struct OperatingPoint {
  Vector theta;
};

/// One machine-readable validation finding (code + human message).
struct ValidationIssue {
  std::string code;
  std::string message;
};

/// Thrown by loaders/constructors after collecting *all* violations.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<ValidationIssue>& issues) {
    std::string out;
    for (const auto& issue : issues) {
      if (!out.empty()) out += "; ";
      out += "[" + issue.code + "] " + issue.message;
    }
    return out.empty() ? std::string("validation failed") : out;
  }

  std::vector<ValidationIssue> issues_;
};

/// Raised when edge-wise price sums are not strictly positive where a
/// computation requires them (concavity of the transmission surplus).
class PriceSumViolation : public std::runtime_error {
 public:
  PriceSumViolation(std::string message, std::vector<int> line_indices)
      : std::runtime_error(std::move(message)), lines_(std::move(line_indices)) {}

  const std::vector<int>& violating_lines() const { return lines_; }

 private:
  std::vector<int> lines_;
};

}  // namespace gridclear

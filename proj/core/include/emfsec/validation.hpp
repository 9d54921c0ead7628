#pragma once

// Oracle suites behind the `validate` subcommand: closed forms against Monte
// Carlo, analytic gradients against finite differences, the Fenchel
// inequality and subproblem KKT residuals.

#include <cstdint>
#include <string>
#include <vector>

namespace emfsec {

enum class ValidationLevel { fast, full };

struct ValidationOptions {
  ValidationLevel level = ValidationLevel::fast;
  /// Empty, or "gamma" to swap in a deliberately wrong incomplete gamma
  /// function so the suite can demonstrate that it catches the defect.
  std::string inject_fault;
  std::uint64_t seed = 20240607;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;      // worst observed statistic (meaning per check)
  double threshold = 0.0;
  double seconds = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::string level;
  std::string inject_fault;
  bool passed = false;
  double seconds = 0.0;
  std::vector<CheckResult> checks;

  std::string to_json() const;
};

ValidationLevel parse_validation_level(const std::string& s);

/// Throws std::invalid_argument for an unknown fault name.
ValidationReport run_validation(const ValidationOptions& opt);

}  // namespace emfsec

#pragma once

#include <string>
#include <vector>

namespace rescomp::app {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool checks_passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;

  bool pass() const { return checks_passed && seconds < budget_seconds; }
};

// Criteria 1..11; `only` restricts the run to the listed ids.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {});

}  // namespace rescomp::app

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softac/config.hpp"

namespace softac {

struct VerifyCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::string status;  // pass | fail | out_of_hypothesis
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  std::string rates_csv;  // per-K sub-optimality / bound table

  int num_failed() const;
  std::string to_json() const;
};

// Known suites: reduction, rates, decoupling, tau0, regret, generic_regret,
// lemmas. An empty suite list in cfg means "run all". Cells run in parallel
// across `jobs` workers; the report order is deterministic.
VerifyReport verify_theory(const VerifyConfig& cfg, int jobs = 1);

}  // namespace softac

#pragma once
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "popsim/config.hpp"

namespace popsim {

/// @brief Outcome of one invariant suite
struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json metrics;
  double seconds = 0.0;
};

struct VerifyOptions {
  Config config = Config::defaults();
  std::optional<std::string> only;   ///< run a single suite
  /// Progress callback invoked after each suite
  std::function<void(const InvariantResult&)> on_result;
};

const std::vector<std::string>& verify_suite_names();

/// Runs the invariant suites; numerical guard errors propagate to the caller
std::vector<InvariantResult> run_verification(const VerifyOptions& opt);

}  // namespace popsim

#pragma once

// End-to-end scenario driver: build a fabric from the goal's hosts, solve and
// enact the initial deployment, replay a failure scenario, and report the
// final state. Fully deterministic for identical inputs.

#include <optional>
#include <string>
#include <vector>

#include "adme/fabric.hpp"
#include "adme/model.hpp"

namespace adme::runner {

struct RunOptions {
  unsigned seed = 0;
  std::optional<long> untilMs;  // default: last directive + 10 heartbeats
  int perHostCap = 1;
  fabric::FabricParams params{};
  // Baseline DDD whose bindings are pinned for the initial solve.
  std::optional<std::string> initialDdd;
};

struct RunReport {
  enum class Status { Ok, Degraded };
  // Events from scenario start; the initial enactment is setup and not logged.
  std::vector<std::string> eventLog;
  std::string initialDdd;  // deployment right after bootstrap
  std::string finalDdd;    // empty when nothing was ever deployed
  std::vector<model::Violation> finalViolations;
  // Set when the final deployment no longer matches the goal's schema at all
  // (e.g. it still references a removed host).
  std::string schemaError;
  int solverCalls = 0;
  Status exitStatus = Status::Degraded;
};

RunReport run_scenario(const std::string& goalText, const std::string& scenarioText,
                       const RunOptions& options);

}  // namespace adme::runner

#include "adme/runner.hpp"

#include <algorithm>

#include "adme/madme.hpp"

namespace adme::runner {

RunReport run_scenario(const std::string& goalText, const std::string& scenarioText,
                       const RunOptions& options) {
  deladas::Goal goal = deladas::parse_goal(goalText);
  std::vector<fabric::ScenarioDirective> directives =
      fabric::parse_scenario(scenarioText);

  fabric::Fabric fab(goal.hosts, options.params, options.seed);
  madme::Manager manager(std::move(goal), fab, options.perHostCap);
  fab.set_event_sink([&](const fabric::FabricEvent& event) { manager.on_event(event); });

  RunReport report;
  bool bootstrapped = true;
  try {
    manager.bootstrap(options.initialDdd);
    report.initialDdd = manager.deployment_ddd();
  } catch (const madme::ConstraintError&) {
    bootstrapped = false;
  }

  // The log covers the scenario; setup enactment is not part of it.
  fab.clear_event_log();

  long lastDirective = 0;
  std::optional<long> stopAt;
  for (const auto& d : directives) {
    lastDirective = std::max(lastDirective, d.timeMs);
    if (d.kind == fabric::ScenarioDirective::Kind::Stop) {
      if (!stopAt) stopAt = d.timeMs;
      continue;
    }
    fab.inject(d);
  }
  long until = options.untilMs.value_or(lastDirective +
                                        10L * options.params.heartbeatPeriodMs);
  if (stopAt) until = std::min(until, *stopAt);
  if (bootstrapped || !directives.empty()) fab.run_until(until);

  report.eventLog = fab.format_log();
  report.solverCalls = manager.solver_call_count();
  if (manager.deployed()) {
    report.finalDdd = manager.deployment_ddd();
    try {
      report.finalViolations = model::validate(*manager.deployed(), manager.goal());
    } catch (const model::SchemaError& e) {
      report.schemaError = e.what();
    }
  }
  bool ok = bootstrapped && manager.phase() == madme::Phase::Idle &&
            manager.deployed() && report.finalViolations.empty() &&
            report.schemaError.empty();
  report.exitStatus = ok ? RunReport::Status::Ok : RunReport::Status::Degraded;
  return report;
}

}  // namespace adme::runner

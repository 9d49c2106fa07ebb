#pragma once

// The autonomic manager: holds the goal, performs satisfy/enact, consumes
// fabric events, discriminates process failures (restart in place, no solver
// call) from host failures (pin survivors and re-solve, relaxing pins one at
// a time), and backs the external HTTP interface.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "adme/deladas.hpp"
#include "adme/fabric.hpp"
#include "adme/model.hpp"
#include "adme/solver.hpp"

namespace adme::madme {

class GoalError : public std::runtime_error {
public:
  explicit GoalError(const std::string& msg)
      : std::runtime_error("goal error: " + msg) {}
};

class NoDeployment : public std::runtime_error {
public:
  NoDeployment() : std::runtime_error("no deployment has been enacted") {}
};

class EnactError : public std::runtime_error {
public:
  explicit EnactError(const std::string& msg)
      : std::runtime_error("enact error: " + msg) {}
};

struct Binding {
  std::string typeName;
  std::string host;
  std::string instanceId;
};

// Raised when the relaxation ladder is exhausted without a solution.
class ConstraintError : public std::runtime_error {
public:
  ConstraintError(const std::string& reason, std::vector<Binding> removedBindings,
                  solver::SolveStatus lastStatus)
      : std::runtime_error("constraint error: " + reason),
        reason_(reason),
        removed_(std::move(removedBindings)),
        lastStatus_(lastStatus) {}
  const std::string& reason() const { return reason_; }
  const std::vector<Binding>& removed_bindings() const { return removed_; }
  solver::SolveStatus last_status() const { return lastStatus_; }

private:
  std::string reason_;
  std::vector<Binding> removed_;
  solver::SolveStatus lastStatus_;
};

enum class Phase { Idle, Solving, Enacting, Degraded };

struct SatisfyResult {
  solver::SolveStatus status = solver::SolveStatus::Unsat;
  std::vector<model::DddDocument> ddds;
};

struct EnactmentReport {
  std::vector<std::string> actions;  // formatted, in firing order
  bool ok = true;
};

class Manager {
public:
  Manager(deladas::Goal goal, fabric::Fabric& fabric, int perHostCap = 1);

  // Initial deployment: solves the manager's own goal (optionally seeded with
  // a baseline configuration whose bindings are pinned) and enacts the first
  // solution. Throws ConstraintError when unsatisfiable.
  void bootstrap(const std::optional<std::string>& baselineDdd = std::nullopt);

  // Pure query over caller-supplied texts: parses, solves and returns up to
  // maxSolutions canonical DDDs. A non-null config pins its bindings and
  // relaxes them per the evolution ladder; an exhausted ladder raises
  // ConstraintError. Never mutates manager state. maxSolutions 0 = unbounded.
  SatisfyResult satisfy(const std::string& constraintsText,
                        const std::string& resourcesText,
                        const std::optional<std::string>& configXml,
                        int maxSolutions) const;

  // Diffs the deployed configuration against the given DDD and fires the
  // plan. Teardown actions on hosts that are already down are skipped.
  EnactmentReport enact(const std::string& dddXml);

  void on_event(const fabric::FabricEvent& event);

  // Removes the failed hosts from the goal, pins the surviving bindings and
  // solves, removing pins (ascending wire degree, then host, then id) until
  // satisfiable; enacts the first solution. Throws ConstraintError after the
  // last pin is gone.
  model::Configuration evolve(const std::set<std::string>& failedHosts);

  std::string resources_text() const;
  std::string constraints_text() const;
  model::DddDocument deployment_ddd() const;  // throws NoDeployment

  Phase phase() const { return phase_; }
  int solver_call_count() const { return solverCallCount_; }
  const deladas::Goal& goal() const { return goal_; }
  const std::optional<model::Configuration>& deployed() const { return deployed_; }
  int per_host_cap() const { return perHostCap_; }

private:
  deladas::Goal goal_;
  fabric::Fabric& fabric_;
  int perHostCap_;
  std::optional<model::Configuration> deployed_;
  mutable int solverCallCount_ = 0;  // satisfy() is a pure query and never counts
  Phase phase_ = Phase::Idle;

  struct LadderOutcome {
    solver::SolveOutcome outcome;
    std::vector<Binding> removed;
  };
  // Shared pin-and-relax loop. Counts solver calls when countCalls is set.
  LadderOutcome ladder_solve(const deladas::Goal& goal,
                             const model::Configuration& pinsSource,
                             const std::set<std::string>& excludedHosts,
                             int maxSolutions, bool countCalls) const;

  solver::SolveOutcome plain_solve(const deladas::Goal& goal, int maxSolutions,
                                   bool countCalls,
                                   const std::map<std::string, bool>& pins) const;

  void enact_config(const model::Configuration& target);
  void restart_process(const std::string& host, const std::string& instanceId);
};

}  // namespace adme::madme

#include "adme/madme.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "adme/compiler.hpp"

namespace adme::madme {

using deladas::Goal;
using fabric::FabricEvent;
using model::Configuration;
using solver::SolveStatus;

Manager::Manager(Goal goal, fabric::Fabric& fabric, int perHostCap)
    : goal_(std::move(goal)), fabric_(fabric), perHostCap_(perHostCap) {}

solver::SolveOutcome Manager::plain_solve(const Goal& goal, int maxSolutions,
                                          bool countCalls,
                                          const std::map<std::string, bool>& pins) const {
  auto problem = compiler::compile(goal, perHostCap_);
  solver::SolveOptions options;
  options.maxSolutions = maxSolutions;
  options.pins = pins;
  if (countCalls) ++solverCallCount_;
  return solver::solve(problem, goal, options);
}

Manager::LadderOutcome Manager::ladder_solve(const Goal& goal,
                                             const Configuration& pinsSource,
                                             const std::set<std::string>& excludedHosts,
                                             int maxSolutions, bool countCalls) const {
  // Survivors, ordered for removal: ascending wire degree in the source
  // configuration, ties by host name, then instance id.
  std::map<std::string, int> degree;
  for (const auto& wire : pinsSource.wires) {
    ++degree[wire.src.instanceId];
    ++degree[wire.dst.instanceId];
  }
  struct Survivor {
    Binding binding;
    int degree;
  };
  std::vector<Survivor> survivors;
  for (const auto& inst : pinsSource.instances) {
    if (excludedHosts.count(inst.host)) continue;
    if (!goal.find_host(inst.host)) continue;
    survivors.push_back({{inst.type, inst.host, inst.id}, degree[inst.id]});
  }
  std::sort(survivors.begin(), survivors.end(), [](const Survivor& a, const Survivor& b) {
    return std::tie(a.degree, a.binding.host, a.binding.instanceId) <
           std::tie(b.degree, b.binding.host, b.binding.instanceId);
  });

  LadderOutcome result;
  size_t removedCount = 0;
  while (true) {
    std::map<std::string, bool> pins;
    for (size_t i = removedCount; i < survivors.size(); ++i)
      pins[survivors[i].binding.instanceId] = true;
    result.outcome = plain_solve(goal, maxSolutions, countCalls, pins);
    if (result.outcome.status == SolveStatus::Sat) return result;
    if (removedCount == survivors.size()) return result;  // ladder exhausted
    result.removed.push_back(survivors[removedCount].binding);
    ++removedCount;
  }
}

void Manager::bootstrap(const std::optional<std::string>& baselineDdd) {
  phase_ = Phase::Solving;
  solver::SolveOutcome outcome;
  if (baselineDdd) {
    Configuration baseline = model::from_ddd(*baselineDdd);
    LadderOutcome ladder = ladder_solve(goal_, baseline, {}, 1, /*countCalls=*/true);
    outcome = std::move(ladder.outcome);
    if (outcome.status != SolveStatus::Sat) {
      phase_ = Phase::Degraded;
      std::string reason = "initial goal is unsatisfiable";
      fabric_.log_constraint_error(reason);
      throw ConstraintError(reason, std::move(ladder.removed), outcome.status);
    }
  } else {
    outcome = plain_solve(goal_, 1, /*countCalls=*/true, {});
    if (outcome.status != SolveStatus::Sat) {
      phase_ = Phase::Degraded;
      std::string reason = "initial goal is unsatisfiable";
      fabric_.log_constraint_error(reason);
      throw ConstraintError(reason, {}, outcome.status);
    }
  }
  enact_config(outcome.solutions.front());
  phase_ = Phase::Idle;
}

SatisfyResult Manager::satisfy(const std::string& constraintsText,
                               const std::string& resourcesText,
                               const std::optional<std::string>& configXml,
                               int maxSolutions) const {
  Goal goal;
  try {
    Goal resources = deladas::parse_resources(resourcesText);
    Goal constraints = deladas::parse_constraintset(constraintsText);
    goal = deladas::merge(resources, constraints);
  } catch (const deladas::DeladasError& e) {
    throw GoalError(e.what());
  }

  SatisfyResult result;
  solver::SolveOutcome outcome;
  if (configXml) {
    Configuration baseline;
    try {
      baseline = model::from_ddd(*configXml);
    } catch (const model::DddParseError& e) {
      throw GoalError(e.what());
    }
    std::set<std::string> candidateIds;
    for (const auto& c : compiler::expand_candidates(goal, perHostCap_))
      candidateIds.insert(c.id);
    for (const auto& inst : baseline.instances)
      if (!candidateIds.count(inst.id))
        throw GoalError("config instance '" + inst.id +
                        "' does not match the given resources");
    LadderOutcome ladder =
        ladder_solve(goal, baseline, {}, maxSolutions, /*countCalls=*/false);
    if (ladder.outcome.status != SolveStatus::Sat) {
      // Ladder exhausted without a solution.
      throw ConstraintError("no configuration satisfies the constraints",
                            std::move(ladder.removed), ladder.outcome.status);
    }
    outcome = std::move(ladder.outcome);
  } else {
    outcome = plain_solve(goal, maxSolutions, /*countCalls=*/false, {});
  }
  result.status = outcome.status;
  for (const auto& config : outcome.solutions) result.ddds.push_back(model::to_ddd(config));
  return result;
}

void Manager::enact_config(const Configuration& target) {
  phase_ = Phase::Enacting;
  Configuration base;
  base.goalName = target.goalName;
  if (deployed_) base = *deployed_;

  for (const auto& inst : target.instances) {
    if (!fabric_.host_up(inst.host)) {
      phase_ = Phase::Degraded;
      throw EnactError("target host '" + inst.host + "' is unreachable");
    }
  }

  model::EnactmentPlan plan = model::diff(base, target, goal_);
  for (const auto& action : plan.actions) {
    // Teardown on dead hosts is moot: those machines and wires died with the
    // host, so only live-host actions are fired.
    if (action.kind == model::Action::Kind::Terminate &&
        !fabric_.host_up(action.host))
      continue;
    if (action.kind == model::Action::Kind::Unwire) {
      const model::Instance* src = base.find_instance(action.src.instanceId);
      const model::Instance* dst = base.find_instance(action.dst.instanceId);
      bool srcDead = src && !fabric_.host_up(src->host);
      bool dstDead = dst && !fabric_.host_up(dst->host);
      if (srcDead || dstDead) continue;
    }
    try {
      fabric_.fire(action);
    } catch (const fabric::FireError& e) {
      phase_ = Phase::Degraded;
      throw EnactError(std::string(e.what()) + " (while firing " + action.text() + ")");
    }
  }
  deployed_ = target;
}

EnactmentReport Manager::enact(const std::string& dddXml) {
  Configuration target;
  try {
    target = model::from_ddd(dddXml);
  } catch (const model::DddParseError& e) {
    throw EnactError(e.what());
  }
  Configuration base;
  base.goalName = target.goalName;
  if (deployed_) base = *deployed_;
  model::EnactmentPlan plan = model::diff(base, target, goal_);

  EnactmentReport report;
  for (const auto& action : plan.actions) report.actions.push_back(action.text());
  enact_config(target);
  phase_ = Phase::Idle;
  return report;
}

void Manager::restart_process(const std::string& host, const std::string& instanceId) {
  const model::Instance* inst = deployed_->find_instance(instanceId);
  const auto* type = goal_.find_type(inst->type);
  model::Action install;
  install.kind = model::Action::Kind::InstallStart;
  install.host = host;
  install.instanceId = instanceId;
  install.typeName = inst->type;
  if (type) install.codeUri = type->code;
  fabric_.fire(install);
  for (const auto& wire : deployed_->wires) {
    if (wire.src.instanceId != instanceId && wire.dst.instanceId != instanceId)
      continue;
    model::Action rewire;
    rewire.kind = model::Action::Kind::Wire;
    rewire.src = wire.src;
    rewire.dst = wire.dst;
    const model::Instance* srcInst = deployed_->find_instance(wire.src.instanceId);
    rewire.host = srcInst ? srcInst->host : host;
    fabric_.fire(rewire);
  }
}

void Manager::on_event(const FabricEvent& event) {
  switch (event.kind) {
    case FabricEvent::Kind::AmpHeartbeat:
      return;
    case FabricEvent::Kind::ProcessFailed: {
      // The collocated AMP reported it, so the host is alive and only the
      // process needs restarting; no solver call, deployment unchanged.
      if (!deployed_ || !deployed_->find_instance(event.instanceId)) return;
      phase_ = Phase::Enacting;
      try {
        restart_process(event.host, event.instanceId);
        phase_ = Phase::Idle;
      } catch (const fabric::FireError& e) {
        fabric_.log_constraint_error(std::string("restart failed: ") + e.what());
        phase_ = Phase::Degraded;
      }
      return;
    }
    case FabricEvent::Kind::HostFailed: {
      if (!goal_.find_host(event.host)) return;  // stale detection
      if (!deployed_) {
        std::erase_if(goal_.hosts,
                      [&](const deladas::HostDecl& h) { return h.name == event.host; });
        return;
      }
      try {
        evolve({event.host});
      } catch (const ConstraintError&) {
        // evolve logged the error and entered DEGRADED
      }
      return;
    }
    case FabricEvent::Kind::ResourceChange: {
      if (event.detail.rfind("add-host ", 0) == 0) {
        deladas::HostDecl decl;
        decl.name = event.host;
        size_t ipPos = event.detail.find("ip=");
        decl.attributes.emplace_back(
            "ipaddress", ipPos == std::string::npos ? "0.0.0.0"
                                                    : event.detail.substr(ipPos + 3));
        if (!goal_.find_host(decl.name)) goal_.hosts.push_back(std::move(decl));
        if (deployed_ && !model::validate(*deployed_, goal_).empty()) {
          try {
            evolve({});
          } catch (const ConstraintError&) {
          }
        }
      }
      return;
    }
    default:
      return;
  }
}

Configuration Manager::evolve(const std::set<std::string>& failedHosts) {
  if (!deployed_) throw NoDeployment();
  phase_ = Phase::Solving;
  std::erase_if(goal_.hosts, [&](const deladas::HostDecl& h) {
    return failedHosts.count(h.name) > 0;
  });
  Configuration old = *deployed_;

  LadderOutcome ladder = ladder_solve(goal_, old, failedHosts, 1, /*countCalls=*/true);
  if (ladder.outcome.status != SolveStatus::Sat) {
    std::string reason =
        "no configuration satisfies the goal over the remaining hosts (removed " +
        std::to_string(ladder.removed.size()) + " surviving bindings)";
    fabric_.log_constraint_error(reason);
    phase_ = Phase::Degraded;
    throw ConstraintError(reason, std::move(ladder.removed), ladder.outcome.status);
  }

  const Configuration& next = ladder.outcome.solutions.front();
  try {
    enact_config(next);
  } catch (const EnactError& e) {
    fabric_.log_constraint_error(std::string("enactment failed: ") + e.what());
    phase_ = Phase::Degraded;
    throw ConstraintError(e.what(), std::move(ladder.removed),
                          ladder.outcome.status);
  }
  phase_ = Phase::Idle;
  return next;
}

std::string Manager::resources_text() const { return deladas::print_resources(goal_); }

std::string Manager::constraints_text() const {
  return deladas::print_constraintset(goal_);
}

model::DddDocument Manager::deployment_ddd() const {
  if (!deployed_) throw NoDeployment();
  return model::to_ddd(*deployed_);
}

}  // namespace adme::madme

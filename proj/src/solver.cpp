#include "adme/solver.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <tuple>

namespace adme::solver {

using compiler::Clause;
using compiler::ClauseKind;
using compiler::CspProblem;
using compiler::Lit;
using compiler::Var;
using deladas::Goal;

std::string_view status_text(SolveStatus status) {
  switch (status) {
    case SolveStatus::Sat: return "SAT";
    case SolveStatus::Unsat: return "UNSAT";
    case SolveStatus::Limit: return "LIMIT";
  }
  return "?";
}

namespace {

constexpr signed char kUnassigned = -1;

class Engine {
public:
  Engine(const CspProblem& problem, const Goal& goal, const SolveOptions& options)
      : p_(problem), options_(options) {
    value_.assign(p_.numVars, kUnassigned);
    build_occurrences();
    if (!goal.componentTypes.empty())
      firstType_ = goal.componentTypes.front().name;
    trueFirst_.assign(p_.numVars, 0);
    for (const auto& c : p_.candidates)
      if (c.typeName == firstType_) trueFirst_[c.existVar] = 1;
  }

  SolveOutcome run() {
    auto start = std::chrono::steady_clock::now();
    SolveOutcome outcome;
    bool exhausted = search(outcome);
    outcome.stats.nodes = nodes_;
    outcome.stats.propagations = propagations_;
    outcome.stats.wallMs =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  start)
            .count();
    if (!outcome.solutions.empty())
      outcome.status = SolveStatus::Sat;
    else
      outcome.status = exhausted ? SolveStatus::Unsat : SolveStatus::Limit;
    return outcome;
  }

private:
  const CspProblem& p_;
  const SolveOptions& options_;
  std::vector<signed char> value_;
  std::vector<signed char> trueFirst_;
  std::string firstType_;

  struct Occurrence {
    int clause;
    bool positive;  // sign of the var's literal in the clause body
    bool isHead;
  };
  std::vector<std::vector<Occurrence>> occurs_;
  struct Counters {
    int numTrue = 0;
    int numFalse = 0;
  };
  std::vector<Counters> counters_;

  std::vector<Var> trail_;
  struct Frame {
    Var var;
    size_t trailSize;
    bool firstValue;
    bool flipped;
  };
  std::vector<Frame> frames_;

  long nodes_ = 0;
  long propagations_ = 0;

  void build_occurrences() {
    occurs_.resize(p_.numVars);
    counters_.resize(p_.clauses.size());
    for (size_t ci = 0; ci < p_.clauses.size(); ++ci) {
      const Clause& clause = p_.clauses[ci];
      for (const Lit& lit : clause.lits)
        occurs_[lit.var].push_back({static_cast<int>(ci), !lit.neg, false});
      if (clause.kind == ClauseKind::ReifiedOr ||
          clause.kind == ClauseKind::ReifiedAnd ||
          clause.kind == ClauseKind::ReifiedCard)
        occurs_[clause.head.var].push_back({static_cast<int>(ci), !clause.head.neg, true});
    }
  }

  bool lit_value_known(const Lit& lit) const { return value_[lit.var] != kUnassigned; }
  bool lit_true(const Lit& lit) const {
    return value_[lit.var] == (lit.neg ? 0 : 1);
  }

  // Assigns a variable, updating clause counters. Returns false on conflict
  // with an existing assignment.
  bool assign(Var var, bool val, std::vector<int>& dirtyClauses) {
    if (value_[var] != kUnassigned) return value_[var] == (val ? 1 : 0);
    value_[var] = val ? 1 : 0;
    trail_.push_back(var);
    for (const Occurrence& occ : occurs_[var]) {
      if (!occ.isHead) {
        bool litTrue = (occ.positive == val);
        if (litTrue)
          ++counters_[occ.clause].numTrue;
        else
          ++counters_[occ.clause].numFalse;
      }
      dirtyClauses.push_back(occ.clause);
    }
    return true;
  }

  void unassign_to(size_t trailSize) {
    while (trail_.size() > trailSize) {
      Var var = trail_.back();
      trail_.pop_back();
      bool val = value_[var] == 1;
      for (const Occurrence& occ : occurs_[var]) {
        if (occ.isHead) continue;
        bool litTrue = (occ.positive == val);
        if (litTrue)
          --counters_[occ.clause].numTrue;
        else
          --counters_[occ.clause].numFalse;
      }
      value_[var] = kUnassigned;
    }
  }

  // Applies one clause's propagation rules. Returns false on conflict.
  bool propagate_clause(int ci, std::vector<int>& dirty) {
    const Clause& clause = p_.clauses[ci];
    const Counters& c = counters_[ci];
    int n = static_cast<int>(clause.lits.size());
    int maxTrue = n - c.numFalse;

    auto assign_lit = [&](const Lit& lit, bool val) {
      bool varVal = lit.neg ? !val : val;
      if (!assign(lit.var, varVal, dirty)) return false;
      ++propagations_;
      return true;
    };
    auto force_unassigned = [&](bool val) {
      for (const Lit& lit : clause.lits) {
        if (lit_value_known(lit)) continue;
        if (!assign_lit(lit, val)) return false;
      }
      return true;
    };

    auto enforce_or_true = [&]() {
      if (c.numTrue >= 1) return true;
      if (c.numFalse == n) return false;
      if (c.numFalse == n - 1) return force_unassigned(true);
      return true;
    };
    auto enforce_all_false = [&]() {
      if (c.numTrue >= 1) return false;
      return force_unassigned(false);
    };
    auto enforce_all_true = [&]() {
      if (c.numFalse >= 1) return false;
      return force_unassigned(true);
    };
    auto enforce_and_false = [&]() {  // at least one lit false
      if (c.numFalse >= 1) return true;
      if (c.numTrue == n) return false;
      if (c.numTrue == n - 1) return force_unassigned(false);
      return true;
    };
    auto enforce_sum_inside = [&](long lo, long hi) {
      if (c.numTrue > hi || maxTrue < lo) return false;
      if (c.numTrue == hi && maxTrue > hi) return force_unassigned(false);
      if (maxTrue == lo && c.numTrue < lo) return force_unassigned(true);
      return true;
    };
    auto enforce_sum_outside = [&](long lo, long hi) {
      // final sum lies in [numTrue, maxTrue]
      if (c.numTrue > hi || maxTrue < lo) return true;  // already outside
      if (c.numTrue >= lo && maxTrue <= hi) return false;
      if (c.numTrue >= lo) {
        // can only escape upwards: need sum >= hi + 1
        if (maxTrue == hi + 1) return force_unassigned(true);
      } else if (maxTrue <= hi) {
        // can only escape downwards: need sum <= lo - 1
        if (c.numTrue == lo - 1) return force_unassigned(false);
      }
      return true;
    };

    switch (clause.kind) {
      case ClauseKind::Unit:
      case ClauseKind::Or:
        return enforce_or_true();
      case ClauseKind::Card:
        return enforce_sum_inside(clause.lo, clause.hi);
      case ClauseKind::ReifiedOr: {
        if (lit_value_known(clause.head)) {
          return lit_true(clause.head) ? enforce_or_true() : enforce_all_false();
        }
        if (c.numTrue >= 1) return assign_lit(clause.head, true);
        if (c.numFalse == n) return assign_lit(clause.head, false);
        return true;
      }
      case ClauseKind::ReifiedAnd: {
        if (lit_value_known(clause.head)) {
          return lit_true(clause.head) ? enforce_all_true() : enforce_and_false();
        }
        if (c.numFalse >= 1) return assign_lit(clause.head, false);
        if (c.numTrue == n) return assign_lit(clause.head, true);
        return true;
      }
      case ClauseKind::ReifiedCard: {
        if (lit_value_known(clause.head)) {
          return lit_true(clause.head) ? enforce_sum_inside(clause.lo, clause.hi)
                                       : enforce_sum_outside(clause.lo, clause.hi);
        }
        if (c.numTrue >= clause.lo && maxTrue <= clause.hi)
          return assign_lit(clause.head, true);
        if (c.numTrue > clause.hi || maxTrue < clause.lo)
          return assign_lit(clause.head, false);
        return true;
      }
    }
    return true;
  }

  bool propagate(std::vector<int> dirty) {
    while (!dirty.empty()) {
      std::vector<int> next;
      for (int ci : dirty)
        if (!propagate_clause(ci, next)) return false;
      dirty = std::move(next);
    }
    return reachability_prune();
  }

  // Over-approximation: treat unassigned existence/wire vars as present; if
  // two definitely-existing members are already disconnected, fail.
  bool reachability_prune() {
    if (p_.globals.empty()) return true;
    std::vector<int> parent(p_.candidates.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& w : p_.wires) {
      if (value_[w.var] == 0) continue;
      if (value_[p_.candidates[w.srcCandidate].existVar] == 0) continue;
      if (value_[p_.candidates[w.dstCandidate].existVar] == 0) continue;
      parent[find(w.srcCandidate)] = find(w.dstCandidate);
    }
    for (const auto& global : p_.globals) {
      int root = -1;
      for (int member : global.memberCandidates) {
        if (value_[p_.candidates[member].existVar] != 1) continue;
        int r = find(member);
        if (root == -1) root = r;
        else if (root != r) return false;
      }
    }
    return true;
  }

  // Exact connectivity over the completed assignment.
  bool reachability_exact() {
    if (p_.globals.empty()) return true;
    std::vector<int> parent(p_.candidates.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& w : p_.wires)
      if (value_[w.var] == 1)
        parent[find(w.srcCandidate)] = find(w.dstCandidate);
    for (const auto& global : p_.globals) {
      int root = -1;
      for (int member : global.memberCandidates) {
        if (value_[p_.candidates[member].existVar] != 1) continue;
        int r = find(member);
        if (root == -1) root = r;
        else if (root != r) return false;
      }
    }
    return true;
  }

  // Completes auxiliary assignments and verifies every clause. Defining
  // clauses precede uses, so one pass in clause order settles all heads.
  bool complete_and_verify() {
    std::vector<int> dirty;
    for (size_t ci = 0; ci < p_.clauses.size(); ++ci) {
      const Clause& clause = p_.clauses[ci];
      const Counters& c = counters_[ci];
      int n = static_cast<int>(clause.lits.size());
      bool isReified = clause.kind == ClauseKind::ReifiedOr ||
                       clause.kind == ClauseKind::ReifiedAnd ||
                       clause.kind == ClauseKind::ReifiedCard;
      if (isReified && !lit_value_known(clause.head)) {
        if (c.numTrue + c.numFalse != n) return false;  // lits must be settled
        bool truth = false;
        if (clause.kind == ClauseKind::ReifiedOr) truth = c.numTrue >= 1;
        if (clause.kind == ClauseKind::ReifiedAnd) truth = c.numTrue == n;
        if (clause.kind == ClauseKind::ReifiedCard)
          truth = c.numTrue >= clause.lo && c.numTrue <= clause.hi;
        bool varVal = clause.head.neg ? !truth : truth;
        if (!assign(clause.head.var, varVal, dirty)) return false;
      }
    }
    // verify
    for (size_t ci = 0; ci < p_.clauses.size(); ++ci) {
      const Clause& clause = p_.clauses[ci];
      const Counters& c = counters_[ci];
      int n = static_cast<int>(clause.lits.size());
      if (c.numTrue + c.numFalse != n) return false;
      bool inside = c.numTrue >= clause.lo && c.numTrue <= clause.hi;
      switch (clause.kind) {
        case ClauseKind::Unit:
        case ClauseKind::Or:
          if (c.numTrue < 1) return false;
          break;
        case ClauseKind::Card:
          if (!inside) return false;
          break;
        case ClauseKind::ReifiedOr:
          if (lit_true(clause.head) != (c.numTrue >= 1)) return false;
          break;
        case ClauseKind::ReifiedAnd:
          if (lit_true(clause.head) != (c.numTrue == n)) return false;
          break;
        case ClauseKind::ReifiedCard:
          if (lit_true(clause.head) != inside) return false;
          break;
      }
    }
    return reachability_exact();
  }

  Var next_decision_var() const {
    for (Var v = 0; v < p_.numDecisionVars; ++v)
      if (value_[v] == kUnassigned) return v;
    return -1;
  }

  bool budget_exceeded(const std::chrono::steady_clock::time_point& start) const {
    if (options_.nodeLimit > 0 && nodes_ >= options_.nodeLimit) return true;
    if (options_.timeBudget.count() > 0 &&
        std::chrono::steady_clock::now() - start >= options_.timeBudget)
      return true;
    return false;
  }

  // Returns true when the search space was exhausted.
  bool search(SolveOutcome& outcome) {
    auto start = std::chrono::steady_clock::now();

    // pins and initial propagation of constant clauses
    std::vector<int> dirty;
    dirty.resize(p_.clauses.size());
    std::iota(dirty.begin(), dirty.end(), 0);
    for (const auto& [id, required] : options_.pins) {
      const compiler::CandidateInstance* match = nullptr;
      for (const auto& c : p_.candidates)
        if (c.id == id) { match = &c; break; }
      if (!match) throw SolveError("pin references unknown candidate '" + id + "'");
      if (!assign(match->existVar, required, dirty)) return true;
    }
    if (!propagate(std::move(dirty))) return true;

    while (true) {
      Var var = next_decision_var();
      if (var < 0) {
        if (complete_and_verify()) {
          outcome.solutions.push_back(decode_current());
          if (options_.maxSolutions > 0 &&
              static_cast<int>(outcome.solutions.size()) >= options_.maxSolutions)
            return false;  // stopped early by request; not an exhaustion claim
        }
        if (!backtrack()) return true;
        continue;
      }
      if (budget_exceeded(start)) return false;
      ++nodes_;
      bool first = trueFirst_[var] != 0;
      frames_.push_back({var, trail_.size(), first, false});
      std::vector<int> local;
      if (assign(var, first, local) && propagate(std::move(local))) continue;
      if (!backtrack()) return true;
    }
  }

  // Undoes to the most recent frame with an untried value and flips it;
  // pops exhausted frames. Returns false when no frame remains.
  bool backtrack() {
    while (!frames_.empty()) {
      Frame& frame = frames_.back();
      unassign_to(frame.trailSize);
      if (frame.flipped) {
        frames_.pop_back();
        continue;
      }
      frame.flipped = true;
      std::vector<int> dirty;
      if (assign(frame.var, !frame.firstValue, dirty) && propagate(std::move(dirty)))
        return true;
    }
    return false;
  }

  model::Configuration decode_current() const {
    std::vector<signed char> assignment(value_.begin(), value_.end());
    return compiler::decode(p_, assignment);
  }
};

}  // namespace

SolveOutcome solve(const CspProblem& problem, const Goal& goal,
                   const SolveOptions& options) {
  Engine engine(problem, goal, options);
  return engine.run();
}

// ---------------------------------------------------------------------------
// Brute-force oracle. Deliberately straight-line and independent of the
// compiler/solver path: it re-derives candidates, the admissible wire
// universe and canonical slots with its own plain loops, and filters every
// enumerated configuration through model::validate.

namespace {

struct OracleCandidate {
  std::string id;
  std::string type;
  std::string host;
  bool pinnedValue = false;
  bool pinned = false;
};

struct OracleWire {
  std::string srcKey, dstKey;  // "<id>.<port>", lexicographically ordered
  std::string srcId, srcPort, dstId, dstPort;
};

class Oracle {
public:
  Oracle(const Goal& goal, int cap, const std::map<std::string, bool>& pins)
      : goal_(goal), cap_(cap) {
    for (const auto& host : goal.hosts)
      for (const auto& type : goal.componentTypes)
        for (int ordinal = 1; ordinal <= cap; ++ordinal) {
          OracleCandidate c;
          c.id = type.name + std::to_string(ordinal) + "@" + host.name;
          c.type = type.name;
          c.host = host.name;
          auto it = pins.find(c.id);
          if (it != pins.end()) {
            c.pinned = true;
            c.pinnedValue = it->second;
          }
          candidates_.push_back(std::move(c));
        }
    for (const auto& [id, v] : pins) {
      bool known = false;
      for (const auto& c : candidates_) known = known || c.id == id;
      if (!known) throw SolveError("pin references unknown candidate '" + id + "'");
    }
    collect_templates();
    guard();
  }

  std::vector<model::Configuration> run() {
    std::vector<bool> chosen(candidates_.size(), false);
    enumerate_existence(0, chosen);
    std::sort(results_.begin(), results_.end());
    results_.erase(std::unique(results_.begin(), results_.end()), results_.end());
    return std::move(results_);
  }

private:
  const Goal& goal_;
  int cap_;
  std::vector<OracleCandidate> candidates_;
  // (typeA, portA, typeB, portB), both orientations
  std::set<std::tuple<std::string, std::string, std::string, std::string>> templates_;
  std::vector<model::Configuration> results_;

  void collect_templates() {
    std::vector<std::pair<std::string, std::string>> scope;
    std::function<void(const deladas::Expr&)> walk = [&](const deladas::Expr& e) {
      std::visit(
          [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, deladas::Forall> ||
                          std::is_same_v<T, deladas::Exists>) {
              scope.emplace_back(node.binder.var, node.binder.typeName);
              walk(*node.body);
              scope.pop_back();
            } else if constexpr (std::is_same_v<T, deladas::And> ||
                                 std::is_same_v<T, deladas::Or>) {
              for (const auto& arg : node.args) walk(*arg);
            } else if constexpr (std::is_same_v<T, deladas::ConnectsTo>) {
              auto typeOf = [&](const std::string& var) -> std::string {
                for (auto it = scope.rbegin(); it != scope.rend(); ++it)
                  if (it->first == var) return it->second;
                return "";
              };
              std::string ta = typeOf(node.a.var), tb = typeOf(node.b.var);
              templates_.insert({ta, node.a.port, tb, node.b.port});
              templates_.insert({tb, node.b.port, ta, node.a.port});
            }
          },
          e.node);
    };
    for (const auto& clause : goal_.clauses) walk(*clause);
  }

  void guard() const {
    int freeCandidates = 0;
    bool anyPinned = false;
    long portPairs = 0;
    for (const auto& c : candidates_) {
      if (!c.pinned) ++freeCandidates;
      anyPinned = anyPinned || c.pinned;
      portPairs += static_cast<long>(goal_.find_type(c.type)->ports.size());
    }
    if (freeCandidates > 6)
      throw OracleTooLarge(std::to_string(freeCandidates) + " free candidates");
    // With pins the existence space is already bounded by the free-candidate
    // guard, and the per-subset wire universe guard covers the rest.
    if (!anyPinned && portPairs > 24)
      throw OracleTooLarge(std::to_string(portPairs) + " candidate-port pairs");
  }

  void enumerate_existence(size_t index, std::vector<bool>& chosen) {
    if (index == candidates_.size()) {
      enumerate_wires(chosen);
      return;
    }
    const OracleCandidate& c = candidates_[index];
    std::vector<bool> vals = c.pinned ? std::vector<bool>{c.pinnedValue}
                                      : std::vector<bool>{false, true};
    for (bool v : vals) {
      if (v) {
        int load = 1;
        for (size_t i = 0; i < index; ++i)
          if (chosen[i] && candidates_[i].host == c.host) ++load;
        if (load > cap_) continue;
      }
      chosen[index] = v;
      enumerate_existence(index + 1, chosen);
      chosen[index] = false;
    }
  }

  void enumerate_wires(const std::vector<bool>& chosen) {
    // wire universe among chosen instances
    std::vector<OracleWire> universe;
    std::set<std::pair<std::string, std::string>> seen;
    for (size_t a = 0; a < candidates_.size(); ++a) {
      if (!chosen[a]) continue;
      const auto* typeA = goal_.find_type(candidates_[a].type);
      for (size_t b = 0; b < candidates_.size(); ++b) {
        if (!chosen[b] || a == b) continue;
        for (const auto& portA : typeA->ports) {
          for (const auto& [ta, pa, tb, pb] : templates_) {
            if (ta != candidates_[a].type || pa != portA.name ||
                tb != candidates_[b].type)
              continue;
            std::string keyA = candidates_[a].id + "." + portA.name;
            std::string keyB = candidates_[b].id + "." + pb;
            OracleWire w;
            if (keyA < keyB)
              w = {keyA, keyB, candidates_[a].id, portA.name, candidates_[b].id, pb};
            else
              w = {keyB, keyA, candidates_[b].id, pb, candidates_[a].id, portA.name};
            if (seen.insert({w.srcKey, w.dstKey}).second)
              universe.push_back(std::move(w));
          }
        }
      }
    }
    if (universe.size() > 26)
      throw OracleTooLarge("wire universe of " + std::to_string(universe.size()));
    std::sort(universe.begin(), universe.end(),
              [](const OracleWire& x, const OracleWire& y) {
                return std::tie(x.srcKey, x.dstKey) < std::tie(y.srcKey, y.dstKey);
              });

    std::map<std::string, int> capacityByKey;
    for (const auto& c : candidates_) {
      const auto* type = goal_.find_type(c.type);
      for (const auto& port : type->ports)
        capacityByKey[c.id + "." + port.name] =
            port.variadic ? static_cast<int>(candidates_.size()) : 1;
    }

    std::vector<bool> take(universe.size(), false);
    std::map<std::string, int> degree;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == universe.size()) {
        emit(chosen, universe, take);
        return;
      }
      take[i] = false;
      rec(i + 1);
      const OracleWire& w = universe[i];
      if (degree[w.srcKey] < capacityByKey[w.srcKey] &&
          degree[w.dstKey] < capacityByKey[w.dstKey]) {
        ++degree[w.srcKey];
        ++degree[w.dstKey];
        take[i] = true;
        rec(i + 1);
        take[i] = false;
        --degree[w.srcKey];
        --degree[w.dstKey];
      }
    };
    rec(0);
  }

  void emit(const std::vector<bool>& chosen, const std::vector<OracleWire>& universe,
            const std::vector<bool>& take) {
    model::Configuration config;
    config.goalName = goal_.constraintsetName;
    for (size_t i = 0; i < candidates_.size(); ++i)
      if (chosen[i])
        config.instances.push_back(
            {candidates_[i].id, candidates_[i].type, candidates_[i].host});
    std::map<std::string, int> nextSlot;
    for (size_t i = 0; i < universe.size(); ++i) {
      if (!take[i]) continue;
      const OracleWire& w = universe[i];
      model::Wire wire;
      wire.src = {w.srcId, w.srcPort, nextSlot[w.srcKey]++};
      wire.dst = {w.dstId, w.dstPort, nextSlot[w.dstKey]++};
      config.wires.push_back(std::move(wire));
    }
    config = model::normalize(std::move(config));
    if (validate(config, goal_).empty()) results_.push_back(std::move(config));
  }
};

}  // namespace

std::vector<model::Configuration> brute_force(const Goal& goal, int perHostCap) {
  return brute_force(goal, perHostCap, {});
}

std::vector<model::Configuration> brute_force(
    const Goal& goal, int perHostCap, const std::map<std::string, bool>& pins) {
  return Oracle(goal, perHostCap, pins).run();
}

bool solutions_equal(std::vector<model::Configuration> a,
                     std::vector<model::Configuration> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return a == b;
}

}  // namespace adme::solver

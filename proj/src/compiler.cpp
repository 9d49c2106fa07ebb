#include "adme/compiler.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <tuple>

namespace adme::compiler {

using deladas::CmpOp;
using deladas::Goal;

std::vector<CandidateInstance> expand_candidates(const Goal& goal, int perHostCap) {
  std::vector<CandidateInstance> candidates;
  int total = static_cast<int>(goal.hosts.size()) *
              static_cast<int>(goal.componentTypes.size()) * perHostCap;
  for (const auto& host : goal.hosts) {
    for (const auto& type : goal.componentTypes) {
      for (int ordinal = 1; ordinal <= perHostCap; ++ordinal) {
        CandidateInstance c;
        c.id = type.name + std::to_string(ordinal) + "@" + host.name;
        c.typeName = type.name;
        c.host = host.name;
        for (const auto& port : type.ports)
          c.slotCapacity[port.name] = port.variadic ? total : 1;
        candidates.push_back(std::move(c));
      }
    }
  }
  return candidates;
}

int CspProblem::wire_var_between(int candA, const std::string& portA, int candB,
                                 const std::string& portB) const {
  for (const auto& w : wires) {
    if (w.srcCandidate == candA && w.srcPort == portA && w.dstCandidate == candB &&
        w.dstPort == portB)
      return w.var;
    if (w.srcCandidate == candB && w.srcPort == portB && w.dstCandidate == candA &&
        w.dstPort == portA)
      return w.var;
  }
  return -1;
}

namespace {

// (typeA, portA, typeB, portB) pairs admissible for wiring, gathered from the
// constraintset's connectsto atoms. Stored with both orientations.
class CompatibleLinks {
public:
  void add(const std::string& typeA, const std::string& portA,
           const std::string& typeB, const std::string& portB) {
    links_.insert({typeA, portA, typeB, portB});
    links_.insert({typeB, portB, typeA, portA});
  }

  bool allows(const std::string& typeA, const std::string& portA,
              const std::string& typeB, const std::string& portB) const {
    return links_.count({typeA, portA, typeB, portB}) > 0;
  }

  // All ports of typeB that typeA.portA may link to.
  std::vector<std::string> peer_ports(const std::string& typeA,
                                      const std::string& portA,
                                      const std::string& typeB) const {
    std::vector<std::string> out;
    for (const auto& [ta, pa, tb, pb] : links_)
      if (ta == typeA && pa == portA && tb == typeB) out.push_back(pb);
    return out;
  }

private:
  std::set<std::tuple<std::string, std::string, std::string, std::string>> links_;
};

class Compiler {
public:
  Compiler(const Goal& goal, int perHostCap) : goal_(goal) {
    problem_.goalName = goal.constraintsetName;
    problem_.perHostCap = perHostCap;
    problem_.candidates = expand_candidates(goal, perHostCap);
  }

  CspProblem run() {
    allocate_existence_vars();
    collect_links();
    allocate_wire_vars();
    problem_.numDecisionVars = nextVar_;
    trueLit_ = pos(new_aux());
    emit({ClauseKind::Unit, {}, {trueLit_}, 0, 0});
    emit_structural();
    for (size_t ci = 0; ci < goal_.clauses.size(); ++ci) compile_clause(*goal_.clauses[ci]);
    problem_.numVars = nextVar_;
    return std::move(problem_);
  }

private:
  const Goal& goal_;
  CspProblem problem_;
  CompatibleLinks links_;
  int nextVar_ = 0;
  Lit trueLit_;
  // candidate indices per type name, and existence vars per (host, type)
  std::map<std::string, std::vector<int>> byType_;
  std::map<std::string, std::vector<int>> byHost_;

  Var new_aux() { return nextVar_++; }

  void emit(Clause clause) { problem_.clauses.push_back(std::move(clause)); }

  void emit_defining(Clause clause) {
    problem_.definingClause[clause.head.var] =
        static_cast<int>(problem_.clauses.size());
    emit(std::move(clause));
  }

  Lit false_lit() const { return {trueLit_.var, true}; }

  void allocate_existence_vars() {
    for (size_t i = 0; i < problem_.candidates.size(); ++i) {
      auto& c = problem_.candidates[i];
      c.existVar = nextVar_++;
      byType_[c.typeName].push_back(static_cast<int>(i));
      byHost_[c.host].push_back(static_cast<int>(i));
    }
  }

  void collect_links() {
    // Walk clauses with a binder-type environment to type connectsto atoms.
    std::vector<std::pair<std::string, std::string>> scope;
    auto typeOf = [&](const std::string& var) -> const std::string& {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it)
        if (it->first == var) return it->second;
      throw CompileError("unbound variable '" + var + "'");
    };
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
              const std::string& ta = typeOf(node.a.var);
              const std::string& tb = typeOf(node.b.var);
              check_port(ta, node.a.port);
              check_port(tb, node.b.port);
              links_.add(ta, node.a.port, tb, node.b.port);
            }
          },
          e.node);
    };
    for (const auto& clause : goal_.clauses) walk(*clause);
  }

  void check_port(const std::string& type, const std::string& port) {
    const auto* decl = goal_.find_type(type);
    if (!decl) throw CompileError("unknown component type '" + type + "'");
    if (!decl->find_port(port))
      throw CompileError("component '" + type + "' has no port '" + port + "'");
  }

  void allocate_wire_vars() {
    // One var per unordered compatible endpoint pair; source is the
    // lexicographically smaller endpoint key.
    struct Pending {
      std::string srcKey, dstKey;
      int srcCand, dstCand;
      std::string srcPort, dstPort;
    };
    std::vector<Pending> pending;
    std::set<std::pair<std::string, std::string>> seen;
    const auto& cs = problem_.candidates;
    for (size_t a = 0; a < cs.size(); ++a) {
      const auto* typeA = goal_.find_type(cs[a].typeName);
      for (size_t b = 0; b < cs.size(); ++b) {
        if (a == b) continue;
        for (const auto& portA : typeA->ports) {
          for (const std::string& portB :
               links_.peer_ports(cs[a].typeName, portA.name, cs[b].typeName)) {
            std::string keyA = cs[a].id + "." + portA.name;
            std::string keyB = cs[b].id + "." + portB;
            Pending p;
            if (keyA < keyB)
              p = {keyA, keyB, static_cast<int>(a), static_cast<int>(b), portA.name, portB};
            else
              p = {keyB, keyA, static_cast<int>(b), static_cast<int>(a), portB, portA.name};
            if (seen.insert({p.srcKey, p.dstKey}).second) pending.push_back(std::move(p));
          }
        }
      }
    }
    std::sort(pending.begin(), pending.end(), [](const Pending& x, const Pending& y) {
      return std::tie(x.srcKey, x.dstKey) < std::tie(y.srcKey, y.dstKey);
    });
    for (const auto& p : pending) {
      WireVar w;
      w.var = nextVar_++;
      w.srcCandidate = p.srcCand;
      w.srcPort = p.srcPort;
      w.dstCandidate = p.dstCand;
      w.dstPort = p.dstPort;
      problem_.wires.push_back(std::move(w));
    }
  }

  void emit_structural() {
    const auto& cs = problem_.candidates;
    // wire implies both endpoint instances
    for (const auto& w : problem_.wires) {
      emit({ClauseKind::Or, {}, {neg(w.var), pos(cs[w.srcCandidate].existVar)}, 0, 0});
      emit({ClauseKind::Or, {}, {neg(w.var), pos(cs[w.dstCandidate].existVar)}, 0, 0});
    }
    // port degree within slot capacity
    std::map<std::pair<int, std::string>, std::vector<Lit>> portWires;
    for (const auto& w : problem_.wires) {
      portWires[{w.srcCandidate, w.srcPort}].push_back(pos(w.var));
      portWires[{w.dstCandidate, w.dstPort}].push_back(pos(w.var));
    }
    for (const auto& [key, lits] : portWires) {
      int capacity = cs[key.first].slotCapacity.at(key.second);
      if (static_cast<long>(lits.size()) > capacity)
        emit({ClauseKind::Card, {}, lits, 0, capacity});
    }
    // at most perHostCap instances running per host
    for (const auto& host : goal_.hosts) {
      auto it = byHost_.find(host.name);
      if (it == byHost_.end()) continue;
      std::vector<Lit> lits;
      for (int idx : it->second) lits.push_back(pos(cs[idx].existVar));
      if (static_cast<long>(lits.size()) > problem_.perHostCap)
        emit({ClauseKind::Card, {}, lits, 0, problem_.perHostCap});
    }
  }

  // --- clause circuit -------------------------------------------------------

  struct Binding {
    bool isHost = false;
    std::string host;   // when isHost
    int candidate = -1; // when !isHost
  };
  using Env = std::vector<std::pair<std::string, Binding>>;

  static const Binding& lookup(const Env& env, const std::string& var) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == var) return it->second;
    throw CompileError("unbound variable '" + var + "'");
  }

  Lit mk_or(std::vector<Lit> lits) {
    std::erase_if(lits, [&](const Lit& l) { return l == false_lit(); });
    for (const Lit& l : lits)
      if (l == trueLit_) return trueLit_;
    if (lits.empty()) return false_lit();
    if (lits.size() == 1) return lits[0];
    Lit head = pos(new_aux());
    emit_defining({ClauseKind::ReifiedOr, head, std::move(lits), 0, 0});
    return head;
  }

  Lit mk_and(std::vector<Lit> lits) {
    std::erase_if(lits, [&](const Lit& l) { return l == trueLit_; });
    for (const Lit& l : lits)
      if (l == false_lit()) return false_lit();
    if (lits.empty()) return trueLit_;
    if (lits.size() == 1) return lits[0];
    Lit head = pos(new_aux());
    emit_defining({ClauseKind::ReifiedAnd, head, std::move(lits), 0, 0});
    return head;
  }

  // head <-> (lo <= sum(lits) <= hi), with the interval already clamped.
  Lit mk_card_interval(std::vector<Lit> lits, long lo, long hi) {
    long n = static_cast<long>(lits.size());
    lo = std::max(lo, 0L);
    hi = std::min(hi, n);
    if (lo > hi) return false_lit();
    if (lo == 0 && hi == n) return trueLit_;
    Lit head = pos(new_aux());
    emit_defining({ClauseKind::ReifiedCard, head, std::move(lits), lo, hi});
    return head;
  }

  Lit mk_card(std::vector<Lit> lits, CmpOp op, long k) {
    long n = static_cast<long>(lits.size());
    switch (op) {
      case CmpOp::Eq: return mk_card_interval(std::move(lits), k, k);
      case CmpOp::Le: return mk_card_interval(std::move(lits), 0, k);
      case CmpOp::Ge: return mk_card_interval(std::move(lits), k, n);
      case CmpOp::Lt: return mk_card_interval(std::move(lits), 0, k - 1);
      case CmpOp::Gt: return mk_card_interval(std::move(lits), k + 1, n);
      case CmpOp::Ne: return !mk_card_interval(std::move(lits), k, k);
    }
    return false_lit();
  }

  void compile_clause(const deladas::Expr& clause) {
    if (try_reachability_clause(clause)) return;
    Env env;
    Lit root = compile_expr(clause, env);
    emit({ClauseKind::Unit, {}, {root}, 0, 0});
  }

  // Matches `forall T a in deployment (forall T b in deployment
  // (reachable(a, b)))` and emits one global connectivity constraint.
  bool try_reachability_clause(const deladas::Expr& clause) {
    const auto* outer = std::get_if<deladas::Forall>(&clause.node);
    if (!outer) return false;
    const auto* inner = std::get_if<deladas::Forall>(&outer->body->node);
    if (!inner) return false;
    const auto* reach = std::get_if<deladas::Reachable>(&inner->body->node);
    if (!reach) return false;
    if (outer->binder.typeName != inner->binder.typeName) return false;
    if (outer->binder.typeName == "host") return false;
    std::set<std::string> bound{outer->binder.var, inner->binder.var};
    if (!bound.count(reach->v1) || !bound.count(reach->v2)) return false;
    ReachabilityConstraint global;
    auto it = byType_.find(outer->binder.typeName);
    if (it != byType_.end()) global.memberCandidates = it->second;
    problem_.globals.push_back(std::move(global));
    return true;
  }

  Lit compile_expr(const deladas::Expr& expr, Env& env) {
    return std::visit(
        [&](const auto& node) -> Lit {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, deladas::Forall>) {
            return compile_quantifier(node.binder, *node.body, env, /*forall=*/true);
          } else if constexpr (std::is_same_v<T, deladas::Exists>) {
            return compile_quantifier(node.binder, *node.body, env, /*forall=*/false);
          } else if constexpr (std::is_same_v<T, deladas::And>) {
            std::vector<Lit> lits;
            for (const auto& arg : node.args) lits.push_back(compile_expr(*arg, env));
            return mk_and(std::move(lits));
          } else if constexpr (std::is_same_v<T, deladas::Or>) {
            std::vector<Lit> lits;
            for (const auto& arg : node.args) lits.push_back(compile_expr(*arg, env));
            return mk_or(std::move(lits));
          } else if constexpr (std::is_same_v<T, deladas::CardCmp>) {
            return compile_card(node, env);
          } else if constexpr (std::is_same_v<T, deladas::ConnectsTo>) {
            return compile_connects(node, env);
          } else {
            static_assert(std::is_same_v<T, deladas::Reachable>);
            throw CompileError(
                "reachable is only supported as a top-level clause of the form "
                "'forall T a, b in deployment (reachable(a, b))'");
          }
        },
        expr.node);
  }

  Lit compile_quantifier(const deladas::Binder& binder, const deladas::Expr& body,
                         Env& env, bool forall) {
    std::vector<Lit> parts;
    if (binder.typeName == "host") {
      for (const auto& host : goal_.hosts) {
        env.push_back({binder.var, Binding{true, host.name, -1}});
        parts.push_back(compile_expr(body, env));
        env.pop_back();
      }
    } else {
      auto it = byType_.find(binder.typeName);
      if (it != byType_.end()) {
        for (int idx : it->second) {
          env.push_back({binder.var, Binding{false, "", idx}});
          Lit bodyLit = compile_expr(body, env);
          env.pop_back();
          Lit exists = pos(problem_.candidates[idx].existVar);
          if (forall)
            parts.push_back(mk_or({!exists, bodyLit}));  // exists => body
          else
            parts.push_back(mk_and({exists, bodyLit}));
        }
      }
    }
    return forall ? mk_and(std::move(parts)) : mk_or(std::move(parts));
  }

  Lit compile_card(const deladas::CardCmp& card, Env& env) {
    if (const auto* io = std::get_if<deladas::InstancesOf>(&card.set)) {
      const Binding& host = lookup(env, io->hostVar);
      if (!host.isHost) throw CompileError("'" + io->hostVar + "' is not a host variable");
      std::vector<Lit> lits;
      auto it = byType_.find(io->typeName);
      if (it != byType_.end())
        for (int idx : it->second)
          if (problem_.candidates[idx].host == host.host)
            lits.push_back(pos(problem_.candidates[idx].existVar));
      return mk_card(std::move(lits), card.op, card.bound);
    }
    const auto& ct = std::get<deladas::ConnectedTo>(card.set);
    const Binding& target = lookup(env, ct.targetVar);
    if (target.isHost) throw CompileError("'" + ct.targetVar + "' is not an instance variable");
    std::vector<Lit> adjacency;
    auto it = byType_.find(ct.typeName);
    if (it != byType_.end()) {
      for (int idx : it->second) {
        if (idx == target.candidate) continue;
        std::vector<Lit> between;
        for (const auto& w : problem_.wires) {
          if ((w.srcCandidate == idx && w.dstCandidate == target.candidate) ||
              (w.srcCandidate == target.candidate && w.dstCandidate == idx))
            between.push_back(pos(w.var));
        }
        if (!between.empty()) adjacency.push_back(mk_or(std::move(between)));
      }
    }
    return mk_card(std::move(adjacency), card.op, card.bound);
  }

  Lit compile_connects(const deladas::ConnectsTo& node, Env& env) {
    const Binding& a = lookup(env, node.a.var);
    const Binding& b = lookup(env, node.b.var);
    if (a.isHost || b.isHost)
      throw CompileError("connectsto requires component instance variables");
    if (a.candidate == b.candidate) return false_lit();
    int var = problem_.wire_var_between(a.candidate, node.a.port, b.candidate,
                                        node.b.port);
    if (var < 0) return false_lit();
    return pos(var);
  }
};

}  // namespace

CspProblem compile(const Goal& goal, int perHostCap) {
  if (perHostCap < 1) throw CompileError("perHostCap must be at least 1");
  return Compiler(goal, perHostCap).run();
}

model::Configuration decode(const CspProblem& problem,
                            const std::vector<signed char>& assignment) {
  auto value = [&](Var v) -> bool {
    if (v < 0 || v >= problem.numVars ||
        static_cast<size_t>(v) >= assignment.size())
      throw DecodeError("assignment does not cover var " + std::to_string(v));
    signed char x = assignment[v];
    if (x != 0 && x != 1) throw DecodeError("assignment is not total");
    return x == 1;
  };

  model::Configuration config;
  config.goalName = problem.goalName;

  std::map<std::string, int> hostLoad;
  for (const auto& c : problem.candidates) {
    if (!value(c.existVar)) continue;
    config.instances.push_back({c.id, c.typeName, c.host});
    if (++hostLoad[c.host] > problem.perHostCap)
      throw DecodeError("host '" + c.host + "' exceeds its capacity");
  }

  // Wires sorted by slotless endpoint keys; slots assigned densely per port
  // in that order.
  struct Picked {
    std::string srcKey, dstKey;
    std::string srcId, srcPort, dstId, dstPort;
  };
  std::vector<Picked> picked;
  for (const auto& w : problem.wires) {
    if (!value(w.var)) continue;
    const auto& src = problem.candidates[w.srcCandidate];
    const auto& dst = problem.candidates[w.dstCandidate];
    if (!value(src.existVar) || !value(dst.existVar))
      throw DecodeError("wire on non-existent instance");
    picked.push_back({w.src_key(problem.candidates), w.dst_key(problem.candidates),
                      src.id, w.srcPort, dst.id, w.dstPort});
  }
  std::sort(picked.begin(), picked.end(), [](const Picked& a, const Picked& b) {
    return std::tie(a.srcKey, a.dstKey) < std::tie(b.srcKey, b.dstKey);
  });
  std::map<std::string, int> capacityByKey;
  for (const auto& c : problem.candidates)
    for (const auto& [port, cap] : c.slotCapacity) capacityByKey[c.id + "." + port] = cap;
  std::map<std::string, int> nextSlot;  // "<id>.<port>" -> next free slot
  for (const auto& p : picked) {
    model::Wire wire;
    wire.src = {p.srcId, p.srcPort, nextSlot[p.srcKey]++};
    wire.dst = {p.dstId, p.dstPort, nextSlot[p.dstKey]++};
    if (wire.src.slot >= capacityByKey[p.srcKey] ||
        wire.dst.slot >= capacityByKey[p.dstKey])
      throw DecodeError("port slot capacity exceeded at " + p.srcKey + " -> " +
                        p.dstKey);
    config.wires.push_back(std::move(wire));
  }

  try {
    return model::normalize(std::move(config));
  } catch (const model::SchemaError& e) {
    throw DecodeError(e.what());
  }
}

}  // namespace adme::compiler

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "adme/compiler.hpp"
#include "support.hpp"

using namespace adme;
using compiler::Clause;
using compiler::ClauseKind;
using compiler::CspProblem;

namespace {

deladas::Goal randc6() { return deladas::parse_goal(testsupport::randc_text()); }

}  // namespace

TEST_CASE("candidate expansion over the goal corpus") {
  auto candidates = compiler::expand_candidates(randc6(), 1);
  REQUIRE(candidates.size() == 12);
  CHECK(candidates[0].id == "Client1@h1");
  CHECK(candidates[1].id == "Router1@h1");
  CHECK(candidates[2].id == "Client1@h2");
  CHECK(candidates[11].id == "Router1@h6");
  // slot capacities: 1 for non-variadic, total candidate count for variadic
  CHECK(candidates[0].slotCapacity.at("in") == 1);
  CHECK(candidates[1].slotCapacity.at("cin") == 12);
}

TEST_CASE("zero hosts expand to zero candidates") {
  deladas::Goal goal = deladas::parse_goal(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "constraintset c = constraintset { }\n");
  CHECK(compiler::expand_candidates(goal, 3).empty());
}

TEST_CASE("ordinals enumerate host-major, then type, then ordinal") {
  deladas::Goal goal = deladas::parse_goal(
      "component Client(\n  code = \"file:///c.xml\",\n  ports = {p}\n)\n"
      "component Router(\n  code = \"file:///r.xml\",\n  ports = {q}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "host h2 = host(ipaddress = \"10.0.0.2\")\n"
      "constraintset c = constraintset { }\n");
  auto candidates = compiler::expand_candidates(goal, 2);
  std::vector<std::string> ids;
  for (const auto& c : candidates) ids.push_back(c.id);
  CHECK(ids == std::vector<std::string>{"Client1@h1", "Client2@h1", "Router1@h1",
                                        "Router2@h1", "Client1@h2", "Client2@h2",
                                        "Router1@h2", "Router2@h2"});
}

TEST_CASE("candidate ids and wire vars are stable across recompiles") {
  auto a = compiler::compile(randc6(), 1);
  auto b = compiler::compile(randc6(), 1);
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (size_t i = 0; i < a.candidates.size(); ++i)
    CHECK(a.candidates[i].id == b.candidates[i].id);
  REQUIRE(a.wires.size() == b.wires.size());
  for (size_t i = 0; i < a.wires.size(); ++i) CHECK(a.wires[i].var == b.wires[i].var);
}

TEST_CASE("the per-host disjunction compiles to six or-of-two-exact-counts") {
  CspProblem problem = compiler::compile(randc6(), 1);
  std::set<int> exactCountHeads;
  for (const auto& clause : problem.clauses)
    if (clause.kind == ClauseKind::ReifiedCard && clause.lo == 1 && clause.hi == 1)
      exactCountHeads.insert(clause.head.var);
  int matching = 0;
  for (const auto& clause : problem.clauses) {
    if (clause.kind != ClauseKind::ReifiedOr || clause.lits.size() != 2) continue;
    if (exactCountHeads.count(clause.lits[0].var) &&
        exactCountHeads.count(clause.lits[1].var))
      ++matching;
  }
  CHECK(matching == 6);
}

TEST_CASE("an empty constraintset compiles to structural clauses only") {
  deladas::Goal goal = deladas::parse_goal(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "component B(\n  code = \"file:///b.xml\",\n  ports = {q}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "constraintset c = constraintset { }\n");
  CspProblem problem = compiler::compile(goal, 1);
  // no connectsto atoms: the wire universe is empty
  CHECK(problem.wires.empty());
  CHECK(problem.globals.empty());
  for (const auto& clause : problem.clauses) {
    bool structural = clause.kind == ClauseKind::Card ||
                      (clause.kind == ClauseKind::Unit && clause.lits.size() == 1 &&
                       !clause.lits[0].neg);
    CHECK(structural);
  }
  // the per-host capacity clause covers both candidates on h1
  bool sawCapacity = false;
  for (const auto& clause : problem.clauses)
    if (clause.kind == ClauseKind::Card && clause.lits.size() == 2 && clause.hi == 1)
      sawCapacity = true;
  CHECK(sawCapacity);
}

TEST_CASE("the mutual-reachability clause becomes one global over all routers") {
  CspProblem problem = compiler::compile(randc6(), 1);
  REQUIRE(problem.globals.size() == 1);
  const auto& global = problem.globals[0];
  REQUIRE(global.memberCandidates.size() == 6);
  for (int idx : global.memberCandidates)
    CHECK(problem.candidates[idx].typeName == "Router");
}

TEST_CASE("the wire universe covers exactly the constraint-named port pairs") {
  CspProblem problem = compiler::compile(randc6(), 1);
  // 36 client-router pairs x {out-cin, in-cout} + 15 router pairs x
  // {rout-rin, rin-rout}
  CHECK(problem.wires.size() == 36 * 2 + 15 * 2);
  for (const auto& w : problem.wires) {
    std::string srcKey = w.src_key(problem.candidates);
    std::string dstKey = w.dst_key(problem.candidates);
    CHECK(srcKey < dstKey);  // canonical direction
    std::set<std::string> ports{w.srcPort, w.dstPort};
    bool known = (ports == std::set<std::string>{"out", "cin"}) ||
                 (ports == std::set<std::string>{"in", "cout"}) ||
                 (ports == std::set<std::string>{"rout", "rin"});
    CHECK(known);
  }
}

TEST_CASE("reachable outside its supported shape is a compile error") {
  std::string text =
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "constraintset c = constraintset {\n"
      "  forall A a in deployment (exists A b in deployment (reachable(a, b)))\n"
      "}\n";
  deladas::Goal goal = deladas::parse_goal(text);
  CHECK_THROWS_AS(compiler::compile(goal, 1), compiler::CompileError);
}

TEST_CASE("a clause naming a missing port is a compile error") {
  // assembled in memory: the parser would reject this source outright
  deladas::Goal goal = deladas::parse_goal(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "host h2 = host(ipaddress = \"10.0.0.2\")\n"
      "constraintset c = constraintset { }\n");
  using namespace adme::deladas;
  auto mk = [](Expr e) { return std::make_shared<Expr>(std::move(e)); };
  ConnectsTo bad;
  bad.a = PortRef{"a", "p", {}};
  bad.b = PortRef{"b", "ghost", {}};
  ExprPtr inner = mk(Expr{Exists{Binder{"A", "b", {}}, mk(Expr{bad})}});
  goal.clauses = {mk(Expr{Forall{Binder{"A", "a", {}}, inner}})};
  CHECK_THROWS_AS(compiler::compile(goal, 1), compiler::CompileError);
}

TEST_CASE("decoding the all-false assignment yields the empty configuration") {
  deladas::Goal goal = deladas::parse_goal(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "constraintset c = constraintset { }\n");
  CspProblem problem = compiler::compile(goal, 1);
  std::vector<signed char> assignment(problem.numVars, 0);
  // keep the constant-true auxiliary honest
  for (const auto& clause : problem.clauses)
    if (clause.kind == ClauseKind::Unit && !clause.lits[0].neg)
      assignment[clause.lits[0].var] = 1;
  model::Configuration config = compiler::decode(problem, assignment);
  CHECK(config.instances.empty());
  CHECK(config.wires.empty());
  CHECK(config.goalName == "c");
}

TEST_CASE("decoding the reference topology matches its DDD fixture") {
  CspProblem problem = compiler::compile(randc6(), 1);
  model::Configuration expected = model::from_ddd(testsupport::reference_ddd());

  std::vector<signed char> assignment(problem.numVars, 0);
  auto exist = [&](const std::string& id) {
    for (const auto& c : problem.candidates)
      if (c.id == id) return c.existVar;
    FAIL(("unknown candidate " + id).c_str());
    return -1;
  };
  for (const auto& inst : expected.instances) assignment[exist(inst.id)] = 1;
  auto candidateIndex = [&](const std::string& id) {
    for (size_t i = 0; i < problem.candidates.size(); ++i)
      if (problem.candidates[i].id == id) return static_cast<int>(i);
    return -1;
  };
  for (const auto& wire : expected.wires) {
    int var = problem.wire_var_between(candidateIndex(wire.src.instanceId),
                                       wire.src.port,
                                       candidateIndex(wire.dst.instanceId),
                                       wire.dst.port);
    REQUIRE(var >= 0);
    assignment[var] = 1;
  }
  model::Configuration decoded = compiler::decode(problem, assignment);
  CHECK(decoded.instances == expected.instances);
  // same adjacency, canonical slots and directions
  auto adjacency = [](const model::Configuration& c) {
    std::set<std::set<std::string>> out;
    for (const auto& w : c.wires)
      out.insert({w.src.instanceId + "." + w.src.port,
                  w.dst.instanceId + "." + w.dst.port});
    return out;
  };
  CHECK(adjacency(decoded) == adjacency(expected));
  CHECK(model::validate(decoded, randc6()).empty());
}

TEST_CASE("decode rejects assignments that break structural rules") {
  CspProblem problem = compiler::compile(randc6(), 1);
  std::vector<signed char> assignment(problem.numVars, 0);
  // a wire whose endpoints do not exist
  assignment[problem.wires[0].var] = 1;
  CHECK_THROWS_AS(compiler::decode(problem, assignment), compiler::DecodeError);

  std::vector<signed char> partial(problem.numVars, 0);
  partial[0] = -1;
  CHECK_THROWS_AS(compiler::decode(problem, partial), compiler::DecodeError);
}

TEST_CASE("a positive per-host cap is required") {
  CHECK_THROWS_AS(compiler::compile(randc6(), 0), compiler::CompileError);
}

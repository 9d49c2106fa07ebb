#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>

#include "adme/compiler.hpp"
#include "adme/solver.hpp"
#include "support.hpp"

using namespace adme;
using solver::SolveOptions;
using solver::SolveOutcome;
using solver::SolveStatus;

namespace {

SolveOutcome solve_goal(const deladas::Goal& goal, SolveOptions options = {}) {
  auto problem = compiler::compile(goal, 1);
  return solver::solve(problem, goal, options);
}

deladas::Goal parse(const std::string& text) { return deladas::parse_goal(text); }

}  // namespace

TEST_CASE("the goal corpus is satisfiable over six hosts and validates clean") {
  deladas::Goal goal = parse(testsupport::randc_text());
  SolveOutcome outcome = solve_goal(goal);
  REQUIRE(outcome.status == SolveStatus::Sat);
  REQUIRE(outcome.solutions.size() == 1);
  CHECK(model::validate(outcome.solutions.front(), goal).empty());
}

TEST_CASE("one host is refuted by exhaustion") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(1));
  SolveOutcome outcome = solve_goal(goal, SolveOptions{.maxSolutions = 0});
  CHECK(outcome.status == SolveStatus::Unsat);
  CHECK(outcome.solutions.empty());
  CHECK(solver::brute_force(goal, 1).empty());
}

TEST_CASE("two hosts admit exactly the mutually wired router pair") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(2));
  SolveOutcome outcome = solve_goal(goal, SolveOptions{.maxSolutions = 0});
  REQUIRE(outcome.status == SolveStatus::Sat);
  REQUIRE(outcome.solutions.size() == 1);
  // frozen from the exhaustive oracle
  CHECK(model::to_ddd(outcome.solutions.front()) ==
        "<deployment goal=\"randc\">\n"
        "  <instances>\n"
        "    <instance id=\"Router1@h1\" type=\"Router\" host=\"h1\"/>\n"
        "    <instance id=\"Router1@h2\" type=\"Router\" host=\"h2\"/>\n"
        "  </instances>\n"
        "  <wires>\n"
        "    <wire src=\"Router1@h1.rin[0]\" dst=\"Router1@h2.rout[0]\"/>\n"
        "    <wire src=\"Router1@h1.rout[0]\" dst=\"Router1@h2.rin[0]\"/>\n"
        "  </wires>\n"
        "</deployment>\n");
  CHECK(solver::solutions_equal(outcome.solutions, solver::brute_force(goal, 1)));
}

TEST_CASE("solver and oracle agree exactly on the whole small-goal suite") {
  // solution counts frozen from the oracle
  std::map<std::string, size_t> expectedCounts = {
      {"randc-1host", 0},           {"randc-2hosts", 1},
      {"randc-3hosts", 16},         {"empty-constraintset", 2},
      {"one-instance-per-host", 1}, {"exists-host", 3},
      {"client-server-link", 6},    {"bounded-fanin", 20},
      {"connected-ring", 4},
  };
  for (const auto& suiteGoal : testsupport::oracle_suite()) {
    CAPTURE(suiteGoal.name);
    deladas::Goal goal = parse(suiteGoal.text);
    auto oracle = solver::brute_force(goal, 1);
    SolveOutcome outcome = solve_goal(goal, SolveOptions{.maxSolutions = 0});
    CHECK(oracle.size() == expectedCounts.at(suiteGoal.name));
    CHECK(solver::solutions_equal(oracle, outcome.solutions));
    if (oracle.empty())
      CHECK(outcome.status == SolveStatus::Unsat);
    else
      CHECK(outcome.status == SolveStatus::Sat);
    // soundness: every returned solution validates clean
    for (const auto& config : outcome.solutions)
      CHECK(model::validate(config, goal).empty());
  }
}

TEST_CASE("the vacuous goal enumerates the empty configuration") {
  deladas::Goal goal = parse(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "constraintset empty = constraintset {\n}\n");
  auto oracle = solver::brute_force(goal, 1);
  bool hasEmpty = false;
  for (const auto& config : oracle) hasEmpty = hasEmpty || config.instances.empty();
  CHECK(hasEmpty);
  SolveOutcome outcome = solve_goal(goal, SolveOptions{.maxSolutions = 0});
  CHECK(solver::solutions_equal(oracle, outcome.solutions));
}

TEST_CASE("pins are honored in every returned solution") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(3));
  SolveOptions options;
  options.maxSolutions = 0;
  options.pins = {{"Client1@h1", true}};
  auto problem = compiler::compile(goal, 1);
  SolveOutcome outcome = solver::solve(problem, goal, options);
  REQUIRE(outcome.status == SolveStatus::Sat);
  for (const auto& config : outcome.solutions)
    CHECK(config.find_instance("Client1@h1") != nullptr);

  // the pinned solution set is the matching slice of the full set
  SolveOutcome full = solve_goal(goal, SolveOptions{.maxSolutions = 0});
  std::vector<model::Configuration> slice;
  for (const auto& config : full.solutions)
    if (config.find_instance("Client1@h1")) slice.push_back(config);
  CHECK(solver::solutions_equal(slice, outcome.solutions));
}

TEST_CASE("pinning a needed candidate to false refutes the goal") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(2));
  SolveOptions options;
  options.maxSolutions = 0;
  options.pins = {{"Router1@h1", false}};
  auto problem = compiler::compile(goal, 1);
  SolveOutcome outcome = solver::solve(problem, goal, options);
  CHECK(outcome.status == SolveStatus::Unsat);  // both routers are needed
}

TEST_CASE("unknown pins are rejected") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(2));
  auto problem = compiler::compile(goal, 1);
  SolveOptions options;
  options.pins = {{"Router9@h9", true}};
  CHECK_THROWS_AS(solver::solve(problem, goal, options), solver::SolveError);
}

TEST_CASE("identical inputs give byte-identical outcomes") {
  deladas::Goal goal = parse(testsupport::randc_text());
  SolveOutcome a = solve_goal(goal, SolveOptions{.maxSolutions = 3});
  SolveOutcome b = solve_goal(goal, SolveOptions{.maxSolutions = 3});
  REQUIRE(a.solutions.size() == b.solutions.size());
  for (size_t i = 0; i < a.solutions.size(); ++i)
    CHECK(model::to_ddd(a.solutions[i]) == model::to_ddd(b.solutions[i]));
  CHECK(a.stats.nodes == b.stats.nodes);
  CHECK(a.stats.propagations == b.stats.propagations);
}

TEST_CASE("a node budget yields LIMIT, never a false UNSAT") {
  deladas::Goal goal = parse(testsupport::randc_text());
  auto problem = compiler::compile(goal, 1);
  SolveOptions options;
  options.maxSolutions = 1;
  options.nodeLimit = 2;
  SolveOutcome outcome = solver::solve(problem, goal, options);
  CHECK(outcome.status == SolveStatus::Limit);
  CHECK(outcome.solutions.empty());
}

TEST_CASE("raising the per-host cap only adds solutions") {
  deladas::Goal goal = parse(
      "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
      "host h1 = host(ipaddress = \"10.0.0.1\")\n"
      "host h2 = host(ipaddress = \"10.0.0.2\")\n"
      "constraintset each = constraintset {\n"
      "  forall host h in deployment (card(instancesof A in h) = 1)\n"
      "}\n");
  auto cap1 = solver::brute_force(goal, 1);
  auto cap2 = solver::brute_force(goal, 2);
  CHECK(cap1.size() == 1);
  CHECK(cap2.size() == 4);  // either ordinal may carry the single instance
  for (const auto& config : cap1)
    CHECK(std::find(cap2.begin(), cap2.end(), config) != cap2.end());

  auto problem1 = compiler::compile(goal, 1);
  auto problem2 = compiler::compile(goal, 2);
  SolveOptions all{.maxSolutions = 0};
  CHECK(solver::solutions_equal(solver::solve(problem1, goal, all).solutions, cap1));
  CHECK(solver::solutions_equal(solver::solve(problem2, goal, all).solutions, cap2));
}

TEST_CASE("solutions_equal is order-insensitive set equality") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(3));
  auto solutions = solver::brute_force(goal, 1);
  REQUIRE(solutions.size() > 1);
  auto reversed = solutions;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(solver::solutions_equal({}, {}));
  CHECK(solver::solutions_equal(solutions, reversed));
  auto truncated = solutions;
  truncated.pop_back();
  CHECK_FALSE(solver::solutions_equal(solutions, truncated));
}

TEST_CASE("the oracle refuses goals beyond its guards") {
  deladas::Goal big = parse(testsupport::randc_text());
  CHECK_THROWS_AS(solver::brute_force(big, 1), solver::OracleTooLarge);
}

TEST_CASE("solver and oracle agree on randomly generated goals") {
  std::mt19937 rng(424242);
  const char* ops[] = {"=", "<=", ">=", "<", ">", "!="};

  auto gen_goal = [&]() {
    int hosts = 1 + rng() % 3;
    bool twoTypes = rng() % 2 == 0;
    std::string text =
        "component A(\n  code = \"file:///a.xml\",\n  ports = {p, r[]}\n)\n";
    if (twoTypes)
      text += "component B(\n  code = \"file:///b.xml\",\n  ports = {q[]}\n)\n";
    for (int i = 1; i <= hosts; ++i)
      text += "host h" + std::to_string(i) + " = host(ipaddress = \"10.0.0." +
              std::to_string(i) + "\")\n";
    text += "constraintset g = constraintset {\n";
    auto num = [&](int n) { return std::to_string(rng() % n); };
    auto type = [&]() -> std::string { return twoTypes && rng() % 2 ? "B" : "A"; };
    auto portOf = [&](const std::string& t) -> std::string {
      if (t == "B") return "q";
      return rng() % 2 ? "p" : "r";
    };
    int clauses = 1 + rng() % 3;
    for (int c = 0; c < clauses; ++c) {
      switch (rng() % 6) {
        case 0: {
          text += "  forall host h in deployment (card(instancesof " + type() +
                  " in h) " + ops[rng() % 6] + " " + num(3) + ")\n";
          break;
        }
        case 1: {
          text += "  exists host h in deployment (card(instancesof " + type() +
                  " in h) " + ops[rng() % 6] + " " + num(3) + ")\n";
          break;
        }
        case 2: {
          std::string t1 = type(), t2 = type();
          text += "  forall " + t1 + " x in deployment (exists " + t2 +
                  " y in deployment (x.ports." + portOf(t1) + " connectsto y.ports." +
                  portOf(t2) + "))\n";
          break;
        }
        case 3: {
          std::string t1 = type(), t2 = type();
          text += "  forall " + t1 + " x in deployment (card(" + t2 +
                  " k connectedto x) " + ops[rng() % 6] + " " + num(3) + ")\n";
          break;
        }
        case 4: {
          text += "  forall " + type() + " a, b in deployment (reachable(a, b))\n";
          break;
        }
        default: {
          std::string t1 = type(), t2 = type();
          text += "  forall host h in deployment (card(instancesof " + t1 +
                  " in h) " + ops[rng() % 6] + " " + num(2) +
                  " or card(instancesof " + t2 + " in h) " + ops[rng() % 6] + " " +
                  num(2) + " and card(instancesof " + t1 + " in h) " +
                  ops[rng() % 6] + " " + num(3) + ")\n";
          break;
        }
      }
    }
    text += "}\n";
    return text;
  };

  for (int round = 0; round < 500; ++round) {
    std::string text = gen_goal();
    CAPTURE(text);
    deladas::Goal goal = parse(text);
    std::vector<model::Configuration> oracle;
    try {
      oracle = solver::brute_force(goal, 1);
    } catch (const solver::OracleTooLarge&) {
      continue;
    }
    auto problem = compiler::compile(goal, 1);
    SolveOptions options;
    options.maxSolutions = 0;
    SolveOutcome outcome = solver::solve(problem, goal, options);
    CHECK(solver::solutions_equal(oracle, outcome.solutions));
    CHECK((outcome.status == SolveStatus::Unsat) == oracle.empty());
  }
}

TEST_CASE("oracle pins shrink the free space under the guard") {
  deladas::Goal goal = parse(testsupport::randc_with_hosts(5));
  std::map<std::string, bool> pins = {{"Router1@h4", true},
                                      {"Client1@h1", true},
                                      {"Client1@h2", true},
                                      {"Client1@h5", true}};
  // 10 candidates, 4 pinned: 6 free, within the guard
  auto solutions = solver::brute_force(goal, 1, pins);
  CHECK(!solutions.empty());
  for (const auto& config : solutions)
    for (const auto& [id, required] : pins)
      CHECK((config.find_instance(id) != nullptr) == required);
}

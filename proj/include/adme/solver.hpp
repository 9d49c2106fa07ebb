#pragma once

// Finite-domain backtracking solver with propagation over the compiled CSP,
// plus an independent brute-force enumerator used as a correctness oracle.

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adme/compiler.hpp"
#include "adme/deladas.hpp"
#include "adme/model.hpp"

namespace adme::solver {

class SolveError : public std::runtime_error {
public:
  explicit SolveError(const std::string& msg)
      : std::runtime_error("solve error: " + msg) {}
};

class OracleTooLarge : public std::runtime_error {
public:
  explicit OracleTooLarge(const std::string& msg)
      : std::runtime_error("oracle too large: " + msg) {}
};

struct SolveOptions {
  int maxSolutions = 1;     // 0 = unbounded (full enumeration)
  long nodeLimit = 0;       // 0 = unbounded
  std::chrono::milliseconds timeBudget{0};  // zero = unbounded
  // candidate id -> required existence value
  std::map<std::string, bool> pins;
};

enum class SolveStatus { Sat, Unsat, Limit };

std::string_view status_text(SolveStatus status);

struct SolveStats {
  long nodes = 0;
  long propagations = 0;
  double wallMs = 0.0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::Unsat;
  std::vector<model::Configuration> solutions;  // canonical, in discovery order
  SolveStats stats;
};

// Deterministic search: decision variables are existence vars in candidate
// order followed by wire vars in lexicographic endpoint order; existence vars
// of the goal's first-declared component type try true first, everything else
// false first. UNSAT is reported only after the search tree is exhausted;
// LIMIT means a budget ran out before any solution was found.
SolveOutcome solve(const compiler::CspProblem& problem, const deladas::Goal& goal,
                   const SolveOptions& options = {});

// Exhaustive oracle: enumerates every existence subset (respecting the
// per-host cap) and every admissible wire subset, filters with
// model::validate, and returns the canonical solution list sorted.
// Guards: free candidates <= 6, candidate-port pairs <= 24, and the per-subset
// wire universe <= 26; throws OracleTooLarge beyond that.
std::vector<model::Configuration> brute_force(const deladas::Goal& goal,
                                              int perHostCap);

// Same enumeration with existence values forced for the pinned candidates.
std::vector<model::Configuration> brute_force(
    const deladas::Goal& goal, int perHostCap,
    const std::map<std::string, bool>& pins);

// Set equality over canonical configurations.
bool solutions_equal(std::vector<model::Configuration> a,
                     std::vector<model::Configuration> b);

}  // namespace adme::solver

#pragma once

// Translation of a Goal into a finite-domain CSP over instance-existence and
// wire variables, and decoding of solver assignments back to Configurations.
//
// Encoding overview:
//  - one boolean existence variable per candidate instance
//    (|hosts| x |componentTypes| x perHostCap candidates);
//  - one boolean wire variable per unordered compatible endpoint pair, where
//    compatibility is the set of (type.port, type.port) combinations named by
//    connectsto atoms in the constraintset. The recorded direction is fixed:
//    the lexicographically smaller endpoint is the source;
//  - structural constraints: wire implies both endpoint existence vars, port
//    degree limited by the port's slot capacity, and at most perHostCap
//    instances running per host;
//  - goal clauses become a reified boolean/cardinality circuit: quantifiers
//    expand over candidates, connectsto atoms become wire-variable lookups,
//    connectedto cardinalities count reified adjacency booleans;
//  - the router-style reachability clause (forall T a, b (reachable(a, b)))
//    becomes one global connectivity constraint over existing instances of T,
//    checked against all wires as undirected adjacency.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adme/deladas.hpp"
#include "adme/model.hpp"

namespace adme::compiler {

class CompileError : public std::runtime_error {
public:
  explicit CompileError(const std::string& msg)
      : std::runtime_error("compile error: " + msg) {}
};

class DecodeError : public std::runtime_error {
public:
  explicit DecodeError(const std::string& msg)
      : std::runtime_error("decode error: " + msg) {}
};

using Var = int;

struct Lit {
  Var var = 0;
  bool neg = false;

  Lit operator!() const { return {var, !neg}; }
  bool operator==(const Lit&) const = default;
};

inline Lit pos(Var v) { return {v, false}; }
inline Lit neg(Var v) { return {v, true}; }

// Deterministic id: `<typeName><ordinal>@<host>`, ordinals starting at 1.
struct CandidateInstance {
  std::string id;
  std::string typeName;
  std::string host;
  Var existVar = 0;
  // per-port slot capacity: 1 for non-variadic ports, the total candidate
  // count for variadic ports
  std::map<std::string, int> slotCapacity;
};

// Endpoints are stored slotless; decode assigns dense slot indices.
struct WireVar {
  Var var = 0;
  int srcCandidate = 0;  // candidate index
  std::string srcPort;
  int dstCandidate = 0;
  std::string dstPort;

  std::string src_key(const std::vector<CandidateInstance>& cs) const {
    return cs[srcCandidate].id + "." + srcPort;
  }
  std::string dst_key(const std::vector<CandidateInstance>& cs) const {
    return cs[dstCandidate].id + "." + dstPort;
  }
};

enum class ClauseKind {
  Unit,        // lits[0] must hold
  Or,          // at least one of lits holds
  ReifiedOr,   // head <-> OR(lits)
  ReifiedAnd,  // head <-> AND(lits)
  Card,        // lo <= sum(lits) <= hi
  ReifiedCard, // head <-> (lo <= sum(lits) <= hi)
};

struct Clause {
  ClauseKind kind = ClauseKind::Unit;
  Lit head;
  std::vector<Lit> lits;
  long lo = 0;
  long hi = 0;
};

// All existing instances of the member candidates must lie in one connected
// component of the wire graph (wires traversed as undirected adjacency,
// paths may pass through instances of any type).
struct ReachabilityConstraint {
  std::vector<int> memberCandidates;  // candidate indices
};

struct CspProblem {
  std::string goalName;
  std::vector<CandidateInstance> candidates;
  std::vector<WireVar> wires;
  int perHostCap = 1;
  int numVars = 0;           // existence + wire + auxiliary
  int numDecisionVars = 0;   // existence vars then wire vars
  std::vector<Clause> clauses;
  std::vector<ReachabilityConstraint> globals;
  // For each auxiliary var, the index of its defining reified clause.
  std::map<Var, int> definingClause;

  // existence/wire var lookup
  int wire_var_between(int candA, const std::string& portA, int candB,
                       const std::string& portB) const;  // -1 if absent
};

std::vector<CandidateInstance> expand_candidates(const deladas::Goal& goal,
                                                 int perHostCap);

CspProblem compile(const deladas::Goal& goal, int perHostCap);

// assignment[v] must be 0 or 1 for every declared var. Performs defensive
// structural checks and throws DecodeError on breach.
model::Configuration decode(const CspProblem& problem,
                            const std::vector<signed char>& assignment);

}  // namespace adme::compiler

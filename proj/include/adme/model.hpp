#pragma once

// Configuration semantics: the direct constraint evaluator, the DDD XML
// serialization, and the configuration diff yielding minimal enactment plans.

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adme/deladas.hpp"

namespace adme::model {

class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& msg)
      : std::runtime_error("schema error: " + msg) {}
};

class DddParseError : public std::runtime_error {
public:
  DddParseError(const std::string& path, const std::string& msg)
      : std::runtime_error("DDD parse error at " + path + ": " + msg) {}
};

// ---------------------------------------------------------------------------
// Configuration

struct Endpoint {
  std::string instanceId;
  std::string port;
  int slot = 0;

  // `<instanceId>.<port>[<slot>]`
  std::string text() const;
  static Endpoint parse(std::string_view text);  // throws DddParseError

  auto operator<=>(const Endpoint&) const = default;
};

struct Wire {
  Endpoint src;
  Endpoint dst;

  auto operator<=>(const Wire&) const = default;
};

struct Instance {
  std::string id;
  std::string type;
  std::string host;

  auto operator<=>(const Instance&) const = default;
};

// Canonical form: instances sorted by id, wires sorted by (src, dst).
// Each endpoint carries at most one wire; wire endpoints are on distinct
// instances; slot indices are dense per (instance, port).
struct Configuration {
  std::string goalName;
  std::vector<Instance> instances;
  std::vector<Wire> wires;

  const Instance* find_instance(std::string_view id) const;
  auto operator<=>(const Configuration&) const = default;
};

// Sorts into canonical order and checks structural invariants (duplicate
// ids/endpoints, self-wires, slot density). Throws SchemaError on breach.
Configuration normalize(Configuration config);

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  int clauseIndex = 0;  // 0-based top-level clause in the constraintset
  std::vector<std::pair<std::string, std::string>> bindingContext;
  std::string message;
};

// Empty result iff config satisfies every top-level clause. Host quantifiers
// range over the goal's declared hosts; component quantifiers range over the
// configuration's instances. connectsto is satisfied by a wire in either
// direction; reachable traverses all wires as undirected adjacency.
// Throws SchemaError if config references unknown types/hosts/ports.
std::vector<Violation> validate(const Configuration& config,
                                const deladas::Goal& goal);

std::string format_violation(const Violation& v);

// ---------------------------------------------------------------------------
// DDD serialization

using DddDocument = std::string;  // canonical XML bytes

DddDocument to_ddd(const Configuration& config);
Configuration from_ddd(std::string_view bytes);  // throws DddParseError

// ---------------------------------------------------------------------------
// Enactment plans

struct Action {
  enum class Kind { Unwire, Terminate, InstallStart, Wire };
  Kind kind = Kind::InstallStart;
  std::string host;        // Terminate / InstallStart; src host for wiring
  std::string instanceId;  // Terminate / InstallStart
  std::string typeName;    // InstallStart
  std::string codeUri;     // InstallStart
  Endpoint src;            // Wire / Unwire
  Endpoint dst;            // Wire / Unwire

  std::string text() const;
  bool operator==(const Action&) const = default;
};

struct EnactmentPlan {
  std::vector<Action> actions;
};

// Minimal plan transforming old into new: unwires, then terminates, then
// install-starts, then wires. Instances are matched by id (type, host and
// ordinal are encoded in the id), so unchanged instances produce no actions.
// The goal supplies bundle URIs for InstallStart actions.
EnactmentPlan diff(const Configuration& oldConfig, const Configuration& newConfig,
                   const deladas::Goal& goal);

// Replays a plan on a configuration; used to check plan correctness.
Configuration apply(const Configuration& config, const EnactmentPlan& plan,
                    const deladas::Goal& goal);

}  // namespace adme::model

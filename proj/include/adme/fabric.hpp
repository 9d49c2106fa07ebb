#pragma once

// Deterministic discrete-event simulator of bundle-firing hosts: per-instance
// machines, a collocated autonomic management process (AMP) per active host,
// heartbeats, channels, and scripted failure injection.
//
// Time is integer milliseconds on a single logical timeline. Monitoring runs
// on global grids: AMP heartbeats every heartbeatPeriodMs, component liveness
// polls every pollPeriodMs. At equal timestamps heartbeats are processed
// first, then polls, then scenario directives, each FIFO within its class.
// Consequences:
//  - a process killed at time t is reported by its AMP at the next poll tick
//    strictly after t;
//  - a host killed at time t still emits its heartbeat at t if t is a grid
//    tick; the failure is detected at the heartbeat tick of the
//    missThreshold-th consecutive miss.

#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "adme/deladas.hpp"
#include "adme/model.hpp"

namespace adme::fabric {

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg)
      : std::runtime_error("fabric config error: " + msg) {}
};

class ScenarioError : public std::runtime_error {
public:
  explicit ScenarioError(const std::string& msg)
      : std::runtime_error("scenario error: " + msg) {}
};

// Raised by fire() and by directives that reference missing entities.
class FireError : public std::runtime_error {
public:
  enum class Code {
    HostUnreachable,
    UnknownHost,
    UnknownInstance,
    UnknownWire,
    DuplicateInstance,
    DuplicateHost,
    EndpointBusy,
  };
  FireError(Code code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Code code() const { return code_; }

private:
  Code code_;
};

struct FabricParams {
  int heartbeatPeriodMs = 1000;
  int pollPeriodMs = 500;
  int missThreshold = 3;
};

struct FabricEvent {
  enum class Kind {
    ProcessFailed,   // reported by the collocated AMP
    AmpHeartbeat,
    HostFailed,      // detected via missed AMP heartbeats
    BundleFired,
    ChannelBroken,
    ResourceChange,  // add-host
    ConstraintError, // manager-logged
  };
  Kind kind = Kind::AmpHeartbeat;
  long timeMs = 0;
  std::string host;
  std::string instanceId;  // ProcessFailed
  std::string detail;      // BundleFired action text / ResourceChange args / reason
  model::Endpoint src, dst; // ChannelBroken

  // `t=<ms> <EVENT> <args...>`, stable field order
  std::string log_line() const;
};

struct ScenarioDirective {
  enum class Kind { KillProcess, KillHost, AddHost, Stop };
  Kind kind = Kind::Stop;
  long timeMs = 0;
  std::string host;
  std::string instanceId;  // KillProcess
  std::string ip;          // AddHost
};

// One directive per line, `#` comments, non-decreasing times:
//   at <t> kill-process <host> <instanceId>
//   at <t> kill-host <host>
//   at <t> add-host <name> ip=<addr>
//   at <t> stop
std::vector<ScenarioDirective> parse_scenario(std::string_view text);

class Fabric {
public:
  Fabric(const std::vector<deladas::HostDecl>& hosts, const FabricParams& params,
         unsigned seed);

  // Events of these kinds are delivered to the sink synchronously in emission
  // order: ProcessFailed, HostFailed, ResourceChange, AmpHeartbeat.
  void set_event_sink(std::function<void(const FabricEvent&)> sink);

  void fire(const model::Action& action);        // throws FireError
  void inject(const ScenarioDirective& directive);  // time must be >= now
  std::vector<FabricEvent> run_until(long tMs);

  long now() const { return now_; }
  bool has_host(const std::string& name) const;
  bool host_up(const std::string& name) const;
  bool machine_running(const std::string& instanceId) const;
  std::vector<std::string> machines_on(const std::string& host) const;

  // Appends a manager-side line (e.g. CONSTRAINT_ERROR) to the event stream.
  void log_constraint_error(const std::string& reason);

  const std::vector<FabricEvent>& event_log() const { return log_; }
  void clear_event_log() { log_.clear(); }
  std::vector<std::string> format_log() const;

private:
  struct HostState {
    std::string name;
    std::string ip;
    bool up = true;
    std::map<std::string, std::string> machines;  // instanceId -> type name
    bool ampRunning = false;
    bool ampExpected = false;  // heartbeats awaited until failure reported
    int missCount = 0;
    std::vector<std::string> pendingDeaths;  // for the AMP's next poll
  };

  enum class TickKind { Heartbeat = 0, Poll = 1, Directive = 2 };
  struct QueueEntry {
    long timeMs;
    int priority;
    long seq;
    TickKind tick;
    ScenarioDirective directive;  // when tick == Directive

    bool operator>(const QueueEntry& other) const {
      return std::tie(timeMs, priority, seq) >
             std::tie(other.timeMs, other.priority, other.seq);
    }
  };

  FabricParams params_;
  unsigned seed_;  // reserved; the simulation itself is deterministic
  long now_ = 0;
  long nextSeq_ = 0;
  std::vector<HostState> hosts_;  // registration order
  std::vector<model::Wire> wireTable_;
  std::set<std::string> busyEndpoints_;  // "<id>.<port>[<slot>]"
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
  std::vector<FabricEvent> log_;
  std::vector<FabricEvent>* window_ = nullptr;
  std::function<void(const FabricEvent&)> sink_;

  HostState* find_host(const std::string& name);
  HostState* host_of_machine(const std::string& instanceId);
  void emit(FabricEvent event);
  void schedule(long timeMs, TickKind tick, ScenarioDirective directive = {});
  void handle_heartbeat_tick();
  void handle_poll_tick();
  void handle_directive(const ScenarioDirective& d);
  void kill_machines(HostState& host, bool reportToAmp);
  void drop_wires_of(const std::string& instanceId, bool logBroken);
};

}  // namespace adme::fabric

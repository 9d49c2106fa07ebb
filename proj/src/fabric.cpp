#include "adme/fabric.hpp"

#include <algorithm>
#include <sstream>

namespace adme::fabric {

std::string FabricEvent::log_line() const {
  std::string line = "t=" + std::to_string(timeMs) + " ";
  switch (kind) {
    case Kind::ProcessFailed:
      return line + "PROCESS_FAILED " + host + " " + instanceId;
    case Kind::AmpHeartbeat:
      return line + "AMP_HEARTBEAT " + host;
    case Kind::HostFailed:
      return line + "HOST_FAILED " + host;
    case Kind::BundleFired:
      return line + "BUNDLE_FIRED " + detail;
    case Kind::ChannelBroken:
      return line + "CHANNEL_BROKEN " + src.text() + " " + dst.text();
    case Kind::ResourceChange:
      return line + "RESOURCE_CHANGE " + detail;
    case Kind::ConstraintError:
      return line + "CONSTRAINT_ERROR " + detail;
  }
  return line + "?";
}

// ---------------------------------------------------------------------------
// Scenario parsing

std::vector<ScenarioDirective> parse_scenario(std::string_view text) {
  std::vector<ScenarioDirective> directives;
  std::istringstream in{std::string(text)};
  std::string rawLine;
  int lineNo = 0;
  long lastTime = 0;
  while (std::getline(in, rawLine)) {
    ++lineNo;
    std::string line = rawLine;
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::istringstream parts(line);
    std::vector<std::string> words;
    std::string word;
    while (parts >> word) words.push_back(word);
    if (words.empty()) continue;
    auto fail = [&](const std::string& why) -> ScenarioError {
      return ScenarioError("line " + std::to_string(lineNo) + ": " + why);
    };
    if (words[0] != "at" || words.size() < 3) throw fail("expected 'at <t> <directive>'");
    ScenarioDirective d;
    try {
      d.timeMs = std::stol(words[1]);
    } catch (const std::exception&) {
      throw fail("bad time '" + words[1] + "'");
    }
    if (d.timeMs < lastTime) throw fail("directive times must be non-decreasing");
    lastTime = d.timeMs;
    const std::string& verb = words[2];
    if (verb == "kill-process") {
      if (words.size() != 5) throw fail("kill-process needs <host> <instanceId>");
      d.kind = ScenarioDirective::Kind::KillProcess;
      d.host = words[3];
      d.instanceId = words[4];
    } else if (verb == "kill-host") {
      if (words.size() != 4) throw fail("kill-host needs <host>");
      d.kind = ScenarioDirective::Kind::KillHost;
      d.host = words[3];
    } else if (verb == "add-host") {
      if (words.size() != 5 || words[4].rfind("ip=", 0) != 0)
        throw fail("add-host needs <name> ip=<addr>");
      d.kind = ScenarioDirective::Kind::AddHost;
      d.host = words[3];
      d.ip = words[4].substr(3);
    } else if (verb == "stop") {
      if (words.size() != 3) throw fail("stop takes no arguments");
      d.kind = ScenarioDirective::Kind::Stop;
    } else {
      throw fail("unknown directive '" + verb + "'");
    }
    directives.push_back(std::move(d));
  }
  return directives;
}

// ---------------------------------------------------------------------------
// Fabric

Fabric::Fabric(const std::vector<deladas::HostDecl>& hosts,
               const FabricParams& params, unsigned seed)
    : params_(params), seed_(seed) {
  if (params.heartbeatPeriodMs <= 0 || params.pollPeriodMs <= 0 ||
      params.missThreshold <= 0)
    throw ConfigError("periods and miss threshold must be positive");
  for (const auto& decl : hosts) {
    if (find_host(decl.name))
      throw FireError(FireError::Code::DuplicateHost,
                      "duplicate host '" + decl.name + "'");
    HostState state;
    state.name = decl.name;
    if (const std::string* ip = decl.find_attribute("ipaddress")) state.ip = *ip;
    hosts_.push_back(std::move(state));
  }
  schedule(params_.heartbeatPeriodMs, TickKind::Heartbeat);
  schedule(params_.pollPeriodMs, TickKind::Poll);
}

void Fabric::set_event_sink(std::function<void(const FabricEvent&)> sink) {
  sink_ = std::move(sink);
}

Fabric::HostState* Fabric::find_host(const std::string& name) {
  for (auto& h : hosts_)
    if (h.name == name) return &h;
  return nullptr;
}

Fabric::HostState* Fabric::host_of_machine(const std::string& instanceId) {
  for (auto& h : hosts_)
    if (h.machines.count(instanceId)) return &h;
  return nullptr;
}

bool Fabric::has_host(const std::string& name) const {
  return const_cast<Fabric*>(this)->find_host(name) != nullptr;
}

bool Fabric::host_up(const std::string& name) const {
  const HostState* h = const_cast<Fabric*>(this)->find_host(name);
  return h && h->up;
}

bool Fabric::machine_running(const std::string& instanceId) const {
  return const_cast<Fabric*>(this)->host_of_machine(instanceId) != nullptr;
}

std::vector<std::string> Fabric::machines_on(const std::string& host) const {
  std::vector<std::string> out;
  const HostState* h = const_cast<Fabric*>(this)->find_host(host);
  if (h)
    for (const auto& [id, type] : h->machines) out.push_back(id);
  return out;
}

void Fabric::emit(FabricEvent event) {
  event.timeMs = now_;
  log_.push_back(event);
  if (window_) window_->push_back(event);
  bool deliver = event.kind == FabricEvent::Kind::ProcessFailed ||
                 event.kind == FabricEvent::Kind::HostFailed ||
                 event.kind == FabricEvent::Kind::ResourceChange ||
                 event.kind == FabricEvent::Kind::AmpHeartbeat;
  if (deliver && sink_) sink_(event);
}

void Fabric::log_constraint_error(const std::string& reason) {
  FabricEvent event;
  event.kind = FabricEvent::Kind::ConstraintError;
  event.detail = reason;
  emit(std::move(event));
}

void Fabric::schedule(long timeMs, TickKind tick, ScenarioDirective directive) {
  QueueEntry entry;
  entry.timeMs = timeMs;
  entry.priority = static_cast<int>(tick);
  entry.seq = nextSeq_++;
  entry.tick = tick;
  entry.directive = std::move(directive);
  queue_.push(std::move(entry));
}

void Fabric::inject(const ScenarioDirective& directive) {
  if (directive.timeMs < now_)
    throw ScenarioError("directive time " + std::to_string(directive.timeMs) +
                        " is in the past");
  if (directive.kind == ScenarioDirective::Kind::Stop) return;  // runner concern
  schedule(directive.timeMs, TickKind::Directive, directive);
}

void Fabric::fire(const model::Action& action) {
  using Kind = model::Action::Kind;
  auto require_host_up = [&](const std::string& name) -> HostState& {
    HostState* h = find_host(name);
    if (!h) throw FireError(FireError::Code::UnknownHost, "unknown host '" + name + "'");
    if (!h->up)
      throw FireError(FireError::Code::HostUnreachable, "host '" + name + "' is down");
    return *h;
  };

  switch (action.kind) {
    case Kind::InstallStart: {
      HostState& h = require_host_up(action.host);
      if (machine_running(action.instanceId))
        throw FireError(FireError::Code::DuplicateInstance,
                        "instance '" + action.instanceId + "' is already running");
      h.machines[action.instanceId] = action.typeName;
      if (!h.ampRunning) {
        h.ampRunning = true;
        h.ampExpected = true;
        h.missCount = 0;
      }
      break;
    }
    case Kind::Terminate: {
      HostState& h = require_host_up(action.host);
      auto it = h.machines.find(action.instanceId);
      if (it == h.machines.end())
        throw FireError(FireError::Code::UnknownInstance,
                        "no machine '" + action.instanceId + "' on host '" +
                            action.host + "'");
      drop_wires_of(action.instanceId, /*logBroken=*/false);
      h.machines.erase(it);
      break;
    }
    case Kind::Wire: {
      HostState* srcHost = host_of_machine(action.src.instanceId);
      HostState* dstHost = host_of_machine(action.dst.instanceId);
      if (!srcHost || !dstHost)
        throw FireError(FireError::Code::UnknownInstance,
                        "wire endpoint instance is not running");
      if (busyEndpoints_.count(action.src.text()) ||
          busyEndpoints_.count(action.dst.text()))
        throw FireError(FireError::Code::EndpointBusy,
                        "endpoint already wired: " + action.src.text() + " -> " +
                            action.dst.text());
      wireTable_.push_back({action.src, action.dst});
      busyEndpoints_.insert(action.src.text());
      busyEndpoints_.insert(action.dst.text());
      break;
    }
    case Kind::Unwire: {
      auto it = std::find_if(wireTable_.begin(), wireTable_.end(),
                             [&](const model::Wire& w) {
                               return w.src == action.src && w.dst == action.dst;
                             });
      if (it == wireTable_.end())
        throw FireError(FireError::Code::UnknownWire,
                        "no wire " + action.src.text() + " -> " + action.dst.text());
      busyEndpoints_.erase(it->src.text());
      busyEndpoints_.erase(it->dst.text());
      wireTable_.erase(it);
      break;
    }
  }

  FabricEvent event;
  event.kind = FabricEvent::Kind::BundleFired;
  event.host = action.host;
  event.detail = action.text();
  emit(std::move(event));
}

void Fabric::drop_wires_of(const std::string& instanceId, bool logBroken) {
  for (auto it = wireTable_.begin(); it != wireTable_.end();) {
    if (it->src.instanceId == instanceId || it->dst.instanceId == instanceId) {
      busyEndpoints_.erase(it->src.text());
      busyEndpoints_.erase(it->dst.text());
      if (logBroken) {
        FabricEvent event;
        event.kind = FabricEvent::Kind::ChannelBroken;
        event.src = it->src;
        event.dst = it->dst;
        emit(std::move(event));
      }
      it = wireTable_.erase(it);
    } else {
      ++it;
    }
  }
}

void Fabric::handle_heartbeat_tick() {
  // Settle all monitor state before emitting: the sink may re-enter fire().
  std::vector<std::string> beating;
  std::vector<std::string> failed;
  for (auto& h : hosts_) {
    if (h.up && h.ampRunning) {
      h.missCount = 0;
      beating.push_back(h.name);
    }
  }
  for (auto& h : hosts_) {
    if (h.ampExpected && !(h.up && h.ampRunning)) {
      if (++h.missCount >= params_.missThreshold) {
        h.ampExpected = false;
        h.missCount = 0;
        failed.push_back(h.name);
      }
    }
  }
  for (const auto& name : beating) {
    FabricEvent event;
    event.kind = FabricEvent::Kind::AmpHeartbeat;
    event.host = name;
    emit(std::move(event));
  }
  for (const auto& name : failed) {
    FabricEvent event;
    event.kind = FabricEvent::Kind::HostFailed;
    event.host = name;
    emit(std::move(event));
  }
  schedule(now_ + params_.heartbeatPeriodMs, TickKind::Heartbeat);
}

void Fabric::handle_poll_tick() {
  std::vector<std::pair<std::string, std::string>> reports;  // (host, instance)
  for (auto& h : hosts_) {
    if (!(h.up && h.ampRunning)) continue;
    for (const std::string& id : h.pendingDeaths) reports.emplace_back(h.name, id);
    h.pendingDeaths.clear();
  }
  for (const auto& [host, id] : reports) {
    FabricEvent event;
    event.kind = FabricEvent::Kind::ProcessFailed;
    event.host = host;
    event.instanceId = id;
    emit(std::move(event));
  }
  schedule(now_ + params_.pollPeriodMs, TickKind::Poll);
}

void Fabric::handle_directive(const ScenarioDirective& d) {
  switch (d.kind) {
    case ScenarioDirective::Kind::KillProcess: {
      HostState* h = find_host(d.host);
      if (!h) throw FireError(FireError::Code::UnknownHost, "unknown host '" + d.host + "'");
      auto it = h->machines.find(d.instanceId);
      if (it == h->machines.end())
        throw FireError(FireError::Code::UnknownInstance,
                        "no machine '" + d.instanceId + "' on host '" + d.host + "'");
      drop_wires_of(d.instanceId, /*logBroken=*/true);
      h->machines.erase(it);
      h->pendingDeaths.push_back(d.instanceId);
      break;
    }
    case ScenarioDirective::Kind::KillHost: {
      HostState* h = find_host(d.host);
      if (!h) throw FireError(FireError::Code::UnknownHost, "unknown host '" + d.host + "'");
      if (!h->up) break;  // already dead
      kill_machines(*h, /*reportToAmp=*/false);
      h->up = false;
      h->ampRunning = false;
      h->pendingDeaths.clear();  // the AMP died with the host
      break;
    }
    case ScenarioDirective::Kind::AddHost: {
      if (find_host(d.host))
        throw FireError(FireError::Code::DuplicateHost,
                        "host '" + d.host + "' already exists");
      HostState state;
      state.name = d.host;
      state.ip = d.ip;
      hosts_.push_back(std::move(state));
      FabricEvent event;
      event.kind = FabricEvent::Kind::ResourceChange;
      event.host = d.host;
      event.detail = "add-host " + d.host + " ip=" + d.ip;
      emit(std::move(event));
      break;
    }
    case ScenarioDirective::Kind::Stop:
      break;
  }
}

void Fabric::kill_machines(HostState& host, bool reportToAmp) {
  std::vector<std::string> ids;
  for (const auto& [id, type] : host.machines) ids.push_back(id);
  for (const std::string& id : ids) {
    drop_wires_of(id, /*logBroken=*/true);
    host.machines.erase(id);
    if (reportToAmp) host.pendingDeaths.push_back(id);
  }
}

std::vector<FabricEvent> Fabric::run_until(long tMs) {
  if (tMs < now_) throw ScenarioError("run_until into the past");
  std::vector<FabricEvent> window;
  window_ = &window;
  try {
    while (!queue_.empty() && queue_.top().timeMs <= tMs) {
      QueueEntry entry = queue_.top();
      queue_.pop();
      now_ = entry.timeMs;
      switch (entry.tick) {
        case TickKind::Heartbeat: handle_heartbeat_tick(); break;
        case TickKind::Poll: handle_poll_tick(); break;
        case TickKind::Directive: handle_directive(entry.directive); break;
      }
    }
  } catch (...) {
    window_ = nullptr;
    throw;
  }
  now_ = tMs;
  window_ = nullptr;
  return window;
}

std::vector<std::string> Fabric::format_log() const {
  std::vector<std::string> lines;
  lines.reserve(log_.size());
  for (const auto& event : log_) lines.push_back(event.log_line());
  return lines;
}

}  // namespace adme::fabric

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "adme/fabric.hpp"
#include "support.hpp"

using namespace adme;
using fabric::Fabric;
using fabric::FabricEvent;
using fabric::FabricParams;
using fabric::ScenarioDirective;
using model::Action;

namespace {

std::vector<deladas::HostDecl> six_hosts() {
  return deladas::parse_goal(testsupport::randc_text()).hosts;
}

Action install(const std::string& host, const std::string& id,
               const std::string& type = "Router") {
  Action a;
  a.kind = Action::Kind::InstallStart;
  a.host = host;
  a.instanceId = id;
  a.typeName = type;
  return a;
}

Action wire(const model::Endpoint& src, const model::Endpoint& dst,
            const std::string& srcHost) {
  Action a;
  a.kind = Action::Kind::Wire;
  a.src = src;
  a.dst = dst;
  a.host = srcHost;
  return a;
}

int count_kind(const std::vector<FabricEvent>& events, FabricEvent::Kind kind) {
  int n = 0;
  for (const auto& e : events) n += e.kind == kind ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("a fresh fabric has all hosts up and nothing running") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  for (int i = 1; i <= 6; ++i) {
    std::string host = "h" + std::to_string(i);
    CHECK(fab.host_up(host));
    CHECK(fab.machines_on(host).empty());
  }
  CHECK(fab.run_until(0).empty());
}

TEST_CASE("an empty fabric is valid") {
  Fabric fab({}, FabricParams{}, 0);
  CHECK(fab.run_until(2500).size() == 0);
}

TEST_CASE("non-positive periods are configuration errors") {
  CHECK_THROWS_AS(Fabric({}, FabricParams{.heartbeatPeriodMs = 0}, 0),
                  fabric::ConfigError);
  CHECK_THROWS_AS(Fabric({}, FabricParams{.pollPeriodMs = -5}, 0), fabric::ConfigError);
  CHECK_THROWS_AS(Fabric({}, FabricParams{.missThreshold = 0}, 0), fabric::ConfigError);
}

TEST_CASE("install starts the machine and auto-deploys the AMP") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h3", "Router1@h3"));
  CHECK(fab.machine_running("Router1@h3"));
  CHECK(fab.machines_on("h3") == std::vector<std::string>{"Router1@h3"});
  // the AMP heartbeats from the next grid tick
  auto events = fab.run_until(1000);
  CHECK(count_kind(events, FabricEvent::Kind::AmpHeartbeat) == 1);
}

TEST_CASE("terminate of a never-installed machine fails") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  Action a;
  a.kind = Action::Kind::Terminate;
  a.host = "h3";
  a.instanceId = "Router1@h3";
  try {
    fab.fire(a);
    FAIL("expected FireError");
  } catch (const fabric::FireError& e) {
    CHECK(e.code() == fabric::FireError::Code::UnknownInstance);
  }
}

TEST_CASE("wiring an occupied endpoint fails") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h1", "Client1@h1", "Client"));
  fab.fire(install("h3", "Router1@h3"));
  fab.fire(install("h4", "Router1@h4"));
  fab.fire(wire({"Client1@h1", "out", 0}, {"Router1@h3", "cin", 0}, "h1"));
  try {
    fab.fire(wire({"Client1@h1", "out", 0}, {"Router1@h4", "cin", 0}, "h1"));
    FAIL("expected FireError");
  } catch (const fabric::FireError& e) {
    CHECK(e.code() == fabric::FireError::Code::EndpointBusy);
  }
}

TEST_CASE("firing on a down host is unreachable") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  ScenarioDirective kill;
  kill.kind = ScenarioDirective::Kind::KillHost;
  kill.timeMs = 0;
  kill.host = "h3";
  fab.inject(kill);
  fab.run_until(10);
  try {
    fab.fire(install("h3", "Router1@h3"));
    FAIL("expected FireError");
  } catch (const fabric::FireError& e) {
    CHECK(e.code() == fabric::FireError::Code::HostUnreachable);
  }
}

TEST_CASE("a killed process is reported by its AMP at the next poll") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h3", "Router1@h3"));
  ScenarioDirective kill;
  kill.kind = ScenarioDirective::Kind::KillProcess;
  kill.timeMs = 5000;
  kill.host = "h3";
  kill.instanceId = "Router1@h3";
  fab.inject(kill);
  auto events = fab.run_until(20000);
  std::vector<const FabricEvent*> failures;
  for (const auto& e : events)
    if (e.kind == FabricEvent::Kind::ProcessFailed) failures.push_back(&e);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0]->timeMs == 5500);
  CHECK(failures[0]->host == "h3");
  CHECK(failures[0]->instanceId == "Router1@h3");
  // no host failure: the AMP keeps beating
  CHECK(count_kind(events, FabricEvent::Kind::HostFailed) == 0);
}

TEST_CASE("a killed host is detected at the third missed heartbeat") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h3", "Router1@h3"));
  ScenarioDirective kill;
  kill.kind = ScenarioDirective::Kind::KillHost;
  kill.timeMs = 5000;
  kill.host = "h3";
  fab.inject(kill);
  auto events = fab.run_until(20000);
  std::vector<const FabricEvent*> failures;
  for (const auto& e : events)
    if (e.kind == FabricEvent::Kind::HostFailed) failures.push_back(&e);
  REQUIRE(failures.size() == 1);
  // heartbeat at 5000 still fires (kill is ordered after the grid tick);
  // misses accumulate at 6000, 7000 and 8000
  CHECK(failures[0]->timeMs == 8000);
  CHECK(failures[0]->host == "h3");
  // the dead AMP never reports its machines
  CHECK(count_kind(events, FabricEvent::Kind::ProcessFailed) == 0);
  // heartbeats from h3 stop after the kill
  for (const auto& e : events)
    if (e.kind == FabricEvent::Kind::AmpHeartbeat && e.host == "h3")
      CHECK(e.timeMs <= 5000);
}

TEST_CASE("killing a machine releases its endpoints for re-wiring") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h1", "Client1@h1", "Client"));
  fab.fire(install("h3", "Router1@h3"));
  fab.fire(wire({"Client1@h1", "out", 0}, {"Router1@h3", "cin", 0}, "h1"));
  ScenarioDirective kill;
  kill.kind = ScenarioDirective::Kind::KillProcess;
  kill.timeMs = 1000;
  kill.host = "h3";
  kill.instanceId = "Router1@h3";
  fab.inject(kill);
  auto events = fab.run_until(2000);
  CHECK(count_kind(events, FabricEvent::Kind::ChannelBroken) == 1);
  // the restart path re-fires the same wire
  fab.fire(install("h3", "Router1@h3"));
  fab.fire(wire({"Client1@h1", "out", 0}, {"Router1@h3", "cin", 0}, "h1"));
}

TEST_CASE("add-host registers an up host and emits a resource change") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  ScenarioDirective add;
  add.kind = ScenarioDirective::Kind::AddHost;
  add.timeMs = 1500;
  add.host = "h7";
  add.ip = "192.168.0.7";
  fab.inject(add);
  auto events = fab.run_until(2000);
  int changes = 0;
  for (const auto& e : events) {
    if (e.kind != FabricEvent::Kind::ResourceChange) continue;
    ++changes;
    CHECK(e.host == "h7");
    CHECK(e.detail == "add-host h7 ip=192.168.0.7");
  }
  CHECK(changes == 1);
  CHECK(fab.host_up("h7"));
}

TEST_CASE("directives referencing unknown entities fail") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  ScenarioDirective kill;
  kill.kind = ScenarioDirective::Kind::KillHost;
  kill.timeMs = 100;
  kill.host = "h99";
  fab.inject(kill);
  CHECK_THROWS_AS(fab.run_until(200), fabric::FireError);
}

TEST_CASE("the event log is a pure function of the inputs") {
  auto run = [&]() {
    Fabric fab(six_hosts(), FabricParams{}, 7);
    fab.fire(install("h3", "Router1@h3"));
    fab.fire(install("h4", "Router1@h4"));
    ScenarioDirective killProcess;
    killProcess.kind = ScenarioDirective::Kind::KillProcess;
    killProcess.timeMs = 1200;
    killProcess.host = "h3";
    killProcess.instanceId = "Router1@h3";
    fab.inject(killProcess);
    ScenarioDirective killHost;
    killHost.kind = ScenarioDirective::Kind::KillHost;
    killHost.timeMs = 4200;
    killHost.host = "h4";
    fab.inject(killHost);
    fab.run_until(12000);
    return fab.format_log();
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("every injected kill produces exactly one failure report") {
  std::mt19937 rng(99);
  for (int round = 0; round < 25; ++round) {
    Fabric fab(six_hosts(), FabricParams{}, 0);
    // deploy a machine on every host
    std::vector<std::string> ids;
    for (int i = 1; i <= 6; ++i) {
      std::string host = "h" + std::to_string(i);
      std::string id = "Router1@" + host;
      fab.fire(install(host, id));
      ids.push_back(id);
    }
    // kill a random subset, mixing process and host kills
    int processKills = 0, hostKills = 0;
    long t = 500;
    for (int i = 1; i <= 6; ++i) {
      unsigned pick = rng() % 3;
      if (pick == 0) continue;
      ScenarioDirective d;
      d.timeMs = t += 700;
      d.host = "h" + std::to_string(i);
      if (pick == 1) {
        d.kind = ScenarioDirective::Kind::KillProcess;
        d.instanceId = "Router1@h" + std::to_string(i);
        ++processKills;
      } else {
        d.kind = ScenarioDirective::Kind::KillHost;
        ++hostKills;
      }
      fab.inject(d);
    }
    auto events = fab.run_until(t + 10000);
    CHECK(count_kind(events, FabricEvent::Kind::ProcessFailed) == processKills);
    CHECK(count_kind(events, FabricEvent::Kind::HostFailed) == hostKills);
  }
}

TEST_CASE("scenario files parse and validate") {
  auto directives = fabric::parse_scenario(
      "# warm-up\n"
      "at 5000 kill-process h3 Router1@h3\n"
      "at 9000 kill-host h3  # comment\n"
      "at 9500 add-host h7 ip=192.168.0.7\n"
      "at 12000 stop\n");
  REQUIRE(directives.size() == 4);
  CHECK(directives[0].kind == ScenarioDirective::Kind::KillProcess);
  CHECK(directives[0].timeMs == 5000);
  CHECK(directives[0].instanceId == "Router1@h3");
  CHECK(directives[1].kind == ScenarioDirective::Kind::KillHost);
  CHECK(directives[2].kind == ScenarioDirective::Kind::AddHost);
  CHECK(directives[2].ip == "192.168.0.7");
  CHECK(directives[3].kind == ScenarioDirective::Kind::Stop);

  CHECK_THROWS_AS(fabric::parse_scenario("at 100 feed-host h1\n"),
                  fabric::ScenarioError);
  CHECK_THROWS_AS(fabric::parse_scenario("at 500 kill-host h1\nat 100 kill-host h2\n"),
                  fabric::ScenarioError);
  CHECK_THROWS_AS(fabric::parse_scenario("kill-host h1\n"), fabric::ScenarioError);
}

TEST_CASE("event log lines have a stable format") {
  Fabric fab(six_hosts(), FabricParams{}, 0);
  fab.fire(install("h3", "Router1@h3"));
  auto lines = fab.format_log();
  REQUIRE(lines.size() == 1);
  CHECK(lines[0] == "t=0 BUNDLE_FIRED INSTALL_START h3 Router1@h3 Router");
  fab.log_constraint_error("no configuration fits");
  CHECK(fab.format_log().back() == "t=0 CONSTRAINT_ERROR no configuration fits");
}

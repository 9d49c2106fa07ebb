#pragma once

// Shared test helpers: fixture loading and the small-goal corpus used by the
// solver/oracle equivalence suite.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adme/deladas.hpp"

namespace testsupport {

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::string randc_text() { return read_fixture("randc.dld"); }

inline std::string reference_ddd() { return read_fixture("reference.xml"); }

// randc constraintset over the first `hostCount` hosts.
inline std::string randc_with_hosts(int hostCount) {
  std::string text =
      "component Client(\n"
      "   code = \"file:///D:ClientBundle.xml\",\n"
      "   ports = {in, out}\n"
      ")\n"
      "component Router(\n"
      "   code = \"http://deladas.org/RBundle.xml\",\n"
      "   ports = {cin[], cout[], rin[], rout[]}\n"
      ")\n";
  for (int i = 1; i <= hostCount; ++i)
    text += "host h" + std::to_string(i) + " = host(ipaddress = \"192.168.0." +
            std::to_string(i) + "\")\n";
  text +=
      "constraintset randc = constraintset {\n"
      "  forall host h in deployment (card(instancesof Router in h) = 1 or "
      "card(instancesof Client in h) = 1)\n"
      "  forall Client c in deployment (exists Router r in deployment "
      "(c.ports.out connectsto r.ports.cin and c.ports.in connectsto "
      "r.ports.cout))\n"
      "  forall Router r in deployment (card(Client c connectedto r) <= 2)\n"
      "  forall Router r1 in deployment (exists Router r2 in deployment "
      "(r1.ports.rout connectsto r2.ports.rin and r1.ports.rin connectsto "
      "r2.ports.rout))\n"
      "  forall Router r1, r2 in deployment (reachable(r1, r2))\n"
      "}\n";
  return text;
}

struct SuiteGoal {
  std::string name;
  std::string text;
};

// Small goals for exhaustive solver-vs-oracle comparison: randc over 1-3
// hosts, the vacuous constraintset, and one goal per clause form.
inline std::vector<SuiteGoal> oracle_suite() {
  std::vector<SuiteGoal> suite;
  suite.push_back({"randc-1host", randc_with_hosts(1)});
  suite.push_back({"randc-2hosts", randc_with_hosts(2)});
  suite.push_back({"randc-3hosts", randc_with_hosts(3)});
  suite.push_back({"empty-constraintset",
                   "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
                   "host h1 = host(ipaddress = \"10.0.0.1\")\n"
                   "constraintset empty = constraintset {\n}\n"});
  suite.push_back(
      {"one-instance-per-host",
       "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
       "host h1 = host(ipaddress = \"10.0.0.1\")\n"
       "host h2 = host(ipaddress = \"10.0.0.2\")\n"
       "constraintset each = constraintset {\n"
       "  forall host h in deployment (card(instancesof A in h) = 1)\n"
       "}\n"});
  suite.push_back(
      {"exists-host",
       "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
       "host h1 = host(ipaddress = \"10.0.0.1\")\n"
       "host h2 = host(ipaddress = \"10.0.0.2\")\n"
       "constraintset some = constraintset {\n"
       "  exists host h in deployment (card(instancesof A in h) >= 1)\n"
       "}\n"});
  suite.push_back(
      {"client-server-link",
       "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
       "component B(\n  code = \"file:///b.xml\",\n  ports = {q[]}\n)\n"
       "host h1 = host(ipaddress = \"10.0.0.1\")\n"
       "host h2 = host(ipaddress = \"10.0.0.2\")\n"
       "constraintset link = constraintset {\n"
       "  forall A a in deployment (exists B b in deployment (a.ports.p "
       "connectsto b.ports.q))\n"
       "}\n"});
  suite.push_back(
      {"bounded-fanin",
       "component A(\n  code = \"file:///a.xml\",\n  ports = {p}\n)\n"
       "component B(\n  code = \"file:///b.xml\",\n  ports = {q[]}\n)\n"
       "host h1 = host(ipaddress = \"10.0.0.1\")\n"
       "host h2 = host(ipaddress = \"10.0.0.2\")\n"
       "host h3 = host(ipaddress = \"10.0.0.3\")\n"
       "constraintset fanin = constraintset {\n"
       "  forall A a in deployment (exists B b in deployment (a.ports.p "
       "connectsto b.ports.q))\n"
       "  forall B b in deployment (card(A a connectedto b) <= 1)\n"
       "}\n"});
  suite.push_back(
      {"connected-ring",
       "component N(\n  code = \"file:///n.xml\",\n  ports = {l[]}\n)\n"
       "host h1 = host(ipaddress = \"10.0.0.1\")\n"
       "host h2 = host(ipaddress = \"10.0.0.2\")\n"
       "host h3 = host(ipaddress = \"10.0.0.3\")\n"
       "constraintset ring = constraintset {\n"
       "  forall host h in deployment (card(instancesof N in h) = 1)\n"
       "  forall N x in deployment (exists N y in deployment (x.ports.l "
       "connectsto y.ports.l))\n"
       "  forall N n1, n2 in deployment (reachable(n1, n2))\n"
       "}\n"});
  return suite;
}

}  // namespace testsupport

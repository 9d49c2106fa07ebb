#include "adme/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace adme::model {

using deladas::CmpOp;
using deladas::Goal;

// ---------------------------------------------------------------------------
// Endpoints and configurations

std::string Endpoint::text() const {
  return instanceId + "." + port + "[" + std::to_string(slot) + "]";
}

Endpoint Endpoint::parse(std::string_view text) {
  auto bad = [&](const std::string& why) -> DddParseError {
    return DddParseError("endpoint '" + std::string(text) + "'", why);
  };
  size_t dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0) throw bad("missing '.'");
  size_t lb = text.find('[', dot + 1);
  if (lb == std::string_view::npos || lb == dot + 1) throw bad("missing '[slot]'");
  if (text.empty() || text.back() != ']') throw bad("missing ']'");
  std::string_view slotText = text.substr(lb + 1, text.size() - lb - 2);
  if (slotText.empty()) throw bad("empty slot index");
  int slot = 0;
  for (char c : slotText) {
    if (c < '0' || c > '9') throw bad("slot index is not a number");
    slot = slot * 10 + (c - '0');
  }
  Endpoint ep;
  ep.instanceId = std::string(text.substr(0, dot));
  ep.port = std::string(text.substr(dot + 1, lb - dot - 1));
  ep.slot = slot;
  return ep;
}

const Instance* Configuration::find_instance(std::string_view id) const {
  for (const auto& inst : instances)
    if (inst.id == id) return &inst;
  return nullptr;
}

Configuration normalize(Configuration config) {
  std::sort(config.instances.begin(), config.instances.end());
  std::sort(config.wires.begin(), config.wires.end());
  std::set<std::string> ids;
  for (const auto& inst : config.instances)
    if (!ids.insert(inst.id).second)
      throw SchemaError("duplicate instance id '" + inst.id + "'");
  std::set<std::pair<std::string, int>> seenEndpoints;  // (instance.port, slot)
  std::map<std::pair<std::string, std::string>, std::set<int>> slotsPerPort;
  for (const auto& wire : config.wires) {
    if (wire.src.instanceId == wire.dst.instanceId)
      throw SchemaError("wire connects instance '" + wire.src.instanceId +
                        "' to itself");
    for (const Endpoint* ep : {&wire.src, &wire.dst}) {
      if (!ids.count(ep->instanceId))
        throw SchemaError("wire references unknown instance '" + ep->instanceId + "'");
      if (!seenEndpoints.insert({ep->instanceId + "." + ep->port, ep->slot}).second)
        throw SchemaError("endpoint " + ep->text() + " carries more than one wire");
      slotsPerPort[{ep->instanceId, ep->port}].insert(ep->slot);
    }
  }
  for (const auto& [key, slots] : slotsPerPort) {
    int expected = 0;
    for (int slot : slots) {
      if (slot != expected)
        throw SchemaError("slots on " + key.first + "." + key.second +
                          " are not dense");
      ++expected;
    }
  }
  return config;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct ConfigIndex {
  const Configuration& config;
  const Goal& goal;
  std::map<std::string, std::vector<const Instance*>> byType;
  std::map<std::string, std::vector<const Instance*>> byHost;
  // adjacency: instance id -> ids of instances it shares a wire with
  std::map<std::string, std::set<std::string>> adjacency;
  // wires keyed by unordered (instance.port, instance.port)
  std::set<std::pair<std::string, std::string>> portLinks;

  ConfigIndex(const Configuration& c, const Goal& g) : config(c), goal(g) {
    for (const auto& inst : config.instances) {
      const auto* type = goal.find_type(inst.type);
      if (!type)
        throw SchemaError("instance '" + inst.id + "' has unknown type '" +
                          inst.type + "'");
      if (!goal.find_host(inst.host))
        throw SchemaError("instance '" + inst.id + "' is placed on unknown host '" +
                          inst.host + "'");
      byType[inst.type].push_back(&inst);
      byHost[inst.host].push_back(&inst);
    }
    for (const auto& wire : config.wires) {
      for (const Endpoint* ep : {&wire.src, &wire.dst}) {
        const Instance* inst = config.find_instance(ep->instanceId);
        const auto* type = goal.find_type(inst->type);
        const auto* port = type->find_port(ep->port);
        if (!port)
          throw SchemaError("endpoint " + ep->text() + ": type '" + inst->type +
                            "' has no port '" + ep->port + "'");
        if (!port->variadic && ep->slot != 0)
          throw SchemaError("endpoint " + ep->text() +
                            ": non-variadic port used with slot > 0");
      }
      adjacency[wire.src.instanceId].insert(wire.dst.instanceId);
      adjacency[wire.dst.instanceId].insert(wire.src.instanceId);
      std::string a = wire.src.instanceId + "." + wire.src.port;
      std::string b = wire.dst.instanceId + "." + wire.dst.port;
      portLinks.insert({std::min(a, b), std::max(a, b)});
    }
  }

  bool linked(const std::string& instA, const std::string& portA,
              const std::string& instB, const std::string& portB) const {
    std::string a = instA + "." + portA;
    std::string b = instB + "." + portB;
    return portLinks.count({std::min(a, b), std::max(a, b)}) > 0;
  }

  bool reachable(const std::string& from, const std::string& to) const {
    if (from == to) return true;
    std::set<std::string> seen{from};
    std::vector<std::string> frontier{from};
    while (!frontier.empty()) {
      std::string cur = std::move(frontier.back());
      frontier.pop_back();
      auto it = adjacency.find(cur);
      if (it == adjacency.end()) continue;
      for (const auto& next : it->second) {
        if (next == to) return true;
        if (seen.insert(next).second) frontier.push_back(next);
      }
    }
    return false;
  }
};

struct Env {
  // var -> (isHost, host name or instance id)
  std::vector<std::pair<std::string, std::pair<bool, std::string>>> bindings;

  const std::pair<bool, std::string>& lookup(const std::string& var) const {
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
      if (it->first == var) return it->second;
    throw SchemaError("unbound variable '" + var + "'");
  }
};

class Evaluator {
public:
  Evaluator(const ConfigIndex& index) : index_(index) {}

  bool eval(const deladas::Expr& expr, Env& env) {
    return std::visit(
        [&](const auto& node) -> bool {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, deladas::Forall>) {
            bool ok = true;
            for_each_binding(node.binder, env, [&](Env& inner) {
              if (!eval(*node.body, inner)) ok = false;
              return ok;  // stop early once falsified
            });
            return ok;
          } else if constexpr (std::is_same_v<T, deladas::Exists>) {
            bool found = false;
            for_each_binding(node.binder, env, [&](Env& inner) {
              if (eval(*node.body, inner)) found = true;
              return !found;
            });
            return found;
          } else if constexpr (std::is_same_v<T, deladas::And>) {
            for (const auto& arg : node.args)
              if (!eval(*arg, env)) return false;
            return true;
          } else if constexpr (std::is_same_v<T, deladas::Or>) {
            for (const auto& arg : node.args)
              if (eval(*arg, env)) return true;
            return false;
          } else if constexpr (std::is_same_v<T, deladas::CardCmp>) {
            return deladas::cmp_eval(count_set(node.set, env), node.op, node.bound);
          } else if constexpr (std::is_same_v<T, deladas::ConnectsTo>) {
            const auto& a = env.lookup(node.a.var);
            const auto& b = env.lookup(node.b.var);
            if (a.second == b.second) return false;
            return index_.linked(a.second, node.a.port, b.second, node.b.port);
          } else {
            static_assert(std::is_same_v<T, deladas::Reachable>);
            const auto& a = env.lookup(node.v1);
            const auto& b = env.lookup(node.v2);
            return index_.reachable(a.second, b.second);
          }
        },
        expr.node);
  }

  // Enumerates bindings for a binder; fn returns false to stop.
  template <typename Fn>
  void for_each_binding(const deladas::Binder& binder, Env& env, Fn fn) {
    if (binder.typeName == "host") {
      for (const auto& host : index_.goal.hosts) {
        env.bindings.push_back({binder.var, {true, host.name}});
        bool keep = fn(env);
        env.bindings.pop_back();
        if (!keep) return;
      }
    } else {
      auto it = index_.byType.find(binder.typeName);
      if (it == index_.byType.end()) return;
      for (const Instance* inst : it->second) {
        env.bindings.push_back({binder.var, {false, inst->id}});
        bool keep = fn(env);
        env.bindings.pop_back();
        if (!keep) return;
      }
    }
  }

  long count_set(const deladas::SetExpr& set, Env& env) {
    if (const auto* io = std::get_if<deladas::InstancesOf>(&set)) {
      const auto& host = env.lookup(io->hostVar);
      long count = 0;
      auto it = index_.byType.find(io->typeName);
      if (it != index_.byType.end())
        for (const Instance* inst : it->second)
          if (inst->host == host.second) ++count;
      return count;
    }
    const auto& ct = std::get<deladas::ConnectedTo>(set);
    const auto& target = env.lookup(ct.targetVar);
    long count = 0;
    auto it = index_.byType.find(ct.typeName);
    auto adj = index_.adjacency.find(target.second);
    if (it != index_.byType.end() && adj != index_.adjacency.end())
      for (const Instance* inst : it->second)
        if (adj->second.count(inst->id)) ++count;
    return count;
  }

private:
  const ConfigIndex& index_;
};

}  // namespace

std::vector<Violation> validate(const Configuration& config, const Goal& goal) {
  ConfigIndex index(config, goal);
  Evaluator evaluator(index);
  std::vector<Violation> violations;

  for (size_t ci = 0; ci < goal.clauses.size(); ++ci) {
    // Report one violation per failing binding of the clause's leading
    // chain of universal quantifiers.
    struct Walker {
      Evaluator& ev;
      std::vector<Violation>& out;
      int clauseIndex;

      void walk(const deladas::Expr& expr, Env& env) {
        if (const auto* fa = std::get_if<deladas::Forall>(&expr.node)) {
          ev.for_each_binding(fa->binder, env, [&](Env& inner) {
            walk(*fa->body, inner);
            return true;
          });
          return;
        }
        if (!ev.eval(expr, env)) {
          Violation v;
          v.clauseIndex = clauseIndex;
          for (const auto& [var, value] : env.bindings)
            v.bindingContext.emplace_back(var, value.second);
          v.message = "clause " + std::to_string(clauseIndex) + " falsified";
          out.push_back(std::move(v));
        }
      }
    };
    Env env;
    Walker walker{evaluator, violations, static_cast<int>(ci)};
    walker.walk(*goal.clauses[ci], env);
  }
  return violations;
}

std::string format_violation(const Violation& v) {
  std::string out = "clause " + std::to_string(v.clauseIndex);
  if (!v.bindingContext.empty()) {
    out += " [";
    bool first = true;
    for (const auto& [var, value] : v.bindingContext) {
      if (!first) out += ", ";
      first = false;
      out += var + "=" + value;
    }
    out += "]";
  }
  out += ": " + v.message;
  return out;
}

// ---------------------------------------------------------------------------
// DDD serialization

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string xml_unescape(const std::string& s, const std::string& path) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    size_t semi = s.find(';', i);
    if (semi == std::string::npos) throw DddParseError(path, "bad entity");
    std::string entity = s.substr(i + 1, semi - i - 1);
    if (entity == "amp") out.push_back('&');
    else if (entity == "lt") out.push_back('<');
    else if (entity == "gt") out.push_back('>');
    else if (entity == "quot") out.push_back('"');
    else if (entity == "apos") out.push_back('\'');
    else throw DddParseError(path, "unknown entity '&" + entity + ";'");
    i = semi;
  }
  return out;
}

// Minimal XML reader for the DDD schema: elements, attributes, self-closing
// tags, whitespace-only text. No namespaces, no character data.
class XmlReader {
public:
  struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;

    const std::string* attr(std::string_view key) const {
      for (const auto& [k, v] : attributes)
        if (k == key) return &v;
      return nullptr;
    }
  };

  explicit XmlReader(std::string_view text) : text_(text) {}

  Element parse() {
    skip_ws();
    Element root = parse_element("");
    skip_ws();
    if (pos_ != text_.size()) throw DddParseError("document", "trailing content");
    return root;
  }

private:
  std::string_view text_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  Element parse_element(const std::string& parentPath) {
    if (pos_ >= text_.size() || text_[pos_] != '<')
      throw DddParseError(parentPath.empty() ? "document" : parentPath,
                          "expected element");
    ++pos_;
    Element el;
    el.name = read_name(parentPath);
    std::string path = parentPath.empty() ? el.name : parentPath + "/" + el.name;
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) throw DddParseError(path, "unterminated tag");
      if (text_[pos_] == '/') {
        ++pos_;
        expect('>', path);
        return el;  // self-closing
      }
      if (text_[pos_] == '>') {
        ++pos_;
        break;
      }
      std::string key = read_name(path);
      skip_ws();
      expect('=', path);
      skip_ws();
      expect('"', path);
      size_t end = text_.find('"', pos_);
      if (end == std::string::npos) throw DddParseError(path, "unterminated attribute");
      el.attributes.emplace_back(
          key, xml_unescape(std::string(text_.substr(pos_, end - pos_)), path));
      pos_ = end + 1;
    }
    // children until closing tag
    while (true) {
      skip_ws();
      if (pos_ + 1 < text_.size() && text_[pos_] == '<' && text_[pos_ + 1] == '/') {
        pos_ += 2;
        std::string closing = read_name(path);
        if (closing != el.name)
          throw DddParseError(path, "mismatched closing tag '" + closing + "'");
        skip_ws();
        expect('>', path);
        return el;
      }
      if (pos_ >= text_.size()) throw DddParseError(path, "missing closing tag");
      if (text_[pos_] != '<') throw DddParseError(path, "unexpected character data");
      el.children.push_back(parse_element(path));
    }
  }

  std::string read_name(const std::string& path) {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw DddParseError(path, "expected name");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c, const std::string& path) {
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw DddParseError(path, std::string("expected '") + c + "'");
    ++pos_;
  }
};

}  // namespace

DddDocument to_ddd(const Configuration& config) {
  std::string out;
  out += "<deployment goal=\"" + xml_escape(config.goalName) + "\">\n";
  if (config.instances.empty()) {
    out += "  <instances/>\n";
  } else {
    out += "  <instances>\n";
    for (const auto& inst : config.instances)
      out += "    <instance id=\"" + xml_escape(inst.id) + "\" type=\"" +
             xml_escape(inst.type) + "\" host=\"" + xml_escape(inst.host) + "\"/>\n";
    out += "  </instances>\n";
  }
  if (config.wires.empty()) {
    out += "  <wires/>\n";
  } else {
    out += "  <wires>\n";
    for (const auto& wire : config.wires)
      out += "    <wire src=\"" + xml_escape(wire.src.text()) + "\" dst=\"" +
             xml_escape(wire.dst.text()) + "\"/>\n";
    out += "  </wires>\n";
  }
  out += "</deployment>\n";
  return out;
}

Configuration from_ddd(std::string_view bytes) {
  XmlReader reader(bytes);
  XmlReader::Element root = reader.parse();
  if (root.name != "deployment")
    throw DddParseError(root.name, "root element must be <deployment>");
  const std::string* goalName = root.attr("goal");
  if (!goalName) throw DddParseError("deployment", "missing goal attribute");

  Configuration config;
  config.goalName = *goalName;
  bool sawInstances = false, sawWires = false;
  for (const auto& section : root.children) {
    if (section.name == "instances") {
      if (sawInstances) throw DddParseError("deployment/instances", "duplicate section");
      sawInstances = true;
      int i = 0;
      for (const auto& child : section.children) {
        std::string path = "deployment/instances/instance[" + std::to_string(i++) + "]";
        if (child.name != "instance") throw DddParseError(path, "expected <instance>");
        const std::string* id = child.attr("id");
        const std::string* type = child.attr("type");
        const std::string* host = child.attr("host");
        if (!id || !type || !host)
          throw DddParseError(path, "instance needs id, type and host attributes");
        config.instances.push_back({*id, *type, *host});
      }
    } else if (section.name == "wires") {
      if (sawWires) throw DddParseError("deployment/wires", "duplicate section");
      sawWires = true;
      int i = 0;
      for (const auto& child : section.children) {
        std::string path = "deployment/wires/wire[" + std::to_string(i++) + "]";
        if (child.name != "wire") throw DddParseError(path, "expected <wire>");
        const std::string* src = child.attr("src");
        const std::string* dst = child.attr("dst");
        if (!src || !dst) throw DddParseError(path, "wire needs src and dst attributes");
        config.wires.push_back({Endpoint::parse(*src), Endpoint::parse(*dst)});
      }
    } else {
      throw DddParseError("deployment/" + section.name, "unknown element");
    }
  }
  if (!sawInstances || !sawWires)
    throw DddParseError("deployment", "missing <instances> or <wires> section");
  try {
    return normalize(std::move(config));
  } catch (const SchemaError& e) {
    throw DddParseError("deployment", e.what());
  }
}

// ---------------------------------------------------------------------------
// Enactment plans

std::string Action::text() const {
  switch (kind) {
    case Kind::Unwire:
      return "UNWIRE " + src.text() + " " + dst.text();
    case Kind::Terminate:
      return "TERMINATE " + host + " " + instanceId;
    case Kind::InstallStart:
      return "INSTALL_START " + host + " " + instanceId + " " + typeName;
    case Kind::Wire:
      return "WIRE " + src.text() + " " + dst.text();
  }
  return "?";
}

EnactmentPlan diff(const Configuration& oldConfig, const Configuration& newConfig,
                   const Goal& goal) {
  EnactmentPlan plan;

  std::set<Instance> oldInstances(oldConfig.instances.begin(), oldConfig.instances.end());
  std::set<Instance> newInstances(newConfig.instances.begin(), newConfig.instances.end());
  std::set<Wire> oldWires(oldConfig.wires.begin(), oldConfig.wires.end());
  std::set<Wire> newWires(newConfig.wires.begin(), newConfig.wires.end());

  for (const auto& wire : oldWires) {
    if (newWires.count(wire)) continue;
    Action a;
    a.kind = Action::Kind::Unwire;
    a.src = wire.src;
    a.dst = wire.dst;
    const Instance* inst = oldConfig.find_instance(wire.src.instanceId);
    a.host = inst ? inst->host : "";
    plan.actions.push_back(std::move(a));
  }
  for (const auto& inst : oldInstances) {
    if (newInstances.count(inst)) continue;
    Action a;
    a.kind = Action::Kind::Terminate;
    a.host = inst.host;
    a.instanceId = inst.id;
    plan.actions.push_back(std::move(a));
  }
  for (const auto& inst : newInstances) {
    if (oldInstances.count(inst)) continue;
    Action a;
    a.kind = Action::Kind::InstallStart;
    a.host = inst.host;
    a.instanceId = inst.id;
    a.typeName = inst.type;
    if (const auto* type = goal.find_type(inst.type)) a.codeUri = type->code;
    plan.actions.push_back(std::move(a));
  }
  for (const auto& wire : newWires) {
    if (oldWires.count(wire)) continue;
    Action a;
    a.kind = Action::Kind::Wire;
    a.src = wire.src;
    a.dst = wire.dst;
    const Instance* inst = newConfig.find_instance(wire.src.instanceId);
    a.host = inst ? inst->host : "";
    plan.actions.push_back(std::move(a));
  }
  return plan;
}

Configuration apply(const Configuration& config, const EnactmentPlan& plan,
                    const Goal& goal) {
  (void)goal;
  Configuration out = config;
  for (const auto& action : plan.actions) {
    switch (action.kind) {
      case Action::Kind::Unwire:
        std::erase_if(out.wires, [&](const Wire& w) {
          return w.src == action.src && w.dst == action.dst;
        });
        break;
      case Action::Kind::Terminate:
        std::erase_if(out.instances,
                      [&](const Instance& i) { return i.id == action.instanceId; });
        break;
      case Action::Kind::InstallStart:
        out.instances.push_back({action.instanceId, action.typeName, action.host});
        break;
      case Action::Kind::Wire:
        out.wires.push_back({action.src, action.dst});
        break;
    }
  }
  return normalize(std::move(out));
}

}  // namespace adme::model

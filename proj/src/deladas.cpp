#include "adme/deladas.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

namespace adme::deladas {

namespace {

constexpr std::array<std::string_view, 16> kKeywords = {
    "component",  "host",       "constraintset", "forall",
    "exists",     "in",         "deployment",    "card",
    "instancesof", "connectsto", "connectedto",   "reachable",
    "and",        "or",         "ports",         "code",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::string_view cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Le: return "<=";
    case CmpOp::Ge: return ">=";
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
  }
  return "?";
}

bool cmp_eval(long lhs, CmpOp op, long rhs) {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Gt: return lhs > rhs;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> tokens;
  size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](size_t n = 1) {
    for (size_t k = 0; k < n && i < source.size(); ++k) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };

  while (i < source.size()) {
    char c = source[i];
    SourcePos pos{line, col};
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
      continue;
    }
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
      while (i < source.size() && source[i] != '\n') advance();
      continue;
    }
    if (ident_start(c)) {
      size_t start = i;
      while (i < source.size() && ident_char(source[i])) advance();
      std::string word(source.substr(start, i - start));
      tokens.push_back({is_keyword(word) ? TokenKind::Keyword : TokenKind::Ident,
                        std::move(word), 0, pos});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = i;
      while (i < source.size() &&
             std::isdigit(static_cast<unsigned char>(source[i])))
        advance();
      std::string digits(source.substr(start, i - start));
      tokens.push_back({TokenKind::Int, digits, std::stol(digits), pos});
      continue;
    }
    if (c == '"') {
      advance();
      std::string value;
      bool closed = false;
      while (i < source.size()) {
        char d = source[i];
        if (d == '\\' && i + 1 < source.size() && source[i + 1] == '"') {
          value.push_back('"');
          advance(2);
          continue;
        }
        if (d == '"') {
          advance();
          closed = true;
          break;
        }
        if (d == '\n') break;
        value.push_back(d);
        advance();
      }
      if (!closed) throw LexError(pos, "unterminated string literal");
      tokens.push_back({TokenKind::String, std::move(value), 0, pos});
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < source.size() && source[i + 1] == b;
    };
    if (two('<', '=')) { tokens.push_back({TokenKind::Le, "<=", 0, pos}); advance(2); continue; }
    if (two('>', '=')) { tokens.push_back({TokenKind::Ge, ">=", 0, pos}); advance(2); continue; }
    if (two('!', '=')) { tokens.push_back({TokenKind::Ne, "!=", 0, pos}); advance(2); continue; }
    TokenKind kind;
    switch (c) {
      case '(': kind = TokenKind::LParen; break;
      case ')': kind = TokenKind::RParen; break;
      case '{': kind = TokenKind::LBrace; break;
      case '}': kind = TokenKind::RBrace; break;
      case '[': kind = TokenKind::LBracket; break;
      case ']': kind = TokenKind::RBracket; break;
      case ',': kind = TokenKind::Comma; break;
      case '.': kind = TokenKind::Dot; break;
      case '=': kind = TokenKind::Eq; break;
      case '<': kind = TokenKind::Lt; break;
      case '>': kind = TokenKind::Gt; break;
      default:
        throw LexError(pos, std::string("unexpected character '") + c + "'");
    }
    tokens.push_back({kind, std::string(1, c), 0, pos});
    advance();
  }
  tokens.push_back({TokenKind::End, "", 0, {line, col}});
  return tokens;
}

// ---------------------------------------------------------------------------
// Declaration helpers

const PortDecl* ComponentTypeDecl::find_port(std::string_view port) const {
  for (const auto& p : ports)
    if (p.name == port) return &p;
  return nullptr;
}

const std::string* HostDecl::find_attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes)
    if (k == key) return &v;
  return nullptr;
}

const ComponentTypeDecl* Goal::find_type(std::string_view name) const {
  for (const auto& t : componentTypes)
    if (t.name == name) return &t;
  return nullptr;
}

const HostDecl* Goal::find_host(std::string_view name) const {
  for (const auto& h : hosts)
    if (h.name == name) return &h;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
  explicit Parser(std::string_view source) : tokens_(tokenize(source)) {}

  Goal parse_file(bool allowResources, bool allowConstraintset,
                  bool requireConstraintset) {
    Goal goal;
    bool haveConstraintset = false;
    while (!at(TokenKind::End)) {
      const Token& t = peek();
      if (t.kind == TokenKind::Keyword && t.text == "component") {
        if (!allowResources)
          throw ParseError(t.pos, "resource declarations are not allowed here");
        goal.componentTypes.push_back(parse_component());
      } else if (t.kind == TokenKind::Keyword && t.text == "host") {
        if (!allowResources)
          throw ParseError(t.pos, "resource declarations are not allowed here");
        goal.hosts.push_back(parse_host());
      } else if (t.kind == TokenKind::Keyword && t.text == "constraintset") {
        if (!allowConstraintset)
          throw ParseError(t.pos, "a constraintset is not allowed here");
        if (haveConstraintset)
          throw ParseError(t.pos, "a goal may declare only one constraintset");
        haveConstraintset = true;
        parse_constraintset_into(goal);
      } else {
        throw ParseError(t.pos, "expected component, host or constraintset, got '" +
                                    t.text + "'");
      }
    }
    if (requireConstraintset && !haveConstraintset)
      throw ParseError(peek().pos, "goal declares no constraintset");
    return goal;
  }

private:
  const std::vector<Token> tokens_;
  size_t pos_ = 0;

  const Token& peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_keyword(std::string_view kw) const {
    return peek().kind == TokenKind::Keyword && peek().text == kw;
  }
  const Token& take() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

  const Token& expect(TokenKind k, const std::string& what) {
    if (!at(k)) throw ParseError(peek().pos, "expected " + what + ", got '" + peek().text + "'");
    return take();
  }
  const Token& expect_keyword(std::string_view kw) {
    if (!at_keyword(kw))
      throw ParseError(peek().pos,
                       "expected '" + std::string(kw) + "', got '" + peek().text + "'");
    return take();
  }
  std::string expect_ident(const std::string& what) {
    return expect(TokenKind::Ident, what).text;
  }
  // Name positions where keywords are admissible, e.g. ports named `in`.
  std::string expect_name(const std::string& what) {
    if (at(TokenKind::Ident) || at(TokenKind::Keyword)) return take().text;
    throw ParseError(peek().pos, "expected " + what + ", got '" + peek().text + "'");
  }

  ComponentTypeDecl parse_component() {
    expect_keyword("component");
    ComponentTypeDecl decl;
    decl.name = expect_ident("component type name");
    expect(TokenKind::LParen, "'('");
    expect_keyword("code");
    expect(TokenKind::Eq, "'='");
    decl.code = expect(TokenKind::String, "bundle URI string").text;
    expect(TokenKind::Comma, "','");
    expect_keyword("ports");
    expect(TokenKind::Eq, "'='");
    expect(TokenKind::LBrace, "'{'");
    while (true) {
      PortDecl port;
      port.name = expect_name("port name");
      if (at(TokenKind::LBracket)) {
        take();
        expect(TokenKind::RBracket, "']'");
        port.variadic = true;
      }
      decl.ports.push_back(std::move(port));
      if (at(TokenKind::Comma)) {
        take();
        continue;
      }
      break;
    }
    expect(TokenKind::RBrace, "'}'");
    expect(TokenKind::RParen, "')'");
    return decl;
  }

  HostDecl parse_host() {
    expect_keyword("host");
    HostDecl decl;
    decl.name = expect_ident("host name");
    expect(TokenKind::Eq, "'='");
    expect_keyword("host");
    expect(TokenKind::LParen, "'('");
    while (true) {
      std::string key = expect_name("attribute name");
      expect(TokenKind::Eq, "'='");
      std::string value = expect(TokenKind::String, "attribute value string").text;
      decl.attributes.emplace_back(std::move(key), std::move(value));
      if (at(TokenKind::Comma)) {
        take();
        continue;
      }
      break;
    }
    expect(TokenKind::RParen, "')'");
    return decl;
  }

  void parse_constraintset_into(Goal& goal) {
    expect_keyword("constraintset");
    goal.constraintsetName = expect_ident("constraintset name");
    expect(TokenKind::Eq, "'='");
    expect_keyword("constraintset");
    expect(TokenKind::LBrace, "'{'");
    goal.clauses = parse_expr_sequence(TokenKind::RBrace);
    expect(TokenKind::RBrace, "'}'");
  }

  // Juxtaposed expressions up to a terminator. At the top of a constraintset
  // the sequence is the clause list; inside parentheses it is a conjunction.
  std::vector<ExprPtr> parse_expr_sequence(TokenKind terminator) {
    std::vector<ExprPtr> exprs;
    while (!at(terminator) && !at(TokenKind::End)) exprs.push_back(parse_or());
    return exprs;
  }

  static ExprPtr make(Expr expr) { return std::make_shared<Expr>(std::move(expr)); }

  static ExprPtr conjoin(std::vector<ExprPtr> exprs, SourcePos pos) {
    if (exprs.empty())
      throw ParseError(pos, "empty constraint body");
    if (exprs.size() == 1) return exprs[0];
    // Flatten nested conjunctions so juxtaposition and `and` read the same.
    std::vector<ExprPtr> flat;
    for (auto& e : exprs) {
      if (const auto* a = std::get_if<And>(&e->node))
        flat.insert(flat.end(), a->args.begin(), a->args.end());
      else
        flat.push_back(std::move(e));
    }
    return make(Expr{And{std::move(flat)}});
  }

  ExprPtr parse_or() {
    std::vector<ExprPtr> args;
    args.push_back(parse_and());
    while (at_keyword("or")) {
      take();
      args.push_back(parse_and());
    }
    if (args.size() == 1) return args[0];
    std::vector<ExprPtr> flat;
    for (auto& e : args) {
      if (const auto* o = std::get_if<Or>(&e->node))
        flat.insert(flat.end(), o->args.begin(), o->args.end());
      else
        flat.push_back(std::move(e));
    }
    return make(Expr{Or{std::move(flat)}});
  }

  ExprPtr parse_and() {
    std::vector<ExprPtr> args;
    args.push_back(parse_atom());
    while (at_keyword("and")) {
      take();
      args.push_back(parse_atom());
    }
    if (args.size() == 1) return args[0];
    return conjoin(std::move(args), peek().pos);
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    if (t.kind == TokenKind::Keyword && (t.text == "forall" || t.text == "exists"))
      return parse_quantifier();
    if (at_keyword("card")) return parse_card();
    if (at_keyword("reachable")) return parse_reachable();
    if (at(TokenKind::LParen)) {
      SourcePos open = take().pos;
      std::vector<ExprPtr> body = parse_expr_sequence(TokenKind::RParen);
      expect(TokenKind::RParen, "')'");
      return conjoin(std::move(body), open);
    }
    if (t.kind == TokenKind::Ident) return parse_connects();
    throw ParseError(t.pos, "expected a constraint, got '" + t.text + "'");
  }

  // `forall T a, b in deployment (e)` is sugar for nested single-binder
  // quantifiers of the same kind.
  ExprPtr parse_quantifier() {
    const Token& kw = take();
    bool isForall = kw.text == "forall";
    std::string typeName;
    SourcePos typePos = peek().pos;
    if (at_keyword("host")) {
      take();
      typeName = "host";
    } else {
      typeName = expect_ident("component type or 'host'");
    }
    std::vector<Binder> binders;
    while (true) {
      SourcePos vpos = peek().pos;
      std::string var = expect_ident("binder variable");
      binders.push_back(Binder{typeName, std::move(var), vpos});
      if (at(TokenKind::Comma)) {
        take();
        continue;
      }
      break;
    }
    (void)typePos;
    expect_keyword("in");
    expect_keyword("deployment");
    SourcePos open = expect(TokenKind::LParen, "'('").pos;
    std::vector<ExprPtr> bodySeq = parse_expr_sequence(TokenKind::RParen);
    expect(TokenKind::RParen, "')'");
    ExprPtr body = conjoin(std::move(bodySeq), open);
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      if (isForall)
        body = make(Expr{Forall{*it, std::move(body)}});
      else
        body = make(Expr{Exists{*it, std::move(body)}});
    }
    return body;
  }

  CmpOp parse_cmp_op() {
    const Token& t = take();
    switch (t.kind) {
      case TokenKind::Eq: return CmpOp::Eq;
      case TokenKind::Ne: return CmpOp::Ne;
      case TokenKind::Le: return CmpOp::Le;
      case TokenKind::Ge: return CmpOp::Ge;
      case TokenKind::Lt: return CmpOp::Lt;
      case TokenKind::Gt: return CmpOp::Gt;
      default:
        throw ParseError(t.pos, "expected comparison operator, got '" + t.text + "'");
    }
  }

  ExprPtr parse_card() {
    SourcePos pos = expect_keyword("card").pos;
    expect(TokenKind::LParen, "'('");
    SetExpr set = InstancesOf{};
    if (at_keyword("instancesof")) {
      take();
      InstancesOf io;
      io.typeName = expect_ident("component type name");
      expect_keyword("in");
      io.hostVar = expect_ident("host variable");
      set = std::move(io);
    } else {
      ConnectedTo ct;
      ct.typeName = expect_ident("component type name");
      ct.boundVar = expect_ident("counting variable");
      expect_keyword("connectedto");
      ct.targetVar = expect_ident("target variable");
      set = std::move(ct);
    }
    expect(TokenKind::RParen, "')'");
    CardCmp card;
    card.set = std::move(set);
    card.op = parse_cmp_op();
    card.bound = expect(TokenKind::Int, "integer literal").intValue;
    card.pos = pos;
    return make(Expr{std::move(card)});
  }

  ExprPtr parse_reachable() {
    SourcePos pos = expect_keyword("reachable").pos;
    expect(TokenKind::LParen, "'('");
    Reachable r;
    r.v1 = expect_ident("instance variable");
    expect(TokenKind::Comma, "','");
    r.v2 = expect_ident("instance variable");
    expect(TokenKind::RParen, "')'");
    r.pos = pos;
    return make(Expr{std::move(r)});
  }

  PortRef parse_port_ref() {
    PortRef ref;
    ref.pos = peek().pos;
    ref.var = expect_ident("instance variable");
    expect(TokenKind::Dot, "'.'");
    expect_keyword("ports");
    expect(TokenKind::Dot, "'.'");
    ref.port = expect_name("port name");
    return ref;
  }

  ExprPtr parse_connects() {
    ConnectsTo c;
    c.a = parse_port_ref();
    expect_keyword("connectsto");
    c.b = parse_port_ref();
    return make(Expr{std::move(c)});
  }
};

// ---------------------------------------------------------------------------
// Resolution

bool valid_ipv4(const std::string& s) {
  int octets = 0;
  size_t i = 0;
  while (i <= s.size()) {
    size_t dot = s.find('.', i);
    std::string part = s.substr(i, (dot == std::string::npos ? s.size() : dot) - i);
    if (part.empty() || part.size() > 3) return false;
    for (char c : part)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    int value = std::stoi(part);
    if (value > 255) return false;
    ++octets;
    if (dot == std::string::npos) break;
    i = dot + 1;
  }
  return octets == 4;
}

class Resolver {
public:
  explicit Resolver(const Goal& goal) : goal_(goal) {}

  void run() {
    check_declarations();
    for (const auto& clause : goal_.clauses) walk(*clause);
  }

private:
  const Goal& goal_;
  // var -> type name ("host" for host binders)
  std::vector<std::pair<std::string, std::string>> scope_;

  [[noreturn]] void fail(SourcePos pos, const std::string& msg) {
    throw ResolveError(pos, msg);
  }

  void check_declarations() {
    std::set<std::string> typeNames;
    for (const auto& t : goal_.componentTypes) {
      if (!typeNames.insert(t.name).second)
        fail({}, "duplicate component type '" + t.name + "'");
      if (t.name == "host") fail({}, "'host' is reserved and cannot name a component type");
      if (t.code.empty()) fail({}, "component '" + t.name + "' has no code attribute");
      if (t.ports.empty()) fail({}, "component '" + t.name + "' declares no ports");
      std::set<std::string> portNames;
      for (const auto& p : t.ports)
        if (!portNames.insert(p.name).second)
          fail({}, "duplicate port '" + p.name + "' in component '" + t.name + "'");
    }
    std::set<std::string> hostNames;
    for (const auto& h : goal_.hosts) {
      if (!hostNames.insert(h.name).second)
        fail({}, "duplicate host '" + h.name + "'");
      std::set<std::string> attrNames;
      for (const auto& [k, v] : h.attributes)
        if (!attrNames.insert(k).second)
          fail({}, "duplicate attribute '" + k + "' on host '" + h.name + "'");
      const std::string* ip = h.find_attribute("ipaddress");
      if (!ip) fail({}, "host '" + h.name + "' has no ipaddress attribute");
      if (!valid_ipv4(*ip))
        fail({}, "host '" + h.name + "' ipaddress '" + *ip + "' is not an IPv4 dotted quad");
    }
  }

  const std::string* lookup(const std::string& var) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == var) return &it->second;
    return nullptr;
  }

  void check_binder(const Binder& b) {
    if (b.typeName != "host" && !goal_.find_type(b.typeName))
      fail(b.pos, "unknown component type '" + b.typeName + "'");
    if (lookup(b.var))
      fail(b.pos, "binder '" + b.var + "' shadows an enclosing binder");
  }

  std::string require_component_var(const std::string& var, SourcePos pos) {
    const std::string* type = lookup(var);
    if (!type) fail(pos, "unbound variable '" + var + "'");
    if (*type == "host") fail(pos, "variable '" + var + "' names a host, not a component instance");
    return *type;
  }

  void walk(const Expr& expr) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Forall> || std::is_same_v<T, Exists>) {
            check_binder(node.binder);
            scope_.emplace_back(node.binder.var, node.binder.typeName);
            walk(*node.body);
            scope_.pop_back();
          } else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>) {
            for (const auto& arg : node.args) walk(*arg);
          } else if constexpr (std::is_same_v<T, CardCmp>) {
            walk_card(node);
          } else if constexpr (std::is_same_v<T, ConnectsTo>) {
            walk_port_ref(node.a);
            walk_port_ref(node.b);
          } else if constexpr (std::is_same_v<T, Reachable>) {
            require_component_var(node.v1, node.pos);
            require_component_var(node.v2, node.pos);
          }
        },
        expr.node);
  }

  void walk_card(const CardCmp& card) {
    if (const auto* io = std::get_if<InstancesOf>(&card.set)) {
      if (!goal_.find_type(io->typeName))
        fail(card.pos, "unknown component type '" + io->typeName + "'");
      const std::string* type = lookup(io->hostVar);
      if (!type) fail(card.pos, "unbound variable '" + io->hostVar + "'");
      if (*type != "host")
        fail(card.pos, "variable '" + io->hostVar + "' must name a host");
    } else {
      const auto& ct = std::get<ConnectedTo>(card.set);
      if (!goal_.find_type(ct.typeName))
        fail(card.pos, "unknown component type '" + ct.typeName + "'");
      if (lookup(ct.boundVar))
        fail(card.pos, "binder '" + ct.boundVar + "' shadows an enclosing binder");
      require_component_var(ct.targetVar, card.pos);
    }
  }

  void walk_port_ref(const PortRef& ref) {
    std::string type = require_component_var(ref.var, ref.pos);
    const ComponentTypeDecl* decl = goal_.find_type(type);
    if (!decl->find_port(ref.port))
      fail(ref.pos, "component '" + type + "' has no port '" + ref.port + "'");
  }
};

}  // namespace

void resolve(const Goal& goal) { Resolver(goal).run(); }

Goal parse_goal(std::string_view source) {
  Parser parser(source);
  Goal goal = parser.parse_file(/*allowResources=*/true, /*allowConstraintset=*/true,
                                /*requireConstraintset=*/true);
  resolve(goal);
  return goal;
}

Goal parse_resources(std::string_view source) {
  Parser parser(source);
  Goal goal = parser.parse_file(/*allowResources=*/true, /*allowConstraintset=*/false,
                                /*requireConstraintset=*/false);
  resolve(goal);  // a resources file has no clauses; this checks declarations
  return goal;
}

Goal parse_constraintset(std::string_view source) {
  Parser parser(source);
  return parser.parse_file(/*allowResources=*/false, /*allowConstraintset=*/true,
                           /*requireConstraintset=*/true);
  // name resolution deferred to merge()
}

Goal merge(const Goal& resources, const Goal& constraints) {
  Goal goal;
  goal.componentTypes = resources.componentTypes;
  goal.hosts = resources.hosts;
  goal.constraintsetName = constraints.constraintsetName;
  goal.clauses = constraints.clauses;
  resolve(goal);
  return goal;
}

// ---------------------------------------------------------------------------
// Equality

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return equal(*a, *b);
}

bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& lhs) {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Forall> || std::is_same_v<T, Exists>) {
          return lhs.binder.typeName == rhs.binder.typeName &&
                 lhs.binder.var == rhs.binder.var && equal(lhs.body, rhs.body);
        } else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>) {
          if (lhs.args.size() != rhs.args.size()) return false;
          for (size_t i = 0; i < lhs.args.size(); ++i)
            if (!equal(lhs.args[i], rhs.args[i])) return false;
          return true;
        } else if constexpr (std::is_same_v<T, CardCmp>) {
          if (lhs.op != rhs.op || lhs.bound != rhs.bound) return false;
          if (lhs.set.index() != rhs.set.index()) return false;
          if (const auto* io = std::get_if<InstancesOf>(&lhs.set)) {
            const auto& other = std::get<InstancesOf>(rhs.set);
            return io->typeName == other.typeName && io->hostVar == other.hostVar;
          }
          const auto& ct = std::get<ConnectedTo>(lhs.set);
          const auto& other = std::get<ConnectedTo>(rhs.set);
          return ct.typeName == other.typeName && ct.boundVar == other.boundVar &&
                 ct.targetVar == other.targetVar;
        } else if constexpr (std::is_same_v<T, ConnectsTo>) {
          return lhs.a.var == rhs.a.var && lhs.a.port == rhs.a.port &&
                 lhs.b.var == rhs.b.var && lhs.b.port == rhs.b.port;
        } else {
          static_assert(std::is_same_v<T, Reachable>);
          return lhs.v1 == rhs.v1 && lhs.v2 == rhs.v2;
        }
      },
      a.node);
}

bool equal(const Goal& a, const Goal& b) {
  if (a.componentTypes != b.componentTypes) return false;
  if (a.hosts != b.hosts) return false;
  if (a.constraintsetName != b.constraintsetName) return false;
  if (a.clauses.size() != b.clauses.size()) return false;
  for (size_t i = 0; i < a.clauses.size(); ++i)
    if (!equal(a.clauses[i], b.clauses[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string escape_string(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"') out += "\\\"";
    else out.push_back(c);
  }
  return out;
}

// Precedence: Or < And < atoms. Quantifier bodies are always parenthesized.
void print_expr_rec(std::string& out, const Expr& expr, int parentPrec);

void print_args(std::string& out, const std::vector<ExprPtr>& args,
                std::string_view sep, int prec) {
  bool first = true;
  for (const auto& arg : args) {
    if (!first) out += sep;
    first = false;
    print_expr_rec(out, *arg, prec);
  }
}

void print_expr_rec(std::string& out, const Expr& expr, int parentPrec) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Forall> || std::is_same_v<T, Exists>) {
          out += std::is_same_v<T, Forall> ? "forall " : "exists ";
          out += node.binder.typeName;
          out += ' ';
          out += node.binder.var;
          out += " in deployment (";
          print_expr_rec(out, *node.body, 0);
          out += ')';
        } else if constexpr (std::is_same_v<T, Or>) {
          bool paren = parentPrec > 0;
          if (paren) out += '(';
          print_args(out, node.args, " or ", 1);
          if (paren) out += ')';
        } else if constexpr (std::is_same_v<T, And>) {
          bool paren = parentPrec > 1;
          if (paren) out += '(';
          print_args(out, node.args, " and ", 2);
          if (paren) out += ')';
        } else if constexpr (std::is_same_v<T, CardCmp>) {
          out += "card(";
          if (const auto* io = std::get_if<InstancesOf>(&node.set)) {
            out += "instancesof ";
            out += io->typeName;
            out += " in ";
            out += io->hostVar;
          } else {
            const auto& ct = std::get<ConnectedTo>(node.set);
            out += ct.typeName;
            out += ' ';
            out += ct.boundVar;
            out += " connectedto ";
            out += ct.targetVar;
          }
          out += ") ";
          out += cmp_op_text(node.op);
          out += ' ';
          out += std::to_string(node.bound);
        } else if constexpr (std::is_same_v<T, ConnectsTo>) {
          out += node.a.var;
          out += ".ports.";
          out += node.a.port;
          out += " connectsto ";
          out += node.b.var;
          out += ".ports.";
          out += node.b.port;
        } else {
          static_assert(std::is_same_v<T, Reachable>);
          out += "reachable(";
          out += node.v1;
          out += ", ";
          out += node.v2;
          out += ')';
        }
      },
      expr.node);
}

}  // namespace

std::string print_expr(const Expr& expr) {
  std::string out;
  print_expr_rec(out, expr, 0);
  return out;
}

std::string print_resources(const Goal& goal) {
  std::string out;
  for (const auto& t : goal.componentTypes) {
    out += "component ";
    out += t.name;
    out += "(\n  code = \"";
    out += escape_string(t.code);
    out += "\",\n  ports = {";
    bool first = true;
    for (const auto& p : t.ports) {
      if (!first) out += ", ";
      first = false;
      out += p.name;
      if (p.variadic) out += "[]";
    }
    out += "}\n)\n";
  }
  for (const auto& h : goal.hosts) {
    out += "host ";
    out += h.name;
    out += " = host(";
    bool first = true;
    for (const auto& [k, v] : h.attributes) {
      if (!first) out += ", ";
      first = false;
      out += k;
      out += " = \"";
      out += escape_string(v);
      out += '"';
    }
    out += ")\n";
  }
  return out;
}

std::string print_constraintset(const Goal& goal) {
  std::string out;
  out += "constraintset ";
  out += goal.constraintsetName;
  out += " = constraintset {\n";
  for (const auto& clause : goal.clauses) {
    out += "  ";
    print_expr_rec(out, *clause, 0);
    out += '\n';
  }
  out += "}\n";
  return out;
}

std::string print_goal(const Goal& goal) {
  return print_resources(goal) + print_constraintset(goal);
}

}  // namespace adme::deladas

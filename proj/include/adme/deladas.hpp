#pragma once

// Deladas goal language: lexer, parser, AST and canonical printer.
//
// A goal file declares resources (component types and hosts) and exactly one
// constraintset. Resources and constraintsets may also be parsed separately
// and merged, which is what the HTTP satisfy endpoint does.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace adme::deladas {

struct SourcePos {
  int line = 1;
  int column = 1;
};

class DeladasError : public std::runtime_error {
public:
  DeladasError(const std::string& kind, SourcePos pos, const std::string& msg)
      : std::runtime_error(kind + " at " + std::to_string(pos.line) + ":" +
                           std::to_string(pos.column) + ": " + msg),
        pos_(pos) {}
  SourcePos pos() const { return pos_; }

private:
  SourcePos pos_;
};

class LexError : public DeladasError {
public:
  LexError(SourcePos pos, const std::string& msg)
      : DeladasError("lex error", pos, msg) {}
};

class ParseError : public DeladasError {
public:
  ParseError(SourcePos pos, const std::string& msg)
      : DeladasError("parse error", pos, msg) {}
};

class ResolveError : public DeladasError {
public:
  ResolveError(SourcePos pos, const std::string& msg)
      : DeladasError("resolve error", pos, msg) {}
};

// ---------------------------------------------------------------------------
// Tokens

enum class TokenKind {
  Ident,
  Keyword,
  String,
  Int,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Dot,
  Eq,
  Ne,
  Le,
  Ge,
  Lt,
  Gt,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;    // identifier/keyword/string contents
  long intValue = 0;   // for Int tokens
  SourcePos pos;
};

// Keywords: component, host, constraintset, forall, exists, in, deployment,
// card, instancesof, connectsto, connectedto, reachable, and, or, ports, code.
bool is_keyword(std::string_view word);

// `//` comments are stripped to end of line. Throws LexError on any character
// outside the token alphabet.
std::vector<Token> tokenize(std::string_view source);

// ---------------------------------------------------------------------------
// Declarations

struct PortDecl {
  std::string name;
  bool variadic = false;  // declared with bracket notation

  bool operator==(const PortDecl&) const = default;
};

struct ComponentTypeDecl {
  std::string name;
  std::string code;  // bundle location URI
  std::vector<PortDecl> ports;

  const PortDecl* find_port(std::string_view port) const;
  bool operator==(const ComponentTypeDecl&) const = default;
};

struct HostDecl {
  std::string name;
  // Ordered attribute list; must include ipaddress (an IPv4 dotted quad).
  std::vector<std::pair<std::string, std::string>> attributes;

  const std::string* find_attribute(std::string_view key) const;
  bool operator==(const HostDecl&) const = default;
};

// ---------------------------------------------------------------------------
// Constraint AST

enum class CmpOp { Eq, Ne, Le, Ge, Lt, Gt };

std::string_view cmp_op_text(CmpOp op);
bool cmp_eval(long lhs, CmpOp op, long rhs);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// typeName is a component type name, or "host" for host binders.
struct Binder {
  std::string typeName;
  std::string var;
  SourcePos pos;
};

struct PortRef {
  std::string var;
  std::string port;
  SourcePos pos;
};

struct Forall {
  Binder binder;
  ExprPtr body;
};

struct Exists {
  Binder binder;
  ExprPtr body;
};

struct And {
  std::vector<ExprPtr> args;
};

struct Or {
  std::vector<ExprPtr> args;
};

struct InstancesOf {
  std::string typeName;
  std::string hostVar;
};

struct ConnectedTo {
  std::string typeName;
  std::string boundVar;   // local counting variable
  std::string targetVar;  // instance variable bound by an enclosing quantifier
};

using SetExpr = std::variant<InstancesOf, ConnectedTo>;

struct CardCmp {
  SetExpr set;
  CmpOp op = CmpOp::Eq;
  long bound = 0;
  SourcePos pos;
};

struct ConnectsTo {
  PortRef a;
  PortRef b;
};

struct Reachable {
  std::string v1;
  std::string v2;
  SourcePos pos;
};

struct Expr {
  std::variant<Forall, Exists, And, Or, CardCmp, ConnectsTo, Reachable> node;
};

// Structural equality, ignoring source positions.
bool equal(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// Goal

struct Goal {
  std::vector<ComponentTypeDecl> componentTypes;
  std::vector<HostDecl> hosts;
  std::string constraintsetName;
  std::vector<ExprPtr> clauses;  // top-level conjunction

  const ComponentTypeDecl* find_type(std::string_view name) const;
  const HostDecl* find_host(std::string_view name) const;
};

bool equal(const Goal& a, const Goal& b);

// Parses resources plus exactly one constraintset and resolves all names.
// Throws ParseError / ResolveError / LexError.
Goal parse_goal(std::string_view source);

// Parses declarations only; a constraintset in the input is an error.
Goal parse_resources(std::string_view source);

// Parses exactly one constraintset; resource declarations are an error.
// Name resolution against component types is deferred until merge().
Goal parse_constraintset(std::string_view source);

// Combines parsed resources with a parsed constraintset and resolves names.
Goal merge(const Goal& resources, const Goal& constraints);

// Re-checks all naming/binding invariants of a goal. parse_goal and merge
// call this; exposed for goals assembled in memory.
void resolve(const Goal& goal);

// ---------------------------------------------------------------------------
// Canonical printer. One clause per line, two-space indentation.
// parse_goal(print_goal(g)) is structurally equal to g, and printing is a
// fixed point: print(parse(print(parse(s)))) == print(parse(s)).

std::string print_goal(const Goal& goal);
std::string print_resources(const Goal& goal);
std::string print_constraintset(const Goal& goal);
std::string print_expr(const Expr& expr);

}  // namespace adme::deladas

#pragma once

// Types, terms, sequents and theories of the higher-order modal language,
// with a parser, printer and typechecker.
//
// Types     T ::= 1 | P | Name | T * T | T ^ T | ( T )
//           `^` binds tighter than `*`; both associate to the left, so
//           B^A^C is (B^A)^C and A*B*C is (A*B)*C.
// Terms, loosest first:
//           fun x:T => t | forall x:T. t | exists x:T. t
//           t <=> t            (right)
//           t => t             (right)
//           t \/ t             (left)
//           t /\ t             (left)
//           t = t | t =_T t    (T a type atom)
//           t in t
//           t @ t              (left)
//           box t | ~t | p1 t | p2 t
//           * | top | bot | x | <t, t> | {x:T | t} | ( t )
// Sequents  [x:T, y, z:T |] t |- t    (an empty left side means top)

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace homl::syntax {

// ---------------------------------------------------------------------------
// Types

enum class TypeKind { Unit, Prop, Base, Prod, Exp };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

/// Prod(left, right) is left * right; Exp(left, right) is left ^ right,
/// the functions from right to left.
struct Type {
  TypeKind kind;
  std::string name;
  TypePtr left, right;
};

inline TypePtr unit_type() {
  static TypePtr t = std::make_shared<const Type>(Type{TypeKind::Unit, "", nullptr, nullptr});
  return t;
}
inline TypePtr prop_type() {
  static TypePtr t = std::make_shared<const Type>(Type{TypeKind::Prop, "", nullptr, nullptr});
  return t;
}
inline TypePtr base_type(const std::string& n) {
  return std::make_shared<const Type>(Type{TypeKind::Base, n, nullptr, nullptr});
}
inline TypePtr prod_type(TypePtr a, TypePtr b) {
  return std::make_shared<const Type>(Type{TypeKind::Prod, "", std::move(a), std::move(b)});
}
/// cod ^ dom
inline TypePtr exp_type(TypePtr cod, TypePtr dom) {
  return std::make_shared<const Type>(Type{TypeKind::Exp, "", std::move(cod), std::move(dom)});
}

inline bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Unit:
    case TypeKind::Prop: return true;
    case TypeKind::Base: return a->name == b->name;
    default: return type_equal(a->left, b->left) && type_equal(a->right, b->right);
  }
}

/// Number of constructors (leaves and formers).
inline int type_size(const TypePtr& t) {
  if (t->kind == TypeKind::Prod || t->kind == TypeKind::Exp) return 1 + type_size(t->left) + type_size(t->right);
  return 1;
}

namespace detail {
inline void print_type(std::ostream& o, const TypePtr& t, int need) {
  switch (t->kind) {
    case TypeKind::Unit: o << "1"; return;
    case TypeKind::Prop: o << "P"; return;
    case TypeKind::Base: o << t->name; return;
    case TypeKind::Prod:
    case TypeKind::Exp: {
      int lvl = t->kind == TypeKind::Prod ? 1 : 2;
      if (need > lvl) o << "(";
      print_type(o, t->left, lvl);
      o << (t->kind == TypeKind::Prod ? "*" : "^");
      print_type(o, t->right, lvl + 1);
      if (need > lvl) o << ")";
      return;
    }
  }
}
}  // namespace detail

inline std::string type_to_string(const TypePtr& t) {
  std::ostringstream o;
  detail::print_type(o, t, 0);
  return o.str();
}

/// Printed so that it reads back as a single atom.
inline std::string type_atom_string(const TypePtr& t) {
  std::ostringstream o;
  detail::print_type(o, t, 3);
  return o.str();
}

// ---------------------------------------------------------------------------
// Terms

enum class TermKind {
  Star, Top, Bot, Var, Const, Pair, Proj1, Proj2, Lam, App,
  And, Or, Imp, Iff, Not, Forall, Exists, Eq, Box, Comp, Member,
};

struct Span {
  int line = 0, col = 0;
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// Binders (Lam, Forall, Exists, Comp) keep the variable in `name`, its type
/// in `type` and the body in `a`.  Eq keeps its optional annotation in
/// `type`.  App is a @ b; Member is a in b.
struct Term {
  TermKind kind;
  std::string name;
  TypePtr type;
  TermPtr a, b;
  Span span;
};

inline TermPtr mk(TermKind k, TermPtr a = nullptr, TermPtr b = nullptr, Span s = {}) {
  return std::make_shared<const Term>(Term{k, "", nullptr, std::move(a), std::move(b), s});
}
inline TermPtr mk_var(const std::string& n, Span s = {}) {
  return std::make_shared<const Term>(Term{TermKind::Var, n, nullptr, nullptr, nullptr, s});
}
inline TermPtr mk_const(const std::string& n, Span s = {}) {
  return std::make_shared<const Term>(Term{TermKind::Const, n, nullptr, nullptr, nullptr, s});
}
inline TermPtr mk_binder(TermKind k, const std::string& x, TypePtr t, TermPtr body, Span s = {}) {
  return std::make_shared<const Term>(Term{k, x, std::move(t), std::move(body), nullptr, s});
}
inline TermPtr mk_eq(TermPtr a, TermPtr b, TypePtr t = nullptr, Span s = {}) {
  return std::make_shared<const Term>(Term{TermKind::Eq, "", std::move(t), std::move(a), std::move(b), s});
}

inline bool is_binder(TermKind k) {
  return k == TermKind::Lam || k == TermKind::Forall || k == TermKind::Exists || k == TermKind::Comp;
}

/// Structural equality, bound names included, spans ignored.
inline bool term_equal(const TermPtr& x, const TermPtr& y) {
  if (x == y) return true;
  if (!x || !y || x->kind != y->kind || x->name != y->name) return false;
  if ((x->type || y->type) && !type_equal(x->type, y->type)) return false;
  return term_equal(x->a, y->a) && term_equal(x->b, y->b);
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int term_level(TermKind k) {
  switch (k) {
    case TermKind::Lam:
    case TermKind::Forall:
    case TermKind::Exists: return 0;
    case TermKind::Iff: return 1;
    case TermKind::Imp: return 2;
    case TermKind::Or: return 3;
    case TermKind::And: return 4;
    case TermKind::Eq: return 5;
    case TermKind::Member: return 6;
    case TermKind::App: return 7;
    case TermKind::Box:
    case TermKind::Not:
    case TermKind::Proj1:
    case TermKind::Proj2: return 8;
    default: return 9;
  }
}

inline void print_term(std::ostream& o, const TermPtr& t, int need) {
  int lvl = term_level(t->kind);
  bool paren = lvl < need;
  if (paren) o << "(";
  auto infix = [&](const char* op, int lneed, int rneed) {
    print_term(o, t->a, lneed);
    o << " " << op << " ";
    print_term(o, t->b, rneed);
  };
  switch (t->kind) {
    case TermKind::Star: o << "*"; break;
    case TermKind::Top: o << "top"; break;
    case TermKind::Bot: o << "bot"; break;
    case TermKind::Var:
    case TermKind::Const: o << t->name; break;
    case TermKind::Pair:
      o << "<";
      print_term(o, t->a, 0);
      o << ", ";
      print_term(o, t->b, 0);
      o << ">";
      break;
    case TermKind::Proj1:
    case TermKind::Proj2:
    case TermKind::Box:
      o << (t->kind == TermKind::Proj1 ? "p1 " : t->kind == TermKind::Proj2 ? "p2 " : "box ");
      print_term(o, t->a, 8);
      break;
    case TermKind::Not:
      o << "~";
      print_term(o, t->a, 8);
      break;
    case TermKind::Lam:
      o << "fun " << t->name << ":" << type_to_string(t->type) << " => ";
      print_term(o, t->a, 0);
      break;
    case TermKind::Forall:
    case TermKind::Exists:
      o << (t->kind == TermKind::Forall ? "forall " : "exists ") << t->name << ":" << type_to_string(t->type) << ". ";
      print_term(o, t->a, 0);
      break;
    case TermKind::Comp:
      o << "{" << t->name << ":" << type_to_string(t->type) << " | ";
      print_term(o, t->a, 0);
      o << "}";
      break;
    case TermKind::App: infix("@", 7, 8); break;
    case TermKind::And: infix("/\\", 4, 5); break;
    case TermKind::Or: infix("\\/", 3, 4); break;
    case TermKind::Imp: infix("=>", 3, 2); break;
    case TermKind::Iff: infix("<=>", 2, 1); break;
    case TermKind::Member: infix("in", 7, 7); break;
    case TermKind::Eq:
      print_term(o, t->a, 6);
      if (t->type) o << " =_" << type_atom_string(t->type) << " ";
      else o << " = ";
      print_term(o, t->b, 6);
      break;
  }
  if (paren) o << ")";
}

}  // namespace detail

inline std::string to_string(const TermPtr& t) {
  std::ostringstream o;
  detail::print_term(o, t, 0);
  return o.str();
}

// ---------------------------------------------------------------------------
// Contexts, sequents, signatures

using Context = std::vector<std::pair<std::string, TypePtr>>;

inline std::string context_to_string(const Context& ctx) {
  std::string s;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (i) s += ", ";
    s += ctx[i].first + ":" + type_to_string(ctx[i].second);
  }
  return s;
}

struct Sequent {
  std::string name;
  Context ctx;
  TermPtr lhs, rhs;
};

inline std::string to_string(const Sequent& s) {
  std::string out;
  if (!s.ctx.empty()) out += context_to_string(s.ctx) + " | ";
  return out + to_string(s.lhs) + " |- " + to_string(s.rhs);
}

struct Signature {
  std::vector<std::string> types;
  std::vector<std::pair<std::string, TypePtr>> consts;

  bool has_type(const std::string& n) const {
    for (auto& t : types)
      if (t == n) return true;
    return false;
  }
  TypePtr const_type(const std::string& n) const {
    for (auto& [c, t] : consts)
      if (c == n) return t;
    return nullptr;
  }
};

struct Theory : Signature {
  std::vector<Sequent> axioms;
};

// ---------------------------------------------------------------------------
// Lexer and parser

namespace detail {

struct Token {
  std::string text;  // empty at end of input
  bool ident = false;
  Span span;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '\'';
}

inline std::vector<Token> lex(const std::string& s, Span origin) {
  static const char* symbols[] = {"<=>", "|-", "=>", "=_", "/\\", "\\/", "<", ">", "(", ")", "{", "}",
                                  ",", ".", ":", "|", "@", "=", "~", "*", "^", "1"};
  std::vector<Token> out;
  int line = origin.line, col = origin.col;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Span sp{line, col};
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({s.substr(i, j - i), true, sp});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* sym : symbols) {
      std::string_view v(sym);
      if (s.compare(i, v.size(), v) == 0) {
        out.push_back({std::string(v), false, sp});
        advance(v.size());
        matched = true;
        break;
      }
    }
    if (!matched)
      fail(Errc::ParseError, std::to_string(line) + ":" + std::to_string(col) + ": unexpected character '" +
                                 std::string(1, c) + "'");
  }
  out.push_back({"", false, {line, col}});
  return out;
}

inline const std::set<std::string>& keywords() {
  static const std::set<std::string> k{"fun", "forall", "exists", "box", "top", "bot", "p1", "p2", "in"};
  return k;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const Signature* sig) : toks_(std::move(toks)), sig_(sig) {}

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(const char* s) const { return !peek().ident && peek().text == s; }
  bool at_word(const char* s) const { return peek().ident && peek().text == s; }
  bool done() const { return peek().text.empty(); }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void error(const std::string& why) const {
    auto& t = peek();
    fail(Errc::ParseError, std::to_string(t.span.line) + ":" + std::to_string(t.span.col) + ": " + why +
                               (t.text.empty() ? " at end of input" : " near '" + t.text + "'"));
  }
  void expect(const char* s) {
    if (!at(s)) error(std::string("expected '") + s + "'");
    next();
  }
  std::string ident() {
    if (!peek().ident || keywords().count(peek().text)) error("expected a name");
    return next().text;
  }

  // Types
  TypePtr type_atom() {
    if (at("1")) {
      next();
      return unit_type();
    }
    if (at("(")) {
      next();
      auto t = type();
      expect(")");
      return t;
    }
    if (peek().ident && !keywords().count(peek().text)) {
      auto n = next().text;
      if (n == "P") return prop_type();
      if (sig_ && !sig_->has_type(n)) fail(Errc::UndeclaredBaseType, n);
      return base_type(n);
    }
    error("expected a type");
  }
  TypePtr type_exp() {
    auto t = type_atom();
    while (at("^")) {
      next();
      t = exp_type(t, type_atom());
    }
    return t;
  }
  TypePtr type() {
    auto t = type_exp();
    while (at("*")) {
      next();
      t = prod_type(t, type_exp());
    }
    return t;
  }

  // Terms
  TermPtr term() { return level1(); }

  TermPtr binder(TermKind k, const char* sep) {
    Span sp = next().span;
    auto x = ident();
    expect(":");
    auto ty = type();
    expect(sep);
    bound_.push_back(x);
    auto body = term();
    bound_.pop_back();
    return mk_binder(k, x, ty, body, sp);
  }

  TermPtr level1() {
    auto a = level2();
    if (at("<=>")) {
      Span sp = next().span;
      return mk(TermKind::Iff, a, level1(), sp);
    }
    return a;
  }
  TermPtr level2() {
    auto a = level3();
    if (at("=>")) {
      Span sp = next().span;
      return mk(TermKind::Imp, a, level2(), sp);
    }
    return a;
  }
  TermPtr level3() {
    auto a = level4();
    while (at("\\/")) {
      Span sp = next().span;
      a = mk(TermKind::Or, a, level4(), sp);
    }
    return a;
  }
  TermPtr level4() {
    auto a = level5();
    while (at("/\\")) {
      Span sp = next().span;
      a = mk(TermKind::And, a, level5(), sp);
    }
    return a;
  }
  TermPtr level5() {
    auto a = level6();
    if (at("=")) {
      Span sp = next().span;
      return mk_eq(a, level6(), nullptr, sp);
    }
    if (at("=_")) {
      Span sp = next().span;
      auto ty = type_atom();
      return mk_eq(a, level6(), ty, sp);
    }
    return a;
  }
  TermPtr level6() {
    auto a = level7();
    if (at_word("in")) {
      Span sp = next().span;
      return mk(TermKind::Member, a, level7(), sp);
    }
    return a;
  }
  TermPtr level7() {
    auto a = level8();
    while (at("@")) {
      Span sp = next().span;
      a = mk(TermKind::App, a, level8(), sp);
    }
    return a;
  }
  TermPtr level8() {
    Span sp = peek().span;
    if (at_word("box")) {
      next();
      return mk(TermKind::Box, level8(), nullptr, sp);
    }
    if (at_word("p1")) {
      next();
      return mk(TermKind::Proj1, level8(), nullptr, sp);
    }
    if (at_word("p2")) {
      next();
      return mk(TermKind::Proj2, level8(), nullptr, sp);
    }
    if (at("~")) {
      next();
      return mk(TermKind::Not, level8(), nullptr, sp);
    }
    return atom();
  }
  TermPtr atom() {
    Span sp = peek().span;
    if (at_word("fun")) return binder(TermKind::Lam, "=>");
    if (at_word("forall")) return binder(TermKind::Forall, ".");
    if (at_word("exists")) return binder(TermKind::Exists, ".");
    if (at_word("top")) {
      next();
      return mk(TermKind::Top, nullptr, nullptr, sp);
    }
    if (at_word("bot")) {
      next();
      return mk(TermKind::Bot, nullptr, nullptr, sp);
    }
    if (at("*")) {
      next();
      return mk(TermKind::Star, nullptr, nullptr, sp);
    }
    if (at("(")) {
      next();
      auto t = term();
      expect(")");
      return t;
    }
    if (at("<")) {
      next();
      auto a = term();
      expect(",");
      auto b = term();
      expect(">");
      return mk(TermKind::Pair, a, b, sp);
    }
    if (at("{")) {
      next();
      auto x = ident();
      expect(":");
      auto ty = type();
      expect("|");
      bound_.push_back(x);
      auto body = term();
      bound_.pop_back();
      expect("}");
      return mk_binder(TermKind::Comp, x, ty, body, sp);
    }
    if (peek().ident && !keywords().count(peek().text)) {
      auto n = next().text;
      for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
        if (*it == n) return mk_var(n, sp);
      if (sig_ && sig_->const_type(n)) return mk_const(n, sp);
      return mk_var(n, sp);
    }
    error("expected a term");
  }

  /// x:A, y, z:B
  Context context() {
    Context ctx;
    std::vector<std::string> pending;
    while (true) {
      pending.push_back(ident());
      if (at(",")) {
        next();
        continue;
      }
      expect(":");
      auto ty = type();
      for (auto& n : pending) {
        for (auto& [m, t] : ctx)
          if (m == n) fail(Errc::ParseError, "variable " + n + " declared twice in a context");
        ctx.push_back({n, ty});
      }
      pending.clear();
      if (!at(",")) break;
      next();
    }
    return ctx;
  }

  Sequent sequent() {
    Sequent s;
    // A context is present iff a '|' occurs outside braces before '|-'.
    int depth = 0;
    bool has_ctx = false;
    for (std::size_t k = pos_; k < toks_.size(); ++k) {
      auto& t = toks_[k];
      if (t.ident) continue;
      if (t.text == "{") ++depth;
      if (t.text == "}") --depth;
      if (t.text == "|-") break;
      if (t.text == "|" && depth == 0) {
        has_ctx = true;
        break;
      }
    }
    if (has_ctx) {
      s.ctx = context();
      expect("|");
    }
    for (auto& [n, t] : s.ctx) bound_.push_back(n);
    if (at("|-")) s.lhs = mk(TermKind::Top, nullptr, nullptr, peek().span);
    else s.lhs = term();
    expect("|-");
    s.rhs = term();
    bound_.clear();
    return s;
  }

  void bind(const std::vector<std::string>& names) { bound_ = names; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Signature* sig_;
  std::vector<std::string> bound_;
};

}  // namespace detail

inline TypePtr parse_type(const std::string& s, const Signature* sig = nullptr) {
  detail::Parser p(detail::lex(s, {1, 1}), sig);
  auto t = p.type();
  if (!p.done()) p.error("trailing input");
  return t;
}

/// Identifiers bound in `ctx` (or by a binder) are variables; other
/// identifiers declared as constants in `sig` are constants.
inline TermPtr parse_term(const std::string& s, const Signature* sig = nullptr, const Context& ctx = {}) {
  detail::Parser p(detail::lex(s, {1, 1}), sig);
  std::vector<std::string> names;
  for (auto& [n, t] : ctx) names.push_back(n);
  p.bind(names);
  auto t = p.term();
  if (!p.done()) p.error("trailing input");
  return t;
}

inline Context parse_context(const std::string& s, const Signature* sig = nullptr) {
  detail::Parser p(detail::lex(s, {1, 1}), sig);
  if (p.done()) return {};
  auto c = p.context();
  if (!p.done()) p.error("trailing input");
  return c;
}

inline Sequent parse_sequent(const std::string& s, const Signature* sig = nullptr, Span origin = {1, 1}) {
  detail::Parser p(detail::lex(s, origin), sig);
  auto q = p.sequent();
  if (!p.done()) p.error("trailing input");
  return q;
}

// ---------------------------------------------------------------------------
// Typechecking

namespace detail {
inline std::string at_span(const Span& s) {
  return s.line ? std::to_string(s.line) + ":" + std::to_string(s.col) + ": " : std::string();
}
}  // namespace detail

inline void check_type_declared(const TypePtr& t, const Signature& sig) {
  switch (t->kind) {
    case TypeKind::Base:
      if (!sig.has_type(t->name)) fail(Errc::UndeclaredBaseType, t->name);
      return;
    case TypeKind::Prod:
    case TypeKind::Exp:
      check_type_declared(t->left, sig);
      check_type_declared(t->right, sig);
      return;
    default: return;
  }
}

inline TypePtr typecheck(const Context& ctx, const TermPtr& t, const Signature& sig);

namespace detail {
[[noreturn]] inline void mismatch(const TermPtr& t, const std::string& expected, const TypePtr& got) {
  fail(Errc::TypeMismatch,
       at_span(t->span) + "expected " + expected + ", got " + type_to_string(got) + " in " + to_string(t));
}

inline TypePtr require_prop(const Context& ctx, const TermPtr& t, const Signature& sig) {
  auto ty = typecheck(ctx, t, sig);
  if (ty->kind != TypeKind::Prop)
    fail(Errc::NotAProposition, at_span(t->span) + to_string(t) + " has type " + type_to_string(ty));
  return ty;
}

inline Context extend(const Context& ctx, const std::string& x, const TypePtr& t) {
  Context c = ctx;
  c.push_back({x, t});
  return c;
}
}  // namespace detail

/// The type of t in ctx.  Lookup takes the innermost binding of a name.
inline TypePtr typecheck(const Context& ctx, const TermPtr& t, const Signature& sig) {
  using detail::mismatch;
  switch (t->kind) {
    case TermKind::Star: return unit_type();
    case TermKind::Top:
    case TermKind::Bot: return prop_type();
    case TermKind::Var:
      for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
        if (it->first == t->name) return it->second;
      fail(Errc::UnboundVariable, detail::at_span(t->span) + t->name);
    case TermKind::Const:
      if (auto ty = sig.const_type(t->name)) return ty;
      fail(Errc::UndeclaredSymbol, detail::at_span(t->span) + t->name);
    case TermKind::Pair: return prod_type(typecheck(ctx, t->a, sig), typecheck(ctx, t->b, sig));
    case TermKind::Proj1:
    case TermKind::Proj2: {
      auto ty = typecheck(ctx, t->a, sig);
      if (ty->kind != TypeKind::Prod) mismatch(t->a, "a product type", ty);
      return t->kind == TermKind::Proj1 ? ty->left : ty->right;
    }
    case TermKind::Lam:
      check_type_declared(t->type, sig);
      return exp_type(typecheck(detail::extend(ctx, t->name, t->type), t->a, sig), t->type);
    case TermKind::App: {
      auto f = typecheck(ctx, t->a, sig);
      if (f->kind != TypeKind::Exp) mismatch(t->a, "a function type", f);
      auto x = typecheck(ctx, t->b, sig);
      if (!type_equal(x, f->right)) mismatch(t->b, type_to_string(f->right), x);
      return f->left;
    }
    case TermKind::And:
    case TermKind::Or:
    case TermKind::Imp:
    case TermKind::Iff:
      detail::require_prop(ctx, t->a, sig);
      return detail::require_prop(ctx, t->b, sig);
    case TermKind::Not:
    case TermKind::Box: return detail::require_prop(ctx, t->a, sig);
    case TermKind::Forall:
    case TermKind::Exists:
      check_type_declared(t->type, sig);
      return detail::require_prop(detail::extend(ctx, t->name, t->type), t->a, sig);
    case TermKind::Comp:
      check_type_declared(t->type, sig);
      detail::require_prop(detail::extend(ctx, t->name, t->type), t->a, sig);
      return exp_type(prop_type(), t->type);
    case TermKind::Eq: {
      auto l = typecheck(ctx, t->a, sig);
      auto r = typecheck(ctx, t->b, sig);
      if (t->type) {
        check_type_declared(t->type, sig);
        if (!type_equal(l, t->type)) mismatch(t->a, type_to_string(t->type), l);
      }
      if (!type_equal(l, r)) mismatch(t->b, type_to_string(l), r);
      return prop_type();
    }
    case TermKind::Member: {
      auto s = typecheck(ctx, t->b, sig);
      if (s->kind != TypeKind::Exp || s->left->kind != TypeKind::Prop) mismatch(t->b, "a type P^A", s);
      auto x = typecheck(ctx, t->a, sig);
      if (!type_equal(x, s->right)) mismatch(t->a, type_to_string(s->right), x);
      return prop_type();
    }
  }
  fail(Errc::InvalidInput, "unknown term");
}

inline void check_context(const Context& ctx, const Signature& sig) {
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    check_type_declared(ctx[i].second, sig);
    for (std::size_t j = 0; j < i; ++j)
      if (ctx[i].first == ctx[j].first)
        fail(Errc::InvalidInput, "variable " + ctx[i].first + " declared twice in a context");
  }
}

inline void typecheck_sequent(const Sequent& s, const Signature& sig) {
  check_context(s.ctx, sig);
  detail::require_prop(s.ctx, s.lhs, sig);
  detail::require_prop(s.ctx, s.rhs, sig);
}

// ---------------------------------------------------------------------------
// Variables and substitution

inline void free_vars(const TermPtr& t, std::set<std::string>& out, std::vector<std::string>& bound) {
  if (!t) return;
  if (t->kind == TermKind::Var) {
    for (auto& b : bound)
      if (b == t->name) return;
    out.insert(t->name);
    return;
  }
  if (is_binder(t->kind)) {
    bound.push_back(t->name);
    free_vars(t->a, out, bound);
    bound.pop_back();
    return;
  }
  free_vars(t->a, out, bound);
  free_vars(t->b, out, bound);
}

inline std::set<std::string> free_vars(const TermPtr& t) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  free_vars(t, out, bound);
  return out;
}

/// Appends primes to x until it avoids every name in `avoid`.
inline std::string fresh_name(std::string x, const std::set<std::string>& avoid) {
  while (avoid.count(x)) x += "'";
  return x;
}

inline TermPtr with_children(const TermPtr& t, TermPtr a, TermPtr b) {
  auto r = std::make_shared<Term>(*t);
  r->a = std::move(a);
  r->b = std::move(b);
  return r;
}

/// t[s/x], renaming binders that would capture free variables of s.
inline TermPtr substitute(const TermPtr& t, const std::string& x, const TermPtr& s) {
  if (!t) return t;
  if (t->kind == TermKind::Var) return t->name == x ? s : t;
  if (is_binder(t->kind)) {
    if (t->name == x) return t;
    auto body_fv = free_vars(t->a);
    if (!body_fv.count(x)) return t;
    auto s_fv = free_vars(s);
    std::string y = t->name;
    TermPtr body = t->a;
    if (s_fv.count(y)) {
      std::set<std::string> avoid = s_fv;
      avoid.insert(body_fv.begin(), body_fv.end());
      avoid.insert(x);
      auto z = fresh_name(y, avoid);
      body = substitute(body, y, mk_var(z));
      y = z;
    }
    auto r = std::make_shared<Term>(*t);
    r->name = y;
    r->a = substitute(body, x, s);
    return r;
  }
  auto a = substitute(t->a, x, s), b = substitute(t->b, x, s);
  if (a == t->a && b == t->b) return t;
  return with_children(t, a, b);
}

/// Type-checked substitution: s must have x's type in ctx.
inline TermPtr substitute_checked(const Context& ctx, const TermPtr& t, const std::string& x, const TermPtr& s,
                                  const Signature& sig) {
  TypePtr xt;
  for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
    if (it->first == x) {
      xt = it->second;
      break;
    }
  if (!xt) fail(Errc::UnboundVariable, x);
  auto st = typecheck(ctx, s, sig);
  if (!type_equal(st, xt)) detail::mismatch(s, type_to_string(xt), st);
  return substitute(t, x, s);
}

/// Key identifying t up to renaming of bound variables (de Bruijn indices
/// for bound occurrences, names for free ones).
inline std::string alpha_key(const TermPtr& t) {
  std::ostringstream o;
  std::vector<std::string> bound;
  std::function<void(const TermPtr&)> go = [&](const TermPtr& u) {
    if (!u) {
      o << "_";
      return;
    }
    o << "(" << static_cast<int>(u->kind);
    if (u->kind == TermKind::Var) {
      int k = -1;
      for (int i = static_cast<int>(bound.size()) - 1; i >= 0; --i)
        if (bound[i] == u->name) {
          k = static_cast<int>(bound.size()) - 1 - i;
          break;
        }
      if (k >= 0) o << " #" << k;
      else o << " " << u->name;
    } else if (u->kind == TermKind::Const) {
      o << " " << u->name;
    }
    if (u->type) o << " :" << type_to_string(u->type);
    if (is_binder(u->kind)) {
      bound.push_back(u->name);
      go(u->a);
      bound.pop_back();
    } else if (u->a) {
      o << " ";
      go(u->a);
      if (u->b) {
        o << " ";
        go(u->b);
      }
    }
    o << ")";
  };
  go(t);
  return o.str();
}

inline bool alpha_equal(const TermPtr& a, const TermPtr& b) { return alpha_key(a) == alpha_key(b); }

/// Replaces comprehension by lambda, membership by application, and
/// expands <=> and ~.
inline TermPtr desugar(const TermPtr& t) {
  if (!t) return t;
  auto a = desugar(t->a), b = desugar(t->b);
  switch (t->kind) {
    case TermKind::Comp: {
      auto r = std::make_shared<Term>(*t);
      r->kind = TermKind::Lam;
      r->a = a;
      return r;
    }
    case TermKind::Member: return mk(TermKind::App, b, a, t->span);
    case TermKind::Iff:
      return mk(TermKind::And, mk(TermKind::Imp, a, b, t->span), mk(TermKind::Imp, b, a, t->span), t->span);
    case TermKind::Not: return mk(TermKind::Imp, a, mk(TermKind::Bot, nullptr, nullptr, t->span), t->span);
    default:
      if (a == t->a && b == t->b) return t;
      return with_children(t, a, b);
  }
}

/// One step of beta at the root: (fun x:A => t) @ s  to  t[s/x].
inline TermPtr beta_root(const TermPtr& t) {
  if (t->kind == TermKind::App && t->a->kind == TermKind::Lam) return substitute(t->a->a, t->a->name, t->b);
  return t;
}

// ---------------------------------------------------------------------------
// Theory files
//
//   types: G H
//   consts: c : G, f : G^G
//   axioms:
//     [name] x:G | top |- x = x
//
// Sections may span several lines; an axiom is one line.

inline Theory parse_theory(const std::string& src, const std::string& origin = "") {
  Theory th;
  std::istringstream in(src);
  std::string raw;
  int number = 0;
  std::string section;
  std::string consts_text;
  int consts_line = 0;
  struct Pending {
    std::string text;
    int line, col;
    std::string name;
  };
  std::vector<Pending> axioms;
  auto where = [&](int line) {
    return (origin.empty() ? std::string() : origin + ":") + std::to_string(line);
  };
  while (std::getline(in, raw)) {
    ++number;
    auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    std::string body = line.substr(start);
    int col = static_cast<int>(start) + 1;
    for (const char* head : {"types:", "consts:", "axioms:"}) {
      std::string h(head);
      if (body.compare(0, h.size(), h) == 0) {
        section = h.substr(0, h.size() - 1);
        body = body.substr(h.size());
        col += static_cast<int>(h.size());
        auto s2 = body.find_first_not_of(" \t\r");
        if (s2 == std::string::npos) body.clear();
        else {
          col += static_cast<int>(s2);
          body = body.substr(s2);
        }
        break;
      }
    }
    if (body.empty()) continue;
    if (section == "types") {
      std::istringstream ts(body);
      std::string n;
      while (ts >> n) {
        if (n.back() == ',') n.pop_back();
        if (n.empty()) continue;
        if (n == "P" || !detail::ident_start(n[0]) || detail::keywords().count(n))
          fail(Errc::ParseError, where(number) + ": bad type name " + n);
        th.types.push_back(n);
      }
    } else if (section == "consts") {
      if (consts_text.empty()) consts_line = number;
      consts_text += body + ",";
    } else if (section == "axioms") {
      std::string name;
      if (body[0] == '[') {
        auto close = body.find(']');
        if (close == std::string::npos) fail(Errc::ParseError, where(number) + ": missing ']'");
        name = body.substr(1, close - 1);
        auto rest = body.find_first_not_of(" \t", close + 1);
        col += static_cast<int>(rest);
        body = body.substr(rest);
      }
      axioms.push_back({body, number, col, name});
    } else {
      fail(Errc::ParseError, where(number) + ": expected 'types:', 'consts:' or 'axioms:'");
    }
  }
  // Constants: name : Type, separated by commas at bracket depth 0.
  std::string item;
  int depth = 0;
  for (char c : consts_text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      auto s = item.find_first_not_of(" \t");
      if (s != std::string::npos) {
        auto colon = item.find(':');
        if (colon == std::string::npos) fail(Errc::ParseError, where(consts_line) + ": expected 'name : type'");
        auto n = item.substr(s, colon - s);
        n.erase(n.find_last_not_of(" \t") + 1);
        try {
          th.consts.push_back({n, parse_type(item.substr(colon + 1), &th)});
        } catch (const Error& e) {
          fail(e.code(), where(consts_line) + ": " + e.detail());
        }
      }
      item.clear();
      continue;
    }
    item += c;
  }
  int k = 0;
  for (auto& p : axioms) {
    ++k;
    Sequent s;
    try {
      s = parse_sequent(p.text, &th, {p.line, p.col});
    } catch (const Error& e) {
      fail(e.code(), (origin.empty() ? std::string() : origin + ":") + e.detail());
    }
    s.name = p.name.empty() ? "axiom " + std::to_string(k) : p.name;
    typecheck_sequent(s, th);
    th.axioms.push_back(std::move(s));
  }
  return th;
}

inline std::string theory_to_text(const Theory& th) {
  std::ostringstream o;
  o << "types:";
  for (auto& t : th.types) o << " " << t;
  o << "\nconsts:";
  for (std::size_t i = 0; i < th.consts.size(); ++i)
    o << (i ? ", " : " ") << th.consts[i].first << " : " << type_to_string(th.consts[i].second);
  o << "\naxioms:\n";
  for (auto& a : th.axioms) o << "  [" << a.name << "] " << to_string(a) << "\n";
  return o.str();
}

}  // namespace homl::syntax

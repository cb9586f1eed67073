#pragma once

#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "frame.hpp"
#include "omega.hpp"
#include "presheaf.hpp"
#include "syntax.hpp"
#include "text.hpp"

namespace homl {

/// A named element of some presheaf, used for display and for bindings.
struct Alias {
  std::string name;
  PresheafPtr owner;
  int object = 0;
  int index = 0;
  syntax::TypePtr type;
};

namespace detail {
struct Memo {
  std::mutex mu;
  std::unordered_map<std::string, NatTransform> table;
};
}  // namespace detail

struct Model {
  std::string name;
  CategoryPtr base;
  FrameMaps maps;
  std::vector<std::pair<std::string, PresheafPtr>> types;
  std::vector<std::pair<std::string, syntax::TypePtr>> const_types;
  std::map<std::string, NatTransform> constants;  // global elements 1 -> [[A]]
  std::vector<Alias> aliases;
  std::map<int, std::vector<std::string>> display;  // object -> arrow order for labels
  std::shared_ptr<detail::Memo> memo = std::make_shared<detail::Memo>();

  const InternalFrame& frame() const { return *maps.frame; }
  PresheafPtr base_type(const std::string& n) const {
    for (auto& [k, p] : types)
      if (k == n) return p;
    return nullptr;
  }
  syntax::Signature signature() const {
    syntax::Signature s;
    for (auto& t : types) s.types.push_back(t.first);
    s.consts = const_types;
    return s;
  }
};

using ModelPtr = std::shared_ptr<const Model>;

// ---------------------------------------------------------------------------
// Types and contexts

inline PresheafPtr interp_type(const Model& m, const syntax::TypePtr& t) {
  using syntax::TypeKind;
  switch (t->kind) {
    case TypeKind::Unit: return terminal(m.base);
    case TypeKind::Prop: return m.frame().carrier();
    case TypeKind::Base: {
      auto p = m.base_type(t->name);
      if (!p) fail(Errc::UndeclaredBaseType, t->name + " in model " + m.name);
      return p;
    }
    case TypeKind::Prod: return product(interp_type(m, t->left), interp_type(m, t->right));
    case TypeKind::Exp: return exponential(interp_type(m, t->right), interp_type(m, t->left));
  }
  fail(Errc::InvalidInput, "unknown type");
}

/// [[x1:A1, ..., xn:An]] = (...((1 x A1) x A2) ...) x An
inline PresheafPtr interp_context(const Model& m, const syntax::Context& ctx) {
  auto P = terminal(m.base);
  for (auto& [x, t] : ctx) P = product(P, interp_type(m, t));
  return P;
}

/// The value of each variable in the element k of [[ctx]](c).
inline std::vector<int> context_values(const Model& m, const syntax::Context& ctx, int c, int k) {
  std::vector<int> out(ctx.size());
  for (std::size_t i = ctx.size(); i-- > 0;) {
    int n = static_cast<int>(interp_type(m, ctx[i].second)->size(c));
    out[i] = k % n;
    k /= n;
  }
  return out;
}

inline int context_index(const Model& m, const syntax::Context& ctx, int c, const std::vector<int>& vals) {
  int k = 0;
  for (std::size_t i = 0; i < ctx.size(); ++i)
    k = k * static_cast<int>(interp_type(m, ctx[i].second)->size(c)) + vals[i];
  return k;
}

/// Alias if one is declared, canonical name otherwise.
inline std::string show_element(const Model& m, const PresheafPtr& P, int c, int x) {
  for (auto& a : m.aliases)
    if (a.owner == P && a.object == c && a.index == x) return a.name;
  std::string s = P->element_name(c, x);
  auto d = m.display.find(c);
  if (d != m.display.end()) {
    auto* si = P->as_sieves();
    if (si && si->width == 1) s += " (" + binary_label(P->cat(), si->masks[c][x], d->second) + ")";
  }
  return s;
}

inline std::string show_bindings(const Model& m, const syntax::Context& ctx, int c, int k) {
  auto vals = context_values(m, ctx, c, k);
  std::string s;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (i) s += ", ";
    s += ctx[i].first + "=" + show_element(m, interp_type(m, ctx[i].second), c, vals[i]);
  }
  return s;
}

/// Looks up an element of P(c) by alias or canonical name.
inline int resolve_element(const Model& m, const PresheafPtr& P, int c, const std::string& name) {
  for (auto& a : m.aliases)
    if (a.name == name && a.owner == P && a.object == c) return a.index;
  return P->index_of(c, name);
}

// ---------------------------------------------------------------------------
// Terms

namespace detail {

inline NatTransform projection_to(const Model& m, const PresheafPtr& G, const syntax::Context& ctx, std::size_t j) {
  auto A = interp_type(m, ctx[j].second);
  NatTransform r{G, A, {}};
  for (int c = 0; c < m.base->object_count(); ++c) {
    int below = 1;
    for (std::size_t i = j + 1; i < ctx.size(); ++i) below *= static_cast<int>(interp_type(m, ctx[i].second)->size(c));
    int n = static_cast<int>(A->size(c));
    r.components.emplace_back(G->size(c));
    for (std::size_t k = 0; k < G->size(c); ++k) r.components[c][k] = static_cast<int>(k) / below % n;
  }
  return r;
}

inline NatTransform pointwise(const NatTransform& a, const NatTransform& b, const InternalFrame& H, FrameOp op) {
  NatTransform r{a.source, H.carrier(), a.components};
  for (std::size_t c = 0; c < r.components.size(); ++c)
    for (std::size_t k = 0; k < r.components[c].size(); ++k)
      r.components[c][k] = apply_op(H, op, static_cast<int>(c), a.components[c][k], b.components[c][k]);
  return r;
}

inline NatTransform quantify(const Model& m, const NatTransform& body, const PresheafPtr& G, bool universal) {
  const auto& H = m.frame();
  const auto& cat = *m.base;
  const auto& A = product_info(body.source).right;
  NatTransform r{G, H.carrier(), {}};
  SlotValues slots;
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(G->size(c));
    for (std::size_t k = 0; k < G->size(c); ++k) {
      slots.clear();
      for (int e = 0; e < cat.object_count(); ++e) {
        int na = static_cast<int>(A->size(e));
        for (int h : cat.hom(e, c)) {
          int gh = G->restrict(h, static_cast<int>(k));
          for (int a = 0; a < na; ++a) slots.push_back({h, body.components[e][gh * na + a]});
        }
      }
      r.components[c][k] = universal ? forall_at(H, c, slots) : exists_at(H, c, slots);
    }
  }
  return r;
}

/// i . delta . <a, b>, with delta computed elementwise.
inline NatTransform equality(const Model& m, const NatTransform& a, const NatTransform& b) {
  const auto& cat = *m.base;
  const auto& A = a.target;
  auto O = omega(m.base);
  NatTransform r{a.source, m.frame().carrier(), a.components};
  for (int c = 0; c < cat.object_count(); ++c)
    for (std::size_t k = 0; k < r.components[c].size(); ++k) {
      int x = a.components[c][k], y = b.components[c][k];
      ArrowMask s = 0;
      for (int f : cat.arrows_into(c))
        if (A->restrict(f, x) == A->restrict(f, y)) s |= bit_of(cat, f);
      r.components[c][k] = m.maps.initial(c, mask_index(O, c, s));
    }
  return r;
}

inline NatTransform interp(const Model& m, const syntax::Context& ctx, const PresheafPtr& G,
                           const syntax::TermPtr& t);

inline NatTransform interp_uncached(const Model& m, const syntax::Context& ctx, const PresheafPtr& G,
                                    const syntax::TermPtr& t) {
  using syntax::TermKind;
  const auto& H = m.frame();
  auto sub = [&](const syntax::TermPtr& u) { return interp(m, ctx, G, u); };
  auto bound = [&](const syntax::TermPtr& u) {
    auto ext = ctx;
    ext.push_back({t->name, t->type});
    return interp(m, ext, product(G, interp_type(m, t->type)), u);
  };
  switch (t->kind) {
    case TermKind::Star: return terminal_map(G);
    case TermKind::Top: return constant_map(G, frame_top_map(H));
    case TermKind::Bot: return constant_map(G, frame_bot_map(H));
    case TermKind::Var:
      for (std::size_t j = ctx.size(); j-- > 0;)
        if (ctx[j].first == t->name) return projection_to(m, G, ctx, j);
      fail(Errc::UnboundVariable, t->name);
    case TermKind::Const: {
      auto it = m.constants.find(t->name);
      if (it == m.constants.end()) fail(Errc::UndeclaredSymbol, t->name + " in model " + m.name);
      return constant_map(G, it->second);
    }
    case TermKind::Pair: return pair(sub(t->a), sub(t->b));
    case TermKind::Proj1:
    case TermKind::Proj2: {
      auto a = sub(t->a);
      return compose_nat(t->kind == TermKind::Proj1 ? proj1(a.target) : proj2(a.target), a);
    }
    case TermKind::Lam: return transpose(bound(t->a));
    case TermKind::App: {
      auto f = sub(t->a);
      const auto& e = exponential_info(f.target);
      return compose_nat(eval_map(e.dom, e.cod), pair(f, sub(t->b)));
    }
    case TermKind::And: return pointwise(sub(t->a), sub(t->b), H, FrameOp::Meet);
    case TermKind::Or: return pointwise(sub(t->a), sub(t->b), H, FrameOp::Join);
    case TermKind::Imp: return pointwise(sub(t->a), sub(t->b), H, FrameOp::Imp);
    case TermKind::Forall:
    case TermKind::Exists: return quantify(m, bound(t->a), G, t->kind == TermKind::Forall);
    case TermKind::Eq: return equality(m, sub(t->a), sub(t->b));
    case TermKind::Box: return compose_nat(m.maps.box, sub(t->a));
    default: fail(Errc::InvalidInput, "interpretation expects a desugared term: " + syntax::to_string(t));
  }
}

inline NatTransform interp(const Model& m, const syntax::Context& ctx, const PresheafPtr& G,
                           const syntax::TermPtr& t) {
  std::string key = syntax::context_to_string(ctx) + "\x1f" + syntax::alpha_key(t);
  {
    std::lock_guard<std::mutex> lock(m.memo->mu);
    auto it = m.memo->table.find(key);
    if (it != m.memo->table.end()) return it->second;
  }
  auto r = interp_uncached(m, ctx, G, t);
  std::lock_guard<std::mutex> lock(m.memo->mu);
  return m.memo->table.emplace(key, std::move(r)).first->second;
}

}  // namespace detail

/// [[ctx |- t]] : [[ctx]] -> [[B]] where B is the type of t.
inline NatTransform interp_term(const Model& m, const syntax::Context& ctx, const syntax::TermPtr& t) {
  auto sig = m.signature();
  syntax::check_context(ctx, sig);
  auto d = syntax::desugar(t);
  auto ty = syntax::typecheck(ctx, d, sig);
  auto r = detail::interp(m, ctx, interp_context(m, ctx), d);
  if (r.target != interp_type(m, ty)) fail(Errc::ShapeMismatch, "interpretation of " + syntax::to_string(t));
  return r;
}

inline void clear_memo(const Model& m) {
  std::lock_guard<std::mutex> lock(m.memo->mu);
  m.memo->table.clear();
}

// ---------------------------------------------------------------------------
// Satisfaction

struct Witness {
  int object = 0;
  int element = 0;  // index in [[ctx]](object)
  int lhs = 0, rhs = 0;
};

struct Verdict {
  bool holds = true;
  std::vector<Witness> witnesses;
};

/// phi |- psi holds iff [[phi]] <= [[psi]] at every object and element.
inline Verdict holds(const Model& m, const syntax::Sequent& s, int jobs = 1) {
  syntax::typecheck_sequent(s, m.signature());
  auto phi = interp_term(m, s.ctx, s.lhs);
  auto psi = interp_term(m, s.ctx, s.rhs);
  const auto& H = m.frame();
  int n = m.base->object_count();
  auto scan = [&](int c) {
    std::vector<Witness> w;
    for (std::size_t k = 0; k < phi.components[c].size(); ++k) {
      int x = phi.components[c][k], y = psi.components[c][k];
      if (!H.leq(c, x, y)) w.push_back({c, static_cast<int>(k), x, y});
    }
    return w;
  };
  std::vector<std::vector<Witness>> per(n);
  if (jobs > 1 && n > 1) {
    std::vector<std::future<std::vector<Witness>>> fs;
    for (int c = 0; c < n; ++c) fs.push_back(std::async(std::launch::async, scan, c));
    for (int c = 0; c < n; ++c) per[c] = fs[c].get();
  } else {
    for (int c = 0; c < n; ++c) per[c] = scan(c);
  }
  Verdict v;
  for (auto& w : per) v.witnesses.insert(v.witnesses.end(), w.begin(), w.end());
  v.holds = v.witnesses.empty();
  return v;
}

inline std::string describe_witness(const Model& m, const syntax::Sequent& s, const Witness& w) {
  std::string out = m.base->object_name(w.object);
  if (!s.ctx.empty()) out += " (" + show_bindings(m, s.ctx, w.object, w.element) + ")";
  const auto& H = m.frame();
  return out + ": lhs " + show_element(m, H.carrier(), w.object, w.lhs) + ", rhs " +
         show_element(m, H.carrier(), w.object, w.rhs);
}

struct AxiomVerdict {
  syntax::Sequent sequent;
  Verdict verdict;
};

struct TheoryReport {
  bool passed = true;
  std::vector<AxiomVerdict> axioms;
};

/// Every type and constant of the theory must be interpreted by the model.
inline TheoryReport check_theory(const Model& m, const syntax::Theory& th, int jobs = 1) {
  for (auto& t : th.types)
    if (!m.base_type(t)) fail(Errc::UndeclaredSymbol, "type " + t + " is not interpreted by model " + m.name);
  auto sig = m.signature();
  for (auto& [c, t] : th.consts) {
    auto mt = sig.const_type(c);
    if (!mt) fail(Errc::UndeclaredSymbol, "constant " + c + " is not interpreted by model " + m.name);
    if (!syntax::type_equal(mt, t))
      fail(Errc::TypeMismatch, "constant " + c + " has type " + syntax::type_to_string(mt) + " in model " + m.name);
  }
  TheoryReport r;
  for (auto& ax : th.axioms) {
    r.axioms.push_back({ax, holds(m, ax, jobs)});
    r.passed = r.passed && r.axioms.back().verdict.holds;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Construction

struct ConstantSpec {
  std::string name;
  syntax::TypePtr type;
  std::vector<int> values;  // one element of [[type]] per object
};

/// Builds and validates a model.  The frame must be faithful unless
/// `allow_unfaithful`.
inline ModelPtr make_model(const std::string& name, const FramePtr& frame,
                           std::vector<std::pair<std::string, PresheafPtr>> types,
                           const std::vector<ConstantSpec>& consts = {}, bool allow_unfaithful = false) {
  auto m = std::make_shared<Model>();
  m->name = name;
  m->base = frame->base();
  m->maps = frame_maps(frame);
  if (auto v = faithfulness_violation(m->maps); v && !allow_unfaithful)
    fail(Errc::FaithfulnessFailure, frame->name() + ": " + *v);
  for (auto& [n, p] : types)
    if (p->base() != m->base) fail(Errc::BaseMismatch, "type " + n + " lives over another category");
  m->types = std::move(types);
  for (auto& k : consts) {
    syntax::check_type_declared(k.type, m->signature());
    auto A = interp_type(*m, k.type);
    NatTransform g{terminal(m->base), A, {}};
    if (k.values.size() != static_cast<std::size_t>(m->base->object_count()))
      fail(Errc::ShapeMismatch, "constant " + k.name + " needs one element per object");
    for (int c = 0; c < m->base->object_count(); ++c) {
      if (k.values[c] < 0 || k.values[c] >= static_cast<int>(A->size(c)))
        fail(Errc::UnknownElement, "constant " + k.name + " at " + m->base->object_name(c));
      g.components.push_back({k.values[c]});
    }
    if (auto v = naturality_violation(g)) fail(Errc::NotFunctorial, "constant " + k.name + " is not global: " + *v);
    m->const_types.push_back({k.name, k.type});
    m->constants.emplace(k.name, std::move(g));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model files
//
//   category ... end / presheaf ... end / frame ... end   (or include "...")
//   model <name> over <category>
//   frame <builtin or frame block name>
//   type <base type> = <presheaf>
//   alias <name> : <type> = <element>@<object>
//   const <name> : <type> = <element>@<object> ...
//   display <object> : <arrow> <arrow> ...
//   end

struct ModelFile {
  std::map<std::string, CategoryPtr> categories;
  std::map<std::string, PresheafPtr> presheaves;
  std::map<std::string, FramePtr> frames;
  std::vector<ModelPtr> models;

  ModelPtr model(const std::string& n = "") const {
    if (models.empty()) fail(Errc::InvalidInput, "no model in file");
    if (n.empty()) return models.front();
    for (auto& m : models)
      if (m->name == n) return m;
    fail(Errc::UndeclaredSymbol, "model " + n);
  }
};

namespace detail {

/// Text after the first `=` split on whitespace; each piece is elem@obj.
inline std::vector<std::pair<std::string, std::string>> element_list(const text::Block& b, const text::Line& l) {
  auto eq = l.raw.find('=');
  if (eq == std::string::npos) text::bad_line(b, l, "expected '='");
  std::istringstream in(l.raw.substr(eq + 1));
  std::vector<std::pair<std::string, std::string>> out;
  std::string w;
  while (in >> w) {
    auto at = w.rfind('@');
    if (at == std::string::npos || at == 0 || at + 1 == w.size()) text::bad_line(b, l, "expected <element>@<object>");
    out.push_back({w.substr(0, at), w.substr(at + 1)});
  }
  if (out.empty()) text::bad_line(b, l, "missing value");
  return out;
}

/// Tokens between `:` and `=`, rejoined as type text.
inline std::string type_text(const text::Block& b, const text::Line& l) {
  auto& t = l.tokens;
  if (t.size() < 4 || t[2] != ":") text::bad_line(b, l, "expected '<keyword> <name> : <type> = ...'");
  std::string s;
  std::size_t i = 3;
  for (; i < t.size() && t[i] != "="; ++i) s += t[i] + " ";
  if (i == t.size()) text::bad_line(b, l, "expected '='");
  return s;
}

inline ModelPtr model_from_block(const text::Block& b, const ModelFile& f, bool allow_unfaithful) {
  auto where = text::where(b.origin, b.line);
  if (b.header.size() != 3 || b.header[1] != "over")
    fail(Errc::ParseError, where + ": expected 'model <name> over <category>'");
  auto ci = f.categories.find(b.header[2]);
  if (ci == f.categories.end()) fail(Errc::UndeclaredSymbol, where + ": unknown category " + b.header[2]);
  const auto& base = ci->second;
  FramePtr frame;
  std::vector<std::pair<std::string, PresheafPtr>> types;
  struct Pending {
    const text::Line* line;
    std::string name, type;
    std::vector<std::pair<std::string, std::string>> vals;
  };
  std::vector<Pending> aliases, consts;
  std::map<int, std::vector<std::string>> display;
  for (auto& l : b.body) {
    auto& t = l.tokens;
    if (t[0] == "frame") {
      if (t.size() != 2) text::bad_line(b, l, "expected 'frame <name>'");
      auto fi = f.frames.find(t[1]);
      if (fi != f.frames.end()) {
        frame = fi->second;
        if (frame->base() != base) text::bad_line(b, l, "frame " + t[1] + " lives over another category");
      } else {
        frame = builtin_frame(base, t[1]);
        if (!frame) text::bad_line(b, l, "unknown frame " + t[1]);
      }
    } else if (t[0] == "type") {
      if (t.size() != 4 || t[2] != "=") text::bad_line(b, l, "expected 'type <name> = <presheaf>'");
      auto pi = f.presheaves.find(t[3]);
      if (pi == f.presheaves.end()) text::bad_line(b, l, "unknown presheaf " + t[3]);
      if (pi->second->base() != base) text::bad_line(b, l, "presheaf " + t[3] + " lives over another category");
      types.push_back({t[1], pi->second});
    } else if (t[0] == "alias" || t[0] == "const") {
      Pending p{&l, t.size() > 1 ? t[1] : "", type_text(b, l), element_list(b, l)};
      (t[0] == "alias" ? aliases : consts).push_back(std::move(p));
    } else if (t[0] == "display") {
      if (t.size() < 3 || t[2] != ":") text::bad_line(b, l, "expected 'display <object> : <arrows>'");
      int c = base->find_object(t[1]);
      if (c < 0) text::bad_line(b, l, "unknown object " + t[1]);
      for (std::size_t i = 3; i < t.size(); ++i) {
        int a = base->find_arrow(t[i]);
        if (a < 0 || base->arrow(a).cod != c) text::bad_line(b, l, "no arrow " + t[i] + " into " + t[1]);
      }
      display[c].assign(t.begin() + 3, t.end());
    } else {
      text::bad_line(b, l, "unknown model line '" + t[0] + "'");
    }
  }
  if (!frame) fail(Errc::ParseError, where + ": model needs a 'frame' line");

  auto m = std::const_pointer_cast<Model>(make_model(b.header[0], frame, types, {}, allow_unfaithful));
  m->display = display;
  auto sig = m->signature();
  auto parse = [&](const Pending& p) {
    try {
      auto ty = syntax::parse_type(p.type, &sig);
      syntax::check_type_declared(ty, sig);
      return ty;
    } catch (const Error& e) {
      text::bad_line(b, *p.line, e.detail());
    }
  };
  for (auto& p : aliases) {
    auto ty = parse(p);
    auto P = interp_type(*m, ty);
    if (p.vals.size() != 1) text::bad_line(b, *p.line, "an alias names one element");
    int c = base->find_object(p.vals[0].second);
    if (c < 0) text::bad_line(b, *p.line, "unknown object " + p.vals[0].second);
    int x = P->find(c, p.vals[0].first);
    if (x < 0) text::bad_line(b, *p.line, "unknown element " + p.vals[0].first);
    m->aliases.push_back({p.name, P, c, x, ty});
  }
  std::vector<ConstantSpec> specs;
  for (auto& p : consts) {
    auto ty = parse(p);
    auto P = interp_type(*m, ty);
    ConstantSpec k{p.name, ty, std::vector<int>(base->object_count(), -1)};
    for (auto& [e, o] : p.vals) {
      int c = base->find_object(o);
      if (c < 0) text::bad_line(b, *p.line, "unknown object " + o);
      int x = P->find(c, e);
      for (auto& a : m->aliases)
        if (x < 0 && a.name == e && a.owner == P && a.object == c) x = a.index;
      if (x < 0) text::bad_line(b, *p.line, "unknown element " + e);
      k.values[c] = x;
    }
    for (int c = 0; c < base->object_count(); ++c)
      if (k.values[c] < 0) text::bad_line(b, *p.line, "constant " + p.name + " has no value at " + base->object_name(c));
    specs.push_back(std::move(k));
  }
  if (!specs.empty()) {
    auto full = std::const_pointer_cast<Model>(make_model(m->name, frame, m->types, specs, allow_unfaithful));
    full->aliases = m->aliases;
    full->display = m->display;
    m = full;
  }
  return m;
}

}  // namespace detail

inline ModelFile models_from_blocks(const std::vector<text::Block>& blocks, bool allow_unfaithful = false) {
  ModelFile f;
  for (auto& b : blocks) {
    auto where = text::where(b.origin, b.line);
    auto name = b.header.empty() ? std::string() : b.header[0];
    if (b.kind == "category") {
      f.categories[name] = category_from_block(b);
    } else if (b.kind == "presheaf") {
      f.presheaves[name] = presheaf_from_block(b, f.categories);
    } else if (b.kind == "frame") {
      f.frames[name] = frame_from_block(b, f.categories, f.presheaves);
    } else if (b.kind == "model") {
      f.models.push_back(detail::model_from_block(b, f, allow_unfaithful));
    } else {
      fail(Errc::ParseError, where + ": unknown block '" + b.kind + "'");
    }
  }
  return f;
}

inline ModelFile models_from_text(const std::string& src, const std::string& origin = "",
                                  bool allow_unfaithful = false) {
  return models_from_blocks(text::parse_blocks(src, origin), allow_unfaithful);
}

inline ModelFile load_model_file(const std::string& path, bool allow_unfaithful = false) {
  return models_from_blocks(text::load_blocks(path), allow_unfaithful);
}

}  // namespace homl

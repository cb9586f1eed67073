#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semantics.hpp"

namespace homl {

/// A formula in context, evaluated at an object and an element of [[ctx]].
struct ForcingQuery {
  const Model* model = nullptr;
  syntax::Context ctx;
  syntax::TermPtr formula;
  int object = 0;
  int element = 0;
};

struct ForcingTrace {
  std::string clause;  // "and", "box", "atom", ...
  std::string text;    // object, formula and bindings
  bool verdict = false;
  std::vector<ForcingTrace> children;
};

namespace detail {

inline void require_geometric(const Model& m) {
  if (m.frame().kind() != FrameKind::OmegaStar)
    fail(Errc::NonGeometricFrame, "forcing needs the arrow-set frame, model " + m.name + " uses " + m.frame().name());
}

inline bool has_identity(const Model& m, int c, int value) {
  return (mask_at(m.frame().carrier(), c, value) & bit_of(*m.base, m.base->identity(c))) != 0;
}

inline void check_query(const ForcingQuery& q) {
  require_geometric(*q.model);
  auto sig = q.model->signature();
  syntax::check_context(q.ctx, sig);
  auto ty = syntax::typecheck(q.ctx, q.formula, sig);
  if (ty->kind != syntax::TypeKind::Prop)
    fail(Errc::NotAProposition, syntax::to_string(q.formula) + " has type " + syntax::type_to_string(ty));
  auto G = interp_context(*q.model, q.ctx);
  if (q.object < 0 || q.object >= q.model->base->object_count() || q.element < 0 ||
      q.element >= static_cast<int>(G->size(q.object)))
    fail(Errc::UnknownElement, "no such element of the context");
}

inline std::string query_text(const Model& m, const syntax::Context& ctx, const syntax::TermPtr& phi, int c, int k) {
  std::string s = m.base->object_name(c) + " |= " + syntax::to_string(phi);
  if (!ctx.empty()) s += "  [" + show_bindings(m, ctx, c, k) + "]";
  return s;
}

inline bool direct(const Model& m, const syntax::Context& ctx, const syntax::TermPtr& phi, int c, int k) {
  return has_identity(m, c, interp_term(m, ctx, phi)(c, k));
}

inline bool clauses(const Model& m, const syntax::Context& ctx, const syntax::TermPtr& phi, int c, int k,
                    ForcingTrace* tr) {
  using syntax::TermKind;
  auto sub = [&](const syntax::Context& cx, const syntax::TermPtr& u, int o, int e) {
    if (!tr) return clauses(m, cx, u, o, e, nullptr);
    tr->children.emplace_back();
    return clauses(m, cx, u, o, e, &tr->children.back());
  };
  auto mark = [&](const char* clause) {
    if (tr) {
      tr->clause = clause;
      tr->text = query_text(m, ctx, phi, c, k);
    }
  };
  bool r = false;
  switch (phi->kind) {
    case TermKind::Top:
      mark("top");
      r = true;
      break;
    case TermKind::Bot:
      mark("bot");
      r = false;
      break;
    case TermKind::And:
      mark("and");
      r = sub(ctx, phi->a, c, k);
      r = sub(ctx, phi->b, c, k) && r;
      break;
    case TermKind::Or:
      mark("or");
      r = sub(ctx, phi->a, c, k);
      r = sub(ctx, phi->b, c, k) || r;
      break;
    case TermKind::Imp:
      mark("implies");
      r = !sub(ctx, phi->a, c, k);
      r = sub(ctx, phi->b, c, k) || r;
      break;
    case TermKind::Forall:
    case TermKind::Exists: {
      mark(phi->kind == TermKind::Forall ? "forall" : "exists");
      bool all = phi->kind == TermKind::Forall;
      auto ext = ctx;
      ext.push_back({phi->name, phi->type});
      int n = static_cast<int>(interp_type(m, phi->type)->size(c));
      r = all;
      for (int b = 0; b < n; ++b) {
        bool v = sub(ext, phi->a, c, k * n + b);
        r = all ? (r && v) : (r || v);
      }
      break;
    }
    case TermKind::Box: {
      mark("box");
      auto G = interp_context(m, ctx);
      r = true;
      for (int p : m.base->arrows_into(c)) r = sub(ctx, phi->a, m.base->arrow(p).dom, G->restrict(p, k)) && r;
      break;
    }
    case TermKind::App: {
      // t in u:  (1_C, t_C(a)) belongs to (u_C(a))_C
      mark("member");
      auto u = interp_term(m, ctx, phi->a);
      auto t = interp_term(m, ctx, phi->b);
      int v = exp_value(u.target, c, u(c, k), c, m.base->identity(c), t(c, k));
      r = has_identity(m, c, v);
      break;
    }
    default:
      mark("atom");
      r = direct(m, ctx, phi, c, k);
  }
  if (tr) tr->verdict = r;
  return r;
}

}  // namespace detail

/// C forces phi(a) iff the identity on C lies in [[phi]]_C(a).
inline bool forces_direct(const ForcingQuery& q) {
  detail::check_query(q);
  return detail::direct(*q.model, q.ctx, syntax::desugar(q.formula), q.object, q.element);
}

/// Evaluation by the forcing clauses; only atomic subformulas are
/// interpreted.  Fills `trace` when given.
inline bool forces_clauses(const ForcingQuery& q, ForcingTrace* trace = nullptr) {
  detail::check_query(q);
  return detail::clauses(*q.model, q.ctx, syntax::desugar(q.formula), q.object, q.element, trace);
}

inline std::string trace_to_text(const ForcingTrace& t, int indent = 0) {
  std::string s(static_cast<std::size_t>(indent) * 2, ' ');
  s += (t.verdict ? "yes " : "no  ") + t.clause + ": " + t.text + "\n";
  for (auto& c : t.children) s += trace_to_text(c, indent + 1);
  return s;
}

// ---------------------------------------------------------------------------
// Subfamilies and subpresheaves

/// Delta: a subpresheaf seen as a mere family of subsets.
inline Subpresheaf delta_inclusion(const Subpresheaf& s) {
  if (!is_closed(s)) fail(Errc::NotClosedUnderRestriction, "subfamily of " + s.parent->name());
  return s;
}

/// Gamma: the largest subpresheaf contained in a family of subsets.
inline Subpresheaf gamma_interior(const Subpresheaf& a) {
  const auto& E = a.parent;
  const auto& cat = E->cat();
  auto s = empty_subfamily(E);
  for (int c = 0; c < cat.object_count(); ++c)
    for (std::size_t x = 0; x < E->size(c); ++x) {
      bool in = true;
      for (int f : cat.arrows_into(c)) in = in && a.contains(cat.arrow(f).dom, E->restrict(f, static_cast<int>(x)));
      s.members[c][x] = in;
    }
  return s;
}

inline bool subfamily_leq(const Subpresheaf& a, const Subpresheaf& b) {
  for (std::size_t c = 0; c < a.members.size(); ++c)
    for (std::size_t x = 0; x < a.members[c].size(); ++x)
      if (a.members[c][x] && !b.members[c][x]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Kripke models

/// A valuation: for each world, whether the proposition holds there.
using Valuation = std::vector<char>;

inline void require_preorder(const FiniteCategory& K) {
  if (!is_preorder(K)) fail(Errc::NotAPreorder, K.name() + " has parallel arrows");
}

/// phi |-> the global element of Omega_* whose component at k is the set of
/// arrows j -> k with j in phi.
inline NatTransform valuation_to_global(const CategoryPtr& K, const Valuation& v) {
  require_preorder(*K);
  auto S = omega_star(K);
  NatTransform g{terminal(K), S, {}};
  for (int k = 0; k < K->object_count(); ++k) {
    ArrowMask s = 0;
    for (int p : K->arrows_into(k))
      if (v.at(K->arrow(p).dom)) s |= bit_of(*K, p);
    g.components.push_back({mask_index(S, k, s)});
  }
  return g;
}

/// Inverse: the worlds k whose component contains the identity.
inline Valuation global_to_valuation(const NatTransform& g) {
  const auto& K = g.target->cat();
  require_preorder(K);
  Valuation v(K.object_count());
  for (int k = 0; k < K.object_count(); ++k) v[k] = (mask_at(g.target, k, g(k, 0)) & bit_of(K, K.identity(k))) != 0;
  return v;
}

/// Kripke evaluation of a propositional modal formula whose variables all
/// have type P.  Box at w ranges over the worlds with an arrow into w.
inline bool kripke_eval(const FiniteCategory& K, const std::map<std::string, Valuation>& V,
                        const syntax::TermPtr& phi, int w) {
  using syntax::TermKind;
  require_preorder(K);
  auto rec = [&](const syntax::TermPtr& u, int x) { return kripke_eval(K, V, u, x); };
  switch (phi->kind) {
    case TermKind::Top: return true;
    case TermKind::Bot: return false;
    case TermKind::Var: {
      auto it = V.find(phi->name);
      if (it == V.end()) fail(Errc::UnboundVariable, phi->name);
      return it->second.at(w) != 0;
    }
    case TermKind::And: return rec(phi->a, w) && rec(phi->b, w);
    case TermKind::Or: return rec(phi->a, w) || rec(phi->b, w);
    case TermKind::Imp: return !rec(phi->a, w) || rec(phi->b, w);
    case TermKind::Iff: return rec(phi->a, w) == rec(phi->b, w);
    case TermKind::Not: return !rec(phi->a, w);
    case TermKind::Box:
      for (int p : K.arrows_into(w))
        if (!rec(phi->a, K.arrow(p).dom)) return false;
      return true;
    default: fail(Errc::InvalidInput, "not a propositional modal formula: " + syntax::to_string(phi));
  }
}

}  // namespace homl

#pragma once

// Random well-typed terms for property tests.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "syntax.hpp"

namespace homl::syntax {

struct GenConfig {
  std::vector<TypePtr> domains;  // types for binders, equalities, applications
  int max_depth = 3;
  bool modal = true;             // allow box
  int max_type_size = 0;         // bound on types of detours (0: none)
};

class TermGenerator {
 public:
  TermGenerator(std::uint64_t seed, const Signature& sig, GenConfig cfg)
      : rng_(seed), sig_(sig), cfg_(std::move(cfg)) {}

  /// A term of type t in ctx.  Past depth 0 only leaves are chosen when
  /// possible; otherwise the type's constructor or a short detour is used.
  TermPtr term(Context& ctx, const TypePtr& t, int depth) {
    std::vector<std::function<TermPtr()>> options;
    for (auto& [x, ty] : ctx)
      if (type_equal(ty, t)) options.push_back([x = x] { return mk_var(x); });
    for (auto& [c, ty] : sig_.consts)
      if (type_equal(ty, t)) options.push_back([c = c] { return mk_const(c); });
    // Eliminations of variables and constants: f @ s, p1 v, p2 v.
    auto heads = ctx;
    for (auto& [n, ty] : sig_.consts) heads.push_back({n, ty});
    for (std::size_t i = 0; i < heads.size(); ++i) {
      auto ty = heads[i].second;
      auto head = i < ctx.size() ? mk_var(heads[i].first) : mk_const(heads[i].first);
      if (ty->kind == TypeKind::Exp && type_equal(ty->left, t))
        options.push_back([=, this, c = &ctx] { return mk(TermKind::App, head, term(*c, ty->right, depth - 1)); });
      if (ty->kind == TypeKind::Prod && type_equal(ty->left, t))
        options.push_back([=] { return mk(TermKind::Proj1, head); });
      if (ty->kind == TypeKind::Prod && type_equal(ty->right, t))
        options.push_back([=] { return mk(TermKind::Proj2, head); });
    }
    if (t->kind == TypeKind::Unit) options.push_back([] { return mk(TermKind::Star); });
    if (t->kind == TypeKind::Prop) {
      options.push_back([] { return mk(TermKind::Top); });
      options.push_back([] { return mk(TermKind::Bot); });
    }
    if (depth > 0) {
      compound(ctx, t, depth, options);
    } else if (options.empty()) {
      if (t->kind == TypeKind::Prod)
        return mk(TermKind::Pair, term(ctx, t->left, depth), term(ctx, t->right, depth));
      if (t->kind == TypeKind::Exp) return bind(TermKind::Lam, ctx, t->right, t->left, depth);
      if (depth < -3) fail(Errc::InvalidInput, "no term of type " + type_to_string(t));
      compound(ctx, t, depth, options);
    }
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    return options[pick(rng_)]();
  }

  std::string fresh() { return "v" + std::to_string(counter_++); }
  std::mt19937_64& rng() { return rng_; }

 private:
  TypePtr any_domain() {
    std::uniform_int_distribution<std::size_t> pick(0, cfg_.domains.size() - 1);
    return cfg_.domains[pick(rng_)];
  }
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

  TermPtr bind(TermKind k, Context& ctx, const TypePtr& dom, const TypePtr& body_type, int depth) {
    auto x = fresh();
    ctx.push_back({x, dom});
    auto body = term(ctx, body_type, depth - 1);
    ctx.pop_back();
    return mk_binder(k, x, dom, body);
  }

  void compound(Context& ctx, TypePtr t, int depth, std::vector<std::function<TermPtr()>>& options) {
    int d = depth - 1;
    Context* c = &ctx;
    auto P = prop_type();
    if (t->kind == TypeKind::Prop) {
      for (auto k : {TermKind::And, TermKind::Or, TermKind::Imp, TermKind::Iff})
        options.push_back([=, this] { return mk(k, term(*c, P, d), term(*c, P, d)); });
      options.push_back([=, this] { return mk(TermKind::Not, term(*c, P, d)); });
      if (cfg_.modal) options.push_back([=, this] { return mk(TermKind::Box, term(*c, P, d)); });
      for (auto k : {TermKind::Forall, TermKind::Exists})
        options.push_back([=, this] { return bind(k, *c, any_domain(), P, depth); });
      options.push_back([=, this] {
        auto a = any_domain();
        auto l = term(*c, a, d);
        auto r = term(*c, a, d);
        return mk_eq(l, r, coin() ? a : nullptr);
      });
      options.push_back([=, this] {
        auto a = any_domain();
        if (!fits(exp_type(P, a))) return mk_eq(term(*c, a, d), term(*c, a, d));
        auto x = term(*c, a, d);
        return mk(TermKind::Member, x, term(*c, exp_type(P, a), d));
      });
    }
    if (t->kind == TypeKind::Prod)
      options.push_back([=, this] { return mk(TermKind::Pair, term(*c, t->left, d), term(*c, t->right, d)); });
    if (t->kind == TypeKind::Exp) {
      options.push_back([=, this] { return bind(TermKind::Lam, *c, t->right, t->left, depth); });
      if (t->left->kind == TypeKind::Prop)
        options.push_back([=, this] { return bind(TermKind::Comp, *c, t->right, P, depth); });
    }
    std::vector<TypePtr> fn, pr;
    for (auto& a : cfg_.domains) {
      if (fits(exp_type(t, a))) fn.push_back(a);
      if (fits(prod_type(t, a))) pr.push_back(a);
    }
    if (!fn.empty())
      options.push_back([=, this] {
        auto a = fn[std::uniform_int_distribution<std::size_t>(0, fn.size() - 1)(rng_)];
        auto f = term(*c, exp_type(t, a), d);
        return mk(TermKind::App, f, term(*c, a, d));
      });
    if (!pr.empty())
      options.push_back([=, this] {
        auto a = pr[std::uniform_int_distribution<std::size_t>(0, pr.size() - 1)(rng_)];
        return coin() ? mk(TermKind::Proj1, term(*c, prod_type(t, a), d))
                      : mk(TermKind::Proj2, term(*c, prod_type(a, t), d));
      });
  }

  bool fits(const TypePtr& t) const { return cfg_.max_type_size <= 0 || type_size(t) <= cfg_.max_type_size; }

  std::mt19937_64 rng_;
  const Signature& sig_;
  GenConfig cfg_;
  int counter_ = 0;
};

}  // namespace homl::syntax

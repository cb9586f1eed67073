#include <catch_amalgamated.hpp>

#include <homl/gen.hpp>
#include <homl/semantics.hpp>

#include <set>

#include "fixtures.hpp"

using namespace homl;
using namespace homl::syntax;

namespace {

ModelPtr load(const std::string& file) { return load_model_file(std::string(HOML_MODELS_DIR) + "/" + file).model(); }

Theory theory(const std::string& file) {
  auto path = std::string(HOML_MODELS_DIR) + "/" + file;
  return parse_theory(text::read_file(path), path);
}

Sequent seq(const Model& m, const std::string& s) {
  auto sig = m.signature();
  return parse_sequent(s, &sig);
}

TermPtr term(const Model& m, const std::string& s, const Context& ctx) {
  auto sig = m.signature();
  return parse_term(s, &sig, ctx);
}

int value_at(const Model& m, const Context& ctx, const std::string& t, const std::string& obj,
             const std::vector<std::string>& binding) {
  auto a = interp_term(m, ctx, term(m, t, ctx));
  int c = m.base->object_index(obj);
  std::vector<int> vals;
  for (std::size_t i = 0; i < ctx.size(); ++i)
    vals.push_back(resolve_element(m, interp_type(m, ctx[i].second), c, binding[i]));
  return a(c, context_index(m, ctx, c, vals));
}

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidInput;
}

// Reference interpretation built only from the categorical combinators:
// projections, pairing, transpose, evaluation, the materialized structure
// maps of the frame, the quantifier maps on H^A and i . delta.
NatTransform reference(const Model& m, const Context& ctx, const TermPtr& t) {
  const auto& H = m.frame();
  auto G = interp_context(m, ctx);
  auto rec = [&](const TermPtr& u) { return reference(m, ctx, u); };
  auto ext = [&] {
    auto c = ctx;
    c.push_back({t->name, t->type});
    return reference(m, c, t->a);
  };
  auto binop = [&](FrameOp op) { return compose_nat(frame_op_map(H, op), pair(rec(t->a), rec(t->b))); };
  switch (t->kind) {
    case TermKind::Star: return terminal_map(G);
    case TermKind::Top: return constant_map(G, frame_top_map(H));
    case TermKind::Bot: return constant_map(G, frame_bot_map(H));
    case TermKind::Var: {
      std::size_t j = ctx.size();
      while (ctx[--j].first != t->name) {
      }
      auto P = G;
      NatTransform r = identity_nat(P);
      for (std::size_t i = ctx.size(); i-- > j + 1;) {
        r = compose_nat(proj1(P), r);
        P = product_info(P).left;
      }
      return compose_nat(proj2(P), r);
    }
    case TermKind::Const: return constant_map(G, m.constants.at(t->name));
    case TermKind::Pair: return pair(rec(t->a), rec(t->b));
    case TermKind::Proj1: {
      auto a = rec(t->a);
      return compose_nat(proj1(a.target), a);
    }
    case TermKind::Proj2: {
      auto a = rec(t->a);
      return compose_nat(proj2(a.target), a);
    }
    case TermKind::Lam: return transpose(ext());
    case TermKind::App: {
      auto f = rec(t->a);
      auto& e = exponential_info(f.target);
      return compose_nat(eval_map(e.dom, e.cod), pair(f, rec(t->b)));
    }
    case TermKind::And: return binop(FrameOp::Meet);
    case TermKind::Or: return binop(FrameOp::Join);
    case TermKind::Imp: return binop(FrameOp::Imp);
    case TermKind::Forall:
    case TermKind::Exists: {
      auto A = interp_type(m, t->type);
      auto q = t->kind == TermKind::Forall ? forall_map(H, A) : exists_map(H, A);
      return compose_nat(q, transpose(ext()));
    }
    case TermKind::Eq: {
      auto a = rec(t->a), b = rec(t->b);
      return compose_nat(m.maps.initial, compose_nat(delta(a.target), pair(a, b)));
    }
    case TermKind::Box: return compose_nat(m.maps.box, rec(t->a));
    default: FAIL("sugar reached the reference interpreter");
  }
  return {};
}

struct Corpus {
  Context ctx;
  std::vector<std::pair<TermPtr, TypePtr>> terms;
};

Corpus corpus(const Model& m, std::uint64_t seed, int count) {
  auto sig = m.signature();
  auto Gt = base_type(m.types.front().first);
  GenConfig cfg;
  cfg.domains = {Gt, prop_type(), exp_type(Gt, Gt), prod_type(Gt, prop_type()), unit_type()};
  cfg.max_depth = 3;
  cfg.max_type_size = 3;
  TermGenerator gen(seed, sig, cfg);
  Corpus c;
  c.ctx = {{"x", Gt}, {"p", prop_type()}, {"f", exp_type(Gt, Gt)}};
  std::uniform_int_distribution<std::size_t> pick(0, cfg.domains.size() - 1);
  for (int n = 0; n < count; ++n) {
    auto ty = n % 2 ? prop_type() : cfg.domains[pick(gen.rng())];
    c.terms.push_back({gen.term(c.ctx, ty, cfg.max_depth), ty});
  }
  return c;
}

}  // namespace

TEST_CASE("interp_type") {
  auto m = load("loopgraph.model");
  REQUIRE(interp_type(*m, unit_type()) == terminal(m->base));
  REQUIRE(interp_type(*m, prop_type()) == m->frame().carrier());
  REQUIRE(interp_type(*m, prop_type())->as_sieves()->star);
  auto GG = interp_type(*m, parse_type("G^G"));
  REQUIRE(GG->size(m->base->object_index("D")) == 2);
  REQUIRE(GG == exponential(m->base_type("G"), m->base_type("G")));
  REQUIRE(interp_type(*m, parse_type("G*P")) == product(m->base_type("G"), m->frame().carrier()));
  REQUIRE(error_of([&] { interp_type(*m, parse_type("K")); }) == Errc::UndeclaredBaseType);
}

TEST_CASE("model files") {
  auto m = load("loopgraph.model");
  REQUIRE(m->name == "loopgraph");
  REQUIRE(m->frame().kind() == FrameKind::OmegaStar);
  int D = m->base->object_index("D");
  auto GG = interp_type(*m, parse_type("G^G"));
  int eta = resolve_element(*m, GG, D, "eta"), mu = resolve_element(*m, GG, D, "mu");
  REQUIRE(eta != mu);
  // eta fixes the vertex w, mu sends it to v
  REQUIRE(GG->element_name(D, eta).find("(g,w)>w") != std::string::npos);
  REQUIRE(GG->element_name(D, mu).find("(g,w)>v") != std::string::npos);
  REQUIRE(show_element(*m, GG, D, eta) == "eta");
  REQUIRE(show_element(*m, m->frame().carrier(), D, m->frame().top(D)) == "{1_D,g} (11)");

  // the constant a is the global element (u, v)
  auto a = interp_term(*m, {}, term(*m, "a", {}));
  REQUIRE(m->base_type("G")->element_name(D, a(D, 0)) == "u");

  REQUIRE(error_of([] { load("unfaithful.model"); }) == Errc::FaithfulnessFailure);
  auto loose = load_model_file(std::string(HOML_MODELS_DIR) + "/unfaithful.model", true).model();
  REQUIRE(faithfulness_violation(loose->maps));
  REQUIRE(error_of([] { load("broken_naturality.model"); }) == Errc::NonNaturalStructureMap);

  auto base = std::string(HOML_MODELS_DIR) + "/arrow.base";
  auto src = text::read_file(base);
  auto bad_const = src + "model m over arrow\nframe omega\ntype G = G\nconst c : G = u@D w@C\nend\n";
  REQUIRE(error_of([&] { models_from_text(bad_const, "m.model"); }) == Errc::NotFunctorial);
  auto no_frame = src + "model m over arrow\ntype G = G\nend\n";
  REQUIRE(error_of([&] { models_from_text(no_frame, "m.model"); }) == Errc::ParseError);
  auto bad_line = src + "model m over arrow\nframe omega\ntype G = H\nend\n";
  try {
    models_from_text(bad_line, "m.model");
    FAIL("accepted");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::ParseError);
    REQUIRE(e.detail().find("m.model:15:") != std::string::npos);
  }
}

TEST_CASE("equality of a variable with itself is top") {
  for (auto file : {"loopgraph.model", "loopgraph_omega.model", "constdomain.model"}) {
    auto m = load(file);
    for (auto ty : {"G", "P", "G^G", "G*P", "1", "P^G"}) {
      Context ctx{{"x", parse_type(ty)}};
      auto e = interp_term(*m, ctx, term(*m, std::string("x =_(") + ty + ") x", ctx));
      for (int c = 0; c < m->base->object_count(); ++c)
        for (int v : e.components[c]) REQUIRE(v == m->frame().top(c));
    }
  }
}

TEST_CASE("loop-graph values") {
  auto m = load("loopgraph.model");
  Context ctx{{"f", parse_type("G^G")}, {"g", parse_type("G^G")}};
  const auto& H = m->frame();
  int D = m->base->object_index("D");
  REQUIRE(H.element_name(D, value_at(*m, ctx, "f = g", "D", {"eta", "mu"})) == "{}");
  REQUIRE(H.element_name(D, value_at(*m, ctx, "forall y:G. f@y = g@y", "D", {"eta", "mu"})) == "{1_D}");
  REQUIRE(H.element_name(D, value_at(*m, ctx, "box (forall y:G. f@y = g@y)", "D", {"eta", "mu"})) == "{}");
  REQUIRE(H.element_name(D, value_at(*m, ctx, "f = g", "D", {"eta", "eta"})) == "{1_D,g}");

  // Over Omega the same quantified equation has value {} at (eta, mu).
  auto mo = load("loopgraph_omega.model");
  REQUIRE(mo->frame().element_name(D, value_at(*mo, ctx, "forall y:G. f@y = g@y", "D", {"eta", "mu"})) == "{}");
}

TEST_CASE("holds") {
  for (auto file : {"loopgraph.model", "loopgraph_omega.model", "chain3.model", "constdomain.model", "powerset.model"}) {
    auto m = load(file);
    REQUIRE(holds(*m, seq(*m, "p:P | box p |- p")).holds);
    REQUIRE(holds(*m, seq(*m, "p:P | box p |- box box p")).holds);
    REQUIRE(holds(*m, seq(*m, "top |- box top")).holds);
  }
  auto m = load("loopgraph.model");
  REQUIRE(holds(*m, seq(*m, "f:G^G, g:G^G | box (forall y:G. f@y = g@y) |- f = g")).holds);

  auto plain = seq(*m, "f:G^G, g:G^G | forall y:G. f@y = g@y |- f = g");
  auto v = holds(*m, plain);
  REQUIRE(!v.holds);
  int D = m->base->object_index("D");
  auto GG = interp_type(*m, parse_type("G^G"));
  int eta = resolve_element(*m, GG, D, "eta"), mu = resolve_element(*m, GG, D, "mu");
  std::set<std::vector<int>> got;
  for (auto& w : v.witnesses) {
    REQUIRE(w.object == D);
    got.insert(context_values(*m, plain.ctx, D, w.element));
    REQUIRE(m->frame().element_name(D, w.lhs) == "{1_D}");
    REQUIRE(m->frame().element_name(D, w.rhs) == "{}");
  }
  REQUIRE(got == std::set<std::vector<int>>{{eta, mu}, {mu, eta}});
  REQUIRE(describe_witness(*m, plain, v.witnesses[0]).find("D (f=") == 0);

  // the parallel scan reports the same witnesses
  auto par = holds(*m, plain, 4);
  REQUIRE(par.witnesses.size() == v.witnesses.size());
  for (std::size_t i = 0; i < v.witnesses.size(); ++i) REQUIRE(par.witnesses[i].element == v.witnesses[i].element);

  REQUIRE(holds(*load("constdomain.model"), seq(*m, "f:G^G, g:G^G | forall y:G. f@y = g@y |- f = g")).holds);
}

TEST_CASE("check_theory") {
  auto m = load("loopgraph.model");
  auto empty = check_theory(*m, theory("empty.homl"));
  REQUIRE(empty.passed);
  REQUIRE(empty.axioms.empty());
  auto modal = check_theory(*m, theory("modal_ext.homl"));
  REQUIRE(modal.passed);
  REQUIRE(modal.axioms.size() == 7);
  auto plain = check_theory(*m, theory("plain_funext.homl"));
  REQUIRE(!plain.passed);
  REQUIRE(!plain.axioms[0].verdict.witnesses.empty());
  REQUIRE(error_of([] { check_theory(*load("chain3.model"), theory("plain_funext.homl")); }) ==
          Errc::UndeclaredSymbol);
  Theory extra;
  extra.types = {"G"};
  extra.consts = {{"b", base_type("G")}};
  REQUIRE(error_of([&] { check_theory(*m, extra); }) == Errc::UndeclaredSymbol);
}

TEST_CASE("interpretation agrees with the combinator reference on random terms") {
  for (auto file : {"loopgraph.model", "loopgraph_omega.model", "constdomain.model"}) {
    auto m = load(file);
    auto c = corpus(*m, 7001, 150);
    for (auto& [t, ty] : c.terms) {
      auto got = interp_term(*m, c.ctx, t);
      REQUIRE(got.source == interp_context(*m, c.ctx));
      REQUIRE(got.target == interp_type(*m, ty));
      REQUIRE(is_natural(got));
      auto want = reference(*m, c.ctx, desugar(t));
      INFO(to_string(t));
      REQUIRE(got.components == want.components);
    }
  }
}

TEST_CASE("substitution lemma") {
  auto m = load("loopgraph.model");
  auto c = corpus(*m, 7002, 120);
  auto sig = m->signature();
  GenConfig cfg;
  auto Gt = base_type("G");
  cfg.domains = {Gt, prop_type(), exp_type(Gt, Gt)};
  cfg.max_type_size = 3;
  TermGenerator gen(7003, sig, cfg);
  auto G = interp_context(*m, c.ctx);
  for (auto& [phi, ty] : c.terms) {
    for (auto& [x, xt] : c.ctx) {
      if (!free_vars(phi).count(x)) continue;
      // phi as a term in ctx, x:A with x moved to the end
      Context moved;
      for (auto& b : c.ctx)
        if (b.first != x) moved.push_back(b);
      moved.push_back({x, xt});
      auto s = gen.term(c.ctx, xt, 2);
      auto lhs = interp_term(*m, c.ctx, substitute(phi, x, s));
      // [[phi]] . <projections, [[s]]>
      auto Gm = interp_context(*m, moved);
      NatTransform reorder{G, Gm, {}};
      auto sv = interp_term(*m, c.ctx, s);
      for (int o = 0; o < m->base->object_count(); ++o) {
        reorder.components.emplace_back(G->size(o));
        for (std::size_t k = 0; k < G->size(o); ++k) {
          auto vals = context_values(*m, c.ctx, o, static_cast<int>(k));
          std::vector<int> mv;
          for (std::size_t i = 0; i < c.ctx.size(); ++i)
            if (c.ctx[i].first != x) mv.push_back(vals[i]);
          mv.push_back(sv(o, static_cast<int>(k)));
          reorder.components[o][k] = context_index(*m, moved, o, mv);
        }
      }
      REQUIRE(is_natural(reorder));
      auto rhs = compose_nat(interp_term(*m, moved, phi), reorder);
      INFO(to_string(phi) << " with " << x << " := " << to_string(s));
      REQUIRE(lhs.components == rhs.components);
    }
  }
}

TEST_CASE("beta and eta") {
  for (auto file : {"loopgraph.model", "constdomain.model"}) {
    auto m = load(file);
    auto sig = m->signature();
    auto Gt = base_type("G");
    GenConfig cfg;
    cfg.domains = {Gt, prop_type(), exp_type(Gt, Gt)};
    cfg.max_type_size = 3;
    TermGenerator gen(7004, sig, cfg);
    Context ctx{{"x", Gt}, {"p", prop_type()}, {"f", exp_type(Gt, Gt)}};
    for (int n = 0; n < 80; ++n) {
      auto A = cfg.domains[n % 3];
      auto B = cfg.domains[(n / 3) % 3];
      auto y = gen.fresh();
      auto inner = ctx;
      inner.push_back({y, A});
      auto body = gen.term(inner, B, 2);
      auto s = gen.term(ctx, A, 2);
      auto redex = mk(TermKind::App, mk_binder(TermKind::Lam, y, A, body), s);
      REQUIRE(interp_term(*m, ctx, redex).components == interp_term(*m, ctx, substitute(body, y, s)).components);
      REQUIRE(interp_term(*m, ctx, beta_root(redex)).components == interp_term(*m, ctx, redex).components);

      if (type_size(exp_type(B, A)) > 3) continue;
      auto w = gen.term(ctx, exp_type(B, A), 2);
      auto z = fresh_name("z", free_vars(w));
      auto expanded = mk_binder(TermKind::Lam, z, A, mk(TermKind::App, w, mk_var(z)));
      REQUIRE(interp_term(*m, ctx, expanded).components == interp_term(*m, ctx, w).components);
    }
  }
}

TEST_CASE("box is monotone on all maps into the frame") {
  for (auto file : {"loopgraph.model", "loopgraph_omega.model", "chain3.model"}) {
    auto m = load(file);
    const auto& H = m->frame();
    auto D = m->types.front().second;
    auto maps = enumerate_nats(D, H.carrier());
    REQUIRE(!maps.empty());
    for (auto& phi : maps)
      for (auto& psi : maps) {
        bool below = true;
        for (int c = 0; c < m->base->object_count() && below; ++c)
          for (std::size_t k = 0; k < D->size(c); ++k)
            below = below && H.leq(c, phi.components[c][k], psi.components[c][k]);
        if (!below) continue;
        auto bphi = compose_nat(m->maps.box, phi), bpsi = compose_nat(m->maps.box, psi);
        for (int c = 0; c < m->base->object_count(); ++c)
          for (std::size_t k = 0; k < D->size(c); ++k) REQUIRE(H.leq(c, bphi.components[c][k], bpsi.components[c][k]));
      }
  }
}

TEST_CASE("memo is keyed up to renaming of bound variables") {
  auto m = load("loopgraph.model");
  clear_memo(*m);
  Context ctx{{"f", parse_type("G^G")}};
  auto a = interp_term(*m, ctx, term(*m, "forall y:G. f@y = y", ctx));
  auto size = m->memo->table.size();
  auto b = interp_term(*m, ctx, term(*m, "forall z:G. f@z = z", ctx));
  REQUIRE(m->memo->table.size() == size);
  REQUIRE(a.components == b.components);
}

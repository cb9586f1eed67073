#include <catch_amalgamated.hpp>

#include <homl/forcing.hpp>
#include <homl/gen.hpp>

#include "fixtures.hpp"

using namespace homl;
using namespace homl::syntax;

namespace {

ModelPtr load(const std::string& file) { return load_model_file(std::string(HOML_MODELS_DIR) + "/" + file).model(); }

ForcingQuery query(const ModelPtr& m, const Context& ctx, const std::string& phi, const std::string& obj,
                   const std::vector<std::string>& binding) {
  auto sig = m->signature();
  ForcingQuery q{m.get(), ctx, parse_term(phi, &sig, ctx), m->base->object_index(obj), 0};
  std::vector<int> vals;
  for (std::size_t i = 0; i < ctx.size(); ++i)
    vals.push_back(resolve_element(*m, interp_type(*m, ctx[i].second), q.object, binding[i]));
  q.element = context_index(*m, ctx, q.object, vals);
  return q;
}

std::vector<Subpresheaf> all_subfamilies(const PresheafPtr& F) {
  std::vector<std::pair<int, int>> elems;
  for (int c = 0; c < F->cat().object_count(); ++c)
    for (std::size_t x = 0; x < F->size(c); ++x) elems.push_back({c, static_cast<int>(x)});
  std::vector<Subpresheaf> out;
  for (std::uint64_t bits = 0; bits < (1ull << elems.size()); ++bits) {
    auto s = empty_subfamily(F);
    for (std::size_t i = 0; i < elems.size(); ++i)
      if (bits >> i & 1) s.members[elems[i].first][elems[i].second] = 1;
    out.push_back(s);
  }
  return out;
}

int count(const Subpresheaf& s) {
  int n = 0;
  for (auto& row : s.members)
    for (char x : row) n += x;
  return n;
}

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidInput;
}

}  // namespace

TEST_CASE("forces_direct examples") {
  auto m = load("loopgraph.model");
  for (auto obj : {"C", "D"}) {
    REQUIRE(forces_direct(query(m, {}, "top", obj, {})));
    REQUIRE(!forces_direct(query(m, {}, "bot", obj, {})));
  }
  Context ctx{{"f", parse_type("G^G")}, {"g", parse_type("G^G")}};
  REQUIRE(!forces_direct(query(m, ctx, "f = g", "D", {"eta", "mu"})));
  REQUIRE(forces_direct(query(m, ctx, "forall y:G. f@y = g@y", "D", {"eta", "mu"})));
  REQUIRE(!forces_direct(query(m, ctx, "box (forall y:G. f@y = g@y)", "D", {"eta", "mu"})));
  REQUIRE(forces_direct(query(m, ctx, "f = g", "D", {"eta", "eta"})));

  auto mo = load("loopgraph_omega.model");
  REQUIRE(error_of([&] { forces_direct(query(mo, {}, "top", "D", {})); }) == Errc::NonGeometricFrame);
  REQUIRE(error_of([&] { forces_clauses(query(mo, {}, "top", "D", {})); }) == Errc::NonGeometricFrame);
}

TEST_CASE("forces_clauses examples") {
  auto m = load("loopgraph.model");
  Context ctx{{"f", parse_type("G^G")}, {"g", parse_type("G^G")}};
  REQUIRE(forces_clauses(query(m, ctx, "forall y:G. f@y = g@y", "D", {"eta", "mu"})));
  REQUIRE(!forces_clauses(query(m, ctx, "box (forall y:G. f@y = g@y)", "D", {"eta", "mu"})));

  // box at D looks at D itself and at C along g, where eta and mu differ on w
  ForcingTrace tr;
  REQUIRE(!forces_clauses(query(m, ctx, "box (forall y:G. f@y = g@y)", "D", {"eta", "mu"}), &tr));
  REQUIRE(tr.clause == "box");
  REQUIRE(tr.children.size() == 2);
  // children follow arrows_into(D): 1_D, then g
  REQUIRE(tr.children[0].text.rfind("D |= ", 0) == 0);
  REQUIRE(tr.children[0].verdict);
  REQUIRE(tr.children[1].text.rfind("C |= ", 0) == 0);
  REQUIRE(!tr.children[1].verdict);
  REQUIRE(tr.children[1].children.size() == 2);  // the two vertices at C
  auto text = trace_to_text(tr);
  REQUIRE(text.find("no  box: D |= ") == 0);
  REQUIRE(text.find("  no  forall: C |= ") != std::string::npos);

  // or: a classical excluded middle
  Context p{{"p", prop_type()}};
  for (auto v : {"{}", "{g}", "{1_D}", "{1_D,g}"})
    REQUIRE(forces_clauses(query(m, p, "p \\/ ~p", "D", {v})));
  REQUIRE(forces_clauses(query(m, p, "p", "D", {"{1_D}"})));
  REQUIRE(!forces_clauses(query(m, p, "p", "D", {"{g}"})));

  // forall at C ranges over G(C) only
  REQUIRE(forces_clauses(query(m, {}, "exists y:G. forall z:G. ~(y = z) \\/ z = y", "C", {})));
  REQUIRE(!forces_clauses(query(m, {}, "forall y:G. forall z:G. y = z", "C", {})));
  REQUIRE(forces_clauses(query(m, {}, "forall y:G. forall z:G. y = z", "D", {})));

  // membership reads the exponential table at the identity
  Context x{{"x", parse_type("G")}};
  ForcingTrace mt;
  REQUIRE(forces_clauses(query(m, x, "x in {y:G | y = x}", "D", {"u"}), &mt));
  REQUIRE(mt.clause == "member");
  REQUIRE(!forces_clauses(query(m, x, "x in {y:G | bot}", "C", {"v"})));
  REQUIRE(!forces_clauses(query(m, x, "x in {y:G | box (y = x) /\\ ~(y = x)}", "C", {"w"})));
}

TEST_CASE("forcing clauses agree with the direct definition") {
  for (auto file : {"loopgraph.model", "chain3.model", "constdomain.model"}) {
    auto m = load(file);
    auto sig = m->signature();
    auto A = base_type(m->types.front().first);
    GenConfig cfg;
    cfg.domains = {A, prop_type(), exp_type(prop_type(), A)};
    cfg.max_depth = 3;
    cfg.max_type_size = 3;
    TermGenerator gen(9100, sig, cfg);
    Context ctx{{"x", A}, {"p", prop_type()}, {"s", exp_type(prop_type(), A)}};
    auto G = interp_context(*m, ctx);
    for (int n = 0; n < 150; ++n) {
      auto phi = gen.term(ctx, prop_type(), 3);
      for (int c = 0; c < m->base->object_count(); ++c)
        for (std::size_t k = 0; k < G->size(c); ++k) {
          ForcingQuery q{m.get(), ctx, phi, c, static_cast<int>(k)};
          INFO(to_string(phi) << " at " << m->base->object_name(c));
          REQUIRE(forces_direct(q) == forces_clauses(q));
        }
    }
  }
}

TEST_CASE("forced boxes persist along restriction") {
  for (auto file : {"loopgraph.model", "chain3.model"}) {
    auto m = load(file);
    auto sig = m->signature();
    auto A = base_type(m->types.front().first);
    GenConfig cfg;
    cfg.domains = {A, prop_type()};
    cfg.max_type_size = 3;
    TermGenerator gen(9200, sig, cfg);
    Context ctx{{"x", A}, {"p", prop_type()}};
    auto G = interp_context(*m, ctx);
    for (int n = 0; n < 60; ++n) {
      auto phi = mk(TermKind::Box, gen.term(ctx, prop_type(), 2));
      for (int c = 0; c < m->base->object_count(); ++c)
        for (std::size_t k = 0; k < G->size(c); ++k) {
          if (!forces_direct({m.get(), ctx, phi, c, static_cast<int>(k)})) continue;
          for (int p : m->base->arrows_into(c))
            REQUIRE(forces_direct({m.get(), ctx, phi, m->base->arrow(p).dom, G->restrict(p, static_cast<int>(k))}));
        }
    }
  }
}

TEST_CASE("box reads as the interior of the forced set") {
  for (auto& [base, M] : {std::pair{fx::two_object(), fx::loop_graph()}, std::pair{fx::chain3(), fx::chain3_domain()}}) {
    auto m = make_model("m", frame_omega_star(base), {{"M", M}});
    auto S = m->frame().carrier();
    auto has_id = [&](int c, int v) { return (mask_at(S, c, v) & bit_of(*base, base->identity(c))) != 0; };
    for (auto& phi : enumerate_nats(M, S)) {
      auto box = compose_nat(m->maps.box, phi);
      for (int c = 0; c < base->object_count(); ++c)
        for (std::size_t a = 0; a < M->size(c); ++a) {
          bool all = true;
          for (int p : base->arrows_into(c)) {
            int d = base->arrow(p).dom;
            all = all && has_id(d, phi(d, M->restrict(p, static_cast<int>(a))));
          }
          REQUIRE(has_id(c, box(c, static_cast<int>(a))) == all);
        }
    }
  }
}

TEST_CASE("gamma_interior") {
  auto G = fx::loop_graph();
  int C = G->cat().object_index("C"), D = G->cat().object_index("D");
  auto full = full_subfamily(G);
  REQUIRE(gamma_interior(full) == full);
  REQUIRE(gamma_interior(empty_subfamily(G)) == empty_subfamily(G));

  auto a = empty_subfamily(G);
  a.members[D][G->index_of(D, "u")] = 1;
  a.members[C][G->index_of(C, "w")] = 1;
  auto want = empty_subfamily(G);
  want.members[C][G->index_of(C, "w")] = 1;
  REQUIRE(gamma_interior(a) == want);

  for (auto& F : {G, fx::chain3_domain(), fx::constant_domain(2)}) {
    auto fams = all_subfamilies(F);
    std::vector<Subpresheaf> subs;
    for (auto& s : fams)
      if (is_closed(s)) subs.push_back(s);
    for (auto& A : fams) {
      // oracle: the largest subpresheaf below A
      const Subpresheaf* best = nullptr;
      for (auto& s : subs)
        if (subfamily_leq(s, A) && (!best || count(s) > count(*best))) best = &s;
      auto got = gamma_interior(A);
      REQUIRE(got == *best);
      REQUIRE(is_closed(got));
      for (auto& s : subs) REQUIRE(subfamily_leq(delta_inclusion(s), A) == subfamily_leq(s, got));
    }
  }
  auto not_closed = empty_subfamily(G);
  not_closed.members[D][0] = 1;
  REQUIRE(error_of([&] { delta_inclusion(not_closed); }) == Errc::NotClosedUnderRestriction);
}

TEST_CASE("Kripke bridge") {
  // two worlds 0 <= 1
  auto K2 = from_preorder({"0", "1"}, {{"0", "0"}, {"1", "1"}, {"0", "1"}}, false, "two");
  for (auto& K : {K2, fx::chain3(), fx::square(), fx::terminal()}) {
    int n = K->object_count();
    auto S = omega_star(K);
    auto globals = enumerate_nats(terminal(K), S);
    REQUIRE(globals.size() == (std::size_t(1) << n));
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      Valuation v(n);
      for (int k = 0; k < n; ++k) v[k] = bits >> k & 1;
      auto g = valuation_to_global(K, v);
      REQUIRE(is_natural(g));
      REQUIRE(global_to_valuation(g) == v);
    }
    for (auto& g : globals) REQUIRE(nat_equal(valuation_to_global(K, global_to_valuation(g)), g));

    auto H = frame_omega_star(K);
    auto top = valuation_to_global(K, Valuation(n, 1));
    auto bot = valuation_to_global(K, Valuation(n, 0));
    REQUIRE(nat_equal(top, frame_top_map(*H)));
    REQUIRE(nat_equal(bot, frame_bot_map(*H)));
  }

  // phi only at the upper world: box phi fails at the lower one either way
  auto m = make_model("two", frame_omega_star(K2), {});
  Context ctx{{"p", prop_type()}};
  auto phi = parse_term("box p", nullptr, ctx);
  std::map<std::string, Valuation> V{{"p", {0, 1}}};
  int w0 = K2->object_index("0");
  REQUIRE(!kripke_eval(*K2, V, phi, w0));
  auto g = valuation_to_global(K2, V["p"]);
  REQUIRE(!forces_direct({m.get(), ctx, phi, w0, g(w0, 0)}));

  REQUIRE(error_of([] {
            CategoryDescription d;
            d.name = "parallel";
            d.objects = {"A", "B"};
            d.arrows = {{"f", "A", "B"}, {"h", "A", "B"}};
            valuation_to_global(validate_category(d), {1, 1});
          }) == Errc::NotAPreorder);
}

TEST_CASE("Kripke evaluation agrees with forcing on propositional formulas") {
  auto K2 = from_preorder({"0", "1"}, {{"0", "0"}, {"1", "1"}, {"0", "1"}}, false, "two");
  Signature sig;
  GenConfig cfg;
  cfg.domains = {prop_type()};
  cfg.max_type_size = 1;
  Context ctx{{"p", prop_type()}, {"q", prop_type()}};
  for (auto& K : {K2, fx::chain3(), fx::square()}) {
    auto m = make_model(K->name(), frame_omega_star(K), {});
    TermGenerator gen(9300, sig, cfg);
    int n = K->object_count();
    std::vector<TermPtr> formulas;
    while (formulas.size() < 60) {
      auto t = gen.term(ctx, prop_type(), 3);
      // keep the propositional fragment
      std::function<bool(const TermPtr&)> prop = [&](const TermPtr& u) {
        if (!u) return true;
        switch (u->kind) {
          case TermKind::Forall:
          case TermKind::Exists:
          case TermKind::Eq:
          case TermKind::Member:
          case TermKind::App:
          case TermKind::Proj1:
          case TermKind::Proj2:
          case TermKind::Pair:
          case TermKind::Lam:
          case TermKind::Comp: return false;
          default: return prop(u->a) && prop(u->b);
        }
      };
      if (prop(t)) formulas.push_back(t);
    }
    for (std::uint32_t bp = 0; bp < (1u << n); ++bp)
      for (std::uint32_t bq = 0; bq < (1u << n); ++bq) {
        std::map<std::string, Valuation> V{{"p", Valuation(n)}, {"q", Valuation(n)}};
        for (int k = 0; k < n; ++k) {
          V["p"][k] = bp >> k & 1;
          V["q"][k] = bq >> k & 1;
        }
        auto gp = valuation_to_global(K, V["p"]), gq = valuation_to_global(K, V["q"]);
        for (auto& phi : formulas)
          for (int w = 0; w < n; ++w) {
            int k = context_index(*m, ctx, w, {gp(w, 0), gq(w, 0)});
            INFO(to_string(phi));
            REQUIRE(kripke_eval(*K, V, phi, w) == forces_direct({m.get(), ctx, phi, w, k}));
          }
      }
  }
}

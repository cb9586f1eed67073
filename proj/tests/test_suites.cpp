#include <catch_amalgamated.hpp>

#include <homl/suites.hpp>

#include "fixtures.hpp"

using namespace homl;
using namespace homl::syntax;

namespace {

const CheckItem& item(const CheckReport& r, const std::string& n) {
  auto* it = r.item(n);
  if (!it) FAIL("missing item " << n << " in " << r.name);
  return *it;
}

void require_witnessed_failures(const CheckReport& r) {
  for (auto& it : r.items)
    if (!it.held && it.expect != Expect::Report) {
      INFO(r.name << ": " << it.name);
      CHECK(it.witness.has_value());
    }
}

// U => V as the union of every W with W /\ U <= V.
std::uint64_t implication_oracle(int n, std::uint64_t u, std::uint64_t v) {
  std::uint64_t out = 0;
  for (std::uint64_t w = 0; w < (1ull << n); ++w)
    if ((w & u & ~v) == 0) out |= w;
  return out;
}

}  // namespace

TEST_CASE("implication on a powerset frame matches the union formula", "[propext]") {
  for (int n = 2; n <= 4; ++n) {
    auto m = powerset_model(n);
    const auto& H = m->frame();
    for (int x = 0; x < H.size(0); ++x)
      for (int y = 0; y < H.size(0); ++y)
        CHECK(mask_at(H.carrier(), 0, H.imp(0, x, y)) ==
              implication_oracle(n, mask_at(H.carrier(), 0, x), mask_at(H.carrier(), 0, y)));
  }
}

TEST_CASE("propext counterexample at U = {0}, V = {1}", "[propext]") {
  REQUIRE(implication_oracle(2, 1, 2) == 2);  // frozen: {1}
  auto r = prop_ext_counterexample(2);
  CHECK(r.passed);
  auto& a = item(r, "implication equals i . delta . <p1, meet>");
  CHECK_FALSE(a.held);
  REQUIRE(a.witness);
  CHECK(a.witness->elements == "U={0}, V={1}");
  CHECK(a.witness->lhs == "{1}");
  CHECK(a.witness->rhs == "{}");
  CHECK(item(r, "tau . implication equals delta . <p1, meet>").held);
  CHECK(item(r, "tau(U => V) is bottom when U is not below V").held);
  CHECK(item(r, "box(p <=> q) |- p = q").held);
  CHECK_FALSE(item(r, "p <=> q |- p = q").held);
  require_witnessed_failures(r);
}

TEST_CASE("propext diagonal pairs give X on both sides", "[propext]") {
  auto m = powerset_model(2);
  const auto& H = m->frame();
  auto lower = compose_nat(m->maps.initial,
                           compose_nat(delta(H.carrier()), pair(proj1(product(H.carrier(), H.carrier())),
                                                                frame_op_map(H, FrameOp::Meet))));
  int N = H.size(0);
  for (int u = 0; u < N; ++u) {
    CHECK(H.imp(0, u, u) == H.top(0));
    CHECK(lower(0, u * N + u) == H.top(0));
  }
}

TEST_CASE("propext counterexample for n = 2..5", "[propext]") {
  for (int n = 2; n <= 5; ++n) {
    auto r = prop_ext_counterexample(n);
    INFO(report_to_text(r));
    CHECK(r.passed);
    CHECK(item(r, "tau(U => V) is bottom when U is not below V").instances > 0);
  }
}

TEST_CASE("propext counterexample needs two points", "[propext]") {
  for (int n : {0, 1}) {
    try {
      prop_ext_counterexample(n);
      FAIL("expected SizeTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SizeTooSmall);
    }
  }
}

TEST_CASE("funext counterexample on the loop graph", "[funext]") {
  auto r = fun_ext_counterexample();
  INFO(report_to_text(r));
  CHECK(r.passed);
  for (auto n : {"two maps in G^G(D) differing at (g, w)", "i . delta on G^G at (eta, mu) is empty",
                 "forall over G of (i . delta)^G at (eta, mu) is {1_D}", "tau({1_D}) is empty",
                 "i . delta on G^G equals i . tau . forall . (i . delta)^G",
                 "interpreted forall y. f y = g y agrees at (eta, mu)", "box(forall y. f y = g y) |- f = g",
                 "|Omega(D)| = 3 and |Omega_*(D)| = 4", "delta^G at (theta_0, theta_1) is 101",
                 "forall_D(101) is 01 over Omega_*", "forall_D(101) is 00 over Omega"})
    CHECK(item(r, n).held);
  auto& plain = item(r, "forall y. f y = g y |- f = g");
  CHECK_FALSE(plain.held);
  REQUIRE(plain.witness);
  CHECK(plain.witness->object == "D");
  require_witnessed_failures(r);
}

TEST_CASE("tau sends {1_D} to the empty sieve on the loop graph", "[funext]") {
  auto m = loop_graph_model(true);
  const auto& cat = *m->base;
  int D = cat.object_index("D");
  auto H = m->frame().carrier();
  int x = mask_index(H, D, bit_of(cat, cat.identity(D)));
  CHECK(mask_at(m->maps.classifier.target, D, m->maps.classifier(D, x)) == 0);
}

TEST_CASE("constant domain models validate plain funext", "[constdomain]") {
  for (int n = 1; n <= 3; ++n) {
    auto r = constant_domain_check(n);
    INFO(report_to_text(r));
    CHECK(r.passed);
    CHECK(item(r, "forall y. f y = g y |- f = g").held);
    CHECK(item(r, "box(forall y. f y = g y) |- f = g").held);
  }
}

TEST_CASE("S4 holds on every bundled model", "[s4]") {
  for (auto& b : bundled_models()) {
    auto r = s4_suite(*b.model);
    INFO(report_to_text(r));
    CHECK(r.passed);
  }
}

TEST_CASE("S4 holds for Omega_* over every bundled base", "[s4]") {
  for (auto& base : fx::bases()) {
    auto m = make_model("star", frame_omega_star(base), {});
    auto r = s4_suite(*m);
    INFO(base->name() << "\n" << report_to_text(r));
    CHECK(r.passed);
  }
}

TEST_CASE("box is the identity on Omega", "[s4]") {
  auto m = loop_graph_model(false);
  const auto& H = m->frame();
  for (int c = 0; c < m->base->object_count(); ++c)
    for (int x = 0; x < H.size(c); ++x) CHECK(m->maps.box(c, x) == x);
  CHECK(s4_suite(*m).passed);
}

TEST_CASE("a corrupted classifier breaks T with a witness", "[s4]") {
  auto m = corrupt_classifier(*loop_graph_model(true));
  auto r = s4_suite(*m);
  CHECK_FALSE(r.passed);
  auto& t = item(r, "T: box x <= x");
  CHECK_FALSE(t.held);
  REQUIRE(t.witness);
  CHECK_FALSE(t.witness->object.empty());
  require_witnessed_failures(r);
}

TEST_CASE("soundness suite on bundled models", "[soundness]") {
  for (auto& b : bundled_models()) {
    auto r = soundness_suite(*b.model);
    INFO(report_to_text(r));
    CHECK(r.passed);
    CHECK(item(r, "x = x").held);
    CHECK(item(r, "x = x").instances > 0);
    CHECK(item(r, "box(forall y. f y = g y) |- f = g").held);
    CHECK(item(r, "box(p <=> q) |- p = q").held);
    require_witnessed_failures(r);
  }
}

TEST_CASE("plain funext splits the bundled models", "[soundness]") {
  std::map<std::string, bool> expected{{"loopgraph", false}, {"loopgraph_omega", true}, {"chain3", false},
                                       {"constdomain2", true}};
  for (auto& b : bundled_models()) {
    if (!expected.count(b.name)) continue;
    auto r = soundness_suite(*b.model);
    auto& p = item(r, "forall y. f y = g y |- f = g");
    INFO(b.name);
    CHECK(p.held == expected[b.name]);
    if (!p.held) CHECK(p.witness.has_value());
  }
}

TEST_CASE("Leibniz is exhausted on the loop graph", "[soundness]") {
  auto r = soundness_suite(*loop_graph_model(true));
  auto& l = item(r, "Leibniz over every map into H");
  CHECK(l.held);
  CHECK(l.instances > 0);
}

TEST_CASE("suite reports are deterministic", "[determinism]") {
  auto once = [] {
    std::string s = report_to_text(fun_ext_counterexample()) + report_to_text(prop_ext_counterexample(3));
    for (auto& b : bundled_models()) s += report_to_text(s4_suite(*b.model));
    return s;
  };
  CHECK(once() == once());
}

TEST_CASE("parallel and serial runs agree", "[determinism]") {
  auto text = [](const std::vector<CheckReport>& rs) {
    std::string s;
    for (auto& r : rs) s += report_to_text(r);
    return s;
  };
  auto serial = run_all_checks(1);
  auto parallel = run_all_checks(4);
  CHECK(text(serial) == text(parallel));
  for (auto& r : serial) {
    INFO(report_to_text(r));
    CHECK(r.passed);
  }
}

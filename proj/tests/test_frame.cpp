#include <catch_amalgamated.hpp>

#include <homl/frame.hpp>

#include <set>

#include "fixtures.hpp"

using namespace homl;

namespace {

std::vector<FramePtr> small_frames(const CategoryPtr& base) {
  std::vector<FramePtr> fs{frame_omega(base), frame_omega_star(base), frame_powerset(base, 2)};
  if (base->object_count() == 1) fs.push_back(frame_powerset(base, 3));
  return fs;
}

int D_of() { return fx::two_object()->object_index("D"); }
int C_of() { return fx::two_object()->object_index("C"); }

// Label xyz of an element of H^G(D) over the loop graph: x and z are the
// g- and 1_D-digits of eta(D, 1_D, u), y the 1_C-digit of eta(C, g, w).
std::string edge_label(const InternalFrame& H, const PresheafPtr& E, int k) {
  const auto& cat = H.cat();
  auto G = fx::loop_graph();
  int C = C_of(), D = D_of();
  int g = cat.arrow_index("g");
  int u = G->index_of(D, "u"), w = G->index_of(C, "w");
  int at_d = exp_value(E, D, k, D, cat.identity(D), u);
  int at_c = exp_value(E, D, k, C, g, w);
  auto bits = [&](int c, int x) { return sieve_info(H.carrier()).masks[c][x]; };
  std::string s;
  s += binary_label(cat, bits(D, at_d), {"g"});
  s += binary_label(cat, bits(C, at_c), {"1_C"});
  s += binary_label(cat, bits(D, at_d), {"1_D"});
  return s;
}

int element_labelled(const InternalFrame& H, const PresheafPtr& E, const std::string& label) {
  int found = -1;
  for (std::size_t k = 0; k < E->size(D_of()); ++k)
    if (edge_label(H, E, static_cast<int>(k)) == label) {
      REQUIRE(found == -1);
      found = static_cast<int>(k);
    }
  REQUIRE(found >= 0);
  return found;
}

int by_name(const InternalFrame& H, const std::string& obj, const std::string& e) {
  return H.carrier()->index_of(H.cat().object_index(obj), e);
}

}  // namespace

TEST_CASE("validate_frame accepts the built-in frames") {
  auto base = fx::two_object();
  auto O = validate_frame(candidate_of(*frame_omega(base)));
  auto S = validate_frame(candidate_of(*frame_omega_star(base)));
  REQUIRE(O->size(D_of()) == 3);
  REQUIRE(S->size(D_of()) == 4);
  for (auto& cat : fx::bases())
    for (auto& H : small_frames(cat)) {
      INFO(H->name() << " over " << cat->name());
      REQUIRE(!frame_law_violation(*H));
    }
}

TEST_CASE("validate_frame rejects a broken meet") {
  auto k = candidate_of(*frame_omega_star(fx::two_object()));
  k.meet = k.join;
  try {
    validate_frame(k);
    FAIL("accepted");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::HeytingAxiomFailure);
    REQUIRE(e.detail().find("x /\\ top = x") != std::string::npos);
  }
}

TEST_CASE("validate_frame rejects non-natural structure maps") {
  auto base = fx::two_object();
  // Same sets as Omega_*, but restriction along g sends everything to {}.
  PresheafDescription d;
  d.name = "Bad";
  auto S = omega_star(base);
  d.elements["C"] = S->elements(C_of());
  d.elements["D"] = S->elements(D_of());
  for (auto& x : d.elements["D"]) d.restrictions["g"][x] = "{}";
  auto bad = validate_presheaf(base, d);
  auto good = candidate_of(*frame_omega_star(base));
  auto one = terminal(base);
  auto BB = product(bad, bad);
  FrameCandidate k{"Bad", bad, {one, bad, good.top.components}, {one, bad, good.bot.components},
                   {BB, bad, good.meet.components}, {BB, bad, good.join.components},
                   {BB, bad, good.imp.components}};
  try {
    validate_frame(k);
    FAIL("accepted");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::NonNaturalStructureMap);
    REQUIRE(e.detail().find("g") != std::string::npos);
  }
}

TEST_CASE("frame text round trip") {
  auto base = fx::two_object();
  auto H = validate_frame(candidate_of(*frame_omega(base)));
  std::map<std::string, CategoryPtr> cats{{base->name(), base}};
  std::map<std::string, PresheafPtr> ps{{"Omega", omega(base)}};
  auto blocks = text::parse_blocks(frame_to_text(*H));
  REQUIRE(blocks.size() == 1);
  auto back = frame_from_block(blocks[0], cats, ps);
  REQUIRE(frame_to_text(*back) == frame_to_text(*H));
}

TEST_CASE("initial map") {
  auto base = fx::two_object();
  SECTION("identity on Omega") {
    auto H = frame_omega(base);
    REQUIRE(nat_equal(initial_map(*H), identity_nat(omega(base))));
  }
  SECTION("inclusion of sieves into arrow sets") {
    auto H = frame_omega_star(base);
    auto i = initial_map(*H);
    for (int c = 0; c < base->object_count(); ++c)
      for (std::size_t s = 0; s < omega(base)->size(c); ++s)
        REQUIRE(mask_at(H->carrier(), c, i(c, static_cast<int>(s))) == mask_at(omega(base), c, static_cast<int>(s)));
  }
  SECTION("powerset over the terminal category") {
    auto t = fx::terminal();
    for (int n = 1; n <= 4; ++n) {
      auto H = frame_powerset(t, n);
      auto i = initial_map(*H);
      auto O = omega(t);
      std::string X = "{";
      for (int k = 0; k < n; ++k) X += (k ? "," : "") + std::to_string(k);
      X += "}";
      REQUIRE(H->element_name(0, i(0, O->index_of(0, "{1_*}"))) == X);
      REQUIRE(H->element_name(0, i(0, O->index_of(0, "{}"))) == "{}");
    }
  }
}

TEST_CASE("frame maps found by search match the filtered enumeration") {
  for (auto& cat : {fx::terminal(), fx::two_object(), fx::chain3()})
    for (auto& H : {frame_omega(cat), frame_omega_star(cat), frame_powerset(cat, 2)}) {
      if (count_nats(omega(cat), H->carrier()) > 200000) continue;
      INFO(H->name() << " over " << cat->name());
      std::vector<NatTransform> filtered;
      for (auto& m : enumerate_nats(omega(cat), H->carrier()))
        if (!frame_map_violation(*H, m)) filtered.push_back(m);
      auto searched = enumerate_frame_maps(*H);
      REQUIRE(filtered.size() == searched.size());
      for (std::size_t k = 0; k < filtered.size(); ++k) REQUIRE(nat_equal(filtered[k], searched[k]));
      REQUIRE(searched.size() == 1);
      REQUIRE(nat_equal(searched[0], initial_map(*H)));
    }
}

TEST_CASE("without the indexed-join condition Omega -> Omega_* is not unique") {
  auto base = fx::two_object();
  auto H = frame_omega_star(base);
  int lattice_maps = 0;
  for (auto& m : enumerate_nats(omega(base), H->carrier())) {
    auto v = frame_map_violation(*H, m);
    if (!v || v->find("left adjoint") != std::string::npos) ++lattice_maps;
  }
  REQUIRE(lattice_maps == 2);
}

TEST_CASE("right adjoint of the initial map") {
  auto base = fx::two_object();
  auto S = frame_omega_star(base);
  auto m = frame_maps(S);
  auto O = omega(base);
  REQUIRE(O->element_name(D_of(), m.classifier(D_of(), by_name(*S, "D", "{1_D}"))) == "{}");
  for (int c = 0; c < base->object_count(); ++c)
    REQUIRE(mask_at(O, c, m.classifier(c, S->top(c))) == full_mask(*base, c));

  auto t = fx::terminal();
  for (int n = 1; n <= 4; ++n) {
    auto P = frame_powerset(t, n);
    auto pm = frame_maps(P);
    for (int x = 0; x < P->size(0); ++x)
      REQUIRE((mask_at(omega(t), 0, pm.classifier(0, x)) == 1) == (x == P->top(0)));
  }
}

TEST_CASE("modality") {
  auto base = fx::two_object();
  auto S = frame_omega_star(base);
  auto m = frame_maps(S);
  REQUIRE(S->element_name(D_of(), m.box(D_of(), by_name(*S, "D", "{1_D}"))) == "{}");
  for (int c = 0; c < base->object_count(); ++c) REQUIRE(m.box(c, S->top(c)) == S->top(c));
  auto mo = frame_maps(frame_omega(base));
  REQUIRE(nat_equal(mo.box, identity_nat(omega(base))));
}

TEST_CASE("Galois connection, faithfulness and S4 on every small frame") {
  for (auto& cat : fx::bases())
    for (auto& H : small_frames(cat)) {
      INFO(H->name() << " over " << cat->name());
      auto m = frame_maps(H);
      REQUIRE(!galois_violation(m));
      REQUIRE(!faithfulness_violation(m));
      REQUIRE(!modality_violation(*H, m.box));
      REQUIRE(nat_equal(compose_nat(m.classifier, m.initial), identity_nat(omega(cat))));
    }
}

TEST_CASE("powerset over a base with several objects") {
  auto base = fx::two_object();
  auto P = frame_powerset(base, 2);
  REQUIRE(P->size(D_of()) == 16);
  REQUIRE(P->size(C_of()) == 4);
  // With one point it is Omega_*.
  auto P1 = frame_powerset(base, 1);
  auto S = frame_omega_star(base);
  for (int c = 0; c < base->object_count(); ++c) REQUIRE(P1->carrier()->elements(c).size() == S->carrier()->elements(c).size());
  auto i1 = frame_maps(P1).initial, is = frame_maps(S).initial;
  for (int c = 0; c < base->object_count(); ++c)
    for (std::size_t s = 0; s < omega(base)->size(c); ++s)
      REQUIRE(mask_at(P1->carrier(), c, i1(c, static_cast<int>(s))) ==
              mask_at(S->carrier(), c, is(c, static_cast<int>(s))));
}

TEST_CASE("a collapsed frame is not faithful") {
  // The constant two-element frame over C -> D sends {g} and the maximal
  // sieve on D to the same element.
  auto base = fx::two_object();
  PresheafDescription d;
  d.name = "Two";
  d.elements["C"] = {"0", "1"};
  d.elements["D"] = {"0", "1"};
  d.restrictions["g"] = {{"0", "0"}, {"1", "1"}};
  auto T = validate_presheaf(base, d);
  auto one = terminal(base);
  auto TT = product(T, T);
  FrameCandidate k;
  k.carrier = T;
  k.top = {one, T, {{1}, {1}}};
  k.bot = {one, T, {{0}, {0}}};
  k.meet = {TT, T, {{0, 0, 0, 1}, {0, 0, 0, 1}}};
  k.join = {TT, T, {{0, 1, 1, 1}, {0, 1, 1, 1}}};
  k.imp = {TT, T, {{1, 1, 0, 1}, {1, 1, 0, 1}}};
  auto H = validate_frame(k);
  auto m = frame_maps(H);
  auto v = faithfulness_violation(m);
  REQUIRE(v);
  REQUIRE(v->find("{g}") != std::string::npos);
}

TEST_CASE("diagonal") {
  auto base = fx::two_object();
  SECTION("terminal index is an isomorphism") {
    for (auto& H : {frame_omega(base), frame_omega_star(base)}) {
      auto dm = diagonal_map(*H, terminal(base));
      for (int c = 0; c < base->object_count(); ++c) {
        REQUIRE(dm.target->size(c) == H->carrier()->size(c));
        std::set<int> img(dm.components[c].begin(), dm.components[c].end());
        REQUIRE(img.size() == H->carrier()->size(c));
      }
      REQUIRE(is_natural(dm));
    }
  }
  SECTION("constant families over the terminal category") {
    auto t = fx::terminal();
    auto P = frame_powerset(t, 2);
    auto I = fx::finite_set(3, "I");
    auto dm = diagonal_map(*P, I);
    auto E = dm.target;
    for (int x = 0; x < P->size(0); ++x)
      for (int a = 0; a < 3; ++a) REQUIRE(exp_value(E, 0, dm(0, x), 0, t->identity(0), a) == x);
  }
  SECTION("binary labels") {
    auto S = frame_omega_star(base);
    auto dm = diagonal_map(*S, fx::loop_graph());
    for (auto xy : {"00", "01", "10", "11"}) {
      ArrowMask m = (xy[0] == '1' ? bit_of(*base, base->arrow_index("g")) : 0) |
                    (xy[1] == '1' ? bit_of(*base, base->identity(D_of())) : 0);
      int x = mask_index(S->carrier(), D_of(), m);
      std::string want = std::string(1, xy[0]) + xy[0] + xy[1];
      REQUIRE(edge_label(*S, dm.target, dm(D_of(), x)) == want);
    }
  }
  SECTION("equals the transpose of the first projection") {
    for (auto& I : {terminal(base), fx::loop_graph(), yoneda(base, "D")}) {
      auto H = frame_omega_star(base);
      REQUIRE(nat_equal(diagonal_map(*H, I), transpose(proj1(product(H->carrier(), I)))));
    }
  }
}

TEST_CASE("quantifiers") {
  auto base = fx::two_object();
  auto G = fx::loop_graph();
  SECTION("on the diagonal") {
    for (auto& H : {frame_omega(base), frame_omega_star(base)}) {
      for (auto& I : {terminal(base), G, yoneda(base, "D")}) {
        auto dm = diagonal_map(*H, I);
        auto all = compose_nat(forall_map(*H, I), dm);
        auto some = compose_nat(exists_map(*H, I), dm);
        REQUIRE(nat_equal(all, identity_nat(H->carrier())));
        REQUIRE(nat_equal(some, identity_nat(H->carrier())));
      }
    }
  }
  SECTION("forall of 101") {
    auto S = frame_omega_star(base);
    auto ES = exponential(G, S->carrier());
    int k = element_labelled(*S, ES, "101");
    auto fa = forall_map(*S, G);
    REQUIRE(binary_label(*base, mask_at(S->carrier(), D_of(), fa(D_of(), k)), {"g", "1_D"}) == "01");

    auto O = frame_omega(base);
    auto EO = exponential(G, O->carrier());
    int ko = element_labelled(*O, EO, "101");
    auto fo = forall_map(*O, G);
    REQUIRE(binary_label(*base, mask_at(O->carrier(), D_of(), fo(D_of(), ko)), {"g", "1_D"}) == "00");
  }
  SECTION("powerset: forall is intersection, exists is union") {
    auto t = fx::terminal();
    auto P = frame_powerset(t, 2);
    auto I = fx::finite_set(2, "I");
    auto E = exponential(I, P->carrier());
    auto fa = forall_map(*P, I);
    auto ex = exists_map(*P, I);
    for (std::size_t k = 0; k < E->size(0); ++k) {
      std::uint64_t inter = 3, uni = 0;
      for (int a = 0; a < 2; ++a) {
        auto m = mask_at(P->carrier(), 0, exp_value(E, 0, static_cast<int>(k), 0, t->identity(0), a));
        inter &= m;
        uni |= m;
      }
      REQUIRE(mask_at(P->carrier(), 0, fa(0, static_cast<int>(k))) == inter);
      REQUIRE(mask_at(P->carrier(), 0, ex(0, static_cast<int>(k))) == uni);
    }
  }
}

TEST_CASE("adjunctions between the quantifiers and the diagonal") {
  auto base = fx::two_object();
  for (auto& H : {frame_omega(base), frame_omega_star(base)})
    for (auto& I : {terminal(base), fx::loop_graph(), yoneda(base, "D")}) {
      auto E = exponential(I, H->carrier());
      auto dm = diagonal_map(*H, I);
      auto fa = forall_map(*H, I);
      auto ex = exists_map(*H, I);
      REQUIRE(is_natural(fa));
      REQUIRE(is_natural(ex));
      for (int c = 0; c < base->object_count(); ++c)
        for (int x = 0; x < H->size(c); ++x)
          for (std::size_t k = 0; k < E->size(c); ++k) {
            int e = static_cast<int>(k);
            REQUIRE(family_leq(*H, E, c, dm(c, x), e) == H->leq(c, x, fa(c, e)));
            REQUIRE(family_leq(*H, E, c, e, dm(c, x)) == H->leq(c, ex(c, e), x));
          }
    }
}

TEST_CASE("right adjoint after implication equals equality of x and x /\\ y") {
  for (auto& cat : fx::bases())
    for (auto& H : small_frames(cat)) {
      auto m = frame_maps(H);
      auto d = delta(H->carrier());
      for (int c = 0; c < cat->object_count(); ++c) {
        int n = H->size(c);
        for (int x = 0; x < n; ++x)
          for (int y = 0; y < n; ++y)
            REQUIRE(m.classifier(c, H->imp(c, x, y)) == d(c, x * n + H->meet(c, x, y)));
      }
    }
}

TEST_CASE("equality on a function space through the modality") {
  // i . delta_{X^Y} = box . forall_Y . (i . delta_X)^Y, computed pointwise.
  auto base = fx::two_object();
  std::vector<PresheafPtr> ps{terminal(base), fx::loop_graph(), yoneda(base, "D"), fx::constant_domain(2)};
  for (auto& H : {frame_omega(base), frame_omega_star(base)}) {
    auto m = frame_maps(H);
    const auto& cat = *base;
    for (auto& X : ps)
      for (auto& Y : ps) {
        auto XY = exponential(Y, X);
        const auto& info = exponential_info(XY);
        auto dX = delta(X);
        auto dXY = delta(XY);
        for (int c = 0; c < cat.object_count(); ++c) {
          int n = static_cast<int>(XY->size(c));
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
              SlotValues slots;
              int pos = 0;
              for (int e = 0; e < cat.object_count(); ++e) {
                int nx = static_cast<int>(X->size(e));
                for (int h : cat.hom(e, c))
                  for (std::size_t y = 0; y < Y->size(e); ++y, ++pos) {
                    int va = info.tables[c][a][pos], vb = info.tables[c][b][pos];
                    slots.push_back({h, m.initial(e, dX(e, va * nx + vb))});
                  }
              }
              int rhs = m.box(c, forall_at(*H, c, slots));
              int lhs = m.initial(c, dXY(c, a * n + b));
              REQUIRE(lhs == rhs);
            }
        }
      }
  }
}

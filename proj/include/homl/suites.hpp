#pragma once

// Self-contained checks of the modal laws, the extensionality
// counterexamples and the soundness of the deduction rules.

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "bundled.hpp"
#include "gen.hpp"
#include "semantics.hpp"

namespace homl {

struct SuiteWitness {
  std::string object;
  std::string elements;  // bindings or arguments
  std::string lhs, rhs;
};

enum class Expect { Holds, Fails, Report };

struct CheckItem {
  std::string name;
  Expect expect = Expect::Holds;
  bool held = true;
  int instances = 0;
  std::optional<SuiteWitness> witness;  // first failing instance
  std::string note;

  bool ok() const {
    if (expect == Expect::Report) return true;
    return held == (expect == Expect::Holds);
  }
};

struct CheckReport {
  std::string name;
  std::string anchor;
  std::string subject;  // model or construction checked
  bool passed = true;
  std::vector<CheckItem> items;
  double runtime_ms = 0;

  void add(CheckItem it) {
    passed = passed && it.ok();
    items.push_back(std::move(it));
  }
  const CheckItem* item(const std::string& n) const {
    for (auto& it : items)
      if (it.name == n) return &it;
    return nullptr;
  }
};

inline std::string expect_name(Expect e) {
  switch (e) {
    case Expect::Holds: return "holds";
    case Expect::Fails: return "fails";
    case Expect::Report: return "report";
  }
  return "";
}

inline std::string witness_to_text(const SuiteWitness& w) {
  std::string s = w.object;
  if (!w.elements.empty()) s += " (" + w.elements + ")";
  return s + ": lhs " + w.lhs + ", rhs " + w.rhs;
}

/// One line per item; runtime only when asked, so that reports of equal
/// inputs are byte-identical.
inline std::string report_to_text(const CheckReport& r, bool timing = false) {
  std::string s = std::string(r.passed ? "PASS" : "FAIL") + "  " + r.name + "  [" + r.anchor + "]";
  if (!r.subject.empty()) s += "  on " + r.subject;
  if (timing) s += "  (" + std::to_string(static_cast<long long>(r.runtime_ms)) + " ms)";
  s += "\n";
  for (auto& it : r.items) {
    s += std::string("  ") + (it.ok() ? "ok  " : "BAD ") + " " + it.name + ": " + (it.held ? "holds" : "fails");
    if (it.expect != Expect::Report) s += " (expected " + expect_name(it.expect) + ")";
    s += ", " + std::to_string(it.instances) + " instance" + (it.instances == 1 ? "" : "s");
    if (!it.note.empty()) s += ", " + it.note;
    s += "\n";
    if (it.witness) s += "      witness " + witness_to_text(*it.witness) + "\n";
  }
  return s;
}

namespace detail {

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Accumulates instances of one item, keeping the first failure.
struct Tally {
  CheckItem item;
  int skipped = 0;
  explicit Tally(std::string name, Expect e = Expect::Holds) {
    item.name = std::move(name);
    item.expect = e;
  }
  void add(bool ok, const std::function<SuiteWitness()>& w) {
    ++item.instances;
    if (!ok && item.held) {
      item.held = false;
      item.witness = w();
    }
  }
};

inline SuiteWitness sequent_witness(const Model& m, const syntax::Sequent& s, const Witness& w) {
  const auto& H = m.frame();
  SuiteWitness r;
  r.object = m.base->object_name(w.object);
  r.elements = s.ctx.empty() ? "" : show_bindings(m, s.ctx, w.object, w.element);
  r.lhs = show_element(m, H.carrier(), w.object, w.lhs);
  r.rhs = show_element(m, H.carrier(), w.object, w.rhs);
  return r;
}

/// Upper bound on |[[t]](C)| at every object, without building exponentials.
inline std::vector<double> size_bound(const Model& m, const syntax::TypePtr& t) {
  const auto& cat = *m.base;
  int n = cat.object_count();
  std::vector<double> r(n, 1.0);
  switch (t->kind) {
    case syntax::TypeKind::Unit: break;
    case syntax::TypeKind::Prop:
    case syntax::TypeKind::Base: {
      auto P = interp_type(m, t);
      for (int c = 0; c < n; ++c) r[c] = static_cast<double>(P->size(c));
      break;
    }
    case syntax::TypeKind::Prod: {
      auto a = size_bound(m, t->left), b = size_bound(m, t->right);
      for (int c = 0; c < n; ++c) r[c] = a[c] * b[c];
      break;
    }
    case syntax::TypeKind::Exp: {
      auto cod = size_bound(m, t->left), dom = size_bound(m, t->right);
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) r[c] *= std::pow(cod[e], static_cast<double>(cat.hom(e, c).size()) * dom[e]);
      break;
    }
  }
  return r;
}

/// Instances whose context is larger than this at some object are skipped.
constexpr double kMaxContext = 1 << 12;

inline bool context_fits(const Model& m, const syntax::Context& ctx) {
  std::vector<double> r(m.base->object_count(), 1.0);
  for (auto& [x, t] : ctx) {
    auto b = size_bound(m, t);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] *= b[c];
  }
  for (double x : r)
    if (x > kMaxContext) return false;
  return true;
}

/// Adds one sequent instance to a tally through holds().
inline bool tally_sequent(Tally& t, const Model& m, const syntax::Sequent& s) {
  Verdict v;
  try {
    if (!context_fits(m, s.ctx)) fail(Errc::SizeGuardExceeded, "context of " + syntax::to_string(s));
    v = holds(m, s);
  } catch (const Error& e) {
    if (e.code() != Errc::SizeGuardExceeded) throw;
    ++t.skipped;
    t.item.note = std::to_string(t.skipped) + " skipped by the size guard";
    return true;
  }
  t.add(v.holds, [&] {
    auto w = sequent_witness(m, s, v.witnesses.front());
    w.elements = syntax::to_string(s) + (w.elements.empty() ? "" : " at " + w.elements);
    return w;
  });
  return v.holds;
}

/// For rules relating several sequents: the instance fails when `ok` is
/// false; the witness names the sequents involved.
inline void tally_rule(Tally& t, bool ok, const std::string& what, const std::string& object = "all objects") {
  t.add(ok, [&] { return SuiteWitness{object, what, "premises hold", "conclusion fails"}; });
}

inline syntax::Sequent sequent(const std::string& name, syntax::Context ctx, syntax::TermPtr l, syntax::TermPtr r) {
  return {name, std::move(ctx), std::move(l), std::move(r)};
}

inline syntax::TermPtr top() { return syntax::mk(syntax::TermKind::Top); }

/// X^Y x X^Y -> (X x X)^Y
inline NatTransform pair_exponentials(const PresheafPtr& X, const PresheafPtr& Y) {
  auto E = exponential(Y, X);
  auto P = product(E, E);
  auto Q = product(P, Y);
  auto ev = eval_map(Y, X);
  auto e1 = compose_nat(ev, pair(compose_nat(proj1(P), proj1(Q)), proj2(Q)));
  auto e2 = compose_nat(ev, pair(compose_nat(proj2(P), proj1(Q)), proj2(Q)));
  return transpose(pair(e1, e2));
}

inline std::shared_ptr<Model> copy_model(const Model& m) {
  auto c = std::make_shared<Model>(m);
  c->memo = std::make_shared<homl::detail::Memo>();
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fault injection

/// A copy of m whose right adjoint sends the element x at object c to the
/// sieve `value`; the modality is recomputed from the altered table.
inline ModelPtr with_classifier_entry(const Model& m, int c, int x, int value) {
  auto r = homl::detail::copy_model(m);
  r->maps.classifier.components.at(c).at(x) = value;
  r->maps.box = compose_nat(r->maps.initial, r->maps.classifier);
  return r;
}

/// Sends the first non-top element to the maximal sieve, which breaks
/// box x <= x.
inline ModelPtr corrupt_classifier(const Model& m) {
  const auto& H = m.frame();
  auto O = m.maps.classifier.target;
  for (int c = 0; c < m.base->object_count(); ++c)
    for (int x = 0; x < H.size(c); ++x)
      if (x != H.top(c)) return with_classifier_entry(m, c, x, mask_index(O, c, full_mask(*m.base, c)));
  fail(Errc::SizeTooSmall, "frame of " + m.name + " has no element below top");
}

// ---------------------------------------------------------------------------
// Formula corpora

struct CorpusOptions {
  std::uint64_t seed = 4242;
  int formulas = 10;
  int depth = 2;
};

namespace detail {

inline syntax::TypePtr domain_type(const Model& m) {
  return m.types.empty() ? syntax::unit_type() : syntax::base_type(m.types.front().first);
}

struct FormulaCorpus {
  syntax::Context ctx;
  std::vector<syntax::TermPtr> phis;
};

/// Random propositions in  x:A, y:A, p:P, q:P, f:A^A  where A is the first
/// declared type, together with a few fixed ones.
inline FormulaCorpus formula_corpus(const Model& m, const CorpusOptions& o, int salt = 0) {
  using namespace syntax;
  auto A = domain_type(m);
  FormulaCorpus fc;
  fc.ctx = {{"x", A}, {"y", A}, {"p", prop_type()}, {"q", prop_type()}, {"f", exp_type(A, A)}};
  auto sig = m.signature();
  GenConfig cfg;
  cfg.domains = {A, prop_type()};
  cfg.max_depth = o.depth;
  cfg.max_type_size = 3;
  TermGenerator gen(o.seed + static_cast<std::uint64_t>(salt), sig, cfg);
  fc.phis = {mk_var("p"), mk(TermKind::Box, mk_var("p")), mk_eq(mk_var("x"), mk_var("y")),
             mk_eq(mk(TermKind::App, mk_var("f"), mk_var("x")), mk_var("y"))};
  // Formulas whose interpretation trips the size guard are drawn again.
  for (int tries = 0; static_cast<int>(fc.phis.size()) < o.formulas && tries < 50 * o.formulas; ++tries) {
    auto t = gen.term(fc.ctx, prop_type(), o.depth);
    try {
      interp_term(m, fc.ctx, t);
    } catch (const Error& e) {
      if (e.code() != Errc::SizeGuardExceeded) throw;
      continue;
    }
    fc.phis.push_back(t);
  }
  fc.phis.resize(static_cast<std::size_t>(std::max(o.formulas, 1)));
  return fc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The modality

/// T, 4, K, necessitation, monotonicity, box top = top and meets: first on
/// every element of H(C), then on formula instances through holds().
inline CheckReport s4_suite(const Model& m, const CorpusOptions& o = {}) {
  using namespace syntax;
  homl::detail::Stopwatch clock;
  CheckReport r;
  r.name = "s4";
  r.anchor = "S4 laws of box = i . tau";
  r.subject = m.name;
  const auto& H = m.frame();
  const auto& box = m.maps.box;
  auto name = [&](int c, int x) { return show_element(m, H.carrier(), c, x); };
  auto w1 = [&](int c, int x, int l, int rr) {
    return [&, c, x, l, rr] { return SuiteWitness{m.base->object_name(c), "x=" + name(c, x), name(c, l), name(c, rr)}; };
  };
  auto w2 = [&](int c, int x, int y, int l, int rr) {
    return [&, c, x, y, l, rr] {
      return SuiteWitness{m.base->object_name(c), "x=" + name(c, x) + ", y=" + name(c, y), name(c, l), name(c, rr)};
    };
  };
  homl::detail::Tally T("T: box x <= x"), F("4: box x <= box box x"), K("K: box(x => y) /\\ box x <= box y"),
      N("necessitation: box top = top"), Mo("monotone: x <= y gives box x <= box y"),
      Me("meets: box(x /\\ y) = box x /\\ box y");
  for (int c = 0; c < m.base->object_count(); ++c) {
    int t = H.top(c);
    N.add(box(c, t) == t, w1(c, t, box(c, t), t));
    for (int x = 0; x < H.size(c); ++x) {
      int bx = box(c, x);
      T.add(H.leq(c, bx, x), w1(c, x, bx, x));
      F.add(H.leq(c, bx, box(c, bx)), w1(c, x, bx, box(c, bx)));
      for (int y = 0; y < H.size(c); ++y) {
        int by = box(c, y);
        int kl = H.meet(c, box(c, H.imp(c, x, y)), bx);
        K.add(H.leq(c, kl, by), w2(c, x, y, kl, by));
        if (H.leq(c, x, y)) Mo.add(H.leq(c, bx, by), w2(c, x, y, bx, by));
        int ml = box(c, H.meet(c, x, y)), mr = H.meet(c, bx, by);
        Me.add(ml == mr, w2(c, x, y, ml, mr));
      }
    }
  }
  for (auto* t : {&T, &F, &K, &N, &Mo, &Me}) {
    t->item.note = "every element";
    r.add(t->item);
  }

  auto fc = homl::detail::formula_corpus(m, o, 1);
  auto Box = [](TermPtr a) { return mk(TermKind::Box, std::move(a)); };
  homl::detail::Tally pT("T: box phi |- phi"), p4("4: box phi |- box box phi"), pK("K: box(phi => psi) /\\ box phi |- box psi"),
      pMe("meets: box phi /\\ box psi |- box(phi /\\ psi)"), pTop("top |- box top"),
      pNec("necessitation: top |- phi gives top |- box phi"), pMo("monotone: phi |- psi gives box phi |- box psi");
  homl::detail::tally_sequent(pTop, m, homl::detail::sequent("box-top", {}, homl::detail::top(), Box(homl::detail::top())));
  std::vector<std::vector<char>> ent(fc.phis.size(), std::vector<char>(fc.phis.size()));
  for (std::size_t a = 0; a < fc.phis.size(); ++a) {
    auto& phi = fc.phis[a];
    homl::detail::tally_sequent(pT, m, homl::detail::sequent("T", fc.ctx, Box(phi), phi));
    homl::detail::tally_sequent(p4, m, homl::detail::sequent("4", fc.ctx, Box(phi), Box(Box(phi))));
    for (auto cand : {phi, mk(TermKind::Imp, phi, phi)}) {
      bool valid = holds(m, homl::detail::sequent("", fc.ctx, homl::detail::top(), cand)).holds;
      if (valid)
        homl::detail::tally_rule(pNec, holds(m, homl::detail::sequent("", fc.ctx, homl::detail::top(), Box(cand))).holds,
                           "|- " + to_string(cand));
    }
    for (std::size_t b = 0; b < fc.phis.size(); ++b) {
      auto& psi = fc.phis[b];
      ent[a][b] = holds(m, homl::detail::sequent("", fc.ctx, phi, psi)).holds;
      homl::detail::tally_sequent(pK, m,
                            homl::detail::sequent("K", fc.ctx, mk(TermKind::And, Box(mk(TermKind::Imp, phi, psi)), Box(phi)),
                                            Box(psi)));
      homl::detail::tally_sequent(pMe, m,
                            homl::detail::sequent("meets", fc.ctx, mk(TermKind::And, Box(phi), Box(psi)),
                                            Box(mk(TermKind::And, phi, psi))));
      if (ent[a][b])
        homl::detail::tally_rule(pMo, holds(m, homl::detail::sequent("", fc.ctx, Box(phi), Box(psi))).holds,
                           to_string(phi) + " |- " + to_string(psi));
    }
  }
  for (auto* t : {&pT, &p4, &pK, &pMe, &pTop, &pNec, &pMo}) {
    t->item.note = "formula instances";
    r.add(t->item);
  }
  r.runtime_ms = clock.ms();
  return r;
}

// ---------------------------------------------------------------------------
// Propositional extensionality over a powerset frame

inline ModelPtr powerset_model(int n) {
  auto base = bundled::terminal();
  return make_model("powerset" + std::to_string(n), frame_powerset(base, n), {{"X", bundled::finite_set(n)}});
}

inline CheckReport prop_ext_counterexample(int n) {
  using namespace syntax;
  if (n < 2) fail(Errc::SizeTooSmall, "powerset(" + std::to_string(n) + ") has no counterexample, need n >= 2");
  homl::detail::Stopwatch clock;
  CheckReport r;
  r.name = "propext-counterexample";
  r.anchor = "plain propositional extensionality over P(X)";
  r.subject = "powerset(" + std::to_string(n) + ") over the terminal category";
  auto m = powerset_model(n);
  const auto& H = m->frame();
  auto HH = product(H.carrier(), H.carrier());
  auto imp = frame_op_map(H, FrameOp::Imp);
  auto lower = compose_nat(delta(H.carrier()), pair(proj1(HH), frame_op_map(H, FrameOp::Meet)));
  auto ilower = compose_nat(m->maps.initial, lower);
  auto nm = [&](int x) { return H.element_name(0, x); };
  int N = H.size(0);
  auto elem = [&](int x, int y) { return "U=" + nm(x) + ", V=" + nm(y); };

  // (a) the designated pair, then every pair for the count
  int U = mask_index(H.carrier(), 0, 1), V = mask_index(H.carrier(), 0, 2);
  CheckItem a;
  a.name = "implication equals i . delta . <p1, meet>";
  a.expect = Expect::Fails;
  int disagree = 0;
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) disagree += imp(0, x * N + y) != ilower(0, x * N + y);
  a.instances = N * N;
  a.held = disagree == 0;
  a.witness = SuiteWitness{"*", elem(U, V), nm(imp(0, U * N + V)), nm(ilower(0, U * N + V))};
  a.note = std::to_string(disagree) + " disagreeing pairs";
  if (imp(0, U * N + V) == ilower(0, U * N + V)) a.note += ", designated pair agrees";
  r.add(a);

  // (b) tau . imp = delta . <p1, meet>
  homl::detail::Tally b("tau . implication equals delta . <p1, meet>");
  auto timp = compose_nat(m->maps.classifier, imp);
  auto O = m->maps.classifier.target;
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      int k = x * N + y;
      b.add(timp(0, k) == lower(0, k),
            [&] { return SuiteWitness{"*", elem(x, y), O->element_name(0, timp(0, k)), O->element_name(0, lower(0, k))}; });
    }
  r.add(b.item);

  homl::detail::Tally z("tau(U => V) is bottom when U is not below V");
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      if (H.leq(0, x, y)) continue;
      int t = m->maps.classifier(0, H.imp(0, x, y));
      z.add(mask_at(O, 0, t) == 0, [&] { return SuiteWitness{"*", elem(x, y), O->element_name(0, t), "{}"}; });
    }
  r.add(z.item);

  // (c) the modal principle holds, the plain one fails
  Context pq{{"p", prop_type()}, {"q", prop_type()}};
  auto iff = mk(TermKind::Iff, mk_var("p"), mk_var("q"));
  auto eq = mk_eq(mk_var("p"), mk_var("q"));
  homl::detail::Tally modal("box(p <=> q) |- p = q");
  homl::detail::tally_sequent(modal, *m, homl::detail::sequent("modal propext", pq, mk(TermKind::Box, iff), eq));
  r.add(modal.item);
  homl::detail::Tally plain("p <=> q |- p = q", Expect::Fails);
  homl::detail::tally_sequent(plain, *m, homl::detail::sequent("plain propext", pq, iff, eq));
  r.add(plain.item);
  r.runtime_ms = clock.ms();
  return r;
}

// ---------------------------------------------------------------------------
// Function extensionality on the loop graph

inline ModelPtr loop_graph_model(bool star = true) {
  auto base = bundled::two_object();
  return make_model(star ? "loopgraph" : "loopgraph_omega", star ? frame_omega_star(base) : frame_omega(base),
                    {{"G", bundled::loop_graph()}});
}

/// Digits xyz of a family in P^G at D on the loop graph: x and z are the
/// digits of its value at (1_D, u), y says whether 1_C lies in its value at
/// (g, w).
inline std::string loop_family_label(const InternalFrame& H, int family) {
  const auto& cat = H.cat();
  auto G = bundled::loop_graph();
  auto E = exponential(G, H.carrier());
  int C = cat.object_index("C"), D = cat.object_index("D");
  int g = cat.arrow_index("g"), one_d = cat.identity(D), one_c = cat.identity(C);
  auto mask = [&](int c, int x) { return mask_at(H.carrier(), c, x); };
  int at_u = exp_value(E, D, family, D, one_d, G->index_of(D, "u"));
  int at_w = exp_value(E, D, family, C, g, G->index_of(C, "w"));
  std::string s;
  s += (mask(D, at_u) & bit_of(cat, g)) ? '1' : '0';
  s += (mask(C, at_w) & bit_of(cat, one_c)) ? '1' : '0';
  s += (mask(D, at_u) & bit_of(cat, one_d)) ? '1' : '0';
  return s;
}

inline CheckReport fun_ext_counterexample() {
  using namespace syntax;
  homl::detail::Stopwatch clock;
  CheckReport r;
  r.name = "funext-counterexample";
  r.anchor = "plain function extensionality on the loop graph";
  r.subject = "G over C -g-> D with the arrow-set frame";
  auto m = loop_graph_model(true);
  auto mo = loop_graph_model(false);
  const auto& H = m->frame();
  const auto& cat = *m->base;
  int C = cat.object_index("C"), D = cat.object_index("D");
  int g = cat.arrow_index("g");
  auto G = m->base_type("G");
  auto GG = exponential(G, G);
  int w = G->index_of(C, "w");

  // eta fixes w, mu does not
  int eta = -1, mu = -1;
  for (int x = 0; x < static_cast<int>(GG->size(D)); ++x)
    for (int y = 0; y < static_cast<int>(GG->size(D)); ++y)
      if (x != y && eta < 0 && exp_value(GG, D, x, C, g, w) == w && exp_value(GG, D, y, C, g, w) != w) {
        eta = x;
        mu = y;
      }
  CheckItem found;
  found.name = "two maps in G^G(D) differing at (g, w)";
  found.instances = 1;
  found.held = eta >= 0;
  if (!found.held) found.witness = SuiteWitness{"D", "G^G", std::to_string(GG->size(D)), "no such pair"};
  r.add(found);
  if (eta < 0) return r;
  auto gname = [&](int x) { return GG->element_name(D, x); };
  auto hname = [&](const InternalFrame& F, int c, int x) { return F.element_name(c, x); };
  std::string args = "eta=" + gname(eta) + ", mu=" + gname(mu);
  int n = static_cast<int>(GG->size(D)), k = eta * n + mu;

  auto dGG = delta(GG);
  auto idGG = compose_nat(m->maps.initial, dGG);
  homl::detail::Tally e1("i . delta on G^G at (eta, mu) is empty");
  e1.add(mask_at(H.carrier(), D, idGG(D, k)) == 0 && mask_at(dGG.target, D, dGG(D, k)) == 0,
         [&] { return SuiteWitness{"D", args, hname(H, D, idGG(D, k)), "{}"}; });
  r.add(e1.item);

  // forall . (i delta_G)^G . pairing
  auto pairing = homl::detail::pair_exponentials(G, G);
  auto fam = [&](const Model& mm) {
    return compose_nat(exp_map(compose_nat(mm.maps.initial, delta(G)), G), pairing);
  };
  auto fam_star = fam(*m);
  auto all_star = compose_nat(forall_map(H, G), fam_star);
  homl::detail::Tally e2("forall over G of (i . delta)^G at (eta, mu) is {1_D}");
  auto one_d = bit_of(cat, cat.identity(D));
  e2.add(mask_at(H.carrier(), D, all_star(D, k)) == one_d,
         [&] { return SuiteWitness{"D", args, hname(H, D, all_star(D, k)), "{1_D}"}; });
  r.add(e2.item);

  homl::detail::Tally tau("tau({1_D}) is empty");
  int sing = mask_index(H.carrier(), D, one_d);
  int ts = m->maps.classifier(D, sing);
  tau.add(mask_at(m->maps.classifier.target, D, ts) == 0,
          [&] { return SuiteWitness{"D", "{1_D}", m->maps.classifier.target->element_name(D, ts), "{}"}; });
  r.add(tau.item);

  // i . delta_{G^G} = i . tau . forall . (i delta_G)^G . pairing, everywhere
  homl::detail::Tally lem("i . delta on G^G equals i . tau . forall . (i . delta)^G");
  auto rhs = compose_nat(m->maps.box, all_star);
  auto GG2 = dGG.source;
  for (int c = 0; c < cat.object_count(); ++c)
    for (int x = 0; x < static_cast<int>(GG2->size(c)); ++x)
      lem.add(idGG(c, x) == rhs(c, x), [&] {
        return SuiteWitness{cat.object_name(c), GG2->element_name(c, x), hname(H, c, idGG(c, x)), hname(H, c, rhs(c, x))};
      });
  r.add(lem.item);

  // the interpreter agrees with the combinators at (eta, mu)
  Context fg{{"f", exp_type(base_type("G"), base_type("G"))}, {"g", exp_type(base_type("G"), base_type("G"))}};
  auto app = [](const char* f) { return mk(TermKind::App, mk_var(f), mk_var("y")); };
  auto all = mk_binder(TermKind::Forall, "y", base_type("G"), mk_eq(app("f"), app("g")));
  auto sem = interp_term(*m, fg, all);
  int kk = context_index(*m, fg, D, {eta, mu});
  homl::detail::Tally agree("interpreted forall y. f y = g y agrees at (eta, mu)");
  agree.add(sem(D, kk) == all_star(D, k),
            [&] { return SuiteWitness{"D", args, hname(H, D, sem(D, kk)), hname(H, D, all_star(D, k))}; });
  r.add(agree.item);

  homl::detail::Tally modal("box(forall y. f y = g y) |- f = g");
  homl::detail::tally_sequent(modal, *m, homl::detail::sequent("modal funext", fg, mk(TermKind::Box, all), mk_eq(mk_var("f"), mk_var("g"))));
  r.add(modal.item);

  // plain: fails, and (D, (eta, mu)) is among the witnesses
  auto plain = homl::detail::sequent("plain funext", fg, all, mk_eq(mk_var("f"), mk_var("g")));
  auto v = holds(*m, plain);
  CheckItem pi;
  pi.name = "forall y. f y = g y |- f = g";
  pi.expect = Expect::Fails;
  pi.instances = 1;
  pi.held = v.holds;
  for (auto& x : v.witnesses)
    if (x.object == D && x.element == kk) pi.witness = homl::detail::sequent_witness(*m, plain, x);
  if (!v.holds) pi.note = std::to_string(v.witnesses.size()) + " failing elements";
  if (!v.holds && !pi.witness) {
    pi.held = true;  // failed, but not at the expected place
    pi.note = "no witness at (D, eta, mu)";
  }
  r.add(pi);

  // combinatorial labels
  const auto& Ho = mo->frame();
  CheckItem sizes;
  sizes.name = "|Omega(D)| = 3 and |Omega_*(D)| = 4";
  sizes.instances = 1;
  sizes.held = Ho.size(D) == 3 && H.size(D) == 4;
  if (!sizes.held) sizes.witness = SuiteWitness{"D", "", std::to_string(Ho.size(D)), std::to_string(H.size(D))};
  r.add(sizes);

  // theta_0 has source vw (it fixes w), theta_1 has source vv
  auto delta_fam = compose_nat(exp_map(delta(G), G), pairing);  // into Omega^G
  int lab = delta_fam(D, k);
  auto label = loop_family_label(Ho, lab);
  homl::detail::Tally l1("delta^G at (theta_0, theta_1) is 101");
  l1.add(label == "101", [&] { return SuiteWitness{"D", "theta_0=eta, theta_1=mu", label, "101"}; });
  r.add(l1.item);

  auto digits = std::vector<std::string>{"g", "1_D"};
  auto two = [&](const InternalFrame& F, int x) { return binary_label(cat, mask_at(F.carrier(), D, x), digits); };
  int on_star = compose_nat(forall_map(H, G), exp_map(m->maps.initial, G))(D, lab);
  int on_omega = forall_map(Ho, G)(D, lab);
  homl::detail::Tally l2("forall_D(101) is 01 over Omega_*");
  l2.add(two(H, on_star) == "01", [&] { return SuiteWitness{"D", "101", two(H, on_star), "01"}; });
  r.add(l2.item);
  homl::detail::Tally l3("forall_D(101) is 00 over Omega");
  l3.add(two(Ho, on_omega) == "00", [&] { return SuiteWitness{"D", "101", two(Ho, on_omega), "00"}; });
  r.add(l3.item);
  r.runtime_ms = clock.ms();
  return r;
}

// ---------------------------------------------------------------------------
// Constant domains

inline ModelPtr constant_domain_model(int n) {
  auto base = bundled::two_object();
  return make_model("constdomain" + std::to_string(n), frame_omega_star(base), {{"G", bundled::constant_domain(n)}});
}

inline CheckReport constant_domain_check(int n) {
  using namespace syntax;
  if (n < 1) fail(Errc::SizeTooSmall, "constant domain needs at least one element");
  homl::detail::Stopwatch clock;
  CheckReport r;
  r.name = "constant-domain";
  r.anchor = "function extensionality in constant domain models";
  r.subject = "constant G of size " + std::to_string(n) + " over C -g-> D";
  auto m = constant_domain_model(n);
  auto base = m->base;
  const auto& H = m->frame();
  auto Ho = frame_omega(base);
  auto G = m->base_type("G");
  auto Gt = base_type("G");

  Context fg{{"f", exp_type(Gt, Gt)}, {"g", exp_type(Gt, Gt)}};
  auto app = [](const char* f) { return mk(TermKind::App, mk_var(f), mk_var("y")); };
  auto all = mk_binder(TermKind::Forall, "y", Gt, mk_eq(app("f"), app("g")));
  homl::detail::Tally plain("forall y. f y = g y |- f = g");
  homl::detail::tally_sequent(plain, *m, homl::detail::sequent("plain funext", fg, all, mk_eq(mk_var("f"), mk_var("g"))));
  r.add(plain.item);

  // No family over Omega lies above the diagonal of {1_D} except top, so
  // both quantifiers agree on Omega^G.
  auto O = omega(base);
  auto OG = exponential(G, O);
  auto SG = exponential(G, H.carrier());
  auto iG = exp_map(initial_map(H), G);
  auto diag = diagonal_map(H, G);
  auto fa_star = forall_map(H, G), fa = forall_map(*Ho, G);
  auto iO = initial_map(H);
  homl::detail::Tally edge("no family of Omega^G above the diagonal of an identity-only set");
  homl::detail::Tally same("forall over Omega_* agrees with forall over Omega on Omega^G");
  for (int c = 0; c < base->object_count(); ++c) {
    int idonly = mask_index(H.carrier(), c, bit_of(*base, base->identity(c)));
    bool proper = idonly != H.top(c);
    for (int e = 0; e < static_cast<int>(OG->size(c)); ++e) {
      int ie = iG(c, e);
      if (proper)
        edge.add(!family_leq(H, SG, c, diag(c, idonly), ie) || fa(c, e) == Ho->top(c),
                 [&] { return SuiteWitness{base->object_name(c), OG->element_name(c, e), "above", "not top"}; });
      int l = fa_star(c, ie), rr = iO(c, fa(c, e));
      same.add(l == rr, [&] {
        return SuiteWitness{base->object_name(c), OG->element_name(c, e), H.element_name(c, l), H.element_name(c, rr)};
      });
    }
  }
  r.add(edge.item);
  r.add(same.item);

  homl::detail::Tally modal("box(forall y. f y = g y) |- f = g");
  homl::detail::tally_sequent(modal, *m, homl::detail::sequent("modal funext", fg, mk(TermKind::Box, all), mk_eq(mk_var("f"), mk_var("g"))));
  r.add(modal.item);
  r.runtime_ms = clock.ms();
  return r;
}

// ---------------------------------------------------------------------------
// Soundness of the deduction rules

struct SoundnessOptions {
  int type_depth = 2;           // formers stacked in instantiated types
  std::size_t max_elements = 64;  // skip types larger than this at some object
  CorpusOptions corpus;
};

namespace detail {

inline bool small_enough(const Model& m, const syntax::TypePtr& t, std::size_t cap) {
  for (double x : size_bound(m, t))
    if (x > static_cast<double>(cap)) return false;
  return true;
}

/// Types over the declared base types, 1 and P with at most `depth`
/// formers, in a fixed order; the second list holds those skipped as too
/// large.
inline std::pair<std::vector<syntax::TypePtr>, std::vector<syntax::TypePtr>> type_pool(const Model& m, int depth,
                                                                                   std::size_t cap) {
  using namespace syntax;
  std::vector<std::vector<TypePtr>> by(depth + 1);
  for (auto& [n, p] : m.types) by[0].push_back(base_type(n));
  by[0].push_back(prop_type());
  by[0].push_back(unit_type());
  for (int d = 1; d <= depth; ++d)
    for (int i = 0; i < d; ++i) {
      // one side of depth d-1, the other of depth i <= d-1
      int j = d - 1;
      for (auto& a : by[j])
        for (auto& b : by[i]) {
          by[d].push_back(prod_type(a, b));
          by[d].push_back(exp_type(a, b));
          if (i != j) {
            by[d].push_back(prod_type(b, a));
            by[d].push_back(exp_type(b, a));
          }
        }
    }
  std::vector<TypePtr> keep, skip;
  for (auto& level : by)
    for (auto& t : level) (small_enough(m, t, cap) ? keep : skip).push_back(t);
  return {keep, skip};
}

}  // namespace detail

/// Every rule and axiom schema of the calculus, instantiated at the types
/// of `type_pool` and at random formulas.  The plain extensionality
/// principles are reported, not judged.
inline CheckReport soundness_suite(const Model& m, const SoundnessOptions& o = {}) {
  using namespace syntax;
  using homl::detail::sequent;
  using homl::detail::tally_rule;
  using homl::detail::tally_sequent;
  using homl::detail::Tally;
  homl::detail::Stopwatch clock;
  CheckReport r;
  r.name = "soundness";
  r.anchor = "deduction rules and axiom schemas";
  r.subject = m.name;
  auto [types, skipped] = homl::detail::type_pool(m, o.type_depth, o.max_elements);
  auto sig = m.signature();
  auto T = homl::detail::top;
  auto V = [](const char* n) { return mk_var(n); };
  GenConfig gcfg;
  gcfg.domains = {homl::detail::domain_type(m), prop_type()};
  gcfg.max_type_size = 3;
  TermGenerator gen(o.corpus.seed + 17, sig, gcfg);

  // -- types: equality, unit, products, beta, eta, modal funext
  Tally refl("x = x"), unit("* = x"), pi1("p1 <x, y> = x"), pi2("p2 <x, y> = y"), sp("<p1 w, p2 w> = w"),
      beta("(fun z. t) s = t[s/z]"), eta("(fun z. w z) = w"), leib("phi /\\ x = x' |- phi[x'/x]"),
      mfun("box(forall y. f y = g y) |- f = g"), pfun("forall y. f y = g y |- f = g", Expect::Report);
  tally_sequent(unit, m, sequent("unit", {{"x", unit_type()}}, T(), mk_eq(mk(TermKind::Star), V("x"))));
  for (auto& A : types) {
    tally_sequent(refl, m, sequent("refl", {{"x", A}}, T(), mk_eq(V("x"), V("x"))));
    auto A0 = homl::detail::domain_type(m);
    Context lc{{"x", A}, {"x'", A}, {"a", A0}, {"p", prop_type()}};
    for (int k = 0; k < 2; ++k) {
      Context inner{{"x", A}, {"a", A0}, {"p", prop_type()}};
      auto phi = gen.term(inner, prop_type(), 2);
      tally_sequent(leib, m,
                    sequent("leibniz", lc, mk(TermKind::And, phi, mk_eq(V("x"), V("x'"))), substitute(phi, "x", V("x'"))));
    }
    if (A->kind == TypeKind::Prod) {
      Context xy{{"x", A->left}, {"y", A->right}};
      auto pr = mk(TermKind::Pair, V("x"), V("y"));
      tally_sequent(pi1, m, sequent("p1", xy, T(), mk_eq(mk(TermKind::Proj1, pr), V("x"))));
      tally_sequent(pi2, m, sequent("p2", xy, T(), mk_eq(mk(TermKind::Proj2, pr), V("y"))));
      tally_sequent(sp, m,
                    sequent("pairing", {{"w", A}}, T(),
                            mk_eq(mk(TermKind::Pair, mk(TermKind::Proj1, V("w")), mk(TermKind::Proj2, V("w"))), V("w"))));
    }
    if (A->kind == TypeKind::Exp) {
      auto B = A->left, D = A->right;  // A = B^D
      Context bc{{"s", D}, {"b", B}, {"a", homl::detail::domain_type(m)}, {"p", prop_type()}};
      Context zc = bc;
      zc.push_back({"z", D});
      auto body = gen.term(zc, B, 1);
      auto lam = mk_binder(TermKind::Lam, "z", D, body);
      tally_sequent(beta, m, sequent("beta", bc, T(), mk_eq(mk(TermKind::App, lam, V("s")), substitute(body, "z", V("s")))));
      tally_sequent(eta, m,
                    sequent("eta", {{"w", A}}, T(),
                            mk_eq(mk_binder(TermKind::Lam, "z", D, mk(TermKind::App, V("w"), V("z"))), V("w"))));
      Context fg{{"f", A}, {"g", A}};
      auto pt = mk_binder(TermKind::Forall, "y", D,
                          mk_eq(mk(TermKind::App, V("f"), V("y")), mk(TermKind::App, V("g"), V("y"))));
      tally_sequent(mfun, m, sequent("modal funext", fg, mk(TermKind::Box, pt), mk_eq(V("f"), V("g"))));
      tally_sequent(pfun, m, sequent("plain funext", fg, pt, mk_eq(V("f"), V("g"))));
    }
    clear_memo(m);
  }

  // Leibniz against every map from the first declared type into H
  Tally leibx("Leibniz over every map into H");
  if (!m.types.empty()) {
    auto A = m.types.front().second;
    const auto& H = m.frame();
    if (count_nats(A, H.carrier()) <= 4096) {
      for (auto& phi : enumerate_nats(A, H.carrier()))
        for (int c = 0; c < m.base->object_count(); ++c)
          for (int x = 0; x < static_cast<int>(A->size(c)); ++x)
            for (int y = 0; y < static_cast<int>(A->size(c)); ++y) {
              int e = m.maps.initial(c, delta(A)(c, x * static_cast<int>(A->size(c)) + y));
              int l = H.meet(c, phi(c, x), e), rr = phi(c, y);
              leibx.add(H.leq(c, l, rr), [&] {
                return SuiteWitness{m.base->object_name(c), A->element_name(c, x) + ", " + A->element_name(c, y),
                                    H.element_name(c, l), H.element_name(c, rr)};
              });
            }
    } else {
      leibx.item.note = "too many maps, skipped";
    }
  }

  // -- formulas: structural, lattice, quantifiers, modal propext, S4
  auto fc = homl::detail::formula_corpus(m, o.corpus, 2);
  const auto& phis = fc.phis;
  auto& ctx = fc.ctx;
  std::size_t n = phis.size();
  auto ent = [&](const TermPtr& a, const TermPtr& b) { return holds(m, sequent("", ctx, a, b)).holds; };
  std::vector<std::vector<char>> E(n, std::vector<char>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) E[a][b] = ent(phis[a], phis[b]);
  auto txt = [&](std::size_t a) { return to_string(phis[a]); };

  Tally ident("phi |- phi"), cut("cut"), subst("substitution"), ttop("phi |- top"), tbot("bot |- phi"),
      andr("chi |- phi /\\ psi iff chi |- phi and chi |- psi"), orl("phi \\/ psi |- chi iff phi |- chi and psi |- chi"),
      impr("chi |- phi => psi iff chi /\\ phi |- psi"), allr("chi |- forall z. phi iff chi |- phi"),
      exl("exists z. phi |- chi iff phi |- chi"), mprop("box(p <=> q) |- p = q"),
      pprop("p <=> q |- p = q", Expect::Report), s4T("box phi |- phi"), s44("box phi |- box box phi"),
      s4K("box(phi => psi) /\\ box phi |- box psi"), s4m("box phi /\\ box psi |- box(phi /\\ psi)"),
      s4top("top |- box top"), s4nec("necessitation"), s4mono("monotone box");
  tally_sequent(s4top, m, sequent("box top", {}, T(), mk(TermKind::Box, T())));
  Context pq{{"p", prop_type()}, {"q", prop_type()}};
  tally_sequent(mprop, m, sequent("modal propext", pq, mk(TermKind::Box, mk(TermKind::Iff, V("p"), V("q"))), mk_eq(V("p"), V("q"))));
  tally_sequent(pprop, m, sequent("plain propext", pq, mk(TermKind::Iff, V("p"), V("q")), mk_eq(V("p"), V("q"))));

  auto Box = [](TermPtr a) { return mk(TermKind::Box, std::move(a)); };
  for (std::size_t a = 0; a < n; ++a) {
    const auto& phi = phis[a];
    tally_rule(ident, E[a][a], txt(a) + " |- " + txt(a));
    tally_sequent(ttop, m, sequent("top", ctx, phi, T()));
    tally_sequent(tbot, m, sequent("bot", ctx, mk(TermKind::Bot), phi));
    tally_sequent(s4T, m, sequent("T", ctx, Box(phi), phi));
    tally_sequent(s44, m, sequent("4", ctx, Box(phi), Box(Box(phi))));
    if (ent(T(), phi)) tally_rule(s4nec, ent(T(), Box(phi)), "|- " + txt(a));
    auto refl_imp = mk(TermKind::Imp, phi, phi);
    tally_rule(s4nec, ent(T(), Box(refl_imp)), "|- " + to_string(refl_imp));
    if (a + 1 < n) {
      auto p2 = phis[a + 1];
      tally_sequent(mprop, m, sequent("modal propext", ctx, Box(mk(TermKind::Iff, phi, p2)), mk_eq(phi, p2)));
    }
    for (std::size_t b = 0; b < n; ++b) {
      const auto& psi = phis[b];
      if (E[a][b]) tally_rule(s4mono, ent(Box(phi), Box(psi)), txt(a) + " |- " + txt(b));
      tally_sequent(s4K, m, sequent("K", ctx, mk(TermKind::And, Box(mk(TermKind::Imp, phi, psi)), Box(phi)), Box(psi)));
      tally_sequent(s4m, m, sequent("meets", ctx, mk(TermKind::And, Box(phi), Box(psi)), Box(mk(TermKind::And, phi, psi))));
      for (std::size_t c = 0; c < n; ++c) {
        const auto& chi = phis[c];
        if (E[a][b] && E[b][c]) tally_rule(cut, E[a][c], txt(a) + " |- " + txt(b) + " |- " + txt(c));
        auto both = E[c][a] && E[c][b];
        tally_rule(andr, ent(chi, mk(TermKind::And, phi, psi)) == both, "and-right with chi = " + txt(c));
        auto either = E[a][c] && E[b][c];
        tally_rule(orl, ent(mk(TermKind::Or, phi, psi), chi) == either, "or-left with chi = " + txt(c));
        tally_rule(impr, ent(chi, mk(TermKind::Imp, phi, psi)) == ent(mk(TermKind::And, chi, phi), psi),
                   "implication with chi = " + txt(c));
      }
    }
  }

  // quantifier rules and substitution, with z fresh for chi
  for (auto& A : types) {
    if (!homl::detail::small_enough(m, A, 16)) continue;
    auto zc = ctx;
    zc.push_back({"z", A});
    for (int k = 0; k < 3; ++k) {
      auto phi = gen.term(zc, prop_type(), 2);
      auto psi = gen.term(zc, prop_type(), 2);
      const auto& chi = phis[static_cast<std::size_t>(k) % n];
      auto all = mk_binder(TermKind::Forall, "z", A, phi);
      auto ex = mk_binder(TermKind::Exists, "z", A, phi);
      tally_rule(allr, ent(chi, all) == holds(m, sequent("", zc, chi, phi)).holds,
                 to_string(chi) + " |- " + to_string(all));
      tally_rule(exl, ent(ex, chi) == holds(m, sequent("", zc, phi, chi)).holds, to_string(ex) + " |- " + to_string(chi));
      if (holds(m, sequent("", zc, phi, psi)).holds) {
        auto t = gen.term(ctx, A, 1);
        tally_rule(subst, ent(substitute(phi, "z", t), substitute(psi, "z", t)),
                   to_string(phi) + " |- " + to_string(psi) + " at z := " + to_string(t));
      }
    }
    clear_memo(m);
  }

  for (auto* t : {&ident, &cut, &subst, &refl, &leib, &leibx, &unit, &pi1, &pi2, &sp, &beta, &eta, &ttop, &tbot, &andr,
                  &orl, &impr, &allr, &exl, &mfun, &mprop, &s4T, &s44, &s4K, &s4m, &s4top, &s4nec, &s4mono, &pfun, &pprop})
    r.add(t->item);
  if (!skipped.empty()) {
    CheckItem sk;
    sk.name = "type pool";
    sk.expect = Expect::Report;
    sk.instances = static_cast<int>(types.size());
    sk.held = true;
    sk.note = std::to_string(skipped.size()) + " further types skipped as too large";
    r.add(sk);
  }
  r.runtime_ms = clock.ms();
  return r;
}

// ---------------------------------------------------------------------------
// Everything

struct BundledModel {
  std::string name;
  ModelPtr model;
};

/// The models the suites run on: both loop-graph models, the three-world
/// chain, constant domains and a powerset frame.
inline std::vector<BundledModel> bundled_models() {
  std::vector<BundledModel> v;
  v.push_back({"loopgraph", loop_graph_model(true)});
  v.push_back({"loopgraph_omega", loop_graph_model(false)});
  v.push_back({"chain3", make_model("chain3", frame_omega_star(bundled::chain3()), {{"M", bundled::chain3_domain()}})});
  v.push_back({"constdomain2", constant_domain_model(2)});
  v.push_back({"powerset2", powerset_model(2)});
  return v;
}

/// All checks in a fixed order; `jobs` > 1 runs them concurrently without
/// changing the order of the result.
inline std::vector<CheckReport> run_all_checks(int jobs = 1, const SoundnessOptions& o = {}) {
  std::vector<std::function<CheckReport()>> tasks;
  tasks.push_back([] { return fun_ext_counterexample(); });
  for (int n = 2; n <= 5; ++n) tasks.push_back([n] { return prop_ext_counterexample(n); });
  for (int n = 1; n <= 3; ++n) tasks.push_back([n] { return constant_domain_check(n); });
  auto models = bundled_models();
  for (auto& b : models) tasks.push_back([m = b.model, o] { return s4_suite(*m, o.corpus); });
  for (auto& b : models) tasks.push_back([m = b.model, o] { return soundness_suite(*m, o); });
  std::vector<CheckReport> out(tasks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) out[i] = tasks[i]();
    return out;
  }
  std::size_t next = 0;
  while (next < tasks.size()) {
    std::vector<std::future<CheckReport>> fs;
    std::size_t start = next;
    for (int j = 0; j < jobs && next < tasks.size(); ++j, ++next) fs.push_back(std::async(std::launch::async, tasks[next]));
    for (std::size_t i = 0; i < fs.size(); ++i) out[start + i] = fs[i].get();
  }
  return out;
}

}  // namespace homl

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "fincat.hpp"
#include "presheaf.hpp"

namespace homl {

// Arrow sets on an object C are bitmasks over arrows_into(C): bit k stands
// for the k-th arrow in that (name-sorted) list.

using ArrowMask = std::uint64_t;

inline ArrowMask full_mask(const FiniteCategory& cat, int c) {
  auto k = cat.arrows_into(c).size();
  return k >= 64 ? ~ArrowMask(0) : ((ArrowMask(1) << k) - 1);
}

inline ArrowMask bit_of(const FiniteCategory& cat, int arrow) {
  return ArrowMask(1) << cat.into_position(arrow);
}

inline bool is_sieve(const FiniteCategory& cat, int c, ArrowMask s) {
  for (int h : cat.arrows_into(c)) {
    if (!(s & bit_of(cat, h))) continue;
    for (int f : cat.arrows_into(cat.arrow(h).dom))
      if (!(s & bit_of(cat, cat.compose(h, f)))) return false;
  }
  return true;
}

/// {f : X -> D | g . f in s} for g : D -> C and s an arrow set on C.
inline ArrowMask pull_back_mask(const FiniteCategory& cat, int g, ArrowMask s) {
  ArrowMask r = 0;
  for (int f : cat.arrows_into(cat.arrow(g).dom))
    if (s & bit_of(cat, cat.compose(g, f))) r |= bit_of(cat, f);
  return r;
}

/// Lexicographic order on the sorted lists of members; the empty set first.
inline bool mask_less(ArrowMask a, ArrowMask b) {
  while (a && b) {
    int la = __builtin_ctzll(a), lb = __builtin_ctzll(b);
    if (la != lb) return la < lb;
    a &= a - 1;
    b &= b - 1;
  }
  return !a && b;
}

inline std::string mask_to_string(const FiniteCategory& cat, int c, ArrowMask s) {
  std::string out = "{";
  bool first = true;
  for (int h : cat.arrows_into(c)) {
    if (!(s & bit_of(cat, h))) continue;
    if (!first) out += ",";
    out += cat.arrow(h).name;
    first = false;
  }
  return out + "}";
}

/// Digits of s in the given arrow order, e.g. (g, 1_D) renders {g} as "10".
inline std::string binary_label(const FiniteCategory& cat, ArrowMask s,
                                const std::vector<std::string>& digits) {
  std::string out;
  for (auto& a : digits) out += (s & bit_of(cat, cat.arrow_index(a))) ? '1' : '0';
  return out;
}

namespace detail {
inline PresheafPtr make_sieves(const CategoryPtr& base, bool star) {
  const auto& cat = *base;
  SieveInfo info;
  info.star = star;
  std::vector<std::vector<std::string>> el(cat.object_count());
  for (int c = 0; c < cat.object_count(); ++c) {
    auto k = cat.arrows_into(c).size();
    if (k > 24 || (ArrowMask(1) << k) > limits().max_elements * 4)
      fail(Errc::SizeGuardExceeded, std::to_string(k) + " arrows into " + cat.object_name(c));
    std::vector<ArrowMask> ms;
    for (ArrowMask s = 0; s < (ArrowMask(1) << k); ++s)
      if (star || is_sieve(cat, c, s)) ms.push_back(s);
    std::sort(ms.begin(), ms.end(), mask_less);
    std::unordered_map<ArrowMask, int> idx;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      idx[ms[i]] = static_cast<int>(i);
      el[c].push_back(mask_to_string(cat, c, ms[i]));
    }
    info.masks.push_back(std::move(ms));
    info.index.push_back(std::move(idx));
  }
  std::vector<std::vector<int>> re(cat.arrow_count());
  for (int g = 0; g < cat.arrow_count(); ++g) {
    int c = cat.arrow(g).cod, d = cat.arrow(g).dom;
    for (ArrowMask s : info.masks[c]) re[g].push_back(info.index[d].at(pull_back_mask(cat, g, s)));
  }
  return std::make_shared<const Presheaf>(base, star ? "Omega_*" : "Omega", el, re, std::move(info));
}
}  // namespace detail

/// Sieves on each object.
inline PresheafPtr omega(const CategoryPtr& base) {
  return detail::cached(&detail::Caches::indexed, std::make_pair(static_cast<const void*>(base.get()), -2),
                        [&] { return detail::make_sieves(base, false); });
}

/// Arbitrary sets of arrows into each object.
inline PresheafPtr omega_star(const CategoryPtr& base) {
  return detail::cached(&detail::Caches::indexed, std::make_pair(static_cast<const void*>(base.get()), -3),
                        [&] { return detail::make_sieves(base, true); });
}

inline const SieveInfo& sieve_info(const PresheafPtr& P) {
  auto* s = P->as_sieves();
  if (!s) fail(Errc::ShapeMismatch, P->name() + " is not an object of sieves");
  return *s;
}

inline ArrowMask mask_at(const PresheafPtr& P, int c, int x) { return sieve_info(P).masks[c][x]; }

inline int mask_index(const PresheafPtr& P, int c, ArrowMask s) {
  const auto& info = sieve_info(P);
  auto it = info.index[c].find(s);
  if (it == info.index[c].end())
    fail(Errc::UnknownElement, mask_to_string(P->cat(), c, s) + " in " + P->name());
  return it->second;
}

// ---------------------------------------------------------------------------
// Subpresheaves

struct Subpresheaf {
  PresheafPtr parent;
  std::vector<std::vector<char>> members;  // [object][element]

  bool contains(int c, int x) const { return members[c][x] != 0; }
  bool operator==(const Subpresheaf& o) const { return parent == o.parent && members == o.members; }
};

inline Subpresheaf empty_subfamily(const PresheafPtr& F) {
  Subpresheaf s{F, {}};
  for (int c = 0; c < F->cat().object_count(); ++c) s.members.emplace_back(F->size(c), 0);
  return s;
}

inline Subpresheaf full_subfamily(const PresheafPtr& F) {
  Subpresheaf s{F, {}};
  for (int c = 0; c < F->cat().object_count(); ++c) s.members.emplace_back(F->size(c), 1);
  return s;
}

inline bool is_closed(const Subpresheaf& s) {
  const auto& cat = s.parent->cat();
  for (int f = 0; f < cat.arrow_count(); ++f) {
    int c = cat.arrow(f).cod, d = cat.arrow(f).dom;
    for (std::size_t x = 0; x < s.parent->size(c); ++x)
      if (s.contains(c, static_cast<int>(x)) && !s.contains(d, s.parent->restrict(f, static_cast<int>(x))))
        return false;
  }
  return true;
}

/// Pointwise image of a transformation, a subpresheaf of its target.
inline Subpresheaf image(const NatTransform& a) {
  auto s = empty_subfamily(a.target);
  for (std::size_t c = 0; c < a.components.size(); ++c)
    for (int y : a.components[c]) s.members[c][y] = 1;
  return s;
}

inline Subpresheaf union_of(const Subpresheaf& a, const Subpresheaf& b) {
  auto s = a;
  for (std::size_t c = 0; c < s.members.size(); ++c)
    for (std::size_t x = 0; x < s.members[c].size(); ++x) s.members[c][x] |= b.members[c][x];
  return s;
}

/// chi_C(a) = {f : X -> C | F(f)(a) in S(X)}
inline NatTransform classify(const Subpresheaf& s) {
  if (!is_closed(s)) fail(Errc::NotClosedUnderRestriction, "subfamily of " + s.parent->name());
  const auto& F = s.parent;
  const auto& cat = F->cat();
  auto O = omega(F->base());
  NatTransform r{F, O, {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(F->size(c));
    for (std::size_t a = 0; a < F->size(c); ++a) {
      ArrowMask m = 0;
      for (int f : cat.arrows_into(c))
        if (s.contains(cat.arrow(f).dom, F->restrict(f, static_cast<int>(a)))) m |= bit_of(cat, f);
      r.components[c][a] = mask_index(O, c, m);
    }
  }
  return r;
}

/// The elements sent to the maximal sieve.
inline Subpresheaf subobject_of(const NatTransform& chi) {
  const auto& info = sieve_info(chi.target);
  if (info.star) fail(Errc::ShapeMismatch, "subobject_of expects a map into Omega");
  const auto& cat = chi.source->cat();
  auto s = empty_subfamily(chi.source);
  for (int c = 0; c < cat.object_count(); ++c)
    for (std::size_t a = 0; a < chi.source->size(c); ++a)
      s.members[c][a] = info.masks[c][chi(c, static_cast<int>(a))] == full_mask(cat, c);
  return s;
}

/// delta_A : A x A -> Omega, (x, y) |-> {f : D -> C | A(f)(x) = A(f)(y)}
inline NatTransform delta(const PresheafPtr& A) {
  const auto& cat = A->cat();
  auto O = omega(A->base());
  auto P = product(A, A);
  NatTransform r{P, O, {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    int n = static_cast<int>(A->size(c));
    r.components.emplace_back(P->size(c));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        ArrowMask m = 0;
        for (int f : cat.arrows_into(c))
          if (A->restrict(f, x) == A->restrict(f, y)) m |= bit_of(cat, f);
        r.components[c][x * n + y] = mask_index(O, c, m);
      }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Heyting structure

struct HeytingMaps {
  NatTransform top, bot;           // 1 -> L
  NatTransform meet, join, imp;    // L x L -> L
};

namespace detail {
template <class Op>
NatTransform binary_mask_op(const PresheafPtr& L, Op op) {
  const auto& cat = L->cat();
  auto P = product(L, L);
  NatTransform r{P, L, {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    const auto& ms = sieve_info(L).masks[c];
    int n = static_cast<int>(ms.size());
    r.components.emplace_back(P->size(c));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) r.components[c][x * n + y] = mask_index(L, c, op(c, ms[x], ms[y]));
  }
  return r;
}

inline NatTransform constant_mask(const PresheafPtr& L, bool full) {
  const auto& cat = L->cat();
  NatTransform r{terminal(L->base()), L, {}};
  for (int c = 0; c < cat.object_count(); ++c)
    r.components.push_back({mask_index(L, c, full ? full_mask(cat, c) : 0)});
  return r;
}
}  // namespace detail

/// Direct sieve formulas: intersection, union, and
/// (s => r) = {f | f.h in s implies f.h in r for every h}.
inline HeytingMaps omega_heyting(const CategoryPtr& base) {
  auto O = omega(base);
  const auto& cat = *base;
  HeytingMaps h{detail::constant_mask(O, true), detail::constant_mask(O, false),
                detail::binary_mask_op(O, [](int, ArrowMask a, ArrowMask b) { return a & b; }),
                detail::binary_mask_op(O, [](int, ArrowMask a, ArrowMask b) { return a | b; }),
                detail::binary_mask_op(O, [&](int c, ArrowMask s, ArrowMask r) {
                  ArrowMask out = 0;
                  for (int f : cat.arrows_into(c)) {
                    bool ok = true;
                    for (int k : cat.arrows_into(cat.arrow(f).dom)) {
                      ArrowMask b = bit_of(cat, cat.compose(f, k));
                      if ((s & b) && !(r & b)) ok = false;
                    }
                    if (ok) out |= bit_of(cat, f);
                  }
                  return out;
                })};
  return h;
}

/// Pointwise Boolean operations on arrow sets.
inline HeytingMaps omega_star_boolean(const CategoryPtr& base) {
  auto O = omega_star(base);
  const auto& cat = *base;
  return {detail::constant_mask(O, true), detail::constant_mask(O, false),
          detail::binary_mask_op(O, [](int, ArrowMask a, ArrowMask b) { return a & b; }),
          detail::binary_mask_op(O, [](int, ArrowMask a, ArrowMask b) { return a | b; }),
          detail::binary_mask_op(O, [&](int c, ArrowMask a, ArrowMask b) {
            return (~a | b) & full_mask(cat, c);
          })};
}

/// The same maps obtained by classifying subobjects: top classifies 1 in 1,
/// meet classifies <top,top>, join classifies the image of
/// [<1, top!>, <top!, 1>], and implication classifies the equalizer of meet
/// and the first projection.
inline HeytingMaps omega_heyting_by_classifying(const CategoryPtr& base) {
  auto O = omega(base);
  auto one = terminal(base);
  auto OO = product(O, O);
  HeytingMaps h;
  h.top = classify(full_subfamily(one));
  h.bot = classify(empty_subfamily(one));
  h.meet = classify(image(pair(h.top, h.top)));
  auto top_everywhere = constant_map(O, h.top);
  auto left = pair(identity_nat(O), top_everywhere);
  auto right = pair(top_everywhere, identity_nat(O));
  h.join = classify(union_of(image(left), image(right)));
  auto eq = empty_subfamily(OO);
  auto p1 = proj1(OO);
  for (int c = 0; c < base->object_count(); ++c)
    for (std::size_t k = 0; k < OO->size(c); ++k)
      eq.members[c][k] = h.meet(c, static_cast<int>(k)) == p1(c, static_cast<int>(k));
  h.imp = classify(eq);
  return h;
}

}  // namespace homl

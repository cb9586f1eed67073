#pragma once

// Internal frames (complete Heyting algebras) in a presheaf topos, the
// initial frame map out of Omega, its right adjoint, the induced modality,
// and the quantifiers along an index presheaf.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "fincat.hpp"
#include "omega.hpp"
#include "presheaf.hpp"
#include "text.hpp"

namespace homl {

enum class FrameKind { Omega, OmegaStar, Powerset, Custom };

/// Operation tables of a frame: top/bot per object, binary operations
/// flattened as [object][x * |H(C)| + y].
struct FrameTables {
  std::vector<int> top, bot;
  std::vector<std::vector<int>> meet, join, imp;
};

class InternalFrame {
 public:
  InternalFrame(PresheafPtr carrier, FrameKind kind, std::string name, std::optional<FrameTables> tables = {})
      : carrier_(std::move(carrier)), kind_(kind), name_(std::move(name)), tables_(std::move(tables)) {
    if (!tables_) init_masks();
  }

  const PresheafPtr& carrier() const { return carrier_; }
  const CategoryPtr& base() const { return carrier_->base(); }
  const FiniteCategory& cat() const { return carrier_->cat(); }
  FrameKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  int size(int c) const { return static_cast<int>(carrier_->size(c)); }
  int restrict(int f, int x) const { return carrier_->restrict(f, x); }
  const std::string& element_name(int c, int x) const { return carrier_->element_name(c, x); }

  int top(int c) const { return tables_ ? tables_->top[c] : lookup(c, full_[c]); }
  int bot(int c) const { return tables_ ? tables_->bot[c] : lookup(c, 0); }
  int meet(int c, int x, int y) const {
    return tables_ ? tables_->meet[c][x * size(c) + y] : lookup(c, mask(c, x) & mask(c, y));
  }
  int join(int c, int x, int y) const {
    return tables_ ? tables_->join[c][x * size(c) + y] : lookup(c, mask(c, x) | mask(c, y));
  }
  int imp(int c, int x, int y) const {
    return tables_ ? tables_->imp[c][x * size(c) + y] : lookup(c, (~mask(c, x) | mask(c, y)) & full_[c]);
  }
  bool leq(int c, int x, int y) const { return meet(c, x, y) == x; }

  /// Join/meet of a list, folded in the given order.
  int join_all(int c, const std::vector<int>& xs) const {
    int r = bot(c);
    for (int x : xs) r = join(c, r, x);
    return r;
  }
  int meet_all(int c, const std::vector<int>& xs) const {
    int r = top(c);
    for (int x : xs) r = meet(c, r, x);
    return r;
  }

  const std::optional<FrameTables>& tables() const { return tables_; }

 private:
  std::uint64_t mask(int c, int x) const { return info_->masks[c][x]; }
  int lookup(int c, std::uint64_t m) const {
    if (!dense_[c].empty()) return dense_[c][m];
    return info_->index[c].at(m);
  }
  void init_masks() {
    info_ = &sieve_info(carrier_);
    if (!info_->star) fail(Errc::ShapeMismatch, "mask operations need arbitrary arrow sets");
    const auto& cat = carrier_->cat();
    for (int c = 0; c < cat.object_count(); ++c) {
      auto bits = cat.arrows_into(c).size() * static_cast<std::size_t>(info_->width);
      full_.push_back(bits >= 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << bits) - 1);
      dense_.emplace_back();
      if (bits <= 20) {
        dense_[c].assign(std::size_t(1) << bits, -1);
        for (std::size_t k = 0; k < info_->masks[c].size(); ++k) dense_[c][info_->masks[c][k]] = static_cast<int>(k);
      }
    }
  }

  PresheafPtr carrier_;
  FrameKind kind_;
  std::string name_;
  std::optional<FrameTables> tables_;
  const SieveInfo* info_ = nullptr;
  std::vector<std::uint64_t> full_;
  std::vector<std::vector<int>> dense_;
};

using FramePtr = std::shared_ptr<const InternalFrame>;

// ---------------------------------------------------------------------------
// Structure maps as transformations

inline NatTransform frame_top_map(const InternalFrame& H) {
  NatTransform r{terminal(H.base()), H.carrier(), {}};
  for (int c = 0; c < H.cat().object_count(); ++c) r.components.push_back({H.top(c)});
  return r;
}

inline NatTransform frame_bot_map(const InternalFrame& H) {
  NatTransform r{terminal(H.base()), H.carrier(), {}};
  for (int c = 0; c < H.cat().object_count(); ++c) r.components.push_back({H.bot(c)});
  return r;
}

enum class FrameOp { Meet, Join, Imp };

inline int apply_op(const InternalFrame& H, FrameOp op, int c, int x, int y) {
  switch (op) {
    case FrameOp::Meet: return H.meet(c, x, y);
    case FrameOp::Join: return H.join(c, x, y);
    case FrameOp::Imp: return H.imp(c, x, y);
  }
  return -1;
}

/// H x H -> H for one of the binary operations.
inline NatTransform frame_op_map(const InternalFrame& H, FrameOp op) {
  auto P = product(H.carrier(), H.carrier());
  NatTransform r{P, H.carrier(), {}};
  for (int c = 0; c < H.cat().object_count(); ++c) {
    int n = H.size(c);
    r.components.emplace_back(P->size(c));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) r.components[c][x * n + y] = apply_op(H, op, c, x, y);
  }
  return r;
}

/// order[x][y] iff x <= y in H(C).
inline std::vector<std::vector<char>> order_table(const InternalFrame& H, int c) {
  int n = H.size(c);
  std::vector<std::vector<char>> t(n, std::vector<char>(n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) t[x][y] = H.leq(c, x, y);
  return t;
}

// ---------------------------------------------------------------------------
// Law checking

namespace detail {

/// Calls fn on every tuple in [0,n)^k when n^k <= budget, otherwise on a
/// fixed-seed sample of `budget` tuples.  Stops early when fn returns false.
inline void for_tuples(int n, int k, std::size_t budget, const std::function<bool(const int*)>& fn) {
  double total = 1;
  for (int i = 0; i < k; ++i) total *= n;
  int t[3] = {0, 0, 0};
  if (total <= static_cast<double>(budget)) {
    auto count = static_cast<std::size_t>(total);
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t r = idx;
      for (int i = k - 1; i >= 0; --i) {
        t[i] = static_cast<int>(r % n);
        r /= n;
      }
      if (!fn(t)) return;
    }
    return;
  }
  std::mt19937_64 rng(0x5eedULL + static_cast<unsigned>(n) * 31 + static_cast<unsigned>(k));
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (std::size_t s = 0; s < budget; ++s) {
    for (int i = 0; i < k; ++i) t[i] = pick(rng);
    if (!fn(t)) return;
  }
}

}  // namespace detail

struct LawViolation {
  Errc code;
  std::string detail;
};

/// First failing Heyting equation or naturality square, if any.  Each
/// family of equations is checked exhaustively up to `budget` tuples per
/// object and on a fixed sample beyond that.
inline std::optional<LawViolation> frame_law_violation(const InternalFrame& H, std::size_t budget = 1u << 22) {
  const auto& cat = H.cat();
  std::optional<LawViolation> out;
  for (int c = 0; c < cat.object_count() && !out; ++c) {
    int n = H.size(c);
    auto el = [&](int x) { return H.element_name(c, x); };
    auto bad = [&](const std::string& law, const std::string& witness) {
      out = LawViolation{Errc::HeytingAxiomFailure, law + " fails at " + cat.object_name(c) + " for " + witness};
      return false;
    };
    int T = H.top(c), B = H.bot(c);
    detail::for_tuples(n, 1, budget, [&](const int* t) {
      int x = t[0];
      if (H.meet(c, x, T) != x) return bad("x /\\ top = x", "x=" + el(x));
      if (H.join(c, x, B) != x) return bad("x \\/ bot = x", "x=" + el(x));
      if (H.meet(c, x, x) != x) return bad("x /\\ x = x", "x=" + el(x));
      if (H.join(c, x, x) != x) return bad("x \\/ x = x", "x=" + el(x));
      if (H.imp(c, x, x) != T) return bad("(x => x) = top", "x=" + el(x));
      return true;
    });
    if (out) break;
    detail::for_tuples(n, 2, budget, [&](const int* t) {
      int x = t[0], y = t[1];
      auto w = "x=" + el(x) + ", y=" + el(y);
      if (H.meet(c, x, y) != H.meet(c, y, x)) return bad("x /\\ y = y /\\ x", w);
      if (H.join(c, x, y) != H.join(c, y, x)) return bad("x \\/ y = y \\/ x", w);
      if (H.meet(c, x, H.join(c, x, y)) != x) return bad("x /\\ (x \\/ y) = x", w);
      if (H.join(c, x, H.meet(c, x, y)) != x) return bad("x \\/ (x /\\ y) = x", w);
      int xy = H.imp(c, x, y);
      if (H.meet(c, x, xy) != H.meet(c, x, y)) return bad("x /\\ (x => y) = x /\\ y", w);
      if (H.meet(c, y, xy) != y) return bad("y /\\ (x => y) = y", w);
      return true;
    });
    if (out) break;
    detail::for_tuples(n, 3, budget, [&](const int* t) {
      int x = t[0], y = t[1], z = t[2];
      auto w = "x=" + el(x) + ", y=" + el(y) + ", z=" + el(z);
      if (H.meet(c, x, H.meet(c, y, z)) != H.meet(c, H.meet(c, x, y), z)) return bad("/\\ associative", w);
      if (H.join(c, x, H.join(c, y, z)) != H.join(c, H.join(c, x, y), z)) return bad("\\/ associative", w);
      if (H.imp(c, x, H.meet(c, y, z)) != H.meet(c, H.imp(c, x, y), H.imp(c, x, z)))
        return bad("x => (y /\\ z) = (x => y) /\\ (x => z)", w);
      return true;
    });
  }
  if (out) return out;
  for (int f = 0; f < cat.arrow_count() && !out; ++f) {
    if (cat.is_identity(f)) continue;
    int c = cat.arrow(f).cod, d = cat.arrow(f).dom;
    auto bad = [&](const std::string& what, const std::string& witness) {
      out = LawViolation{Errc::NonNaturalStructureMap,
                         what + " is not natural along " + cat.arrow(f).name + " at " + witness};
      return false;
    };
    if (H.restrict(f, H.top(c)) != H.top(d)) {
      bad("top", H.element_name(c, H.top(c)));
      break;
    }
    if (H.restrict(f, H.bot(c)) != H.bot(d)) {
      bad("bot", H.element_name(c, H.bot(c)));
      break;
    }
    detail::for_tuples(H.size(c), 2, budget, [&](const int* t) {
      int x = t[0], y = t[1];
      int rx = H.restrict(f, x), ry = H.restrict(f, y);
      auto w = "(" + H.element_name(c, x) + "," + H.element_name(c, y) + ")";
      for (auto [op, nm] : {std::pair{FrameOp::Meet, "meet"}, {FrameOp::Join, "join"}, {FrameOp::Imp, "imp"}})
        if (H.restrict(f, apply_op(H, op, c, x, y)) != apply_op(H, op, d, rx, ry)) return bad(nm, w);
      return true;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in frames

inline FramePtr frame_omega(const CategoryPtr& base) {
  auto h = omega_heyting(base);
  FrameTables t;
  for (int c = 0; c < base->object_count(); ++c) {
    t.top.push_back(h.top(c, 0));
    t.bot.push_back(h.bot(c, 0));
    t.meet.push_back(h.meet.components[c]);
    t.join.push_back(h.join.components[c]);
    t.imp.push_back(h.imp.components[c]);
  }
  return std::make_shared<const InternalFrame>(omega(base), FrameKind::Omega, "omega", std::move(t));
}

inline FramePtr frame_omega_star(const CategoryPtr& base) {
  return std::make_shared<const InternalFrame>(omega_star(base), FrameKind::OmegaStar, "omega_star");
}

namespace detail {
inline std::string subset_name(std::uint64_t bits, int n) {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < n; ++i)
    if (bits >> i & 1) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
  return s + "}";
}

inline PresheafPtr make_powerset(const CategoryPtr& base, int n) {
  const auto& cat = *base;
  SieveInfo info;
  info.star = true;
  info.width = n;
  std::uint64_t block = (std::uint64_t(1) << n) - 1;
  std::vector<std::vector<std::string>> el(cat.object_count());
  for (int c = 0; c < cat.object_count(); ++c) {
    const auto& into = cat.arrows_into(c);
    std::size_t bits = into.size() * static_cast<std::size_t>(n);
    if (bits > 24 || (std::size_t(1) << bits) > limits().max_elements)
      fail(Errc::SizeGuardExceeded, "powerset(" + std::to_string(n) + ") at " + cat.object_name(c));
    std::vector<std::uint64_t> ms(std::size_t(1) << bits);
    for (std::size_t m = 0; m < ms.size(); ++m) ms[m] = m;
    std::sort(ms.begin(), ms.end(), mask_less);
    std::unordered_map<std::uint64_t, int> idx;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      idx[ms[i]] = static_cast<int>(i);
      if (cat.object_count() == 1 && into.size() == 1) {
        el[c].push_back(subset_name(ms[i], n));
      } else {
        std::string s = "[";
        for (std::size_t k = 0; k < into.size(); ++k) {
          if (k) s += ",";
          s += cat.arrow(into[k]).name + ":" + subset_name(ms[i] >> (k * n) & block, n);
        }
        el[c].push_back(s + "]");
      }
    }
    info.masks.push_back(std::move(ms));
    info.index.push_back(std::move(idx));
  }
  // Restriction along g : D -> C: the block of f in the result is the block
  // of g . f in the argument.
  std::vector<std::vector<int>> re(cat.arrow_count());
  for (int g = 0; g < cat.arrow_count(); ++g) {
    int c = cat.arrow(g).cod, d = cat.arrow(g).dom;
    for (auto m : info.masks[c]) {
      std::uint64_t r = 0;
      for (int f : cat.arrows_into(d)) {
        auto from = static_cast<unsigned>(cat.into_position(cat.compose(g, f)) * n);
        auto to = static_cast<unsigned>(cat.into_position(f) * n);
        r |= (m >> from & block) << to;
      }
      re[g].push_back(info.index[d].at(r));
    }
  }
  return std::make_shared<const Presheaf>(base, "P(" + std::to_string(n) + ")", el, re, std::move(info));
}
}  // namespace detail

/// Subsets of an n-element set X.  Over a base with several objects the
/// element at C is a family of subsets indexed by the arrows into C, the
/// direct image of the constant P(X) along the inclusion of the objects.
inline FramePtr frame_powerset(const CategoryPtr& base, int n) {
  if (n < 1 || n > 12) fail(Errc::InvalidInput, "powerset size must be between 1 and 12");
  auto P = detail::cached(&detail::Caches::indexed,
                          std::make_pair(static_cast<const void*>(base.get()), -100 - n),
                          [&] { return detail::make_powerset(base, n); });
  return std::make_shared<const InternalFrame>(P, FrameKind::Powerset, "powerset(" + std::to_string(n) + ")");
}

/// "omega", "omega_star", "powerset(n)"; empty result for other names.
inline FramePtr builtin_frame(const CategoryPtr& base, const std::string& name) {
  if (name == "omega") return frame_omega(base);
  if (name == "omega_star") return frame_omega_star(base);
  if (name.rfind("powerset(", 0) == 0 && name.back() == ')') {
    auto digits = name.substr(9, name.size() - 10);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      fail(Errc::InvalidInput, "bad frame name " + name);
    return frame_powerset(base, std::stoi(digits));
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Frames given by structure maps

struct FrameCandidate {
  std::string name = "H";
  PresheafPtr carrier;
  NatTransform top, bot, meet, join, imp;
};

/// Checks shapes, naturality and the Heyting equations; the result keeps
/// the operation tables.
inline FramePtr validate_frame(const FrameCandidate& k) {
  const auto& H = k.carrier;
  auto one = terminal(H->base());
  auto HH = product(H, H);
  for (auto [m, nm, src] : {std::tuple{&k.top, "top", one}, {&k.bot, "bot", one}, {&k.meet, "meet", HH},
                            {&k.join, "join", HH}, {&k.imp, "imp", HH}}) {
    if (m->source != src || m->target != H)
      fail(Errc::ShapeMismatch, std::string(nm) + " has the wrong source or target");
    if (auto v = naturality_violation(*m)) fail(Errc::NonNaturalStructureMap, std::string(nm) + ": " + *v);
  }
  FrameTables t;
  for (int c = 0; c < H->cat().object_count(); ++c) {
    t.top.push_back(k.top(c, 0));
    t.bot.push_back(k.bot(c, 0));
    t.meet.push_back(k.meet.components[c]);
    t.join.push_back(k.join.components[c]);
    t.imp.push_back(k.imp.components[c]);
  }
  auto F = std::make_shared<const InternalFrame>(H, FrameKind::Custom, k.name, std::move(t));
  if (auto v = frame_law_violation(*F)) fail(v->code, v->detail);
  return F;
}

inline FrameCandidate candidate_of(const InternalFrame& H) {
  return {H.name(), H.carrier(), frame_top_map(H), frame_bot_map(H), frame_op_map(H, FrameOp::Meet),
          frame_op_map(H, FrameOp::Join), frame_op_map(H, FrameOp::Imp)};
}

// ---------------------------------------------------------------------------
// Adjoints of restriction

/// Left adjoint of H(f) for f : D -> C: the least x in H(C) with y <= H(f)(x).
inline int exists_along(const InternalFrame& H, int f, int y) {
  int c = H.cat().arrow(f).cod, d = H.cat().arrow(f).dom;
  int r = H.top(c);
  for (int x = 0; x < H.size(c); ++x)
    if (H.leq(d, y, H.restrict(f, x))) r = H.meet(c, r, x);
  return r;
}

/// Right adjoint of H(f): the greatest x in H(C) with H(f)(x) <= y.
inline int forall_along(const InternalFrame& H, int f, int y) {
  int c = H.cat().arrow(f).cod, d = H.cat().arrow(f).dom;
  int r = H.bot(c);
  for (int x = 0; x < H.size(c); ++x)
    if (H.leq(d, H.restrict(f, x), y)) r = H.join(c, r, x);
  return r;
}

/// On Omega, the left adjoint of pulling back along f sends a sieve y on
/// dom(f) to {f . k | k in y}.
inline ArrowMask sieve_image(const FiniteCategory& cat, int f, ArrowMask y) {
  ArrowMask r = 0;
  for (int k : cat.arrows_into(cat.arrow(f).dom))
    if (y & bit_of(cat, k)) r |= bit_of(cat, cat.compose(f, k));
  return r;
}

// ---------------------------------------------------------------------------
// The initial frame map Omega -> H

/// i_C(s) = join over f in s of the left adjoint along f applied to top.
inline NatTransform initial_map(const InternalFrame& H) {
  const auto& cat = H.cat();
  auto O = omega(H.base());
  const auto& info = sieve_info(O);
  std::vector<int> lifted(cat.arrow_count());
  for (int f = 0; f < cat.arrow_count(); ++f) lifted[f] = exists_along(H, f, H.top(cat.arrow(f).dom));
  NatTransform r{O, H.carrier(), {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back();
    for (ArrowMask s : info.masks[c]) {
      int v = H.bot(c);
      for (int f : cat.arrows_into(c))
        if (s & bit_of(cat, f)) v = H.join(c, v, lifted[f]);
      r.components[c].push_back(v);
    }
  }
  return r;
}

/// Why m : Omega -> H is not a frame map: naturality, finite meets and
/// joins at each object, and commuting with the left adjoints of
/// restriction (preservation of indexed joins).
inline std::optional<std::string> frame_map_violation(const InternalFrame& H, const NatTransform& m) {
  const auto& cat = H.cat();
  auto O = omega(H.base());
  if (m.source != O || m.target != H.carrier()) return "wrong source or target";
  if (auto v = naturality_violation(m)) return v;
  const auto& info = sieve_info(O);
  for (int c = 0; c < cat.object_count(); ++c) {
    const auto& ms = info.masks[c];
    int n = static_cast<int>(ms.size());
    auto oname = cat.object_name(c);
    if (m(c, mask_index(O, c, full_mask(cat, c))) != H.top(c)) return "top not preserved at " + oname;
    if (m(c, mask_index(O, c, 0)) != H.bot(c)) return "bot not preserved at " + oname;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        if (m(c, mask_index(O, c, ms[x] & ms[y])) != H.meet(c, m(c, x), m(c, y)))
          return "meet not preserved at " + oname;
        if (m(c, mask_index(O, c, ms[x] | ms[y])) != H.join(c, m(c, x), m(c, y)))
          return "join not preserved at " + oname;
      }
  }
  for (int f = 0; f < cat.arrow_count(); ++f) {
    int c = cat.arrow(f).cod, d = cat.arrow(f).dom;
    for (std::size_t y = 0; y < info.masks[d].size(); ++y) {
      int lhs = m(c, mask_index(O, c, sieve_image(cat, f, info.masks[d][y])));
      if (lhs != exists_along(H, f, m(d, static_cast<int>(y))))
        return "left adjoint along " + cat.arrow(f).name + " not preserved";
    }
  }
  return std::nullopt;
}

/// All frame maps Omega -> H, found by a backtracking search that fixes
/// values object by object and prunes with the frame-map conditions.
/// Stops after `cap` maps when cap > 0.
inline std::vector<NatTransform> enumerate_frame_maps(const InternalFrame& H, std::size_t cap = 0) {
  const auto& cat = H.cat();
  auto O = omega(H.base());
  const auto& info = sieve_info(O);
  const int nobj = cat.object_count();

  std::vector<int> order(nobj);
  for (int c = 0; c < nobj; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cat.arrows_into(a).size() < cat.arrows_into(b).size();
  });
  struct Var {
    int c, s;
  };
  std::vector<Var> vars;
  for (int c : order) {
    std::vector<int> ss(info.masks[c].size());
    for (std::size_t s = 0; s < ss.size(); ++s) ss[s] = static_cast<int>(s);
    std::stable_sort(ss.begin(), ss.end(), [&](int a, int b) {
      return __builtin_popcountll(info.masks[c][a]) < __builtin_popcountll(info.masks[c][b]);
    });
    for (int s : ss) vars.push_back({c, s});
  }
  std::vector<std::vector<int>> val(nobj);
  for (int c = 0; c < nobj; ++c) val[c].assign(info.masks[c].size(), -1);
  auto idx = [&](int c, ArrowMask m) { return mask_index(O, c, m); };

  // Forced value of (c, s) from what is already assigned, or -1.
  auto forced = [&](int c, int s) -> int {
    ArrowMask m = info.masks[c][s];
    if (m == full_mask(cat, c)) return H.top(c);
    if (m == 0) return H.bot(c);
    for (int f : cat.arrows_into(c)) {
      int d = cat.arrow(f).dom;
      for (std::size_t y = 0; y < info.masks[d].size(); ++y)
        if (val[d][y] >= 0 && sieve_image(cat, f, info.masks[d][y]) == m) return exists_along(H, f, val[d][y]);
    }
    const auto& ms = info.masks[c];
    for (std::size_t a = 0; a < ms.size(); ++a)
      for (std::size_t b = 0; b < ms.size(); ++b)
        if (val[c][a] >= 0 && val[c][b] >= 0) {
          if ((ms[a] | ms[b]) == m) return H.join(c, val[c][a], val[c][b]);
          if ((ms[a] & ms[b]) == m) return H.meet(c, val[c][a], val[c][b]);
        }
    return -1;
  };
  // Every condition whose inputs are all assigned.
  auto consistent = [&](int c) -> bool {
    const auto& ms = info.masks[c];
    for (std::size_t a = 0; a < ms.size(); ++a)
      for (std::size_t b = 0; b < ms.size(); ++b) {
        if (val[c][a] < 0 || val[c][b] < 0) continue;
        int mi = val[c][idx(c, ms[a] & ms[b])], ji = val[c][idx(c, ms[a] | ms[b])];
        if (mi >= 0 && mi != H.meet(c, val[c][a], val[c][b])) return false;
        if (ji >= 0 && ji != H.join(c, val[c][a], val[c][b])) return false;
      }
    for (int f = 0; f < cat.arrow_count(); ++f) {
      int cod = cat.arrow(f).cod, dom = cat.arrow(f).dom;
      if (cod != c && dom != c) continue;
      for (std::size_t s = 0; s < info.masks[cod].size(); ++s) {
        int r = O->restrict(f, static_cast<int>(s));
        if (val[cod][s] >= 0 && val[dom][r] >= 0 && H.restrict(f, val[cod][s]) != val[dom][r]) return false;
      }
      for (std::size_t y = 0; y < info.masks[dom].size(); ++y) {
        int up = idx(cod, sieve_image(cat, f, info.masks[dom][y]));
        if (val[dom][y] >= 0 && val[cod][up] >= 0 && val[cod][up] != exists_along(H, f, val[dom][y]))
          return false;
      }
    }
    return true;
  };

  std::vector<NatTransform> out;
  std::function<void(std::size_t)> go = [&](std::size_t k) {
    if (cap && out.size() >= cap) return;
    if (k == vars.size()) {
      out.push_back(NatTransform{O, H.carrier(), val});
      return;
    }
    auto [c, s] = vars[k];
    int f = forced(c, s);
    int lo = f >= 0 ? f : 0, hi = f >= 0 ? f + 1 : H.size(c);
    for (int v = lo; v < hi; ++v) {
      val[c][s] = v;
      if (consistent(c)) go(k + 1);
      val[c][s] = -1;
    }
  };
  go(0);
  std::sort(out.begin(), out.end(),
            [](const NatTransform& a, const NatTransform& b) { return a.components < b.components; });
  return out;
}

// ---------------------------------------------------------------------------
// The right adjoint and the modality

/// tau_C(x) = the largest sieve s with i_C(s) <= x.
inline NatTransform top_classifier(const InternalFrame& H, const NatTransform& i) {
  const auto& cat = H.cat();
  auto O = omega(H.base());
  const auto& info = sieve_info(O);
  NatTransform r{H.carrier(), O, {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(H.size(c));
    for (int x = 0; x < H.size(c); ++x) {
      ArrowMask m = 0;
      for (std::size_t s = 0; s < info.masks[c].size(); ++s)
        if (H.leq(c, i(c, static_cast<int>(s)), x)) m |= info.masks[c][s];
      r.components[c][x] = mask_index(O, c, m);
    }
  }
  return r;
}

/// The subpresheaf of H picked out by x = top.
inline Subpresheaf top_subobject(const InternalFrame& H) {
  auto s = empty_subfamily(H.carrier());
  for (int c = 0; c < H.cat().object_count(); ++c) s.members[c][H.top(c)] = 1;
  return s;
}

struct FrameMaps {
  FramePtr frame;
  NatTransform initial;     // Omega -> H
  NatTransform classifier;  // H -> Omega
  NatTransform box;         // H -> H
};

/// Builds i, its right adjoint and the modality, checking that i is a frame
/// map, that it is the only one when `check_unique`, and that the right
/// adjoint classifies the top element.
inline FrameMaps frame_maps(const FramePtr& H, bool check_unique = true) {
  auto i = initial_map(*H);
  if (auto v = frame_map_violation(*H, i)) fail(Errc::NotAFrameMap, H->name() + ": " + *v);
  if (check_unique) {
    auto all = enumerate_frame_maps(*H, 2);
    if (all.size() != 1 || !nat_equal(all[0], i))
      fail(Errc::UniquenessViolation, H->name() + ": " + std::to_string(all.size()) + " frame maps from Omega");
  }
  auto tau = top_classifier(*H, i);
  if (!nat_equal(tau, classify(top_subobject(*H))))
    fail(Errc::UniquenessViolation, H->name() + ": right adjoint differs from the classifier of top");
  auto box = compose_nat(i, tau);
  return {H, std::move(i), std::move(tau), std::move(box)};
}

/// First element where i_C(s) <= x and s <= tau_C(x) disagree.
inline std::optional<std::string> galois_violation(const FrameMaps& m) {
  const auto& H = *m.frame;
  const auto& cat = H.cat();
  auto O = omega(H.base());
  const auto& info = sieve_info(O);
  for (int c = 0; c < cat.object_count(); ++c)
    for (std::size_t s = 0; s < info.masks[c].size(); ++s)
      for (int x = 0; x < H.size(c); ++x) {
        bool left = H.leq(c, m.initial(c, static_cast<int>(s)), x);
        ArrowMask t = info.masks[c][m.classifier(c, x)];
        bool right = (info.masks[c][s] & ~t) == 0;
        if (left != right) return O->element_name(c, static_cast<int>(s)) + " vs " + H.element_name(c, x);
      }
  return std::nullopt;
}

/// First object where i is not injective.
inline std::optional<std::string> faithfulness_violation(const FrameMaps& m) {
  const auto& cat = m.frame->cat();
  for (int c = 0; c < cat.object_count(); ++c) {
    std::vector<int> seen(m.frame->size(c), -1);
    for (std::size_t s = 0; s < m.initial.components[c].size(); ++s) {
      int v = m.initial.components[c][s];
      if (seen[v] >= 0) {
        auto O = m.initial.source;
        return O->element_name(c, seen[v]) + " and " + O->element_name(c, static_cast<int>(s)) +
               " both go to " + m.frame->element_name(c, v) + " at " + cat.object_name(c);
      }
      seen[v] = static_cast<int>(s);
    }
  }
  return std::nullopt;
}

/// First failure among: deflationary, idempotent, preserves binary meets,
/// preserves top, monotone.
inline std::optional<std::string> modality_violation(const InternalFrame& H, const NatTransform& box,
                                                     std::size_t budget = 1u << 22) {
  const auto& cat = H.cat();
  std::optional<std::string> out;
  for (int c = 0; c < cat.object_count() && !out; ++c) {
    auto at = " at " + cat.object_name(c) + " for ";
    if (box(c, H.top(c)) != H.top(c)) {
      out = "box top = top fails" + at + "top";
      break;
    }
    detail::for_tuples(H.size(c), 1, budget, [&](const int* t) {
      int x = t[0], bx = box(c, x);
      if (!H.leq(c, bx, x)) out = "box x <= x fails" + at + H.element_name(c, x);
      else if (box(c, bx) != bx) out = "box box x = box x fails" + at + H.element_name(c, x);
      return !out;
    });
    if (out) break;
    detail::for_tuples(H.size(c), 2, budget, [&](const int* t) {
      int x = t[0], y = t[1];
      auto w = H.element_name(c, x) + ", " + H.element_name(c, y);
      if (box(c, H.meet(c, x, y)) != H.meet(c, box(c, x), box(c, y))) out = "box preserves meets fails" + at + w;
      else if (H.leq(c, x, y) && !H.leq(c, box(c, x), box(c, y))) out = "box monotone fails" + at + w;
      return !out;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantifiers along an index presheaf I

/// H -> H^I, x |-> the family (E, f, a) |-> H(f)(x).
inline NatTransform diagonal_map(const InternalFrame& H, const PresheafPtr& I) {
  const auto& cat = H.cat();
  auto E = exponential(I, H.carrier());
  const auto& info = exponential_info(E);
  NatTransform r{H.carrier(), E, {}};
  std::vector<int> t;
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(H.size(c));
    for (int x = 0; x < H.size(c); ++x) {
      t.clear();
      for (int e = 0; e < cat.object_count(); ++e)
        for (int h : cat.hom(e, c))
          for (std::size_t a = 0; a < I->size(e); ++a) t.push_back(H.restrict(h, x));
      r.components[c][x] = info.index[c].at(t);
    }
  }
  return r;
}

/// A family over the slots (E, f : E -> C, a) of yC x I, given as
/// (f, value in H(E)) pairs.
using SlotValues = std::vector<std::pair<int, int>>;

/// The largest s in H(C) with H(f)(s) <= v for every slot.
inline int forall_at(const InternalFrame& H, int c, const SlotValues& slots) {
  int r = H.bot(c);
  for (int s = 0; s < H.size(c); ++s) {
    bool ok = true;
    for (auto [f, v] : slots)
      if (!H.leq(H.cat().arrow(f).dom, H.restrict(f, s), v)) {
        ok = false;
        break;
      }
    if (ok) r = H.join(c, r, s);
  }
  return r;
}

/// The least s in H(C) with v <= H(f)(s) for every slot.
inline int exists_at(const InternalFrame& H, int c, const SlotValues& slots) {
  int r = H.top(c);
  for (int s = 0; s < H.size(c); ++s) {
    bool ok = true;
    for (auto [f, v] : slots)
      if (!H.leq(H.cat().arrow(f).dom, v, H.restrict(f, s))) {
        ok = false;
        break;
      }
    if (ok) r = H.meet(c, r, s);
  }
  return r;
}

namespace detail {
inline NatTransform quantifier_map(const InternalFrame& H, const PresheafPtr& I, bool universal) {
  const auto& cat = H.cat();
  auto E = exponential(I, H.carrier());
  const auto& info = exponential_info(E);
  NatTransform r{E, H.carrier(), {}};
  SlotValues slots;
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(E->size(c));
    for (std::size_t k = 0; k < E->size(c); ++k) {
      slots.clear();
      int pos = 0;
      for (int e = 0; e < cat.object_count(); ++e)
        for (int h : cat.hom(e, c))
          for (std::size_t a = 0; a < I->size(e); ++a) slots.push_back({h, info.tables[c][k][pos++]});
      r.components[c][k] = universal ? forall_at(H, c, slots) : exists_at(H, c, slots);
    }
  }
  return r;
}
}  // namespace detail

/// H^I -> H, right adjoint of the diagonal.
inline NatTransform forall_map(const InternalFrame& H, const PresheafPtr& I) {
  return detail::quantifier_map(H, I, true);
}

/// H^I -> H, left adjoint of the diagonal.
inline NatTransform exists_map(const InternalFrame& H, const PresheafPtr& I) {
  return detail::quantifier_map(H, I, false);
}

/// Pointwise order on H^I(C).
inline bool family_leq(const InternalFrame& H, const PresheafPtr& E, int c, int x, int y) {
  const auto& info = exponential_info(E);
  const auto& cat = H.cat();
  const auto& tx = info.tables[c][x];
  const auto& ty = info.tables[c][y];
  int pos = 0;
  for (int e = 0; e < cat.object_count(); ++e) {
    int n = static_cast<int>(cat.hom(e, c).size() * info.dom->size(e));
    for (int k = 0; k < n; ++k, ++pos)
      if (!H.leq(e, tx[pos], ty[pos])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Text format
//
//   frame <name> over <category>
//   carrier <presheaf>
//   top <object> : <x>
//   bot <object> : <x>
//   meet <object> : <x> <y> -> <z> ...
//   join <object> : ...
//   imp <object> : ...
//   end

inline std::string frame_to_text(const InternalFrame& H) {
  const auto& cat = H.cat();
  std::ostringstream o;
  o << "frame " << H.name() << " over " << cat.name() << "\n";
  o << "carrier " << H.carrier()->name() << "\n";
  for (int c = 0; c < cat.object_count(); ++c) {
    o << "top " << cat.object_name(c) << " : " << H.element_name(c, H.top(c)) << "\n";
    o << "bot " << cat.object_name(c) << " : " << H.element_name(c, H.bot(c)) << "\n";
  }
  for (auto [op, nm] : {std::pair{FrameOp::Meet, "meet"}, {FrameOp::Join, "join"}, {FrameOp::Imp, "imp"}})
    for (int c = 0; c < cat.object_count(); ++c) {
      o << nm << " " << cat.object_name(c) << " :";
      for (int x = 0; x < H.size(c); ++x)
        for (int y = 0; y < H.size(c); ++y)
          o << " " << H.element_name(c, x) << " " << H.element_name(c, y) << " -> "
            << H.element_name(c, apply_op(H, op, c, x, y));
      o << "\n";
    }
  o << "end\n";
  return o.str();
}

inline FramePtr frame_from_block(const text::Block& b, const std::map<std::string, CategoryPtr>& cats,
                                 const std::map<std::string, PresheafPtr>& presheaves) {
  if (b.kind != "frame" || b.header.size() != 3 || b.header[1] != "over")
    fail(Errc::ParseError, text::where(b.origin, b.line) + ": expected 'frame <name> over <category>'");
  auto ci = cats.find(b.header[2]);
  if (ci == cats.end())
    fail(Errc::UndeclaredSymbol, text::where(b.origin, b.line) + ": unknown category " + b.header[2]);
  const auto& cat = *ci->second;
  FrameCandidate k;
  k.name = b.header[0];
  std::vector<std::vector<int>> tops, bots;
  std::vector<std::vector<std::vector<int>>> ops(3);
  for (auto& l : b.body) {
    auto& t = l.tokens;
    if (t[0] == "carrier") {
      if (t.size() != 2) text::bad_line(b, l, "expected 'carrier <presheaf>'");
      auto pi = presheaves.find(t[1]);
      if (pi == presheaves.end()) text::bad_line(b, l, "unknown presheaf " + t[1]);
      if (pi->second->base() != ci->second) text::bad_line(b, l, t[1] + " is over another category");
      k.carrier = pi->second;
      int n = cat.object_count();
      tops.assign(n, {-1});
      bots.assign(n, {-1});
      for (auto& op : ops) {
        op.clear();
        for (int c = 0; c < n; ++c) op.emplace_back(k.carrier->size(c) * k.carrier->size(c), -1);
      }
      continue;
    }
    if (!k.carrier) text::bad_line(b, l, "'carrier' must come first");
    if (t.size() < 3 || t[2] != ":") text::bad_line(b, l, "expected '<keyword> <object> : ...'");
    int c = cat.find_object(t[1]);
    if (c < 0) text::bad_line(b, l, "unknown object " + t[1]);
    auto elem = [&](const std::string& s) {
      int x = k.carrier->find(c, s);
      if (x < 0) text::bad_line(b, l, "unknown element " + s);
      return x;
    };
    if (t[0] == "top" || t[0] == "bot") {
      if (t.size() != 4) text::bad_line(b, l, "expected one element");
      (t[0] == "top" ? tops : bots)[c][0] = elem(t[3]);
      continue;
    }
    int which = t[0] == "meet" ? 0 : t[0] == "join" ? 1 : t[0] == "imp" ? 2 : -1;
    if (which < 0) text::bad_line(b, l, "unknown frame line '" + t[0] + "'");
    if ((t.size() - 3) % 4 != 0) text::bad_line(b, l, "expected entries '<x> <y> -> <z>'");
    int n = static_cast<int>(k.carrier->size(c));
    for (std::size_t i = 3; i < t.size(); i += 4) {
      if (t[i + 2] != "->") text::bad_line(b, l, "expected '->'");
      ops[which][c][elem(t[i]) * n + elem(t[i + 1])] = elem(t[i + 3]);
    }
  }
  if (!k.carrier) fail(Errc::ParseError, text::where(b.origin, b.line) + ": frame without carrier");
  auto one = terminal(ci->second);
  auto HH = product(k.carrier, k.carrier);
  static const char* names[] = {"meet", "join", "imp"};
  for (int c = 0; c < cat.object_count(); ++c) {
    if (tops[c][0] < 0 || bots[c][0] < 0)
      fail(Errc::ParseError, text::where(b.origin, b.line) + ": top/bot missing at " + cat.object_name(c));
    for (int w = 0; w < 3; ++w)
      for (int v : ops[w][c])
        if (v < 0)
          fail(Errc::ParseError, text::where(b.origin, b.line) + ": " + names[w] + " table incomplete at " +
                                     cat.object_name(c));
  }
  k.top = {one, k.carrier, tops};
  k.bot = {one, k.carrier, bots};
  k.meet = {HH, k.carrier, ops[0]};
  k.join = {HH, k.carrier, ops[1]};
  k.imp = {HH, k.carrier, ops[2]};
  return validate_frame(k);
}

}  // namespace homl

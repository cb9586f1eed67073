#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "fincat.hpp"
#include "text.hpp"

namespace homl {

class Presheaf;
using PresheafPtr = std::shared_ptr<const Presheaf>;

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct ProductInfo {
  PresheafPtr left, right;
};

/// B^A.  The element of B^A(C) with index k is the natural transformation
/// yC x A -> B whose values, flattened over the elements of yC x A (object
/// by object), are tables[C][k].
struct ExponentialInfo {
  PresheafPtr dom;  // A
  PresheafPtr cod;  // B
  std::vector<PresheafPtr> slots;          // per C: yC x A
  std::vector<std::vector<int>> offset;    // per C, per object E
  std::vector<std::vector<std::vector<int>>> tables;
  std::vector<std::unordered_map<std::vector<int>, int, VecHash>> index;

  /// Position of the slot (E, h : E -> C, a) in a table of B^A(C).
  int slot(const FiniteCategory& cat, int c, int e, int h, int a) const {
    return offset[c][e] + cat.hom_position(h) * static_cast<int>(dom_size(e)) + a;
  }
  std::size_t dom_size(int e) const;
};

/// Sieves (or arbitrary arrow sets) on each object, as bitmasks over
/// arrows_into(C).  With width n > 1 each arrow owns n consecutive bits and
/// an element is a family of subsets of {0..n-1} indexed by arrows.
struct SieveInfo {
  bool star = false;
  int width = 1;
  std::vector<std::vector<std::uint64_t>> masks;
  std::vector<std::unordered_map<std::uint64_t, int>> index;
};

using Structure = std::variant<std::monostate, ProductInfo, ExponentialInfo, SieveInfo>;

/// A finite presheaf: contravariant on its base.  restriction(f) for
/// f : D -> C maps indices of F(C) to indices of F(D).
class Presheaf {
 public:
  Presheaf(CategoryPtr base, std::string name, std::vector<std::vector<std::string>> elements,
           std::vector<std::vector<int>> restrictions, Structure structure = {})
      : base_(std::move(base)), name_(std::move(name)), elems_(std::move(elements)),
        restrict_(std::move(restrictions)), structure_(std::move(structure)),
        lookup_(std::make_unique<Lookup>()) {}

  const CategoryPtr& base() const { return base_; }
  const FiniteCategory& cat() const { return *base_; }
  const std::string& name() const { return name_; }
  std::size_t size(int c) const { return elems_.at(c).size(); }
  std::size_t total_size() const {
    std::size_t n = 0;
    for (auto& e : elems_) n += e.size();
    return n;
  }
  const std::vector<std::string>& elements(int c) const { return elems_.at(c); }
  const std::string& element_name(int c, int x) const { return elems_.at(c).at(x); }
  const std::vector<int>& restriction(int arrow) const { return restrict_.at(arrow); }
  int restrict(int arrow, int x) const { return restrict_[arrow][x]; }

  int find(int c, const std::string& n) const {
    // Built on first use: most intermediate presheaves are never searched by name.
    std::call_once(lookup_->once, [this] {
      lookup_->maps.resize(elems_.size());
      for (std::size_t k = 0; k < elems_.size(); ++k)
        for (std::size_t i = 0; i < elems_[k].size(); ++i)
          lookup_->maps[k].emplace(elems_[k][i], static_cast<int>(i));
    });
    const auto& m = lookup_->maps.at(c);
    auto it = m.find(n);
    return it == m.end() ? -1 : it->second;
  }
  int index_of(int c, const std::string& n) const {
    int i = find(c, n);
    if (i < 0) fail(Errc::UnknownElement, n + " in " + name_ + "(" + cat().object_name(c) + ")");
    return i;
  }

  const Structure& structure() const { return structure_; }
  const ProductInfo* as_product() const { return std::get_if<ProductInfo>(&structure_); }
  const ExponentialInfo* as_exponential() const { return std::get_if<ExponentialInfo>(&structure_); }
  const SieveInfo* as_sieves() const { return std::get_if<SieveInfo>(&structure_); }

 private:
  CategoryPtr base_;
  std::string name_;
  std::vector<std::vector<std::string>> elems_;
  std::vector<std::vector<int>> restrict_;
  Structure structure_;
  struct Lookup {
    std::once_flag once;
    std::vector<std::unordered_map<std::string, int>> maps;
  };
  std::unique_ptr<Lookup> lookup_;
};

inline std::size_t ExponentialInfo::dom_size(int e) const { return dom->size(e); }

struct Element {
  PresheafPtr owner;
  int object = 0;
  int index = 0;
  const std::string& name() const { return owner->element_name(object, index); }
};

inline bool same_base(const Presheaf& a, const Presheaf& b) {
  return a.base() == b.base() || *a.base() == *b.base();
}

inline void require_same_base(const Presheaf& a, const Presheaf& b) {
  if (!same_base(a, b))
    fail(Errc::BaseMismatch, a.name() + " and " + b.name() + " live over different categories");
}

/// First functoriality violation, if any.
inline std::optional<std::string> functoriality_violation(const Presheaf& F) {
  const auto& cat = F.cat();
  for (int c = 0; c < cat.object_count(); ++c)
    for (std::size_t x = 0; x < F.size(c); ++x)
      if (F.restrict(cat.identity(c), static_cast<int>(x)) != static_cast<int>(x))
        return "restriction along " + cat.arrow(cat.identity(c)).name + " is not the identity";
  for (int g = 0; g < cat.arrow_count(); ++g)
    for (int f = 0; f < cat.arrow_count(); ++f) {
      int gf = cat.compose(g, f);
      if (gf < 0) continue;
      int c = cat.arrow(g).cod;
      for (std::size_t x = 0; x < F.size(c); ++x)
        if (F.restrict(gf, static_cast<int>(x)) != F.restrict(f, F.restrict(g, static_cast<int>(x))))
          return "F(" + cat.arrow(g).name + " . " + cat.arrow(f).name + ") != F(" +
                 cat.arrow(f).name + ") F(" + cat.arrow(g).name + ") at " + F.element_name(c, static_cast<int>(x));
    }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Natural transformations

struct NatTransform {
  PresheafPtr source, target;
  std::vector<std::vector<int>> components;  // [object][source index] -> target index

  int operator()(int c, int x) const { return components[c][x]; }
};

inline std::optional<std::string> naturality_violation(const NatTransform& a) {
  const auto& cat = a.source->cat();
  for (int f = 0; f < cat.arrow_count(); ++f) {
    int d = cat.arrow(f).dom, c = cat.arrow(f).cod;
    for (std::size_t x = 0; x < a.source->size(c); ++x) {
      int lhs = a.target->restrict(f, a(c, static_cast<int>(x)));
      int rhs = a(d, a.source->restrict(f, static_cast<int>(x)));
      if (lhs != rhs)
        return "square for " + cat.arrow(f).name + " fails at " +
               a.source->element_name(c, static_cast<int>(x));
    }
  }
  return std::nullopt;
}

inline bool is_natural(const NatTransform& a) { return !naturality_violation(a); }

inline NatTransform identity_nat(const PresheafPtr& F) {
  NatTransform r{F, F, {}};
  for (int c = 0; c < F->cat().object_count(); ++c) {
    r.components.emplace_back(F->size(c));
    std::iota(r.components.back().begin(), r.components.back().end(), 0);
  }
  return r;
}

/// beta . alpha
inline NatTransform compose_nat(const NatTransform& beta, const NatTransform& alpha) {
  if (alpha.target != beta.source)
    fail(Errc::ShapeMismatch, "cannot compose: " + alpha.target->name() + " vs " + beta.source->name());
  NatTransform r{alpha.source, beta.target, alpha.components};
  for (std::size_t c = 0; c < r.components.size(); ++c)
    for (auto& v : r.components[c]) v = beta.components[c][v];
  return r;
}

inline bool nat_equal(const NatTransform& a, const NatTransform& b) {
  if (a.source != b.source || a.target != b.target)
    fail(Errc::ShapeMismatch, "comparing transformations of different shapes");
  return a.components == b.components;
}

// ---------------------------------------------------------------------------
// Caches for derived presheaves.  Keys are the addresses of the inputs; each
// cached value keeps its inputs alive, so a key never outlives its object.

namespace detail {
struct Caches {
  std::mutex mu;
  std::map<const void*, PresheafPtr> unary;
  std::map<std::pair<const void*, int>, PresheafPtr> indexed;
  std::map<std::pair<const void*, const void*>, PresheafPtr> binary;
  std::map<std::pair<const void*, const void*>, PresheafPtr> exp;
};
/// Element names of nested constructions grow multiplicatively; past a
/// bound an element is named by its position.
constexpr std::size_t kNamedProduct = 512;   // larger products get positional names

inline std::string compact_name(std::string s, std::size_t index) {
  constexpr std::size_t kMaxName = 160;
  if (s.size() <= kMaxName) return s;
  return "#" + std::to_string(index);
}

inline Caches& caches() {
  static Caches c;
  return c;
}

template <class Key, class Map, class Make>
PresheafPtr cached(Map Caches::*which, const Key& key, Make make) {
  auto& cs = caches();
  {
    std::lock_guard<std::mutex> lock(cs.mu);
    auto& m = cs.*which;
    auto it = m.find(key);
    if (it != m.end()) return it->second;
  }
  PresheafPtr made = make();
  std::lock_guard<std::mutex> lock(cs.mu);
  auto& m = cs.*which;
  auto [it, fresh] = m.emplace(key, made);
  return it->second;
}
}  // namespace detail

/// Drops all cached products, exponentials and standard presheaves.
inline void clear_caches() {
  auto& cs = detail::caches();
  std::lock_guard<std::mutex> lock(cs.mu);
  cs.unary.clear();
  cs.indexed.clear();
  cs.binary.clear();
  cs.exp.clear();
}

// ---------------------------------------------------------------------------
// Constructions

inline PresheafPtr terminal(const CategoryPtr& base) {
  return detail::cached(&detail::Caches::indexed, std::make_pair(static_cast<const void*>(base.get()), -1), [&] {
    std::vector<std::vector<std::string>> el(base->object_count(), std::vector<std::string>{"*"});
    std::vector<std::vector<int>> re(base->arrow_count(), std::vector<int>{0});
    return std::make_shared<const Presheaf>(base, "1", el, re);
  });
}

inline NatTransform terminal_map(const PresheafPtr& F) {
  NatTransform r{F, terminal(F->base()), {}};
  for (int c = 0; c < F->cat().object_count(); ++c) r.components.emplace_back(F->size(c), 0);
  return r;
}

inline PresheafPtr product(const PresheafPtr& F, const PresheafPtr& G) {
  require_same_base(*F, *G);
  auto key = std::make_pair(static_cast<const void*>(F.get()), static_cast<const void*>(G.get()));
  return detail::cached(&detail::Caches::binary, key, [&] {
    const auto& cat = F->cat();
    std::size_t total = 0;
    std::vector<std::vector<std::string>> el(cat.object_count());
    for (int c = 0; c < cat.object_count(); ++c) {
      std::size_t n = F->size(c) * G->size(c);
      total += n;
      if (n > limits().max_elements)
        fail(Errc::SizeGuardExceeded, "product " + F->name() + " x " + G->name() + " has " +
                                          std::to_string(n) + " elements at " + cat.object_name(c));
      el[c].reserve(n);
      if (n > detail::kNamedProduct) {
        for (std::size_t i = 0; i < n; ++i) el[c].push_back("#" + std::to_string(i));
        continue;
      }
      for (auto& a : F->elements(c))
        for (auto& b : G->elements(c)) el[c].push_back(detail::compact_name("(" + a + "," + b + ")", el[c].size()));
    }
    std::vector<std::vector<int>> re(cat.arrow_count());
    for (int f = 0; f < cat.arrow_count(); ++f) {
      int c = cat.arrow(f).cod, d = cat.arrow(f).dom;
      int gc = static_cast<int>(G->size(c)), gd = static_cast<int>(G->size(d));
      re[f].resize(F->size(c) * G->size(c));
      for (int i = 0; i < static_cast<int>(F->size(c)); ++i)
        for (int j = 0; j < gc; ++j) re[f][i * gc + j] = F->restrict(f, i) * gd + G->restrict(f, j);
    }
    (void)total;
    std::string name = F->name() + " x " + G->name();
    return std::make_shared<const Presheaf>(F->base(), name, el, re, ProductInfo{F, G});
  });
}

inline const ProductInfo& product_info(const PresheafPtr& P) {
  auto* p = P->as_product();
  if (!p) fail(Errc::ShapeMismatch, P->name() + " is not a product");
  return *p;
}

inline NatTransform proj1(const PresheafPtr& P) {
  const auto& pi = product_info(P);
  NatTransform r{P, pi.left, {}};
  for (int c = 0; c < P->cat().object_count(); ++c) {
    int n = static_cast<int>(pi.right->size(c));
    r.components.emplace_back(P->size(c));
    for (std::size_t k = 0; k < P->size(c); ++k) r.components[c][k] = static_cast<int>(k) / n;
  }
  return r;
}

inline NatTransform proj2(const PresheafPtr& P) {
  const auto& pi = product_info(P);
  NatTransform r{P, pi.right, {}};
  for (int c = 0; c < P->cat().object_count(); ++c) {
    int n = static_cast<int>(pi.right->size(c));
    r.components.emplace_back(P->size(c));
    for (std::size_t k = 0; k < P->size(c); ++k) r.components[c][k] = static_cast<int>(k) % n;
  }
  return r;
}

inline NatTransform pair(const NatTransform& a, const NatTransform& b) {
  if (a.source != b.source)
    fail(Errc::SourceMismatch, a.source->name() + " vs " + b.source->name());
  auto P = product(a.target, b.target);
  NatTransform r{a.source, P, a.components};
  for (std::size_t c = 0; c < r.components.size(); ++c) {
    int n = static_cast<int>(b.target->size(static_cast<int>(c)));
    for (std::size_t x = 0; x < r.components[c].size(); ++x)
      r.components[c][x] = a.components[c][x] * n + b.components[c][x];
  }
  return r;
}

/// a x b : X x X' -> Y x Y'
inline NatTransform product_map(const NatTransform& a, const NatTransform& b) {
  auto src = product(a.source, b.source);
  return pair(compose_nat(a, proj1(src)), compose_nat(b, proj2(src)));
}

inline PresheafPtr yoneda(const CategoryPtr& base, int c) {
  if (c < 0 || c >= base->object_count()) fail(Errc::UnknownObject, std::to_string(c));
  return detail::cached(&detail::Caches::indexed, std::make_pair(static_cast<const void*>(base.get()), c), [&] {
    const auto& cat = *base;
    std::vector<std::vector<std::string>> el(cat.object_count());
    for (int e = 0; e < cat.object_count(); ++e)
      for (int h : cat.hom(e, c)) el[e].push_back(cat.arrow(h).name);
    std::vector<std::vector<int>> re(cat.arrow_count());
    for (int k = 0; k < cat.arrow_count(); ++k) {
      int e = cat.arrow(k).cod;
      for (int h : cat.hom(e, c)) re[k].push_back(cat.hom_position(cat.compose(h, k)));
    }
    return std::make_shared<const Presheaf>(base, "y" + cat.object_name(c), el, re);
  });
}

inline PresheafPtr yoneda(const CategoryPtr& base, const std::string& c) {
  return yoneda(base, base->object_index(c));
}

// ---------------------------------------------------------------------------
// Enumeration of natural transformations.
//
// Variables are the elements of F; the value of (E, x) ranges over G(E).
// Every arrow f : E' -> E forces value(E', F(f)x) = G(f)(value(E, x)), so the
// problem splits into connected components which are searched separately.

namespace detail {

struct NatProblem {
  const Presheaf& F;
  const Presheaf& G;
  std::vector<int> offset;         // per object
  std::vector<int> var_obj, var_elem;
  std::vector<std::vector<int>> components;

  NatProblem(const Presheaf& f, const Presheaf& g) : F(f), G(g) {
    const auto& cat = F.cat();
    int total = 0;
    for (int c = 0; c < cat.object_count(); ++c) {
      offset.push_back(total);
      for (std::size_t x = 0; x < F.size(c); ++x) {
        var_obj.push_back(c);
        var_elem.push_back(static_cast<int>(x));
      }
      total += static_cast<int>(F.size(c));
    }
    std::vector<int> parent(total);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
    for (int v = 0; v < total; ++v)
      for (int f : cat.arrows_into(var_obj[v])) {
        int d = cat.arrow(f).dom;
        int w = offset[d] + F.restrict(f, var_elem[v]);
        parent[find(v)] = find(w);
      }
    std::map<int, std::vector<int>> groups;
    for (int v = 0; v < total; ++v) groups[find(v)].push_back(v);
    for (auto& [root, vars] : groups) {
      std::stable_sort(vars.begin(), vars.end(), [&](int a, int b) {
        return cat.arrows_into(var_obj[a]).size() < cat.arrows_into(var_obj[b]).size();
      });
      components.push_back(vars);
    }
  }

  int total() const { return static_cast<int>(var_obj.size()); }

  // Assigns value to v and everything it forces; false on conflict.
  bool assign(int v, int value, std::vector<int>& val, std::vector<int>& trail) const {
    const auto& cat = F.cat();
    if (val[v] >= 0) return val[v] == value;
    val[v] = value;
    trail.push_back(v);
    for (int f : cat.arrows_into(var_obj[v])) {
      if (cat.is_identity(f)) continue;
      int d = cat.arrow(f).dom;
      int w = offset[d] + F.restrict(f, var_elem[v]);
      if (!assign(w, G.restrict(f, value), val, trail)) return false;
    }
    return true;
  }

  template <class Visit>
  void search(const std::vector<int>& vars, std::size_t pos, std::vector<int>& val,
              Visit& visit) const {
    while (pos < vars.size() && val[vars[pos]] >= 0) ++pos;
    if (pos == vars.size()) {
      visit(val);
      return;
    }
    int v = vars[pos];
    int n = static_cast<int>(G.size(var_obj[v]));
    for (int value = 0; value < n; ++value) {
      std::vector<int> trail;
      if (assign(v, value, val, trail)) search(vars, pos + 1, val, visit);
      for (int t : trail) val[t] = -1;
    }
  }
};

/// All natural transformations F -> G as flattened value vectors (object by
/// object), sorted lexicographically.
inline std::vector<std::vector<int>> enumerate_tables(const Presheaf& F, const Presheaf& G) {
  require_same_base(F, G);
  NatProblem p(F, G);
  std::vector<std::vector<std::vector<int>>> per;  // per component: list of value vectors
  std::size_t count = 1;
  for (auto& vars : p.components) {
    std::vector<std::vector<int>> sols;
    std::vector<int> val(p.total(), -1);
    auto visit = [&](const std::vector<int>& v) {
      std::vector<int> s;
      s.reserve(vars.size());
      for (int x : vars) s.push_back(v[x]);
      sols.push_back(std::move(s));
      if (sols.size() > limits().max_elements)
        fail(Errc::SizeGuardExceeded, "too many transformations " + F.name() + " -> " + G.name());
    };
    p.search(vars, 0, val, visit);
    if (sols.empty()) return {};
    count *= sols.size();
    if (count > limits().max_elements)
      fail(Errc::SizeGuardExceeded, "more than " + std::to_string(limits().max_elements) +
                                        " transformations " + F.name() + " -> " + G.name());
    per.push_back(std::move(sols));
  }
  std::vector<std::vector<int>> out;
  out.reserve(count);
  std::vector<int> cur(p.total(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == per.size()) {
      out.push_back(cur);
      return;
    }
    for (auto& s : per[k]) {
      for (std::size_t i = 0; i < s.size(); ++i) cur[p.components[k][i]] = s[i];
      rec(k + 1);
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Number of natural transformations F -> G, without materializing them.
inline std::uint64_t count_nats(const PresheafPtr& F, const PresheafPtr& G) {
  require_same_base(*F, *G);
  detail::NatProblem p(*F, *G);
  std::uint64_t total = 1;
  for (auto& vars : p.components) {
    std::uint64_t n = 0;
    std::vector<int> val(p.total(), -1);
    auto visit = [&](const std::vector<int>&) { ++n; };
    p.search(vars, 0, val, visit);
    if (n == 0) return 0;
    if (total > UINT64_MAX / n) fail(Errc::SizeGuardExceeded, "transformation count overflows");
    total *= n;
  }
  return total;
}

inline NatTransform nat_from_table(const PresheafPtr& F, const PresheafPtr& G,
                                   const std::vector<int>& table) {
  NatTransform r{F, G, {}};
  std::size_t k = 0;
  for (int c = 0; c < F->cat().object_count(); ++c) {
    r.components.emplace_back(table.begin() + k, table.begin() + k + F->size(c));
    k += F->size(c);
  }
  return r;
}

inline std::vector<NatTransform> enumerate_nats(const PresheafPtr& F, const PresheafPtr& G) {
  std::vector<NatTransform> out;
  for (auto& t : detail::enumerate_tables(*F, *G)) out.push_back(nat_from_table(F, G, t));
  return out;
}

// ---------------------------------------------------------------------------
// Exponentials

/// B^A, whose elements at C are the natural transformations yC x A -> B.
inline PresheafPtr exponential(const PresheafPtr& A, const PresheafPtr& B) {
  require_same_base(*A, *B);
  auto key = std::make_pair(static_cast<const void*>(A.get()), static_cast<const void*>(B.get()));
  auto fresh = [&] {
    const auto& base = A->base();
    const auto& cat = *base;
    const int n = cat.object_count();
    ExponentialInfo info;
    info.dom = A;
    info.cod = B;
    std::vector<std::vector<std::string>> el(n);
    for (int c = 0; c < n; ++c) {
      auto S = product(yoneda(base, c), A);
      info.slots.push_back(S);
      std::vector<int> off;
      int k = 0;
      for (int e = 0; e < n; ++e) {
        off.push_back(k);
        k += static_cast<int>(S->size(e));
      }
      info.offset.push_back(off);
      auto tables = detail::enumerate_tables(*S, *B);
      std::unordered_map<std::vector<int>, int, VecHash> idx;
      el[c].reserve(tables.size());
      for (std::size_t t = 0; t < tables.size(); ++t) {
        idx.emplace(tables[t], static_cast<int>(t));
        std::string name = "[";
        int pos = 0;
        for (int e = 0; e < n; ++e)
          for (std::size_t s = 0; s < S->size(e); ++s, ++pos) {
            if (pos) name += ",";
            name += S->element_name(e, static_cast<int>(s)) + ">" +
                    B->element_name(e, tables[t][pos]);
          }
        el[c].push_back(detail::compact_name(name + "]", t));
      }
      info.tables.push_back(std::move(tables));
      info.index.push_back(std::move(idx));
    }
    // Restriction along f : D -> C sends eta to eta . (yf x 1).
    std::vector<std::vector<int>> re(cat.arrow_count());
    for (int f = 0; f < cat.arrow_count(); ++f) {
      int d = cat.arrow(f).dom, c = cat.arrow(f).cod;
      std::vector<int> slotmap;
      for (int e = 0; e < n; ++e)
        for (int h : cat.hom(e, d))
          for (std::size_t a = 0; a < A->size(e); ++a)
            slotmap.push_back(info.slot(cat, c, e, cat.compose(f, h), static_cast<int>(a)));
      re[f].resize(info.tables[c].size());
      std::vector<int> t(slotmap.size());
      for (std::size_t k = 0; k < info.tables[c].size(); ++k) {
        for (std::size_t s = 0; s < slotmap.size(); ++s) t[s] = info.tables[c][k][slotmap[s]];
        auto it = info.index[d].find(t);
        if (it == info.index[d].end())
          fail(Errc::NotFunctorial, "restriction of an exponential element is not natural");
        re[f][k] = it->second;
      }
    }
    std::string name = "(" + B->name() + ")^(" + A->name() + ")";
    return std::make_shared<const Presheaf>(base, name, el, re, std::move(info));
  };
  return detail::cached(&detail::Caches::exp, key, fresh);
}

inline const ExponentialInfo& exponential_info(const PresheafPtr& E) {
  auto* e = E->as_exponential();
  if (!e) fail(Errc::ShapeMismatch, E->name() + " is not an exponential");
  return *e;
}

/// Value of eta in B^A(C) at the slot (E, h, a).
inline int exp_value(const PresheafPtr& E, int c, int eta, int e, int h, int a) {
  const auto& info = exponential_info(E);
  return info.tables[c][eta][info.slot(E->cat(), c, e, h, a)];
}

/// epsilon : B^A x A -> B, epsilon_C(eta, a) = eta_C(1_C, a)
inline NatTransform eval_map(const PresheafPtr& A, const PresheafPtr& B) {
  auto E = exponential(A, B);
  auto P = product(E, A);
  const auto& cat = A->cat();
  NatTransform r{P, B, {}};
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(P->size(c));
    int na = static_cast<int>(A->size(c));
    for (std::size_t k = 0; k < P->size(c); ++k)
      r.components[c][k] = exp_value(E, c, static_cast<int>(k) / na, c, cat.identity(c), static_cast<int>(k) % na);
  }
  return r;
}

/// For alpha : Z x A -> B, the transformation Z -> B^A with
/// transpose(alpha)_C(z) = alpha . (zeta x 1), zeta the Yoneda mate of z.
inline NatTransform transpose(const NatTransform& alpha) {
  const auto& pi = product_info(alpha.source);
  const auto& Z = pi.left;
  const auto& A = pi.right;
  const auto& B = alpha.target;
  auto E = exponential(A, B);
  const auto& info = exponential_info(E);
  const auto& cat = Z->cat();
  NatTransform r{Z, E, {}};
  std::vector<int> t;
  for (int c = 0; c < cat.object_count(); ++c) {
    r.components.emplace_back(Z->size(c));
    for (std::size_t z = 0; z < Z->size(c); ++z) {
      t.clear();
      for (int e = 0; e < cat.object_count(); ++e) {
        int na = static_cast<int>(A->size(e));
        for (int h : cat.hom(e, c)) {
          int zh = Z->restrict(h, static_cast<int>(z));
          for (int a = 0; a < na; ++a) t.push_back(alpha.components[e][zh * na + a]);
        }
      }
      auto it = info.index[c].find(t);
      if (it == info.index[c].end())
        fail(Errc::ShapeMismatch, "transpose of a non-natural transformation");
      r.components[c][z] = it->second;
    }
  }
  return r;
}

/// beta : Z -> B^A  gives  epsilon . (beta x 1) : Z x A -> B
inline NatTransform untranspose(const NatTransform& beta) {
  const auto& info = exponential_info(beta.target);
  return compose_nat(eval_map(info.dom, info.cod), product_map(beta, identity_nat(info.dom)));
}

/// phi^Y : A^Y -> B^Y, post-composition with phi : A -> B.
inline NatTransform exp_map(const NatTransform& phi, const PresheafPtr& Y) {
  return transpose(compose_nat(phi, eval_map(Y, phi.source)));
}

/// The arrow F -> G that is constant at the global element g : 1 -> G.
inline NatTransform constant_map(const PresheafPtr& F, const NatTransform& g) {
  return compose_nat(g, terminal_map(F));
}

// ---------------------------------------------------------------------------
// Text format
//
//   presheaf <name> over <category>
//   elements <object> : <e1> <e2> ...
//   restrict <arrow> : <x> -> <y> ...     (F(arrow) : F(cod) -> F(dom))
//   end
//
// Identity restrictions are implicit.  A missing non-identity restriction is
// derived when the arrow is a composite of arrows that are given.

struct PresheafDescription {
  std::string name = "F";
  std::map<std::string, std::vector<std::string>> elements;
  std::map<std::string, std::map<std::string, std::string>> restrictions;
};

inline PresheafPtr validate_presheaf(const CategoryPtr& base, const PresheafDescription& d) {
  const auto& cat = *base;
  std::vector<std::vector<std::string>> el(cat.object_count());
  for (auto& [o, xs] : d.elements) {
    int c = cat.object_index(o);
    el[c] = xs;
    std::sort(el[c].begin(), el[c].end());
    if (std::adjacent_find(el[c].begin(), el[c].end()) != el[c].end())
      fail(Errc::InvalidInput, "duplicate element in " + d.name + "(" + o + ")");
  }
  auto index = [&](int c, const std::string& x) {
    auto it = std::lower_bound(el[c].begin(), el[c].end(), x);
    if (it == el[c].end() || *it != x)
      fail(Errc::UnknownElement, x + " in " + d.name + "(" + cat.object_name(c) + ")");
    return static_cast<int>(it - el[c].begin());
  };
  std::vector<std::vector<int>> re(cat.arrow_count());
  std::vector<bool> known(cat.arrow_count(), false);
  for (int c = 0; c < cat.object_count(); ++c) {
    re[cat.identity(c)].resize(el[c].size());
    std::iota(re[cat.identity(c)].begin(), re[cat.identity(c)].end(), 0);
    known[cat.identity(c)] = true;
  }
  for (auto& [an, table] : d.restrictions) {
    int f = cat.arrow_index(an);
    int c = cat.arrow(f).cod, dd = cat.arrow(f).dom;
    if (cat.is_identity(f)) fail(Errc::InvalidInput, "restriction along identity " + an + " is implicit");
    re[f].assign(el[c].size(), -1);
    for (auto& [x, y] : table) re[f][index(c, x)] = index(dd, y);
    for (std::size_t x = 0; x < el[c].size(); ++x)
      if (re[f][x] < 0)
        fail(Errc::NotFunctorial, d.name + "(" + an + ") is undefined at " + el[c][x]);
    known[f] = true;
  }
  for (bool progress = true; progress;) {
    progress = false;
    for (int g = 0; g < cat.arrow_count(); ++g)
      for (int f = 0; f < cat.arrow_count(); ++f) {
        int h = cat.compose(g, f);
        if (h < 0 || known[h] || !known[g] || !known[f]) continue;
        re[h].resize(el[cat.arrow(g).cod].size());
        for (std::size_t x = 0; x < re[h].size(); ++x) re[h][x] = re[f][re[g][x]];
        known[h] = progress = true;
      }
  }
  for (int f = 0; f < cat.arrow_count(); ++f)
    if (!known[f]) fail(Errc::NotFunctorial, "no restriction given along " + cat.arrow(f).name);
  auto F = std::make_shared<const Presheaf>(base, d.name, el, re);
  if (auto v = functoriality_violation(*F)) fail(Errc::NotFunctorial, d.name + ": " + *v);
  return F;
}

inline std::string presheaf_to_text(const Presheaf& F) {
  const auto& cat = F.cat();
  std::ostringstream out;
  out << "presheaf " << F.name() << " over " << cat.name() << "\n";
  for (int c = 0; c < cat.object_count(); ++c) {
    out << "elements " << cat.object_name(c) << " :";
    for (auto& x : F.elements(c)) out << " " << x;
    out << "\n";
  }
  for (int f = 0; f < cat.arrow_count(); ++f) {
    if (cat.is_identity(f)) continue;
    int c = cat.arrow(f).cod, d = cat.arrow(f).dom;
    out << "restrict " << cat.arrow(f).name << " :";
    for (std::size_t x = 0; x < F.size(c); ++x)
      out << " " << F.element_name(c, static_cast<int>(x)) << " -> "
          << F.element_name(d, F.restrict(f, static_cast<int>(x)));
    out << "\n";
  }
  out << "end\n";
  return out.str();
}

inline PresheafPtr presheaf_from_block(const text::Block& b,
                                       const std::map<std::string, CategoryPtr>& cats) {
  if (b.kind != "presheaf" || b.header.size() != 3 || b.header[1] != "over")
    fail(Errc::ParseError, text::where(b.origin, b.line) + ": expected 'presheaf <name> over <category>'");
  auto it = cats.find(b.header[2]);
  if (it == cats.end())
    fail(Errc::UndeclaredSymbol, text::where(b.origin, b.line) + ": unknown category " + b.header[2]);
  PresheafDescription d;
  d.name = b.header[0];
  for (auto& o : it->second->objects()) d.elements[o];
  for (auto& l : b.body) {
    auto& t = l.tokens;
    if (t.size() < 3 || t[2] != ":") text::bad_line(b, l, "expected '<keyword> <name> : ...'");
    if (t[0] == "elements") {
      if (it->second->find_object(t[1]) < 0) text::bad_line(b, l, "unknown object " + t[1]);
      d.elements[t[1]].assign(t.begin() + 3, t.end());
    } else if (t[0] == "restrict") {
      if ((t.size() - 3) % 3 != 0) text::bad_line(b, l, "expected pairs '<x> -> <y>'");
      auto& table = d.restrictions[t[1]];
      for (std::size_t i = 3; i < t.size(); i += 3) {
        if (t[i + 1] != "->") text::bad_line(b, l, "expected '->'");
        table[t[i]] = t[i + 2];
      }
    } else {
      text::bad_line(b, l, "unknown presheaf line '" + t[0] + "'");
    }
  }
  return validate_presheaf(it->second, d);
}

}  // namespace homl

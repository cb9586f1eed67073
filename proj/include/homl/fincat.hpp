#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace homl {

struct Arrow {
  std::string name;
  int dom = 0;
  int cod = 0;
};

/// Raw input to validate_category.  Identities missing from `identities`
/// are created as "1_<object>" unless auto_identities is off.
struct CategoryDescription {
  struct ArrowDecl {
    std::string name, dom, cod;
  };
  struct Composite {
    std::string g, f, result;  // g . f = result
  };
  std::string name = "cat";
  std::vector<std::string> objects;
  std::vector<ArrowDecl> arrows;
  std::map<std::string, std::string> identities;
  std::vector<Composite> composites;
  bool auto_identities = true;
};

class FiniteCategory;
using CategoryPtr = std::shared_ptr<const FiniteCategory>;

CategoryPtr validate_category(const CategoryDescription& raw);

/// A validated finite category.  Objects and arrows are indexed in
/// lexicographic order of their names.
class FiniteCategory {
 public:
  const std::string& name() const { return name_; }
  int object_count() const { return static_cast<int>(objects_.size()); }
  int arrow_count() const { return static_cast<int>(arrows_.size()); }
  const std::string& object_name(int c) const { return objects_.at(c); }
  const std::vector<std::string>& objects() const { return objects_; }
  const Arrow& arrow(int a) const { return arrows_.at(a); }
  const std::vector<Arrow>& arrows() const { return arrows_; }
  int identity(int c) const { return identity_.at(c); }
  bool is_identity(int a) const { return identity_[arrows_[a].dom] == a; }

  /// g . f, or -1 when cod(f) != dom(g).
  int compose(int g, int f) const {
    return compose_[static_cast<std::size_t>(g) * arrows_.size() + f];
  }

  /// Arrows with codomain c, sorted by name.
  const std::vector<int>& arrows_into(int c) const { return into_.at(c); }
  const std::vector<int>& arrows_from(int c) const { return from_.at(c); }
  /// Position of arrow a inside arrows_into(cod a).
  int into_position(int a) const { return into_pos_[a]; }
  /// Arrows d -> c, sorted by name.
  const std::vector<int>& hom(int d, int c) const {
    return hom_[static_cast<std::size_t>(d) * objects_.size() + c];
  }
  int hom_position(int a) const { return hom_pos_[a]; }

  int object_index(const std::string& n) const {
    auto it = std::lower_bound(objects_.begin(), objects_.end(), n);
    if (it == objects_.end() || *it != n) fail(Errc::UnknownObject, n);
    return static_cast<int>(it - objects_.begin());
  }
  int find_object(const std::string& n) const {
    auto it = std::lower_bound(objects_.begin(), objects_.end(), n);
    return (it == objects_.end() || *it != n) ? -1 : static_cast<int>(it - objects_.begin());
  }
  int arrow_index(const std::string& n) const {
    auto it = arrow_by_name_.find(n);
    if (it == arrow_by_name_.end()) fail(Errc::UnknownArrow, n);
    return it->second;
  }
  int find_arrow(const std::string& n) const {
    auto it = arrow_by_name_.find(n);
    return it == arrow_by_name_.end() ? -1 : it->second;
  }

  bool is_discrete() const { return arrows_.size() == objects_.size(); }

  /// Structural equality: same names, same shape, same composition.
  bool operator==(const FiniteCategory& o) const {
    if (objects_ != o.objects_ || arrows_.size() != o.arrows_.size()) return false;
    for (std::size_t i = 0; i < arrows_.size(); ++i)
      if (arrows_[i].name != o.arrows_[i].name || arrows_[i].dom != o.arrows_[i].dom ||
          arrows_[i].cod != o.arrows_[i].cod)
        return false;
    return compose_ == o.compose_;
  }

  /// The non-identity part of the data, suitable for round-tripping.
  CategoryDescription description() const {
    CategoryDescription d;
    d.name = name_;
    d.objects = objects_;
    for (int a = 0; a < arrow_count(); ++a) {
      if (is_identity(a)) {
        d.identities[objects_[arrows_[a].dom]] = arrows_[a].name;
        continue;
      }
      d.arrows.push_back({arrows_[a].name, objects_[arrows_[a].dom], objects_[arrows_[a].cod]});
    }
    for (int g = 0; g < arrow_count(); ++g)
      for (int f = 0; f < arrow_count(); ++f) {
        if (is_identity(g) || is_identity(f)) continue;
        int h = compose(g, f);
        if (h >= 0) d.composites.push_back({arrows_[g].name, arrows_[f].name, arrows_[h].name});
      }
    return d;
  }

 private:
  friend CategoryPtr validate_category(const CategoryDescription& raw);
  FiniteCategory() = default;

  std::string name_;
  std::vector<std::string> objects_;
  std::vector<Arrow> arrows_;
  std::vector<int> identity_;
  std::vector<int> compose_;
  std::vector<std::vector<int>> into_, from_, hom_;
  std::vector<int> into_pos_, hom_pos_;
  std::map<std::string, int> arrow_by_name_;
};

inline CategoryPtr validate_category(const CategoryDescription& raw) {
  auto cat = std::shared_ptr<FiniteCategory>(new FiniteCategory());
  cat->name_ = raw.name;

  std::vector<std::string> objs = raw.objects;
  std::sort(objs.begin(), objs.end());
  if (std::adjacent_find(objs.begin(), objs.end()) != objs.end())
    fail(Errc::InvalidInput, "duplicate object name");
  cat->objects_ = objs;
  const int n = static_cast<int>(objs.size());

  struct Pending {
    std::string name, dom, cod;
  };
  std::vector<Pending> pending;
  std::set<std::string> names;
  for (auto& a : raw.arrows) {
    if (!names.insert(a.name).second) fail(Errc::InvalidInput, "duplicate arrow " + a.name);
    pending.push_back({a.name, a.dom, a.cod});
  }
  std::map<std::string, std::string> ids = raw.identities;
  for (auto& o : objs) {
    auto it = ids.find(o);
    if (it == ids.end()) {
      if (!raw.auto_identities) fail(Errc::MissingIdentity, "object " + o + " has no identity");
      std::string id = "1_" + o;
      if (!names.insert(id).second)
        fail(Errc::InvalidInput, "arrow " + id + " clashes with the implicit identity of " + o);
      pending.push_back({id, o, o});
      ids[o] = id;
    } else if (!names.count(it->second)) {
      names.insert(it->second);
      pending.push_back({it->second, o, o});
    }
  }
  if (pending.size() > limits().max_arrows)
    fail(Errc::SizeGuardExceeded, std::to_string(pending.size()) + " arrows exceed the cap of " +
                                      std::to_string(limits().max_arrows));
  std::sort(pending.begin(), pending.end(),
            [](const Pending& x, const Pending& y) { return x.name < y.name; });
  for (auto& p : pending) {
    Arrow a{p.name, cat->find_object(p.dom), cat->find_object(p.cod)};
    if (a.dom < 0) fail(Errc::UnknownObject, p.dom + " (domain of " + p.name + ")");
    if (a.cod < 0) fail(Errc::UnknownObject, p.cod + " (codomain of " + p.name + ")");
    cat->arrow_by_name_[a.name] = static_cast<int>(cat->arrows_.size());
    cat->arrows_.push_back(a);
  }
  const int m = static_cast<int>(cat->arrows_.size());
  cat->identity_.assign(n, -1);
  for (int c = 0; c < n; ++c) {
    int a = cat->arrow_by_name_.at(ids.at(objs[c]));
    if (cat->arrows_[a].dom != c || cat->arrows_[a].cod != c)
      fail(Errc::DomCodMismatch, "identity " + cat->arrows_[a].name + " is not an endo-arrow of " + objs[c]);
    cat->identity_[c] = a;
  }
  for (auto& [o, id] : ids)
    if (cat->find_object(o) < 0) fail(Errc::UnknownObject, o + " (identity " + id + ")");

  auto& A = cat->arrows_;
  auto& comp = cat->compose_;
  comp.assign(static_cast<std::size_t>(m) * m, -1);
  auto at = [&](int g, int f) -> int& { return comp[static_cast<std::size_t>(g) * m + f]; };
  for (int f = 0; f < m; ++f) {
    at(cat->identity_[A[f].cod], f) = f;
    at(f, cat->identity_[A[f].dom]) = f;
  }
  for (auto& e : raw.composites) {
    auto gi = cat->arrow_by_name_.find(e.g), fi = cat->arrow_by_name_.find(e.f),
         hi = cat->arrow_by_name_.find(e.result);
    if (gi == cat->arrow_by_name_.end()) fail(Errc::UnknownArrow, e.g);
    if (fi == cat->arrow_by_name_.end()) fail(Errc::UnknownArrow, e.f);
    if (hi == cat->arrow_by_name_.end()) fail(Errc::UnknownArrow, e.result);
    int g = gi->second, f = fi->second, h = hi->second;
    if (A[f].cod != A[g].dom)
      fail(Errc::DomCodMismatch, e.g + " . " + e.f + ": cod(" + e.f + ") = " + objs[A[f].cod] +
                                     " but dom(" + e.g + ") = " + objs[A[g].dom]);
    if (A[h].dom != A[f].dom || A[h].cod != A[g].cod)
      fail(Errc::DomCodMismatch, e.g + " . " + e.f + " = " + e.result + ": result has the wrong domain or codomain");
    int& slot = at(g, f);
    if (slot >= 0 && slot != h)
      fail(Errc::InvalidInput, e.g + " . " + e.f + " is given two different values");
    slot = h;
  }
  for (int g = 0; g < m; ++g)
    for (int f = 0; f < m; ++f)
      if (A[f].cod == A[g].dom && at(g, f) < 0)
        fail(Errc::UndefinedComposite, A[g].name + " . " + A[f].name);
  for (int h = 0; h < m; ++h)
    for (int g = 0; g < m; ++g) {
      if (A[g].cod != A[h].dom) continue;
      for (int f = 0; f < m; ++f) {
        if (A[f].cod != A[g].dom) continue;
        if (at(at(h, g), f) != at(h, at(g, f)))
          fail(Errc::NonAssociative, "(" + A[h].name + " . " + A[g].name + ") . " + A[f].name +
                                         " != " + A[h].name + " . (" + A[g].name + " . " +
                                         A[f].name + ")");
      }
    }

  cat->into_.assign(n, {});
  cat->from_.assign(n, {});
  cat->hom_.assign(static_cast<std::size_t>(n) * n, {});
  cat->into_pos_.assign(m, 0);
  cat->hom_pos_.assign(m, 0);
  for (int a = 0; a < m; ++a) {
    cat->into_pos_[a] = static_cast<int>(cat->into_[A[a].cod].size());
    cat->into_[A[a].cod].push_back(a);
    cat->from_[A[a].dom].push_back(a);
    auto& h = cat->hom_[static_cast<std::size_t>(A[a].dom) * n + A[a].cod];
    cat->hom_pos_[a] = static_cast<int>(h.size());
    h.push_back(a);
  }
  return cat;
}

inline const std::vector<int>& arrows_into(const FiniteCategory& cat, const std::string& c) {
  return cat.arrows_into(cat.object_index(c));
}

inline CategoryPtr terminal_category(const std::string& name = "terminal") {
  CategoryDescription d;
  d.name = name;
  d.objects = {"*"};
  return validate_category(d);
}

/// A category whose only arrows are identities.
class DiscreteCategory {
 public:
  explicit DiscreteCategory(CategoryPtr c) : cat_(std::move(c)) {
    if (!cat_->is_discrete()) fail(Errc::InvalidInput, "category has non-identity arrows");
  }
  const CategoryPtr& category() const { return cat_; }
  const FiniteCategory& operator*() const { return *cat_; }
  const FiniteCategory* operator->() const { return cat_.get(); }

 private:
  CategoryPtr cat_;
};

inline DiscreteCategory discrete_of(const FiniteCategory& cat) {
  CategoryDescription d;
  d.name = cat.name();
  d.objects = cat.objects();
  for (int c = 0; c < cat.object_count(); ++c)
    d.identities[cat.object_name(c)] = cat.arrow(cat.identity(c)).name;
  return DiscreteCategory(validate_category(d));
}

using Relation = std::vector<std::pair<std::string, std::string>>;

/// Name of the arrow a -> b in a category built from a preorder.
inline std::string preorder_arrow_name(const std::string& a, const std::string& b) {
  return a + "<" + b;
}

/// Category of a preorder: one arrow a -> b for each pair (a, b) in the
/// relation.  With reverse set, the arrow runs b -> a instead, which turns a
/// covariant (Kripke-style) presentation into the presheaf convention.
inline CategoryPtr from_preorder(const std::vector<std::string>& elements, const Relation& rel,
                                 bool reverse = false, const std::string& name = "preorder") {
  std::set<std::pair<std::string, std::string>> r;
  std::set<std::string> elems(elements.begin(), elements.end());
  for (auto& [a, b] : rel) {
    if (!elems.count(a)) fail(Errc::UnknownObject, a);
    if (!elems.count(b)) fail(Errc::UnknownObject, b);
    r.insert(reverse ? std::make_pair(b, a) : std::make_pair(a, b));
  }
  for (auto& e : elems)
    if (!r.count({e, e})) fail(Errc::NotReflexive, e + " <= " + e + " is missing");
  for (auto& [a, b] : r)
    for (auto& [b2, c] : r)
      if (b == b2 && !r.count({a, c}))
        fail(Errc::NotTransitive, a + " <= " + b + " and " + b + " <= " + c + " but not " + a +
                                      " <= " + c);
  CategoryDescription d;
  d.name = name;
  d.objects.assign(elems.begin(), elems.end());
  auto arrow_name = [](const std::string& a, const std::string& b) {
    return a == b ? "1_" + a : preorder_arrow_name(a, b);
  };
  for (auto& [a, b] : r)
    if (a != b) d.arrows.push_back({arrow_name(a, b), a, b});
  for (auto& [a, b] : r)
    for (auto& [b2, c] : r)
      if (b == b2 && a != b && b != c) d.composites.push_back({arrow_name(b, c), arrow_name(a, b), arrow_name(a, c)});
  return validate_category(d);
}

/// Pairs (dom, cod) for which an arrow exists.
inline Relation underlying_relation(const FiniteCategory& cat) {
  std::set<std::pair<std::string, std::string>> r;
  for (auto& a : cat.arrows()) r.insert({cat.object_name(a.dom), cat.object_name(a.cod)});
  return Relation(r.begin(), r.end());
}

inline bool is_preorder(const FiniteCategory& cat) {
  for (int d = 0; d < cat.object_count(); ++d)
    for (int c = 0; c < cat.object_count(); ++c)
      if (cat.hom(d, c).size() > 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Text format
//
//   category <name>
//   object <name> [<name> ...]
//   identity <object> = <name>     (only when not the default 1_<object>)
//   arrow <name> : <dom> -> <cod>
//   compose <g> <f> = <h>          (g . f = h, non-identity g and f only)
//   end

inline std::string category_to_text(const FiniteCategory& cat) {
  auto d = cat.description();
  std::ostringstream out;
  out << "category " << d.name << "\n";
  for (auto& o : d.objects) out << "object " << o << "\n";
  for (auto& [o, id] : d.identities)
    if (id != "1_" + o) out << "identity " << o << " = " << id << "\n";
  for (auto& a : d.arrows) out << "arrow " << a.name << " : " << a.dom << " -> " << a.cod << "\n";
  for (auto& c : d.composites) out << "compose " << c.g << " " << c.f << " = " << c.result << "\n";
  out << "end\n";
  return out.str();
}

inline CategoryPtr category_from_block(const text::Block& b) {
  if (b.kind != "category" || b.header.size() != 1)
    fail(Errc::ParseError, text::where(b.origin, b.line) + ": expected 'category <name>'");
  CategoryDescription d;
  d.name = b.header[0];
  for (auto& l : b.body) {
    auto& t = l.tokens;
    if (t[0] == "object") {
      if (t.size() < 2) text::bad_line(b, l, "object needs a name");
      d.objects.insert(d.objects.end(), t.begin() + 1, t.end());
    } else if (t[0] == "arrow") {
      if (t.size() != 6) text::bad_line(b, l, "expected 'arrow <name> : <dom> -> <cod>'");
      text::expect(b, l, 2, ":");
      text::expect(b, l, 4, "->");
      d.arrows.push_back({t[1], t[3], t[5]});
    } else if (t[0] == "identity") {
      if (t.size() != 4) text::bad_line(b, l, "expected 'identity <object> = <name>'");
      text::expect(b, l, 2, "=");
      d.identities[t[1]] = t[3];
    } else if (t[0] == "compose") {
      if (t.size() != 5) text::bad_line(b, l, "expected 'compose <g> <f> = <h>'");
      text::expect(b, l, 3, "=");
      d.composites.push_back({t[1], t[2], t[4]});
    } else {
      text::bad_line(b, l, "unknown category line '" + t[0] + "'");
    }
  }
  return validate_category(d);
}

inline CategoryPtr category_from_text(const std::string& src) {
  auto blocks = text::parse_blocks(src);
  if (blocks.size() != 1) fail(Errc::ParseError, "expected exactly one category document");
  return category_from_block(blocks[0]);
}

}  // namespace homl

#pragma once

// The small bases and presheaves used by the built-in checks.

#include <string>
#include <vector>

#include "fincat.hpp"
#include "presheaf.hpp"

namespace homl::bundled {

/// C --g--> D
inline CategoryPtr two_object() {
  static CategoryPtr c = [] {
    CategoryDescription d;
    d.name = "arrow";
    d.objects = {"C", "D"};
    d.arrows = {{"g", "C", "D"}};
    return validate_category(d);
  }();
  return c;
}

inline CategoryPtr terminal() {
  static CategoryPtr c = terminal_category("terminal");
  return c;
}

/// 0 -> 1 -> 2
inline CategoryPtr chain3() {
  static CategoryPtr c = from_preorder(
      {"0", "1", "2"},
      {{"0", "0"}, {"1", "1"}, {"2", "2"}, {"0", "1"}, {"1", "2"}, {"0", "2"}}, false, "chain3");
  return c;
}

/// b -> l, b -> r, l -> t, r -> t
inline CategoryPtr square() {
  static CategoryPtr c = from_preorder(
      {"b", "l", "r", "t"},
      {{"b", "b"}, {"l", "l"}, {"r", "r"}, {"t", "t"}, {"b", "l"}, {"b", "r"}, {"l", "t"}, {"r", "t"}, {"b", "t"}},
      false, "square");
  return c;
}

inline std::vector<CategoryPtr> bases() { return {terminal(), two_object(), chain3(), square()}; }

/// The loop graph: one edge u at D whose restriction along g is the vertex v;
/// a second vertex w at C.
inline PresheafPtr loop_graph() {
  static PresheafPtr g = [] {
    PresheafDescription d;
    d.name = "G";
    d.elements["C"] = {"v", "w"};
    d.elements["D"] = {"u"};
    d.restrictions["g"]["u"] = "v";
    return validate_presheaf(two_object(), d);
  }();
  return g;
}

/// Over C -> D: the same n-element set at both objects, identity restriction.
inline PresheafPtr constant_domain(int n) {
  PresheafDescription d;
  d.name = "G";
  std::vector<std::string> xs;
  for (int i = 0; i < n; ++i) xs.push_back("a" + std::to_string(i));
  d.elements["C"] = xs;
  d.elements["D"] = xs;
  for (auto& x : xs) d.restrictions["g"][x] = x;
  return validate_presheaf(two_object(), d);
}

/// Domain of the three-world Kripke model: two individuals at the bottom
/// world that are identified further up.
inline PresheafPtr chain3_domain() {
  static PresheafPtr m = [] {
    PresheafDescription d;
    d.name = "M";
    d.elements["0"] = {"a", "b"};
    d.elements["1"] = {"c", "d"};
    d.elements["2"] = {"e"};
    d.restrictions["0<1"] = {{"c", "a"}, {"d", "b"}};
    d.restrictions["1<2"] = {{"e", "c"}};
    return validate_presheaf(chain3(), d);
  }();
  return m;
}

/// An n-element set over the terminal category.
inline PresheafPtr finite_set(int n, const std::string& name = "X") {
  PresheafDescription d;
  d.name = name;
  for (int i = 0; i < n; ++i) d.elements["*"].push_back(std::to_string(i));
  d.elements["*"];
  return validate_presheaf(terminal(), d);
}

}  // namespace homl::bundled

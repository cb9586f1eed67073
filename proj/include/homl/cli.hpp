#pragma once

// Batch front end: validate, check, force, eval and the built-in checks.
// Every command returns an exit code and its rendered output; nothing here
// touches the process streams.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forcing.hpp"
#include "suites.hpp"

namespace homl::cli {

using Json = nlohmann::ordered_json;

enum class Format { Text, Structured };

enum ExitCode { kSuccess = 0, kSemanticFailure = 1, kInputError = 2 };

struct RunConfig {
  std::string command;
  std::vector<std::string> paths;       // model file, then theory file for check
  std::optional<std::size_t> size_guard;  // overrides HOML_SIZE_GUARD
  Format format = Format::Text;
  bool trace = false;
  int jobs = 1;
  bool timing = false;
  bool allow_unfaithful = false;
  std::uint64_t seed = 4242;
  std::string model_name;  // picks a model when a file holds several
  std::string world;       // force
  std::string term;        // force, eval
  std::string context;     // eval
  std::vector<std::string> bindings;  // force: name[:type]=element@object
};

struct Outcome {
  int code = kSuccess;
  std::string out;
  std::string err;
};

/// name=element@object, with an optional ":type" after the name.
struct Binding {
  std::string name, type, element, object;
};

inline Binding parse_binding(const std::string& s) {
  auto eq = s.find('=');
  auto at = s.rfind('@');
  if (eq == std::string::npos || at == std::string::npos || at < eq || eq == 0 || at + 1 == s.size())
    fail(Errc::ParseError, "binding '" + s + "' is not of the form name=element@object");
  Binding b;
  auto lhs = s.substr(0, eq);
  auto colon = lhs.find(':');
  b.name = lhs.substr(0, colon);
  if (colon != std::string::npos) b.type = lhs.substr(colon + 1);
  b.element = s.substr(eq + 1, at - eq - 1);
  b.object = s.substr(at + 1);
  if (b.name.empty() || b.element.empty()) fail(Errc::ParseError, "binding '" + s + "' has an empty part");
  return b;
}

namespace detail {

// Codes that mean the input could not be read at all, as opposed to input
// that was read and found wanting.
inline bool is_input_error(Errc e) { return e == Errc::ParseError || e == Errc::InvalidInput; }

inline void require_file(const std::string& p) {
  if (!std::filesystem::is_regular_file(p)) fail(Errc::InvalidInput, "no such file: " + p);
}

inline Json error_json(const Error& e) {
  return Json{{"code", std::string(errc_name(e.code()))}, {"detail", e.detail()}};
}

inline Json witness_json(const SuiteWitness& w) {
  return Json{{"object", w.object}, {"elements", w.elements}, {"lhs", w.lhs}, {"rhs", w.rhs}};
}

inline Json report_json(const CheckReport& r, bool timing) {
  Json items = Json::array();
  for (auto& it : r.items) {
    Json j{{"name", it.name},     {"expect", expect_name(it.expect)}, {"held", it.held},
           {"ok", it.ok()},       {"instances", it.instances},         {"note", it.note}};
    j["witness"] = it.witness ? witness_json(*it.witness) : Json(nullptr);
    items.push_back(std::move(j));
  }
  Json j{{"check", r.name}, {"anchor", r.anchor}, {"subject", r.subject}, {"passed", r.passed}, {"items", items}};
  if (timing) j["runtime_ms"] = r.runtime_ms;
  return j;
}

inline ModelPtr load_model(const RunConfig& cfg) {
  if (cfg.paths.empty()) fail(Errc::InvalidInput, "a model file is required");
  require_file(cfg.paths[0]);
  return load_model_file(cfg.paths[0], cfg.allow_unfaithful).model(cfg.model_name);
}

inline std::string render(const RunConfig& cfg, const Json& j, const std::string& text) {
  return cfg.format == Format::Structured ? j.dump(2) + "\n" : text;
}

// ---------------------------------------------------------------------------

inline Outcome validate(const RunConfig& cfg) {
  if (cfg.paths.empty()) fail(Errc::InvalidInput, "validate needs at least one file");
  Json files = Json::array();
  std::string text;
  int code = kSuccess;
  for (auto& p : cfg.paths) {
    Json f{{"path", p}};
    try {
      require_file(p);
      if (std::filesystem::path(p).extension() == ".homl") {
        auto th = syntax::parse_theory(text::read_file(p), p);
        f["kind"] = "theory";
        f["axioms"] = th.axioms.size();
        text += "ok    " + p + ": theory with " + std::to_string(th.axioms.size()) + " axioms\n";
      } else {
        auto mf = load_model_file(p, cfg.allow_unfaithful);
        f["kind"] = "models";
        f["categories"] = mf.categories.size();
        f["presheaves"] = mf.presheaves.size();
        f["frames"] = mf.frames.size();
        Json ms = Json::array();
        for (auto& m : mf.models) ms.push_back(m->name);
        f["models"] = ms;
        text += "ok    " + p + ": " + std::to_string(mf.categories.size()) + " categories, " +
                std::to_string(mf.presheaves.size()) + " presheaves, " + std::to_string(mf.frames.size()) +
                " frames, " + std::to_string(mf.models.size()) + " models\n";
      }
      f["ok"] = true;
    } catch (const Error& e) {
      f["ok"] = false;
      f["error"] = error_json(e);
      code = std::max(code, is_input_error(e.code()) ? int(kInputError) : int(kSemanticFailure));
      text += "FAIL  " + p + ": " + e.what() + "\n";
    }
    files.push_back(std::move(f));
  }
  Json j{{"command", "validate"}, {"exit", code}, {"files", files}};
  return {code, render(cfg, j, text), ""};
}

inline Outcome check(const RunConfig& cfg) {
  if (cfg.paths.size() != 2) fail(Errc::InvalidInput, "check needs a model file and a theory file");
  auto m = load_model(cfg);
  require_file(cfg.paths[1]);
  auto th = syntax::parse_theory(text::read_file(cfg.paths[1]), cfg.paths[1]);
  homl::detail::Stopwatch clock;
  auto rep = check_theory(*m, th, cfg.jobs);
  Json axioms = Json::array();
  std::string text;
  std::size_t passed = 0;
  for (auto& a : rep.axioms) {
    const auto& s = a.sequent;
    passed += a.verdict.holds;
    Json ws = Json::array();
    for (auto& w : a.verdict.witnesses) {
      Json wj{{"object", m->base->object_name(w.object)},
              {"bindings", s.ctx.empty() ? "" : show_bindings(*m, s.ctx, w.object, w.element)},
              {"lhs", show_element(*m, m->frame().carrier(), w.object, w.lhs)},
              {"rhs", show_element(*m, m->frame().carrier(), w.object, w.rhs)}};
      ws.push_back(std::move(wj));
    }
    axioms.push_back(Json{{"name", s.name}, {"sequent", syntax::to_string(s)}, {"holds", a.verdict.holds},
                          {"witnesses", ws}});
    text += std::string(a.verdict.holds ? "PASS  " : "FAIL  ") + (s.name.empty() ? "" : "[" + s.name + "] ") +
            syntax::to_string(s) + "\n";
    constexpr std::size_t kShown = 5;
    for (std::size_t i = 0; i < a.verdict.witnesses.size() && i < kShown; ++i)
      text += "      witness " + describe_witness(*m, s, a.verdict.witnesses[i]) + "\n";
    if (a.verdict.witnesses.size() > kShown)
      text += "      ... " + std::to_string(a.verdict.witnesses.size() - kShown) + " more\n";
  }
  text += std::to_string(passed) + " of " + std::to_string(rep.axioms.size()) + " sequents hold in " + m->name + "\n";
  int code = rep.passed ? kSuccess : kSemanticFailure;
  Json j{{"command", "check"}, {"exit", code}, {"model", m->name}, {"passed", rep.passed}, {"axioms", axioms}};
  if (cfg.timing) {
    j["runtime_ms"] = clock.ms();
    text += "runtime " + std::to_string(static_cast<long long>(clock.ms())) + " ms\n";
  }
  return {code, render(cfg, j, text), ""};
}

/// Context and element of [[ctx]](world) described by the bindings.  An
/// element given at another object is restricted along the unique arrow from
/// the world into it.
inline std::pair<syntax::Context, int> bind(const Model& m, int world, const std::vector<std::string>& raw) {
  auto sig = m.signature();
  syntax::Context ctx;
  std::vector<int> vals;
  for (auto& r : raw) {
    auto b = parse_binding(r);
    int c = m.base->find_object(b.object);
    if (c < 0) fail(Errc::UnknownObject, b.object + " in binding " + r);
    syntax::TypePtr ty;
    if (!b.type.empty()) {
      ty = syntax::parse_type(b.type, &sig);
      syntax::check_type_declared(ty, sig);
    } else {
      for (auto& a : m.aliases)
        if (a.name == b.element && a.object == c && a.type) ty = a.type;
      if (!ty) fail(Errc::InvalidInput, "binding " + r + " needs a type, as in " + b.name + ":T=" + b.element + "@" + b.object);
    }
    auto P = interp_type(m, ty);
    int x = resolve_element(m, P, c, b.element);
    if (c != world) {
      const auto& h = m.base->hom(world, c);
      if (h.size() != 1)
        fail(Errc::InvalidInput, "binding " + r + ": " + std::to_string(h.size()) + " arrows from " +
                                     m.base->object_name(world) + " to " + b.object + ", need exactly one");
      x = P->restrict(h[0], x);
    }
    for (auto& [n, t] : ctx)
      if (n == b.name) fail(Errc::InvalidInput, "variable " + n + " is bound twice");
    ctx.push_back({b.name, ty});
    vals.push_back(x);
  }
  return {ctx, context_index(m, ctx, world, vals)};
}

inline Json trace_json(const ForcingTrace& t) {
  Json kids = Json::array();
  for (auto& c : t.children) kids.push_back(trace_json(c));
  return Json{{"clause", t.clause}, {"text", t.text}, {"verdict", t.verdict}, {"children", kids}};
}

inline Outcome force(const RunConfig& cfg) {
  auto m = load_model(cfg);
  int world = m->base->find_object(cfg.world);
  if (world < 0) fail(Errc::UnknownObject, cfg.world);
  auto [ctx, k] = bind(*m, world, cfg.bindings);
  auto sig = m->signature();
  auto phi = syntax::parse_term(cfg.term, &sig, ctx);
  ForcingQuery q{m.get(), ctx, phi, world, k};
  ForcingTrace tr;
  bool by_clauses = forces_clauses(q, cfg.trace ? &tr : nullptr);
  bool by_value = forces_direct(q);
  if (by_clauses != by_value)
    fail(Errc::InvalidInput, "forcing clauses and interpretation disagree on " + syntax::to_string(phi));
  std::string text = homl::detail::query_text(*m, ctx, phi, world, k) + ": " + (by_clauses ? "true" : "false") + "\n";
  if (cfg.trace) text += trace_to_text(tr, 1);
  int code = by_clauses ? kSuccess : kSemanticFailure;
  Json j{{"command", "force"}, {"exit", code}, {"model", m->name},        {"world", cfg.world},
         {"formula", syntax::to_string(phi)}, {"bindings", ctx.empty() ? "" : show_bindings(*m, ctx, world, k)},
         {"forced", by_clauses}};
  if (cfg.trace) j["trace"] = trace_json(tr);
  return {code, render(cfg, j, text), ""};
}

inline Outcome eval(const RunConfig& cfg) {
  auto m = load_model(cfg);
  auto sig = m->signature();
  auto ctx = cfg.context.empty() ? syntax::Context{} : syntax::parse_context(cfg.context, &sig);
  syntax::check_context(ctx, sig);
  auto t = syntax::parse_term(cfg.term, &sig, ctx);
  auto ty = syntax::typecheck(ctx, t, sig);
  auto v = interp_term(*m, ctx, t);
  auto target = interp_type(*m, ty);
  std::string text = "[[" + syntax::to_string(t) + "]] : [[" + (ctx.empty() ? "1" : syntax::context_to_string(ctx)) +
                     "]] -> [[" + syntax::type_to_string(ty) + "]]\n";
  Json comps = Json::array();
  for (int c = 0; c < m->base->object_count(); ++c) {
    text += m->base->object_name(c) + ":\n";
    Json rows = Json::array();
    for (std::size_t k = 0; k < v.components[c].size(); ++k) {
      auto in = ctx.empty() ? std::string("*") : show_bindings(*m, ctx, c, static_cast<int>(k));
      auto out = show_element(*m, target, c, v.components[c][k]);
      text += "  " + in + "  ->  " + out + "\n";
      rows.push_back(Json{{"input", in}, {"value", out}});
    }
    comps.push_back(Json{{"object", m->base->object_name(c)}, {"rows", rows}});
  }
  Json j{{"command", "eval"}, {"exit", 0}, {"model", m->name}, {"term", syntax::to_string(t)},
         {"type", syntax::type_to_string(ty)}, {"components", comps}};
  return {kSuccess, render(cfg, j, text), ""};
}

inline Outcome builtin_checks(const RunConfig& cfg) {
  SoundnessOptions o;
  o.corpus.seed = cfg.seed;
  auto reports = run_all_checks(cfg.jobs, o);
  bool ok = true;
  std::string text;
  Json rs = Json::array();
  for (auto& r : reports) {
    ok = ok && r.passed;
    text += report_to_text(r, cfg.timing) + "\n";
    rs.push_back(report_json(r, cfg.timing));
  }
  text += "summary\n";
  for (auto& r : reports)
    text += std::string(r.passed ? "  PASS  " : "  FAIL  ") + r.anchor + "  (" + r.name + " on " + r.subject + ")\n";
  int code = ok ? kSuccess : kSemanticFailure;
  Json j{{"command", "paper-checks"}, {"exit", code}, {"seed", cfg.seed}, {"passed", ok}, {"reports", rs}};
  return {code, render(cfg, j, text), ""};
}

}  // namespace detail

/// Runs one command.  Library errors become exit code 2 (1 from validate
/// when the input was read but is not a valid structure).
inline Outcome run(const RunConfig& cfg) {
  try {
    if (cfg.jobs < 1) fail(Errc::InvalidInput, "--jobs must be at least 1");
    if (cfg.size_guard) {
      if (*cfg.size_guard < 1) fail(Errc::InvalidInput, "size guard must be at least 1");
      limits().max_arrows = *cfg.size_guard;
    }
    if (cfg.command == "validate") return detail::validate(cfg);
    if (cfg.command == "check") return detail::check(cfg);
    if (cfg.command == "force") return detail::force(cfg);
    if (cfg.command == "eval") return detail::eval(cfg);
    if (cfg.command == "paper-checks") return detail::builtin_checks(cfg);
    fail(Errc::InvalidInput, "unknown command " + cfg.command);
  } catch (const Error& e) {
    Outcome o{kInputError, "", std::string("error: ") + e.what() + "\n"};
    if (cfg.format == Format::Structured)
      o.out = Json{{"command", cfg.command}, {"exit", int(kInputError)}, {"error", detail::error_json(e)}}.dump(2) + "\n";
    return o;
  }
}

}  // namespace homl::cli

#pragma once

#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace homl {

enum class Errc {
  MissingIdentity,
  NonAssociative,
  UndefinedComposite,
  DomCodMismatch,
  UnknownObject,
  UnknownArrow,
  NotReflexive,
  NotTransitive,
  SizeGuardExceeded,
  BaseMismatch,
  SourceMismatch,
  ShapeMismatch,
  NotFunctorial,
  UnknownElement,
  NotClosedUnderRestriction,
  HeytingAxiomFailure,
  NonNaturalStructureMap,
  NotAFrameMap,
  UniquenessViolation,
  FaithfulnessFailure,
  ParseError,
  UnboundVariable,
  TypeMismatch,
  NotAProposition,
  UndeclaredBaseType,
  UndeclaredSymbol,
  NonGeometricFrame,
  NotAPreorder,
  SizeTooSmall,
  InvalidInput,
};

inline std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::MissingIdentity: return "MissingIdentity";
    case Errc::NonAssociative: return "NonAssociative";
    case Errc::UndefinedComposite: return "UndefinedComposite";
    case Errc::DomCodMismatch: return "DomCodMismatch";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::UnknownArrow: return "UnknownArrow";
    case Errc::NotReflexive: return "NotReflexive";
    case Errc::NotTransitive: return "NotTransitive";
    case Errc::SizeGuardExceeded: return "SizeGuardExceeded";
    case Errc::BaseMismatch: return "BaseMismatch";
    case Errc::SourceMismatch: return "SourceMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NotFunctorial: return "NotFunctorial";
    case Errc::UnknownElement: return "UnknownElement";
    case Errc::NotClosedUnderRestriction: return "NotClosedUnderRestriction";
    case Errc::HeytingAxiomFailure: return "HeytingAxiomFailure";
    case Errc::NonNaturalStructureMap: return "NonNaturalStructureMap";
    case Errc::NotAFrameMap: return "NotAFrameMap";
    case Errc::UniquenessViolation: return "UniquenessViolation";
    case Errc::FaithfulnessFailure: return "FaithfulnessFailure";
    case Errc::ParseError: return "ParseError";
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::NotAProposition: return "NotAProposition";
    case Errc::UndeclaredBaseType: return "UndeclaredBaseType";
    case Errc::UndeclaredSymbol: return "UndeclaredSymbol";
    case Errc::NonGeometricFrame: return "NonGeometricFrame";
    case Errc::NotAPreorder: return "NotAPreorder";
    case Errc::SizeTooSmall: return "SizeTooSmall";
    case Errc::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) {
  throw Error(code, detail);
}

// Size guards. The arrow cap bounds categories; the element cap bounds any
// single enumerated set (an exponential at one object, a powerset, ...).
struct Limits {
  std::size_t max_arrows = 64;
  std::size_t max_elements = 250000;
};

inline Limits& limits() {
  static Limits l = [] {
    Limits d;
    if (const char* s = std::getenv("HOML_SIZE_GUARD")) {
      long v = std::strtol(s, nullptr, 10);
      if (v >= 1) d.max_arrows = static_cast<std::size_t>(v);
    }
    return d;
  }();
  return l;
}

}  // namespace homl

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcmodel {

enum class Errc {
  NotHermitian,
  NegativeEigenvalue,
  SingularShift,
  DimensionMismatch,
  NotContraction,
  InvalidArgument,
  SizeOverflow,
  DegreeOverflow,
  UnsafeDegree,
  ZeroDefect,
  NotIntertwining,
  NotInner,
  AmbiguousWandering,
  IndexOutOfRange,
  ParseError,
  UnknownCheck,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NegativeEigenvalue: return "NegativeEigenvalue";
    case Errc::SingularShift: return "SingularShift";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotContraction: return "NotContraction";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SizeOverflow: return "SizeOverflow";
    case Errc::DegreeOverflow: return "DegreeOverflow";
    case Errc::UnsafeDegree: return "UnsafeDegree";
    case Errc::ZeroDefect: return "ZeroDefect";
    case Errc::NotIntertwining: return "NotIntertwining";
    case Errc::NotInner: return "NotInner";
    case Errc::AmbiguousWandering: return "AmbiguousWandering";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownCheck: return "UnknownCheck";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dcmodel

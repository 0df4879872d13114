#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diva {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DIVA_DECLARE_ERROR(Name) \
  class Name : public Error {    \
   public:                       \
    using Error::Error;          \
  }

// rdm-core
DIVA_DECLARE_ERROR(NotSymmetric);
DIVA_DECLARE_ERROR(ShapeError);
DIVA_DECLARE_ERROR(WeightError);
DIVA_DECLARE_ERROR(NotRepresentable);
DIVA_DECLARE_ERROR(SnapshotError);

// models
DIVA_DECLARE_ERROR(FillingError);
DIVA_DECLARE_ERROR(HeaderError);
DIVA_DECLARE_ERROR(NotUniform);

// functionals
DIVA_DECLARE_ERROR(RepresentabilityError);
DIVA_DECLARE_ERROR(CaseError);
DIVA_DECLARE_ERROR(ModelError);
DIVA_DECLARE_ERROR(BoundaryGradientError);

// solver
DIVA_DECLARE_ERROR(DirectionError);

// oracle
DIVA_DECLARE_ERROR(DimensionError);
DIVA_DECLARE_ERROR(QuadratureError);

#undef DIVA_DECLARE_ERROR

/// Malformed FCIDUMP input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace diva

#pragma once

#include <stdexcept>
#include <string>

namespace tweezer {

/// Base class for every failure raised by the library.
///
/// Errors fall in two families that the command-line tool maps onto distinct
/// exit codes: bad input (malformed files, violated preconditions) and
/// numerical failure (a fit that does not converge, a singular normal matrix).
class Error : public std::runtime_error {
 public:
  enum class Category { Input, Numerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }
  bool numerical() const noexcept { return category_ == Category::Numerical; }

 private:
  Category category_;
};

#define TWEEZER_DEFINE_ERROR(Name, Cat)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what)                                \
        : Error(Category::Cat, std::string(#Name ": ") + what) {}         \
  };

// core-data
TWEEZER_DEFINE_ERROR(InvalidSeries, Input)
TWEEZER_DEFINE_ERROR(DenominatorCollapse, Numerical)
TWEEZER_DEFINE_ERROR(ZeroMeanDenominator, Numerical)
TWEEZER_DEFINE_ERROR(ParseError, Input)
TWEEZER_DEFINE_ERROR(SchemaError, Input)
TWEEZER_DEFINE_ERROR(RateError, Input)
TWEEZER_DEFINE_ERROR(UnknownChannel, Input)

// simulator
TWEEZER_DEFINE_ERROR(SpecError, Input)

// spectral
TWEEZER_DEFINE_ERROR(TooShort, Input)
TWEEZER_DEFINE_ERROR(BadBlockCount, Input)
TWEEZER_DEFINE_ERROR(EmptyBand, Input)

// models
TWEEZER_DEFINE_ERROR(GridMismatch, Input)
TWEEZER_DEFINE_ERROR(UnknownKind, Input)

// fitting
TWEEZER_DEFINE_ERROR(DegenerateSpectrum, Numerical)
TWEEZER_DEFINE_ERROR(SingularNormalMatrix, Numerical)
TWEEZER_DEFINE_ERROR(BandMismatch, Input)
TWEEZER_DEFINE_ERROR(DegenerateAbscissa, Input)

// pipelines
TWEEZER_DEFINE_ERROR(MissingChannel, Input)
TWEEZER_DEFINE_ERROR(DarkGridMismatch, Input)
TWEEZER_DEFINE_ERROR(MixedMethods, Input)
TWEEZER_DEFINE_ERROR(InsufficientPowers, Input)
TWEEZER_DEFINE_ERROR(NonPositiveInput, Input)
TWEEZER_DEFINE_ERROR(ConfigError, Input)

#undef TWEEZER_DEFINE_ERROR

}  // namespace tweezer

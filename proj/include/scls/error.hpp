#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scls {

enum class ErrorCode {
  AllZero,
  NegativeEntry,
  ZeroComponent,
  DimensionTooSmall,
  ZeroWithNonpositiveAlpha,
  AlphaZero,
  SupportMismatch,
  NonpositiveParameter,
  NotOnSimplex,
  ShapeMismatch,
  Infeasible,
  NotPositiveDefinite,
  NoConvergence,
  IndexOutOfRange,
  InsufficientTimePoints,
  SingleLevel,
  ZeroFittedCell,
  TooFewSamples,
  DegenerateScatter,
  TooFewRows,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// True for failures of the numerical machinery (as opposed to bad input).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scls

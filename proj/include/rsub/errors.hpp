#pragma once

#include <stdexcept>
#include <string>

namespace rsub {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionTooLarge : Error {
  explicit DimensionTooLarge(int n)
      : Error("exact oracle limited to n <= 22, got n = " + std::to_string(n)),
        n(n) {}
  int n;
};

struct NotPsd : Error {
  using Error::Error;
};

struct InvalidSupport : Error {
  using Error::Error;
};

struct NotDescending : Error {
  using Error::Error;
};

struct NotOrthonormal : Error {
  using Error::Error;
};

struct ParameterWindow : Error {
  explicit ParameterWindow(double delta, double lo, double hi)
      : Error("delta = " + std::to_string(delta) +
              " outside admissible window [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]") {}
};

struct SupportOverflow : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct SparsityTooLarge : Error {
  using Error::Error;
};

struct RankInfeasible : Error {
  using Error::Error;
};

struct RankMismatch : Error {
  using Error::Error;
};

struct DegenerateGap : Error {
  using Error::Error;
};

struct SampleCountNotDivisible : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

struct MissingColumn : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace rsub

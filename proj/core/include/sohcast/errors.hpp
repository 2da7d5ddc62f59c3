#pragma once

#include <stdexcept>
#include <string>

namespace soh {

/** Base class for everything this library throws on purpose. */
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input-shape problems.
struct EmptyInput : Error {
  using Error::Error;
};
struct UnsortedInput : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct NoSuchChannel : Error {
  using Error::Error;
};

// Gap imputation cannot bracket a run that touches the series boundary.
struct UnboundedGap : Error {
  using Error::Error;
};

// Decomposition of a signal with no oscillatory content.
struct NotDecomposable : Error {
  using Error::Error;
};
struct NoOscillatoryComponent : Error {
  using Error::Error;
};

// Supervised-frame construction would let target values leak into predictors.
struct LeakageError : Error {
  using Error::Error;
};

struct InsufficientTrainingData : Error {
  using Error::Error;
};

// Statistical test input that carries no information (e.g. all-zero differences).
struct DegenerateSample : Error {
  using Error::Error;
};

/** Malformed external input; carries a 1-based line number when known. */
struct ParseError : Error {
  explicit ParseError(const std::string& what, long line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_number(line) {}
  long line_number;
};

// Bad pipeline configuration (unknown key, missing field, wrong schema version).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace soh

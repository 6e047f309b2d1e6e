#pragma once

#include <stdexcept>
#include <string>

namespace travest {

// Base class so callers can catch the whole family at once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateCloud : Error { using Error::Error; };
struct WindowOutOfRange : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct GraphError : Error { using Error::Error; };
struct MissingGrad : Error { using Error::Error; };
struct EmptyPositiveSet : Error { using Error::Error; };
struct EmptyDistanceSet : Error { using Error::Error; };
struct SizeMismatch : Error { using Error::Error; };
struct MissingLabels : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct NoPathError : Error { using Error::Error; };
struct SpecError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

}  // namespace travest

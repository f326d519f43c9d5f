#pragma once

#include <stdexcept>
#include <string>

namespace survt {

// Base class for all library errors. Subtypes exist so callers can react per
// failure class instead of parsing messages.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error { using Error::Error; };        // operand dimensions do not conform
struct MaskError : Error { using Error::Error; };         // all-masked softmax row / empty pooling set
struct NumericError : Error { using Error::Error; };      // non-finite intermediate value
struct SchemaError : Error { using Error::Error; };       // malformed CSV or config file
struct EncodingError : Error { using Error::Error; };     // unseen category, degenerate column
struct ConfigError : Error { using Error::Error; };       // invalid run / model configuration
struct StratifyError : Error { using Error::Error; };     // fold stratification impossible
struct ConvergenceError : Error { using Error::Error; };  // optimizer divergence
struct MetricError : Error { using Error::Error; };       // metric undefined on the given cohort
struct ImputeError : Error { using Error::Error; };       // imputer fit/transform failure
struct ComplexityError : Error { using Error::Error; };   // request exceeds supported problem size

}  // namespace survt

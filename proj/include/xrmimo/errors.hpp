#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xrmimo {

/// Invalid or inconsistent configuration (frame structures, exec models,
/// experiment files). The message carries the offending key path when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed channel file. `offset()` is the byte offset where parsing failed.
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Channel matrix is rank deficient or too badly conditioned for zero-forcing.
class SingularChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bit/byte count does not fit the expected wire framing.
class FramingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric cannot be evaluated (too few poses, degenerate geometry, zero baseline).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene generation gave up (descriptor rejection budget exhausted).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xrmimo

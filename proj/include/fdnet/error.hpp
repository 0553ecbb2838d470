#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdnet {

/// Precondition violated by the caller (bad shape, bad size, bad value).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A result failed an internal consistency check, e.g. a non-Hermitian
/// spectrum handed to the real inverse transform.
class NumericalInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layer used out of order (backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed dataset or checkpoint file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Invalid configuration: syntax, unknown keys, or an architecture whose
/// layer shapes do not chain.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::size_t iteration, std::string layer)
      : std::runtime_error(what), iteration_(iteration), layer_(std::move(layer)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::size_t iteration_;
  std::string layer_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fdnet

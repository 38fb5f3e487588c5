// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dvae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A vector too close to the origin to be projected onto the sphere.
class DegenerateVector : public Error {
 public:
  using Error::Error;
};

/// Traversal direction parallel to the traversal center.
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a computation. Training attaches the epoch and
/// batch index at which the value appeared.
class NonFiniteValue : public Error {
 public:
  explicit NonFiniteValue(const std::string& what,
                          std::optional<std::size_t> epoch = std::nullopt,
                          std::optional<std::size_t> batch = std::nullopt)
      : Error(what), epoch_(epoch), batch_(batch) {}

  std::optional<std::size_t> epoch() const noexcept { return epoch_; }
  std::optional<std::size_t> batch() const noexcept { return batch_; }

 private:
  std::optional<std::size_t> epoch_;
  std::optional<std::size_t> batch_;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MissingColumn : public Error {
 public:
  using Error::Error;
};

/// Invalid training configuration or dataset descriptor.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or checkpoint I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dvae

// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mimicbench {

/// Bad CLI arguments, malformed configuration, out-of-bounds hyperparameters.
/// Maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or corrupt input data. Maps to process exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run that started but could not finish (diverged training, failed
/// objective, broken invariant at runtime). Maps to process exit code 4.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimension mismatch.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside its documented domain (dropout rate >= 1, label out of
/// range, non-positive budget, ...).
class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Architecture-grammar error; carries the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace mimicbench

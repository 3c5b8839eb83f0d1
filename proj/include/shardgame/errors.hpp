#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shardgame {

/// Invalid network shape or epoch instance (sizes, thresholds, index ranges).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exhaustive analysis requested on a game that is too large to enumerate.
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// theta_c2 has no finite value when verification is free (c^v = 0).
class UndefinedThresholdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coordinator received no digests for a shard.
class MalformedShardError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration text failed to parse or validate. `line` is 1-based, 0 when
/// the problem is not tied to a single line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace shardgame

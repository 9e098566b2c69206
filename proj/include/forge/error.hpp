#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forge {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value breaks a documented type invariant (e.g. a tool-call argument that
/// contains a template delimiter).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed template text. `offset` is the byte position in the parsed input.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("format error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyGroup : public Error {
 public:
  EmptyGroup() : Error("group has no trajectories") {}
};

class EmptyMask : public Error {
 public:
  explicit EmptyMask(std::size_t index)
      : Error("trajectory " + std::to_string(index) + " has no model tokens") {}
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class MissingScores : public Error {
 public:
  using Error::Error;
};

class EmptyDistillPool : public Error {
 public:
  EmptyDistillPool() : Error("no trajectory reached the distillation threshold") {}
};

/// Bad experiment configuration. `key` names the offending entry when known.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace forge

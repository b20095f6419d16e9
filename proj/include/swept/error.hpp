#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace swept {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameter. `field()` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error("invalid " + field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A caller broke an operation's precondition (arity, step or shape mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Where in space-time a numeric failure happened.
struct SpaceTimeLocation {
  std::int64_t step = 0;
  int level = 0;
  int i = 0;
  int j = 0;
};

/// A kernel produced a non-finite or non-physical value.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
  NumericError(const std::string& what, SpaceTimeLocation loc)
      : Error(what + " at step " + std::to_string(loc.step) + " level " +
              std::to_string(loc.level) + " (" + std::to_string(loc.i) + ", " +
              std::to_string(loc.j) + ")"),
        location_(loc) {}

  const std::optional<SpaceTimeLocation>& location() const noexcept { return location_; }

 private:
  std::optional<SpaceTimeLocation> location_;
};

/// Malformed bytes handed to a decoder. `field()` names the header field.
class CodecError : public Error {
 public:
  CodecError(std::string field, const std::string& what)
      : Error("codec: " + field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Message delivery failed (peer closed, timeout, aborted run).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// A well-formed message arrived that does not fit the receiver's state.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace swept

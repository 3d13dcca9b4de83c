#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bihm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category, e.g. "shape" or "checkpoint".
  virtual const char* kind() const noexcept { return "error"; }
};

/// Dimension mismatch between a vector/matrix and the layer or model using it.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Invalid argument value (empty sample list, K = 0, layer index out of range, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

/// An exhaustive enumeration would exceed the configured bit budget.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "enumeration_limit"; }
};

/// Training produced non-finite parameters.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "diverged"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// Malformed dataset file. `line` is 1-based for text formats, `offset` is a
/// byte offset for the packed format; the unused one is zero.
class DatasetFormatError : public Error {
 public:
  DatasetFormatError(const std::string& what, std::size_t line, std::uint64_t offset)
      : Error(what), line_(line), offset_(offset) {}
  const char* kind() const noexcept override { return "dataset_format"; }
  std::size_t line() const noexcept { return line_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::uint64_t offset_;
};

class CheckpointError : public Error {
 public:
  enum class Reason { kBadMagic, kUnsupportedVersion, kTruncated, kSizeMismatch, kBadMetadata };

  CheckpointError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}
  const char* kind() const noexcept override;
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

}  // namespace bihm

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gml {

enum class ErrorCode {
  InvalidShape,
  ShapeMismatch,
  NonFiniteModel,
  NonFiniteGradient,
  CorruptCheckpoint,
  InvalidSpec,
  SplitTooSmall,
  CorruptDataset,
  NoSites,
  IncompatibleModels,
  NoData,
  NotBinary,
  BadConfig,
  InvalidConfig,
  MissingArtifact,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the ErrorCode values so
/// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gml

#include "gml/error.hpp"

namespace gml {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteModel: return "NonFiniteModel";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SplitTooSmall: return "SplitTooSmall";
    case ErrorCode::CorruptDataset: return "CorruptDataset";
    case ErrorCode::NoSites: return "NoSites";
    case ErrorCode::IncompatibleModels: return "IncompatibleModels";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace gml

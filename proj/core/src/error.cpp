#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::EmptyLabel: return "EmptyLabel";
        case Errc::LabelTooLong: return "LabelTooLong";
        case Errc::NameTooLong: return "NameTooLong";
        case Errc::InvalidCharacter: return "InvalidCharacter";
        case Errc::UnknownFeatureSet: return "UnknownFeatureSet";
        case Errc::FeatureSetMismatch: return "FeatureSetMismatch";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::BadLabel: return "BadLabel";
        case Errc::Io: return "Io";
        case Errc::SingleClass: return "SingleClass";
        case Errc::Empty: return "Empty";
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::DegenerateFeatures: return "DegenerateFeatures";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::EmptyEnsemble: return "EmptyEnsemble";
        case Errc::WeightMismatch: return "WeightMismatch";
        case Errc::UnknownModelKind: return "UnknownModelKind";
        case Errc::VersionMismatch: return "VersionMismatch";
        case Errc::CorruptArtifact: return "CorruptArtifact";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::TooFewExamples: return "TooFewExamples";
        case Errc::EmptyGrid: return "EmptyGrid";
        case Errc::BadRange: return "BadRange";
        case Errc::Truncated: return "Truncated";
        case Errc::LabelOverflow: return "LabelOverflow";
        case Errc::NameOverflow: return "NameOverflow";
        case Errc::PointerLoop: return "PointerLoop";
        case Errc::PointerOutOfBounds: return "PointerOutOfBounds";
        case Errc::BadMagic: return "BadMagic";
        case Errc::UnsupportedLinkType: return "UnsupportedLinkType";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(Errc code, std::size_t row, std::optional<Errc> cause, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " (row " + std::to_string(row) + "): " + message),
      code_(code), row_(row), cause_(cause) {}

} // namespace tunnelwatch

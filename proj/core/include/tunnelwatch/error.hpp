#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tunnelwatch {

/// Every failure the library reports. Grouped by the module that raises it.
enum class Errc {
    // domain names / features
    EmptyInput,
    EmptyLabel,
    LabelTooLong,
    NameTooLong,
    InvalidCharacter,
    UnknownFeatureSet,
    FeatureSetMismatch,
    // datasets
    MalformedRow,
    BadLabel,
    Io,
    SingleClass,
    Empty,
    ConfigInvalid,
    // models
    InvalidArgument,
    DegenerateFeatures,
    ShapeMismatch,
    NonFiniteLoss,
    EmptyEnsemble,
    WeightMismatch,
    UnknownModelKind,
    VersionMismatch,
    CorruptArtifact,
    // evaluation
    LengthMismatch,
    TooFewExamples,
    EmptyGrid,
    BadRange,
    // wire formats
    Truncated,
    LabelOverflow,
    NameOverflow,
    PointerLoop,
    PointerOutOfBounds,
    BadMagic,
    UnsupportedLinkType,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    /// Row-scoped error (CSV loading). `cause` is the underlying parse failure if any.
    Error(Errc code, std::size_t row, std::optional<Errc> cause, const std::string& message);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> row() const noexcept { return row_; }
    std::optional<Errc> cause() const noexcept { return cause_; }

private:
    Errc code_;
    std::optional<std::size_t> row_;
    std::optional<Errc> cause_;
};

} // namespace tunnelwatch

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tunnelwatch/model.hpp"

namespace tunnelwatch {

/// Model artifacts are JSON documents:
///   {format_version, kind, feature_set_id, hyperparams, normalization, params, training}
/// Doubles are written in shortest round-trip form, so load(save(m)) is bit-exact.
std::string model_to_json(const ModelArtifact& model);

/// Throws VersionMismatch, CorruptArtifact.
ModelArtifact model_from_json(std::string_view text);

void save_model(const ModelArtifact& model, const std::filesystem::path& path); // throws Io
ModelArtifact load_model(const std::filesystem::path& path);                    // throws Io, VersionMismatch, CorruptArtifact

std::string hyperparams_to_json(const Hyperparams& hp);

/// Overrides the fields present in `text` on top of `base`. Throws InvalidArgument.
Hyperparams hyperparams_from_json(std::string_view text, Hyperparams base = {});

} // namespace tunnelwatch

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tunnelwatch/domain.hpp"

namespace tunnelwatch {

/// Active feature subset.
///   core2 = {length, entropy}
///   lex7  = {length, entropy, label_count, max_label_length, digit_ratio, hex_ratio, unique_char_count}
enum class FeatureSet { Core2, Lex7 };

std::string_view to_string(FeatureSet set) noexcept;
FeatureSet feature_set_from_string(std::string_view id); // throws UnknownFeatureSet
std::size_t feature_count(FeatureSet set) noexcept;
std::vector<std::string> feature_names(FeatureSet set);

/// Shannon entropy in bits over byte frequencies. Throws EmptyInput.
double shannon_entropy(std::string_view text);

struct FeatureVector {
    std::size_t length = 0;
    double entropy = 0.0;
    std::size_t label_count = 0;
    std::size_t max_label_length = 0;
    double digit_ratio = 0.0;
    double hex_ratio = 0.0;
    std::size_t unique_char_count = 0;
    FeatureSet feature_set = FeatureSet::Core2;

    /// Numeric components of the active subset, in canonical order.
    std::vector<double> values() const;
};

FeatureVector extract_features(const DomainName& domain, FeatureSet set);
FeatureVector extract_features(const DomainName& domain, std::string_view feature_set_id);

struct NormalizationStats {
    FeatureSet feature_set = FeatureSet::Core2;
    std::vector<double> min;
    std::vector<double> max;
};

/// Per-feature extrema. Throws EmptyInput, FeatureSetMismatch on mixed subsets.
NormalizationStats fit_normalization(std::span<const FeatureVector> features);

/// Min-max scaling clamped to [0,1]; a constant feature maps to 0.
std::vector<double> normalize(const FeatureVector& v, const NormalizationStats& stats);
std::vector<double> normalize_values(std::span<const double> raw, const NormalizationStats& stats);

} // namespace tunnelwatch

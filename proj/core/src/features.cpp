#include "tunnelwatch/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

std::string_view to_string(FeatureSet set) noexcept {
    return set == FeatureSet::Core2 ? "core2" : "lex7";
}

FeatureSet feature_set_from_string(std::string_view id) {
    if (id == "core2") return FeatureSet::Core2;
    if (id == "lex7") return FeatureSet::Lex7;
    throw Error(Errc::UnknownFeatureSet, "unknown feature set '" + std::string(id) + "'");
}

std::size_t feature_count(FeatureSet set) noexcept { return set == FeatureSet::Core2 ? 2 : 7; }

std::vector<std::string> feature_names(FeatureSet set) {
    if (set == FeatureSet::Core2) return {"length", "entropy"};
    return {"length", "entropy", "label_count", "max_label_length", "digit_ratio", "hex_ratio", "unique_char_count"};
}

double shannon_entropy(std::string_view text) {
    if (text.empty()) throw Error(Errc::EmptyInput, "entropy of empty text");
    std::array<std::size_t, 256> counts{};
    for (unsigned char c : text) ++counts[c];
    const double n = static_cast<double>(text.size());
    double entropy = 0.0;
    for (std::size_t count : counts) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / n;
        entropy -= p * std::log2(p);
    }
    // -0.0 for single-symbol input
    return entropy == 0.0 ? 0.0 : entropy;
}

std::vector<double> FeatureVector::values() const {
    if (feature_set == FeatureSet::Core2) return {static_cast<double>(length), entropy};
    return {static_cast<double>(length),
            entropy,
            static_cast<double>(label_count),
            static_cast<double>(max_label_length),
            digit_ratio,
            hex_ratio,
            static_cast<double>(unique_char_count)};
}

FeatureVector extract_features(const DomainName& domain, FeatureSet set) {
    const std::string& text = domain.text();
    FeatureVector v;
    v.feature_set = set;
    v.length = text.size();
    v.entropy = shannon_entropy(text);
    v.label_count = domain.labels().size();
    for (const auto& label : domain.labels()) v.max_label_length = std::max(v.max_label_length, label.size());

    std::array<bool, 256> seen{};
    std::size_t digits = 0;
    std::size_t hex = 0;
    for (unsigned char c : text) {
        seen[c] = true;
        const bool digit = c >= '0' && c <= '9';
        digits += digit;
        hex += digit || (c >= 'a' && c <= 'f');
    }
    v.unique_char_count = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
    v.digit_ratio = static_cast<double>(digits) / static_cast<double>(v.length);
    v.hex_ratio = static_cast<double>(hex) / static_cast<double>(v.length);
    return v;
}

FeatureVector extract_features(const DomainName& domain, std::string_view feature_set_id) {
    return extract_features(domain, feature_set_from_string(feature_set_id));
}

NormalizationStats fit_normalization(std::span<const FeatureVector> features) {
    if (features.empty()) throw Error(Errc::EmptyInput, "cannot fit normalization on no vectors");
    NormalizationStats stats;
    stats.feature_set = features.front().feature_set;
    stats.min = features.front().values();
    stats.max = stats.min;
    for (const auto& v : features) {
        if (v.feature_set != stats.feature_set) {
            throw Error(Errc::FeatureSetMismatch, "mixed feature sets in normalization input");
        }
        const auto x = v.values();
        for (std::size_t j = 0; j < x.size(); ++j) {
            stats.min[j] = std::min(stats.min[j], x[j]);
            stats.max[j] = std::max(stats.max[j], x[j]);
        }
    }
    return stats;
}

std::vector<double> normalize_values(std::span<const double> raw, const NormalizationStats& stats) {
    if (raw.size() != stats.min.size()) {
        throw Error(Errc::ShapeMismatch, "expected " + std::to_string(stats.min.size()) + " features, got " +
                                             std::to_string(raw.size()));
    }
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const double span = stats.max[j] - stats.min[j];
        out[j] = span > 0.0 ? std::clamp((raw[j] - stats.min[j]) / span, 0.0, 1.0) : 0.0;
    }
    return out;
}

std::vector<double> normalize(const FeatureVector& v, const NormalizationStats& stats) {
    if (v.feature_set != stats.feature_set) {
        throw Error(Errc::FeatureSetMismatch, "vector is " + std::string(to_string(v.feature_set)) +
                                                  ", statistics are " + std::string(to_string(stats.feature_set)));
    }
    const auto raw = v.values();
    return normalize_values(raw, stats);
}

} // namespace tunnelwatch

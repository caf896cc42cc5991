#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tunnelwatch/domain.hpp"

namespace tunnelwatch {

enum class Label : std::uint8_t { Normal = 0, Tunnel = 1 };

constexpr int to_int(Label label) noexcept { return static_cast<int>(label); }

struct LabeledExample {
    DomainName domain;
    Label label = Label::Normal;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<LabeledExample> examples, std::string source);

    const std::vector<LabeledExample>& examples() const noexcept { return examples_; }
    const std::string& source() const noexcept { return source_; }
    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }

    /// Indexed by to_int(Label).
    const std::array<std::size_t, 2>& class_counts() const noexcept { return counts_; }
    bool has_both_classes() const noexcept { return counts_[0] > 0 && counts_[1] > 0; }

    Dataset subset(const std::vector<std::size_t>& indices, std::string source) const;

private:
    std::vector<LabeledExample> examples_;
    std::string source_;
    std::array<std::size_t, 2> counts_{};
};

/// Reads `domain,label` rows. The header line is optional; rows are numbered
/// from 1 excluding it. Throws MalformedRow(row, cause), BadLabel(row), Io.
Dataset load_csv(const std::filesystem::path& path);
Dataset read_csv(std::istream& in, std::string source);

/// Writes the header plus one LF-terminated row per example. Throws Io.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
void write_csv(const Dataset& dataset, std::ostream& out);

/// Stratified partition. Per-class train counts are a largest-remainder
/// apportionment of round(train_fraction * size), so each is within one of
/// train_fraction * class_count. Original order is kept inside each half.
/// Throws Empty, SingleClass, InvalidArgument.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t rng_seed);

enum class PayloadEncoder { Hex, Base32 };

std::string_view to_string(PayloadEncoder encoder) noexcept;
PayloadEncoder payload_encoder_from_string(std::string_view name); // throws ConfigInvalid

std::string encode_hex(const std::vector<std::uint8_t>& bytes);
/// RFC 4648 alphabet, lowercased, no padding.
std::string encode_base32(const std::vector<std::uint8_t>& bytes);

struct SynthConfig {
    std::size_t n_normal = 1000;
    std::size_t n_tunnel = 1000;
    std::string parent_domain = "t.example";
    PayloadEncoder encoder = PayloadEncoder::Hex;
    std::size_t payload_min = 16;
    std::size_t payload_max = 60;
    std::uint64_t rng_seed = 42;
};

/// Emulated tunnel queries (encoded payload chunks under parent_domain, label 1)
/// and wordlist domains (label 0), shuffled together. No duplicates within one
/// call. Throws ConfigInvalid.
Dataset generate_synthetic(const SynthConfig& config);

/// The in-repo token list used for normal domains.
const std::vector<std::string_view>& normal_wordlist();

} // namespace tunnelwatch

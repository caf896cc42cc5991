#include "tunnelwatch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "tunnelwatch/error.hpp"
#include "tunnelwatch/random.hpp"

namespace tunnelwatch {

namespace {

constexpr std::string_view kHeader = "domain,label";
constexpr std::array<std::string_view, 5> kPublicSuffixes = {"com", "net", "org", "io", "co"};

} // namespace

Dataset::Dataset(std::vector<LabeledExample> examples, std::string source)
    : examples_(std::move(examples)), source_(std::move(source)) {
    for (const auto& ex : examples_) ++counts_[to_int(ex.label)];
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, std::string source) const {
    std::vector<LabeledExample> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(examples_.at(i));
    return Dataset(std::move(picked), std::move(source));
}

Dataset read_csv(std::istream& in, std::string source) {
    std::vector<LabeledExample> examples;
    std::string line;
    std::size_t row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (line == kHeader) continue;
        }
        ++row;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw Error(Errc::MalformedRow, row, std::nullopt, "expected exactly two fields");
        }
        const std::string_view field_domain = std::string_view(line).substr(0, comma);
        const std::string_view field_label = std::string_view(line).substr(comma + 1);

        Label label;
        if (field_label == "0") {
            label = Label::Normal;
        } else if (field_label == "1") {
            label = Label::Tunnel;
        } else {
            throw Error(Errc::BadLabel, row, std::nullopt, "label '" + std::string(field_label) + "' is not 0 or 1");
        }
        try {
            examples.push_back({parse_domain(field_domain), label});
        } catch (const Error& e) {
            throw Error(Errc::MalformedRow, row, e.code(), e.what());
        }
    }
    if (in.bad()) throw Error(Errc::Io, "read failure in " + source);
    return Dataset(std::move(examples), std::move(source));
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_csv(in, path.string());
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << kHeader << '\n';
    for (const auto& ex : dataset.examples()) out << ex.domain.text() << ',' << to_int(ex.label) << '\n';
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
    write_csv(dataset, out);
    out.flush();
    if (!out) throw Error(Errc::Io, "write failure on " + path.string());
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t rng_seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(Errc::InvalidArgument, "train fraction must lie in (0,1)");
    }
    if (dataset.empty()) throw Error(Errc::Empty, "cannot split an empty dataset");
    if (!dataset.has_both_classes()) throw Error(Errc::SingleClass, "split requires both classes");

    const auto& counts = dataset.class_counts();
    const auto total_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(dataset.size())));

    // Largest-remainder apportionment; remainder ties go to the lower label.
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    for (std::size_t c = 0; c < 2; ++c) {
        const double exact = train_fraction * static_cast<double>(counts[c]);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
    }
    std::size_t assigned = quota[0] + quota[1];
    while (assigned < total_train) {
        const std::size_t c = remainder[1] > remainder[0] ? 1 : 0;
        if (quota[c] < counts[c]) {
            ++quota[c];
        } else {
            ++quota[1 - c];
        }
        remainder[c] = -1.0;
        ++assigned;
    }

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[to_int(dataset.examples()[i].label)].push_back(i);

    Rng rng(rng_seed);
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        rng.shuffle(std::span<std::size_t>(idx));
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
        test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {dataset.subset(train_idx, dataset.source() + "#train"), dataset.subset(test_idx, dataset.source() + "#test")};
}

std::string_view to_string(PayloadEncoder encoder) noexcept {
    return encoder == PayloadEncoder::Hex ? "hex" : "base32";
}

PayloadEncoder payload_encoder_from_string(std::string_view name) {
    if (name == "hex") return PayloadEncoder::Hex;
    if (name == "base32") return PayloadEncoder::Base32;
    throw Error(Errc::ConfigInvalid, "unknown encoder '" + std::string(name) + "'");
}

std::string encode_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

std::string encode_base32(const std::vector<std::uint8_t>& bytes) {
    static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz234567";
    std::string out;
    out.reserve((bytes.size() * 8 + 4) / 5);
    std::uint32_t buffer = 0;
    int bits = 0;
    for (std::uint8_t b : bytes) {
        buffer = (buffer << 8) | b;
        bits += 8;
        while (bits >= 5) {
            bits -= 5;
            out.push_back(kAlphabet[(buffer >> bits) & 0x1f]);
        }
    }
    if (bits > 0) out.push_back(kAlphabet[(buffer << (5 - bits)) & 0x1f]);
    return out;
}

namespace {

std::size_t encoded_size(PayloadEncoder encoder, std::size_t payload) {
    return encoder == PayloadEncoder::Hex ? payload * 2 : (payload * 8 + 4) / 5;
}

std::string chunk_labels(const std::string& encoded) {
    std::string out;
    for (std::size_t pos = 0; pos < encoded.size(); pos += kMaxLabelLength) {
        if (!out.empty()) out.push_back('.');
        out.append(encoded, pos, kMaxLabelLength);
    }
    return out;
}

std::string random_normal_name(Rng& rng) {
    const auto& words = normal_wordlist();
    const auto tokens = static_cast<std::size_t>(rng.between(1, 3));
    std::string name;
    for (std::size_t t = 0; t < tokens; ++t) {
        name.append(words[rng.below(words.size())]);
        name.push_back('.');
    }
    name.append(kPublicSuffixes[rng.below(kPublicSuffixes.size())]);
    return name;
}

} // namespace

Dataset generate_synthetic(const SynthConfig& config) {
    if (config.payload_min == 0 || config.payload_min > config.payload_max) {
        throw Error(Errc::ConfigInvalid, "payload length range must be a non-empty range of positive sizes");
    }
    DomainName parent;
    try {
        parent = parse_domain(config.parent_domain);
    } catch (const Error& e) {
        throw Error(Errc::ConfigInvalid, std::string("parent domain: ") + e.what());
    }
    const std::size_t worst = encoded_size(config.encoder, config.payload_max);
    const std::size_t worst_labels = (worst + kMaxLabelLength - 1) / kMaxLabelLength;
    if (worst + worst_labels + parent.encoded_length() > kMaxNameLength) {
        throw Error(Errc::ConfigInvalid, "payload_max does not fit in a 255-byte name under " + parent.text());
    }

    Rng rng(config.rng_seed);
    std::unordered_set<std::string> seen;
    std::vector<LabeledExample> examples;
    examples.reserve(config.n_normal + config.n_tunnel);

    // Bounded retry so an exhausted name space fails instead of spinning.
    auto draw_unique = [&](auto&& make, Label label, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                std::string name = make();
                if (seen.insert(name).second) {
                    examples.push_back({parse_domain(name), label});
                    placed = true;
                }
            }
            if (!placed) throw Error(Errc::ConfigInvalid, "cannot draw enough distinct domains");
        }
    };

    draw_unique(
        [&] {
            const auto len = static_cast<std::size_t>(
                rng.between(static_cast<std::int64_t>(config.payload_min), static_cast<std::int64_t>(config.payload_max)));
            std::vector<std::uint8_t> payload(len);
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng.below(256));
            const std::string encoded =
                config.encoder == PayloadEncoder::Hex ? encode_hex(payload) : encode_base32(payload);
            return chunk_labels(encoded) + "." + parent.text();
        },
        Label::Tunnel, config.n_tunnel);
    draw_unique([&] { return random_normal_name(rng); }, Label::Normal, config.n_normal);

    rng.shuffle(std::span<LabeledExample>(examples));
    return Dataset(std::move(examples), "synthetic:" + std::string(to_string(config.encoder)) + ":seed=" +
                                            std::to_string(config.rng_seed));
}

} // namespace tunnelwatch

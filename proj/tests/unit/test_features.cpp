#include <algorithm>
#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tunnelwatch/domain.hpp"
#include "tunnelwatch/features.hpp"
#include "tunnelwatch/random.hpp"

using namespace tunnelwatch;

namespace {

std::string random_bytes(Rng& rng, std::size_t len) {
    std::string s(len, '\0');
    for (auto& c : s) c = static_cast<char>(rng.below(256));
    return s;
}

std::string join(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? "." : "") + labels[i];
    return out;
}

} // namespace

TEST(ParseDomain, FoldsCaseAndSplitsLabels) {
    const DomainName d = parse_domain("WWW.Example.COM");
    EXPECT_EQ(d.text(), "www.example.com");
    EXPECT_EQ(d.raw(), "WWW.Example.COM");
    EXPECT_EQ(d.labels(), (std::vector<std::string>{"www", "example", "com"}));
}

TEST(ParseDomain, StripsExactlyOneTrailingDot) {
    EXPECT_EQ(parse_domain("example.com.").text(), "example.com");
    EXPECT_TW_ERROR(parse_domain("example.com.."), Errc::EmptyLabel);
}

TEST(ParseDomain, RejectsInvalidInput) {
    EXPECT_TW_ERROR(parse_domain(""), Errc::EmptyInput);
    EXPECT_TW_ERROR(parse_domain("."), Errc::EmptyInput);
    EXPECT_TW_ERROR(parse_domain("a..b"), Errc::EmptyLabel);
    EXPECT_TW_ERROR(parse_domain(".a"), Errc::EmptyLabel);
    EXPECT_TW_ERROR(parse_domain(std::string(64, 'a') + ".com"), Errc::LabelTooLong);
    EXPECT_TW_ERROR(parse_domain("a,b.com"), Errc::InvalidCharacter);
    EXPECT_TW_ERROR(parse_domain("a\nb.com"), Errc::InvalidCharacter);
}

TEST(ParseDomain, EncodedLengthBoundary) {
    // Four 63-byte labels encode to 4 * 64 + 1 = 257 bytes.
    const std::string l63(63, 'a');
    EXPECT_TW_ERROR(parse_domain(l63 + "." + l63 + "." + l63 + "." + l63), Errc::NameTooLong);
    // 3 * 64 + 62 + 1 = 255 exactly.
    const DomainName d = parse_domain(l63 + "." + l63 + "." + l63 + "." + std::string(61, 'b'));
    EXPECT_EQ(d.encoded_length(), 255u);
    EXPECT_TW_ERROR(parse_domain(l63 + "." + l63 + "." + l63 + "." + std::string(62, 'b')), Errc::NameTooLong);
}

TEST(ParseDomain, KeepsNonAsciiBytes) {
    const DomainName d = parse_domain("\xc3\xa9t\xc3\xa9.FR");
    EXPECT_EQ(d.text(), "\xc3\xa9t\xc3\xa9.fr");
}

TEST(ParseDomain, JoinOfLabelsIsIdentityOnNormalizedNames) {
    Rng rng(11);
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-_";
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> labels(static_cast<std::size_t>(rng.between(1, 4)));
        for (auto& l : labels) {
            l.resize(static_cast<std::size_t>(rng.between(1, 40)));
            for (auto& c : l) c = alphabet[rng.below(alphabet.size())];
        }
        const std::string text = join(labels);
        const DomainName d = parse_domain(text);
        EXPECT_EQ(d.labels(), labels);
        EXPECT_EQ(join(d.labels()), d.text());
        EXPECT_EQ(parse_domain(join(d.labels())), d);
        EXPECT_TRUE(std::none_of(d.text().begin(), d.text().end(), [](char c) { return c >= 'A' && c <= 'Z'; }));
    }
}

TEST(Entropy, Examples) {
    EXPECT_EQ(shannon_entropy("aaaa"), 0.0);
    EXPECT_FALSE(std::signbit(shannon_entropy("aaaa")));
    EXPECT_DOUBLE_EQ(shannon_entropy("abcdefgh"), 3.0);
    EXPECT_NEAR(shannon_entropy("google.com"), 2.6464393446710154, 1e-9);
    EXPECT_TW_ERROR(shannon_entropy(""), Errc::EmptyInput);
}

TEST(Entropy, MatchesIndependentOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string s = random_bytes(rng, static_cast<std::size_t>(rng.between(1, 100)));
        ASSERT_NEAR(shannon_entropy(s), tw_test::entropy_oracle(s), 1e-9);
    }
}

TEST(Entropy, PermutationInvariantAndBounded) {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        std::string s = random_bytes(rng, static_cast<std::size_t>(rng.between(1, 300)));
        const double h = shannon_entropy(s);
        std::string shuffled = s;
        rng.shuffle(std::span<char>(shuffled));
        EXPECT_EQ(shannon_entropy(shuffled), h);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, std::log2(static_cast<double>(std::min<std::size_t>(s.size(), 256))) + 1e-12);
    }
}

TEST(ExtractFeatures, ThreeEquiprobableBytes) {
    const FeatureVector v = extract_features(parse_domain("a.b"), FeatureSet::Lex7);
    EXPECT_EQ(v.length, 3u);
    EXPECT_EQ(v.label_count, 2u);
    EXPECT_EQ(v.max_label_length, 1u);
    EXPECT_EQ(v.digit_ratio, 0.0);
    EXPECT_NEAR(v.entropy, 1.584962500721156, 1e-12);
}

TEST(ExtractFeatures, EntropyIncludesDots) {
    const FeatureVector v = extract_features(parse_domain("aaaa.aaaa"), FeatureSet::Lex7);
    EXPECT_NEAR(v.entropy, 0.5032583347756457, 1e-12);
    EXPECT_EQ(v.digit_ratio, 0.0);
    EXPECT_EQ(v.unique_char_count, 2u);
}

TEST(ExtractFeatures, DigitAndHexRatios) {
    const FeatureVector v = extract_features(parse_domain("1234.com"), "lex7");
    EXPECT_EQ(v.digit_ratio, 0.5);
    EXPECT_EQ(v.hex_ratio, 0.625); // '1','2','3','4','c'; '.', 'o', 'm' excluded
}

TEST(ExtractFeatures, FeatureSetSelection) {
    const DomainName d = parse_domain("mail.example.org");
    EXPECT_EQ(extract_features(d, "core2").values().size(), 2u);
    EXPECT_EQ(extract_features(d, "lex7").values().size(), 7u);
    EXPECT_EQ(feature_names(FeatureSet::Lex7).size(), feature_count(FeatureSet::Lex7));
    EXPECT_TW_ERROR(extract_features(d, "lex9"), Errc::UnknownFeatureSet);
}

TEST(ExtractFeatures, InvariantsOnRandomNames) {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        std::string name;
        const auto labels = rng.between(1, 3);
        for (int l = 0; l < labels; ++l) {
            if (l) name += '.';
            const auto len = rng.between(1, 63);
            for (int i = 0; i < len; ++i) {
                char c = static_cast<char>(rng.between(0x21, 0xff));
                if (c == '.' || c == ',') c = 'x';
                name += c;
            }
        }
        const FeatureVector v = extract_features(parse_domain(name), FeatureSet::Lex7);
        EXPECT_GE(v.entropy, 0.0);
        EXPECT_LE(v.entropy, 8.0);
        EXPECT_GE(v.length, 1u);
        EXPECT_LE(v.max_label_length, v.length);
        EXPECT_GE(v.digit_ratio, 0.0);
        EXPECT_LE(v.digit_ratio, 1.0);
        EXPECT_GE(v.hex_ratio, v.digit_ratio);
        EXPECT_LE(v.hex_ratio, 1.0);
        EXPECT_LE(v.unique_char_count, std::min<std::size_t>(v.length, 256));
    }
}

TEST(Normalization, FitsElementwiseExtrema) {
    FeatureVector a, b, c;
    a.length = 2;
    a.entropy = 1.5;
    b.length = 10;
    b.entropy = 0.5;
    c.length = 4;
    c.entropy = 3.0;
    const std::vector<FeatureVector> all{a, b, c};
    const NormalizationStats s = fit_normalization(all);
    EXPECT_EQ(s.min, (std::vector<double>{2.0, 0.5}));
    EXPECT_EQ(s.max, (std::vector<double>{10.0, 3.0}));

    const std::vector<FeatureVector> one{a};
    const NormalizationStats single = fit_normalization(one);
    EXPECT_EQ(single.min, single.max);
    EXPECT_TW_ERROR(fit_normalization(std::vector<FeatureVector>{}), Errc::EmptyInput);
}

TEST(Normalization, EndpointsMidpointAndDegenerate) {
    NormalizationStats s{FeatureSet::Core2, {0.0, 7.0}, {100.0, 7.0}};
    EXPECT_EQ(normalize_values(std::vector<double>{0.0, 7.0}, s), (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(normalize_values(std::vector<double>{100.0, 7.0}, s)[0], 1.0);
    EXPECT_EQ(normalize_values(std::vector<double>{50.0, 7.0}, s)[0], 0.5);
    // clamped outside the fitted range
    EXPECT_EQ(normalize_values(std::vector<double>{150.0, 9.0}, s), (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(normalize_values(std::vector<double>{-5.0, 7.0}, s)[0], 0.0);
}

TEST(Normalization, EndpointIdempotenceOnRandomData) {
    Rng rng(5);
    std::vector<FeatureVector> vs;
    for (int i = 0; i < 200; ++i) {
        std::string name;
        const auto len = rng.between(1, 60);
        for (int j = 0; j < len; ++j) name += static_cast<char>('a' + rng.below(26));
        vs.push_back(extract_features(parse_domain(name + ".com"), FeatureSet::Lex7));
    }
    const NormalizationStats s = fit_normalization(vs);
    for (std::size_t f = 0; f < s.min.size(); ++f) {
        if (!(s.max[f] > s.min[f])) continue;
        std::vector<double> lo = s.min;
        std::vector<double> hi = s.max;
        EXPECT_EQ(normalize_values(lo, s)[f], 0.0);
        EXPECT_EQ(normalize_values(hi, s)[f], 1.0);
    }
    for (const auto& v : vs) {
        for (double x : normalize(v, s)) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    }
}

TEST(Normalization, RejectsMismatchedFeatureSets) {
    const DomainName d = parse_domain("example.com");
    const std::vector<FeatureVector> core{extract_features(d, FeatureSet::Core2)};
    const NormalizationStats s = fit_normalization(core);
    EXPECT_TW_ERROR(normalize(extract_features(d, FeatureSet::Lex7), s), Errc::FeatureSetMismatch);
    const std::vector<FeatureVector> mixed{extract_features(d, FeatureSet::Core2), extract_features(d, FeatureSet::Lex7)};
    EXPECT_TW_ERROR(fit_normalization(mixed), Errc::FeatureSetMismatch);
    EXPECT_TW_ERROR(normalize_values(std::vector<double>{1.0}, s), Errc::ShapeMismatch);
}

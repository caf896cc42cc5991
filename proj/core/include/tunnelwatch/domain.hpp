#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tunnelwatch {

inline constexpr std::size_t kMaxLabelLength = 63;
inline constexpr std::size_t kMaxNameLength = 255; // wire encoding, including the root octet

/// A validated, lowercased DNS name. Construct through parse_domain().
///
/// Labels are opaque byte strings: bytes outside ASCII are kept as-is, only
/// 'A'..'Z' are folded. The separators ',', CR and LF are rejected because
/// they cannot be represented in the dataset CSV.
class DomainName {
public:
    const std::string& raw() const noexcept { return raw_; }
    const std::string& text() const noexcept { return text_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Length of the wire encoding: one length octet per label plus the root octet.
    std::size_t encoded_length() const noexcept;

    bool ends_with(std::string_view suffix) const noexcept;

    friend bool operator==(const DomainName& a, const DomainName& b) noexcept { return a.text_ == b.text_; }

private:
    friend DomainName parse_domain(std::string_view raw);

    std::string raw_;
    std::string text_;
    std::vector<std::string> labels_;
};

/// Validates and normalizes `raw`. Strips one trailing dot.
/// Throws Error{EmptyInput, EmptyLabel, LabelTooLong, NameTooLong, InvalidCharacter}.
DomainName parse_domain(std::string_view raw);

} // namespace tunnelwatch

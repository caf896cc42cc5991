#include "tunnelwatch/domain.hpp"

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

std::size_t DomainName::encoded_length() const noexcept {
    std::size_t n = 1;
    for (const auto& label : labels_) n += label.size() + 1;
    return n;
}

bool DomainName::ends_with(std::string_view suffix) const noexcept {
    if (suffix.size() > text_.size()) return false;
    if (std::string_view(text_).substr(text_.size() - suffix.size()) != suffix) return false;
    return suffix.size() == text_.size() || suffix.front() == '.' || text_[text_.size() - suffix.size() - 1] == '.';
}

DomainName parse_domain(std::string_view raw) {
    if (raw.empty()) throw Error(Errc::EmptyInput, "empty domain name");

    std::string_view body = raw;
    if (body.back() == '.') body.remove_suffix(1);
    if (body.empty()) throw Error(Errc::EmptyInput, "domain name is only a root dot");

    DomainName name;
    name.raw_ = std::string(raw);
    name.text_.reserve(body.size());
    for (char c : body) {
        if (c == ',' || c == '\n' || c == '\r') {
            throw Error(Errc::InvalidCharacter, "separator byte in domain name");
        }
        name.text_.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }

    std::size_t encoded = 1;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = name.text_.find('.', start);
        const std::size_t end = dot == std::string::npos ? name.text_.size() : dot;
        const std::size_t len = end - start;
        if (len == 0) throw Error(Errc::EmptyLabel, "empty label in '" + std::string(raw) + "'");
        if (len > kMaxLabelLength) {
            throw Error(Errc::LabelTooLong, "label of " + std::to_string(len) + " bytes");
        }
        name.labels_.emplace_back(name.text_.substr(start, len));
        encoded += len + 1;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (encoded > kMaxNameLength) {
        throw Error(Errc::NameTooLong, "encoded name of " + std::to_string(encoded) + " bytes");
    }
    return name;
}

} // namespace tunnelwatch

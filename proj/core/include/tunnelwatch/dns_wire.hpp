#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tunnelwatch/domain.hpp"

namespace tunnelwatch {

inline constexpr std::size_t kDnsHeaderSize = 12;
inline constexpr int kMaxPointerHops = 128;

struct DnsQuestion {
    DomainName qname;
    std::uint16_t qtype = 0;
    std::uint16_t qclass = 0;
};

struct DnsMessage {
    std::uint16_t id = 0;
    std::uint16_t flags = 0;
    std::uint16_t qdcount = 0;
    std::uint16_t ancount = 0;
    std::uint16_t nscount = 0;
    std::uint16_t arcount = 0;
    std::vector<DnsQuestion> questions;

    bool is_response() const noexcept { return (flags & 0x8000) != 0; }
};

/// Decodes the header and the question section. Names may use compression
/// pointers; targets must lie strictly before the pointer and at most
/// kMaxPointerHops are followed. Never reads outside `message`.
/// Throws Truncated, LabelOverflow, NameOverflow, PointerLoop,
/// PointerOutOfBounds, plus parse_domain errors for the decoded text.
DnsMessage parse_dns_message(std::span<const std::uint8_t> message);

} // namespace tunnelwatch

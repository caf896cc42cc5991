#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tunnelwatch/domain.hpp"

namespace tunnelwatch {

struct Timestamp {
    std::int64_t seconds = 0;
    std::int64_t microseconds = 0;

    double as_seconds() const noexcept { return static_cast<double>(seconds) + static_cast<double>(microseconds) * 1e-6; }
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct Endpoint {
    std::uint32_t address = 0; // IPv4, host byte order
    std::uint16_t port = 0;

    std::string address_string() const;
    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct DnsQueryRecord {
    Timestamp timestamp;
    Endpoint source;
    DomainName qname;
    std::uint16_t qtype = 0;
    std::uint16_t qclass = 0;
    std::uint16_t transaction_id = 0;
};

struct PcapStats {
    std::size_t packets = 0;
    std::size_t parsed = 0;  // packets that yielded at least one query record
    std::size_t skipped = 0; // non-DNS, responses, malformed
    std::size_t records = 0;
};

/// Extracts query records from one Ethernet frame: IPv4 (one 802.1Q tag
/// allowed), UDP with source or destination port 53, DNS with QR = 0.
/// Returns an empty vector when the frame is not a parseable DNS query.
std::vector<DnsQueryRecord> decode_frame(std::span<const std::uint8_t> frame, Timestamp ts);

/// Streaming reader for classic pcap files (either byte order, microsecond
/// timestamps, Ethernet link type). Bad packets are counted, never fatal.
class PcapReader {
public:
    /// Throws Io, BadMagic, UnsupportedLinkType.
    explicit PcapReader(const std::filesystem::path& path);

    /// Records of the next packet that yields any; std::nullopt at end of file.
    std::optional<std::vector<DnsQueryRecord>> next();

    const PcapStats& stats() const noexcept { return stats_; }

private:
    std::uint32_t read_u32(const std::uint8_t* p) const noexcept;

    std::ifstream in_;
    bool swapped_ = false;
    PcapStats stats_;
    std::vector<std::uint8_t> buffer_;
};

struct PcapScan {
    std::vector<DnsQueryRecord> records;
    PcapStats stats;
};

PcapScan read_pcap(const std::filesystem::path& path);

} // namespace tunnelwatch

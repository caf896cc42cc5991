#include "tunnelwatch/pcap.hpp"

#include <array>

#include "tunnelwatch/dns_wire.hpp"
#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

namespace {

constexpr std::uint32_t kMagic = 0xa1b2c3d4;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
// Guard against absurd incl_len values in corrupt files.
constexpr std::uint32_t kMaxPacketSize = 262144;

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t pos) {
    return static_cast<std::uint16_t>((b[pos] << 8) | b[pos + 1]);
}

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t pos) {
    return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) | (std::uint32_t{b[pos + 2]} << 8) |
           std::uint32_t{b[pos + 3]};
}

} // namespace

std::string Endpoint::address_string() const {
    return std::to_string(address >> 24) + "." + std::to_string((address >> 16) & 0xff) + "." +
           std::to_string((address >> 8) & 0xff) + "." + std::to_string(address & 0xff);
}

std::vector<DnsQueryRecord> decode_frame(std::span<const std::uint8_t> frame, Timestamp ts) {
    std::size_t pos = 12;
    if (frame.size() < pos + 2) return {};
    std::uint16_t ethertype = be16(frame, pos);
    pos += 2;
    if (ethertype == 0x8100) {
        if (frame.size() < pos + 4) return {};
        ethertype = be16(frame, pos + 2);
        pos += 4;
    }
    if (ethertype != 0x0800) return {};

    // IPv4
    if (frame.size() < pos + 20) return {};
    const auto ip = frame.subspan(pos);
    if ((ip[0] >> 4) != 4) return {};
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    const std::size_t total_length = be16(ip, 2);
    if (ihl < 20 || total_length < ihl || total_length > ip.size()) return {};
    const std::uint16_t frag = be16(ip, 6);
    if ((frag & 0x3fff) != 0) return {}; // fragmented
    if (ip[9] != 17) return {};          // UDP only
    const std::uint32_t src_addr = be32(ip, 12);

    const auto udp = ip.subspan(ihl, total_length - ihl);
    if (udp.size() < 8) return {};
    const std::uint16_t src_port = be16(udp, 0);
    const std::uint16_t dst_port = be16(udp, 2);
    const std::size_t udp_length = be16(udp, 4);
    if (src_port != 53 && dst_port != 53) return {};
    if (udp_length < 8 || udp_length > udp.size()) return {};

    DnsMessage msg;
    try {
        msg = parse_dns_message(udp.subspan(8, udp_length - 8));
    } catch (const Error&) {
        return {};
    }
    if (msg.is_response()) return {};

    std::vector<DnsQueryRecord> records;
    for (auto& q : msg.questions) {
        DnsQueryRecord r;
        r.timestamp = ts;
        r.source = {src_addr, src_port};
        r.qname = std::move(q.qname);
        r.qtype = q.qtype;
        r.qclass = q.qclass;
        r.transaction_id = msg.id;
        records.push_back(std::move(r));
    }
    return records;
}

PcapReader::PcapReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error(Errc::Io, "cannot open " + path.string());
    std::array<std::uint8_t, kGlobalHeaderSize> header{};
    if (!in_.read(reinterpret_cast<char*>(header.data()), header.size())) {
        throw Error(Errc::BadMagic, path.string() + " is shorter than a pcap header");
    }
    const std::uint32_t magic = std::uint32_t{header[0]} | (std::uint32_t{header[1]} << 8) |
                                (std::uint32_t{header[2]} << 16) | (std::uint32_t{header[3]} << 24);
    if (magic == kMagic) {
        swapped_ = false;
    } else if (magic == kMagicSwapped) {
        swapped_ = true;
    } else {
        throw Error(Errc::BadMagic, path.string() + " is not a classic pcap file");
    }
    const std::uint32_t linktype = read_u32(header.data() + 20);
    if (linktype != kLinkEthernet) {
        throw Error(Errc::UnsupportedLinkType, "link type " + std::to_string(linktype) + " is not Ethernet");
    }
}

std::uint32_t PcapReader::read_u32(const std::uint8_t* p) const noexcept {
    // File fields are little-endian unless the magic read back swapped.
    if (!swapped_) {
        return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
               (std::uint32_t{p[3]} << 24);
    }
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::optional<std::vector<DnsQueryRecord>> PcapReader::next() {
    while (true) {
        std::array<std::uint8_t, kRecordHeaderSize> header{};
        in_.read(reinterpret_cast<char*>(header.data()), header.size());
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got == 0) return std::nullopt;
        ++stats_.packets;
        if (got < header.size()) {
            ++stats_.skipped;
            return std::nullopt;
        }
        const Timestamp ts{read_u32(header.data()), read_u32(header.data() + 4)};
        const std::uint32_t incl_len = read_u32(header.data() + 8);
        if (incl_len > kMaxPacketSize) {
            ++stats_.skipped;
            return std::nullopt; // cannot resynchronise after a corrupt length
        }
        buffer_.resize(incl_len);
        in_.read(reinterpret_cast<char*>(buffer_.data()), incl_len);
        if (static_cast<std::size_t>(in_.gcount()) < incl_len) {
            ++stats_.skipped;
            return std::nullopt;
        }
        auto records = decode_frame(buffer_, ts);
        if (records.empty()) {
            ++stats_.skipped;
            continue;
        }
        ++stats_.parsed;
        stats_.records += records.size();
        return records;
    }
}

PcapScan read_pcap(const std::filesystem::path& path) {
    PcapReader reader(path);
    PcapScan scan;
    while (auto batch = reader.next()) {
        for (auto& r : *batch) scan.records.push_back(std::move(r));
    }
    scan.stats = reader.stats();
    return scan;
}

} // namespace tunnelwatch

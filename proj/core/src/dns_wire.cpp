#include "tunnelwatch/dns_wire.hpp"

#include <string>

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> buf, std::size_t pos) {
    if (pos + 2 > buf.size()) throw Error(Errc::Truncated, "message ends inside a 16-bit field");
    return static_cast<std::uint16_t>((buf[pos] << 8) | buf[pos + 1]);
}

// Reads the name starting at `pos`; returns its text and advances `pos` past
// the in-place encoding (not past pointer targets).
std::string read_name(std::span<const std::uint8_t> buf, std::size_t& pos) {
    std::string text;
    std::size_t encoded = 1; // root octet
    std::size_t cursor = pos;
    bool jumped = false;
    int hops = 0;
    while (true) {
        if (cursor >= buf.size()) throw Error(Errc::Truncated, "message ends inside a name");
        const std::uint8_t len = buf[cursor];
        if ((len & 0xC0) == 0xC0) {
            if (cursor + 1 >= buf.size()) throw Error(Errc::Truncated, "message ends inside a pointer");
            const std::size_t target = static_cast<std::size_t>(((len & 0x3F) << 8) | buf[cursor + 1]);
            if (target >= buf.size()) throw Error(Errc::PointerOutOfBounds, "pointer past end of message");
            if (target >= cursor) throw Error(Errc::PointerLoop, "pointer does not point backwards");
            if (++hops > kMaxPointerHops) throw Error(Errc::PointerLoop, "too many compression pointers");
            if (!jumped) pos = cursor + 2;
            jumped = true;
            cursor = target;
            continue;
        }
        if (len > 63) throw Error(Errc::LabelOverflow, "label length octet " + std::to_string(len));
        if (len == 0) {
            if (!jumped) pos = cursor + 1;
            break;
        }
        encoded += len + 1u;
        if (encoded > kMaxNameLength) throw Error(Errc::NameOverflow, "name exceeds 255 bytes");
        if (cursor + 1 + len > buf.size()) throw Error(Errc::Truncated, "message ends inside a label");
        if (!text.empty()) text.push_back('.');
        text.append(reinterpret_cast<const char*>(buf.data() + cursor + 1), len);
        cursor += 1u + len;
    }
    return text;
}

} // namespace

DnsMessage parse_dns_message(std::span<const std::uint8_t> message) {
    if (message.size() < kDnsHeaderSize) throw Error(Errc::Truncated, "message shorter than the DNS header");
    DnsMessage msg;
    msg.id = read_u16(message, 0);
    msg.flags = read_u16(message, 2);
    msg.qdcount = read_u16(message, 4);
    msg.ancount = read_u16(message, 6);
    msg.nscount = read_u16(message, 8);
    msg.arcount = read_u16(message, 10);

    std::size_t pos = kDnsHeaderSize;
    for (std::uint16_t q = 0; q < msg.qdcount; ++q) {
        const std::string text = read_name(message, pos);
        DnsQuestion question;
        question.qname = parse_domain(text);
        question.qtype = read_u16(message, pos);
        question.qclass = read_u16(message, pos + 2);
        pos += 4;
        msg.questions.push_back(std::move(question));
    }
    return msg;
}

} // namespace tunnelwatch

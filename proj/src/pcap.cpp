#include "tclean/pcap.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "tclean/error.hpp"

namespace tclean {
namespace {

constexpr std::uint32_t kMagicMicros = 0xA1B2C3D4;
constexpr std::uint32_t kMagicNanos = 0xA1B23C4D;

constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkLinuxSll = 113;
constexpr std::uint32_t kLinkIpv4 = 228;
constexpr std::uint32_t kLinkIpv6 = 229;

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherIpv6 = 0x86DD;
constexpr std::uint16_t kEtherVlan = 0x8100;
constexpr std::uint16_t kEtherQinQ = 0x88A8;

constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

std::uint32_t swap32(std::uint32_t v) noexcept {
  return ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
}

struct FileHeader {
  bool swapped = false;
  bool nanos = false;
  std::uint32_t link_type = 0;
};

class FieldReader {
 public:
  explicit FieldReader(bool swapped) : swapped_(swapped) {}

  std::uint32_t u32(const std::uint8_t* p) const noexcept {
    std::uint32_t v = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                      (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    return swapped_ ? swap32(v) : v;
  }

 private:
  bool swapped_;
};

FileHeader parse_file_header(ByteView image) {
  if (image.size() < 24) throw MalformedCapture("pcap global header truncated");
  const std::uint32_t raw = FieldReader(false).u32(image.data());
  FileHeader h;
  if (raw == kMagicMicros || raw == kMagicNanos) {
    h.nanos = raw == kMagicNanos;
  } else if (swap32(raw) == kMagicMicros || swap32(raw) == kMagicNanos) {
    h.swapped = true;
    h.nanos = swap32(raw) == kMagicNanos;
  } else {
    throw MalformedCapture("bad pcap magic");
  }
  h.link_type = FieldReader(h.swapped).u32(image.data() + 20) & 0x0FFFFFFF;
  switch (h.link_type) {
    case kLinkEthernet:
    case kLinkRaw:
    case kLinkLinuxSll:
    case kLinkIpv4:
    case kLinkIpv6:
      break;
    default:
      throw MalformedCapture("unsupported link type " + std::to_string(h.link_type));
  }
  return h;
}

enum class Decode { Ok, NotIp, Truncated };

// Locates the IP header: returns its offset and ethertype, filling MAC/VLAN.
Decode decode_link(ByteView frame, std::uint32_t link_type, PacketRecord& pkt,
                   std::size_t& ip_offset, std::uint16_t& ethertype) {
  switch (link_type) {
    case kLinkEthernet: {
      if (frame.size() < 14) return Decode::Truncated;
      std::copy_n(frame.data() + 6, 6, pkt.src_mac.octets.begin());
      std::size_t off = 12;
      ethertype = read_be16(frame.data() + off);
      while (ethertype == kEtherVlan || ethertype == kEtherQinQ) {
        if (frame.size() < off + 6) return Decode::Truncated;
        const std::uint16_t vid = read_be16(frame.data() + off + 2) & 0x0FFF;
        // VID 0 is a priority-only tag; 4095 is reserved.
        if (!pkt.vlan_id && vid != 0 && vid != 4095) pkt.vlan_id = vid;
        off += 4;
        ethertype = read_be16(frame.data() + off);
      }
      ip_offset = off + 2;
      return Decode::Ok;
    }
    case kLinkLinuxSll: {
      if (frame.size() < 16) return Decode::Truncated;
      const std::uint16_t addr_len = read_be16(frame.data() + 4);
      if (addr_len == 6) std::copy_n(frame.data() + 6, 6, pkt.src_mac.octets.begin());
      ethertype = read_be16(frame.data() + 14);
      ip_offset = 16;
      return Decode::Ok;
    }
    default: {
      if (frame.empty()) return Decode::Truncated;
      const int version = frame[0] >> 4;
      ethertype = version == 4 ? kEtherIpv4 : version == 6 ? kEtherIpv6 : 0;
      ip_offset = 0;
      return Decode::Ok;
    }
  }
}

Decode decode_frame(ByteView frame, std::uint32_t wire_len, std::uint32_t link_type,
                    const CaptureOptions& options, PacketRecord& pkt) {
  std::size_t off = 0;
  std::uint16_t ethertype = 0;
  if (auto r = decode_link(frame, link_type, pkt, off, ethertype); r != Decode::Ok) return r;

  std::uint8_t proto = 0;
  std::size_t ip_payload_len = 0;  // transport header + payload, per IP length fields
  if (ethertype == kEtherIpv4) {
    if (frame.size() < off + 20) return Decode::Truncated;
    const std::uint8_t* ip = frame.data() + off;
    if ((ip[0] >> 4) != 4) return Decode::NotIp;
    const std::size_t ihl = std::size_t{ip[0] & 0x0Fu} * 4;
    if (ihl < 20) return Decode::NotIp;
    if (frame.size() < off + ihl) return Decode::Truncated;
    const std::size_t total = read_be16(ip + 2);
    if ((read_be16(ip + 6) & 0x1FFF) != 0) return Decode::NotIp;  // non-first fragment
    if (total < ihl) return Decode::NotIp;
    proto = ip[9];
    pkt.src_ip = IpAddress::v4(ip[12], ip[13], ip[14], ip[15]);
    pkt.dst_ip = IpAddress::v4(ip[16], ip[17], ip[18], ip[19]);
    ip_payload_len = total - ihl;
    off += ihl;
  } else if (ethertype == kEtherIpv6) {
    if (frame.size() < off + 40) return Decode::Truncated;
    const std::uint8_t* ip = frame.data() + off;
    if ((ip[0] >> 4) != 6) return Decode::NotIp;
    proto = ip[6];
    pkt.src_ip.v6 = pkt.dst_ip.v6 = true;
    std::copy_n(ip + 8, 16, pkt.src_ip.bytes.begin());
    std::copy_n(ip + 24, 16, pkt.dst_ip.bytes.begin());
    ip_payload_len = read_be16(ip + 4);
    off += 40;
  } else {
    return Decode::NotIp;
  }

  std::size_t transport_len = 0;
  if (proto == kProtoTcp) {
    if (frame.size() < off + 20) return Decode::Truncated;
    const std::uint8_t* tcp = frame.data() + off;
    transport_len = std::size_t{static_cast<std::uint8_t>(tcp[12] >> 4)} * 4;
    if (transport_len < 20) return Decode::NotIp;
    if (frame.size() < off + transport_len) return Decode::Truncated;
    pkt.transport = Transport::Tcp;
    pkt.src_port = read_be16(tcp);
    pkt.dst_port = read_be16(tcp + 2);
    const std::uint8_t flags = tcp[13];
    pkt.tcp_flags = TcpFlags{.syn = (flags & 0x02) != 0,
                             .fin = (flags & 0x01) != 0,
                             .rst = (flags & 0x04) != 0,
                             .ack = (flags & 0x10) != 0};
  } else if (proto == kProtoUdp) {
    if (frame.size() < off + 8) return Decode::Truncated;
    const std::uint8_t* udp = frame.data() + off;
    transport_len = 8;
    pkt.transport = Transport::Udp;
    pkt.src_port = read_be16(udp);
    pkt.dst_port = read_be16(udp + 2);
  } else {
    return Decode::NotIp;
  }
  if (ip_payload_len < transport_len) return Decode::NotIp;

  pkt.wire_len = wire_len;
  pkt.header_len = static_cast<std::uint32_t>(off + transport_len);
  if (pkt.header_len > wire_len) return Decode::Truncated;
  pkt.payload_len = static_cast<std::uint32_t>(
      std::min<std::size_t>(ip_payload_len - transport_len, wire_len - pkt.header_len));

  const std::size_t payload_start = off + transport_len;
  const std::size_t captured = frame.size() - payload_start;
  const std::size_t take =
      std::min({std::size_t{pkt.payload_len}, options.prefix_cap, captured});
  pkt.payload_prefix.assign(frame.begin() + static_cast<std::ptrdiff_t>(payload_start),
                            frame.begin() + static_cast<std::ptrdiff_t>(payload_start + take));
  return Decode::Ok;
}

}  // namespace

Capture parse_capture(ByteView image, const CaptureOptions& options) {
  const FileHeader header = parse_file_header(image);
  const FieldReader rd(header.swapped);
  Capture out;
  std::size_t pos = 24;
  while (pos < image.size()) {
    ++out.stats.records;
    if (image.size() - pos < 16) {
      ++out.stats.skipped_truncated;
      break;
    }
    const std::uint8_t* rec = image.data() + pos;
    const std::uint32_t ts_sec = rd.u32(rec);
    const std::uint32_t ts_frac = rd.u32(rec + 4);
    const std::uint32_t incl_len = rd.u32(rec + 8);
    const std::uint32_t orig_len = rd.u32(rec + 12);
    pos += 16;
    if (image.size() - pos < incl_len) {
      ++out.stats.skipped_truncated;
      break;
    }
    const ByteView frame = image.subspan(pos, incl_len);
    pos += incl_len;

    PacketRecord pkt;
    pkt.timestamp_us = std::int64_t{ts_sec} * 1'000'000 +
                       (header.nanos ? std::int64_t{ts_frac} / 1000 : std::int64_t{ts_frac});
    switch (decode_frame(frame, std::max(orig_len, incl_len), header.link_type, options, pkt)) {
      case Decode::Ok:
        out.packets.push_back(std::move(pkt));
        break;
      case Decode::NotIp:
        ++out.stats.skipped_non_ip;
        break;
      case Decode::Truncated:
        ++out.stats.skipped_truncated;
        break;
    }
  }
  return out;
}

Capture read_packets(const std::filesystem::path& capture_file, const CaptureOptions& options) {
  std::ifstream in(capture_file, std::ios::binary);
  if (!in) throw IoError("cannot open capture " + capture_file.string());
  const Bytes image{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return parse_capture(image, options);
  } catch (const MalformedCapture& e) {
    throw MalformedCapture(capture_file.string() + ": " + e.what());
  }
}

}  // namespace tclean

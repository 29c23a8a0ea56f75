#pragma once

// Hand-assembled pcap images for parser and flow tests. Deliberately shares
// no code with the library.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace testsupport {

using Bytes = std::vector<std::uint8_t>;

struct Frame {
  std::int64_t ts_us = 0;
  std::array<std::uint8_t, 6> src_mac{0x02, 0, 0, 0, 0, 1};
  std::array<std::uint8_t, 6> dst_mac{0x02, 0, 0, 0, 0, 2};
  int vlan = -1;
  std::array<std::uint8_t, 4> src_ip{10, 0, 0, 1};
  std::array<std::uint8_t, 4> dst_ip{10, 0, 0, 2};
  std::uint16_t src_port = 40000;
  std::uint16_t dst_port = 443;
  bool udp = false;
  std::uint8_t tcp_flags = 0x10;  // ACK
  Bytes payload;
  std::uint16_t frag = 0;  // IPv4 flags + fragment offset field
  std::uint8_t proto_override = 0;
};

inline void be16(Bytes& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}
inline void be32(Bytes& b, std::uint32_t v) {
  be16(b, v >> 16);
  be16(b, v & 0xFFFF);
}
inline void le16(Bytes& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void le32(Bytes& b, std::uint32_t v) {
  le16(b, v & 0xFFFF);
  le16(b, v >> 16);
}

// Ethernet (+ optional 802.1Q) + IPv4 (20 bytes) + TCP (20 bytes) or UDP (8 bytes).
inline Bytes ethernet_frame(const Frame& f) {
  Bytes b(f.dst_mac.begin(), f.dst_mac.end());
  b.insert(b.end(), f.src_mac.begin(), f.src_mac.end());
  if (f.vlan >= 0) {
    be16(b, 0x8100);
    be16(b, static_cast<std::uint32_t>(f.vlan));
  }
  be16(b, 0x0800);
  const std::size_t l4 = f.udp ? 8 : 20;
  be16(b, 0x4500);
  be16(b, static_cast<std::uint32_t>(20 + l4 + f.payload.size()));
  be16(b, 0x1234);
  be16(b, f.frag);
  b.push_back(64);
  b.push_back(f.proto_override ? f.proto_override : (f.udp ? 17 : 6));
  be16(b, 0);  // checksum is not verified
  b.insert(b.end(), f.src_ip.begin(), f.src_ip.end());
  b.insert(b.end(), f.dst_ip.begin(), f.dst_ip.end());
  be16(b, f.src_port);
  be16(b, f.dst_port);
  if (f.udp) {
    be16(b, static_cast<std::uint32_t>(8 + f.payload.size()));
    be16(b, 0);
  } else {
    be32(b, 1000);
    be32(b, 0);
    b.push_back(0x50);
    b.push_back(f.tcp_flags);
    be16(b, 65535);
    be16(b, 0);
    be16(b, 0);
  }
  b.insert(b.end(), f.payload.begin(), f.payload.end());
  return b;
}

struct PcapImage {
  bool big_endian = false;
  bool nanos = false;
  std::uint32_t linktype = 1;
  std::uint32_t snaplen = 65535;
  Bytes bytes;

  PcapImage(bool be = false, bool ns = false, std::uint32_t link = 1, std::uint32_t snap = 65535)
      : big_endian(be), nanos(ns), linktype(link), snaplen(snap) {
    u32(nanos ? 0xa1b23c4d : 0xa1b2c3d4);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(snaplen);
    u32(linktype);
  }

  void u16(std::uint32_t v) { big_endian ? be16(bytes, v) : le16(bytes, v); }
  void u32(std::uint32_t v) { big_endian ? be32(bytes, v) : le32(bytes, v); }

  void record(std::int64_t ts_us, const Bytes& frame) {
    const auto incl = static_cast<std::uint32_t>(std::min<std::size_t>(frame.size(), snaplen));
    u32(static_cast<std::uint32_t>(ts_us / 1'000'000));
    u32(static_cast<std::uint32_t>(nanos ? (ts_us % 1'000'000) * 1000 : ts_us % 1'000'000));
    u32(incl);
    u32(static_cast<std::uint32_t>(frame.size()));
    bytes.insert(bytes.end(), frame.begin(), frame.begin() + incl);
  }

  void add(const Frame& f) { record(f.ts_us, ethernet_frame(f)); }
};

inline Bytes text_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace testsupport

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tclean/net.hpp"

namespace tclean {

struct TcpFlags {
  bool syn = false;
  bool fin = false;
  bool rst = false;
  bool ack = false;

  bool operator==(const TcpFlags&) const = default;
};

/// One TCP or UDP packet decoded from a capture.
///
/// header_len counts link + IP + transport headers; payload_len is derived
/// from the IP length fields, so it reflects the packet on the wire even when
/// the capture snap length cut the payload short.
struct PacketRecord {
  std::int64_t timestamp_us = 0;
  MacAddress src_mac;
  std::optional<std::uint16_t> vlan_id;
  IpAddress src_ip;
  IpAddress dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Transport transport = Transport::Tcp;
  std::uint32_t wire_len = 0;
  std::uint32_t header_len = 0;
  std::uint32_t payload_len = 0;
  Bytes payload_prefix;
  std::optional<TcpFlags> tcp_flags;
};

struct CaptureOptions {
  std::size_t prefix_cap = 256;
};

struct CaptureStats {
  std::size_t records = 0;
  std::size_t skipped_non_ip = 0;     // non-IP, non-TCP/UDP, IPv6 extension headers, later fragments
  std::size_t skipped_truncated = 0;  // headers not fully captured, or record cut off by EOF
};

struct Capture {
  std::vector<PacketRecord> packets;
  CaptureStats stats;
};

/// Decodes a classic pcap image (either byte order, microsecond or
/// nanosecond timestamps). Link types: Ethernet (1), raw IP (101, 228, 229)
/// and Linux cooked capture (113). Throws MalformedCapture on a bad magic,
/// a short global header, or an unsupported link type.
Capture parse_capture(ByteView image, const CaptureOptions& options = {});

/// Reads and decodes a pcap file; IoError when it cannot be opened.
Capture read_packets(const std::filesystem::path& capture_file,
                     const CaptureOptions& options = {});

}  // namespace tclean

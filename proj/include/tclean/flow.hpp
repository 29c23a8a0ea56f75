#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tclean/net.hpp"
#include "tclean/pcap.hpp"

namespace tclean {

/// Direction-free conversation key: endpoints stored in ascending order, so
/// both directions of a conversation map to the same key.
struct FlowKey {
  Transport transport = Transport::Tcp;
  Endpoint lo;
  Endpoint hi;

  static FlowKey of(Transport transport, const Endpoint& a, const Endpoint& b);

  auto operator<=>(const FlowKey&) const = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& key) const noexcept;
};

/// One bidirectional flow. "In" is server to client, "out" is client to
/// server; the client is the sender of the first observed packet.
struct FlowRecord {
  std::uint64_t flow_id = 0;
  std::optional<std::string> app_label;
  Transport transport = Transport::Tcp;
  Endpoint client;
  Endpoint server;
  std::int64_t first_ts_us = 0;
  std::int64_t last_ts_us = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t packets_in = 0;
  std::uint64_t packets_out = 0;
  std::uint64_t header_bytes_total = 0;
  std::uint64_t payload_bytes_total = 0;
  std::uint16_t dst_port = 0;
  Bytes client_payload_prefix;
  Bytes server_payload_prefix;

  FlowKey key() const { return FlowKey::of(transport, client, server); }
  std::uint64_t packet_count() const noexcept { return packets_in + packets_out; }

  bool operator==(const FlowRecord&) const = default;
};

/// Link-layer identity of a flow's first packet, used for tagging.
struct FlowTagMeta {
  MacAddress client_mac;
  std::optional<std::uint16_t> vlan_id;

  bool operator==(const FlowTagMeta&) const = default;
};

struct FlowOptions {
  double idle_timeout_s = 60.0;
};

struct AssembledFlows {
  std::vector<FlowRecord> flows;  // ordered by first packet; flow_id = position
  std::vector<FlowTagMeta> meta;  // parallel to flows
};

/// Groups packets into bidirectional flows.
///
/// Packets are processed in (timestamp, input index) order. A flow ends when
/// the next packet of its key arrives more than idle_timeout_s after its last
/// packet, or after an RST or FINs in both directions. Once a TCP flow has
/// closed, trailing segments without SYN still belong to it; a SYN opens a
/// new flow.
AssembledFlows assemble_flows(std::span<const PacketRecord> packets,
                              const FlowOptions& options = {});

}  // namespace tclean

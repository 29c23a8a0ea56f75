#include <algorithm>

#include "doctest.h"
#include "support/pcap_writer.hpp"
#include "tclean/flow.hpp"
#include "tclean/pcap.hpp"
#include "tclean/rng.hpp"

using namespace tclean;
using testsupport::Frame;

namespace {

constexpr std::int64_t kSec = 1'000'000;

Frame up(std::int64_t ts, std::size_t payload, std::uint8_t flags = 0x10) {
  Frame f;
  f.ts_us = ts;
  f.payload.assign(payload, 0x11);
  f.tcp_flags = flags;
  return f;
}

Frame down(std::int64_t ts, std::size_t payload, std::uint8_t flags = 0x10) {
  Frame f = up(ts, payload, flags);
  std::swap(f.src_ip, f.dst_ip);
  std::swap(f.src_port, f.dst_port);
  std::swap(f.src_mac, f.dst_mac);
  return f;
}

std::vector<PacketRecord> packets(const std::vector<Frame>& frames) {
  testsupport::PcapImage img;
  for (const auto& f : frames) img.add(f);
  return parse_capture(img.bytes).packets;
}

}  // namespace

TEST_CASE("hand-counted bidirectional flow") {
  const auto pk = packets({up(0, 0, 0x02), down(1000, 0, 0x12), up(2000, 100), down(3000, 1000), down(4000, 500)});
  const auto flows = assemble_flows(pk).flows;
  REQUIRE(flows.size() == 1);
  const FlowRecord& f = flows[0];
  CHECK(f.client.ip.to_string() == "10.0.0.1");
  CHECK(f.server.port == 443);
  CHECK(f.dst_port == 443);
  CHECK(f.packets_out == 2);
  CHECK(f.packets_in == 3);
  CHECK(f.bytes_out == 54 + 154);
  CHECK(f.bytes_in == 54 + 1054 + 554);
  CHECK(f.header_bytes_total == 5 * 54);
  CHECK(f.payload_bytes_total == 1600);
  CHECK(f.first_ts_us == 0);
  CHECK(f.last_ts_us == 4000);
  CHECK(f.client_payload_prefix.size() == 100);
  CHECK(f.server_payload_prefix.size() == 256);
}

TEST_CASE("idle timeout splits a flow") {
  const auto pk = packets({up(0, 10), down(kSec, 10), up(62 * kSec, 10)});
  auto flows = assemble_flows(pk).flows;
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].packet_count() == 2);
  CHECK(flows[1].packet_count() == 1);
  CHECK(flows[1].flow_id == 1);

  FlowOptions wide;
  wide.idle_timeout_s = 120;
  CHECK(assemble_flows(pk, wide).flows.size() == 1);
}

TEST_CASE("closed flow: SYN starts a new flow, stragglers attach") {
  const auto pk = packets({up(0, 0, 0x02), up(10, 0, 0x11), down(20, 0, 0x11), up(30, 0, 0x10),
                           up(40, 0, 0x02), down(50, 0, 0x04)});
  const auto flows = assemble_flows(pk).flows;
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].packet_count() == 4);
  CHECK(flows[1].packet_count() == 2);
}

TEST_CASE("rst closes immediately") {
  const auto pk = packets({up(0, 0, 0x02), down(10, 0, 0x04), up(20, 0, 0x02)});
  CHECK(assemble_flows(pk).flows.size() == 2);
}

TEST_CASE("udp flows are keyed by the five-tuple") {
  Frame a = up(0, 30);
  a.udp = true;
  a.dst_port = 53;
  Frame b = a;
  b.src_port = 40001;
  b.ts_us = 5;
  Frame c = a;
  std::swap(c.src_ip, c.dst_ip);
  std::swap(c.src_port, c.dst_port);
  c.ts_us = 10;
  const auto flows = assemble_flows(packets({a, b, c})).flows;
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].transport == Transport::Udp);
  CHECK(flows[0].packets_in == 1);
  CHECK(flows[0].packets_out == 1);
  CHECK(flows[1].packet_count() == 1);
}

TEST_CASE("tag meta comes from the first packet") {
  Frame f = up(0, 1);
  f.vlan = 12;
  const auto assembled = assemble_flows(packets({f, down(5, 1)}));
  REQUIRE(assembled.meta.size() == 1);
  CHECK(assembled.meta[0].vlan_id == std::optional<std::uint16_t>(12));
  CHECK(assembled.meta[0].client_mac.to_string() == "02:00:00:00:00:01");
}

TEST_CASE("input order does not matter when timestamps are distinct") {
  std::vector<Frame> frames;
  SplitMix64 rng(5);
  for (int i = 0; i < 300; ++i) {
    Frame f = rng.index(2) ? up(i * 1000, rng.index(300)) : down(i * 1000, rng.index(300));
    const auto port = static_cast<std::uint16_t>(40000 + rng.index(6));
    (f.src_port == 443 ? f.dst_port : f.src_port) = port;
    frames.push_back(f);
  }
  const auto reference = assemble_flows(packets(frames)).flows;
  for (int trial = 0; trial < 5; ++trial) {
    auto pk = packets(frames);
    for (std::size_t i = pk.size() - 1; i > 0; --i) std::swap(pk[i], pk[rng.index(i + 1)]);
    CHECK(assemble_flows(pk).flows == reference);
  }
  std::uint64_t total = 0;
  for (const auto& f : reference) total += f.packet_count();
  CHECK(total == 300);
}

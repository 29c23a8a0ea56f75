#include <sstream>

#include "doctest.h"
#include "tclean/error.hpp"
#include "tclean/flow_table.hpp"
#include "tclean/rng.hpp"
#include "tclean/tags.hpp"

using namespace tclean;

namespace {

FlowRecord random_flow(SplitMix64& rng, std::uint64_t id) {
  FlowRecord f;
  f.flow_id = id;
  if (rng.index(5) != 0) f.app_label = "app_" + std::to_string(rng.index(4));
  f.transport = rng.index(2) ? Transport::Tcp : Transport::Udp;
  const auto v6 = rng.index(4) == 0;
  f.client = {*IpAddress::parse(v6 ? "2001:db8::1" : "10.1.2.3"), static_cast<std::uint16_t>(rng.index(65536))};
  f.server = {*IpAddress::parse(v6 ? "2001:db8::ff" : "93.184.216.34"), static_cast<std::uint16_t>(rng.index(65536))};
  f.dst_port = f.server.port;
  f.first_ts_us = static_cast<std::int64_t>(rng.index(1'000'000'000));
  f.last_ts_us = f.first_ts_us + static_cast<std::int64_t>(rng.index(1'000'000));
  f.packets_in = rng.index(1000);
  f.packets_out = 1 + rng.index(1000);
  f.bytes_in = f.packets_in * 60;
  f.bytes_out = f.packets_out * 60;
  f.header_bytes_total = (f.packets_in + f.packets_out) * 40;
  f.payload_bytes_total = f.bytes_in + f.bytes_out - f.header_bytes_total;
  f.client_payload_prefix.resize(rng.index(257));
  for (auto& b : f.client_payload_prefix) b = static_cast<std::uint8_t>(rng.next());
  f.server_payload_prefix.resize(rng.index(3));
  for (auto& b : f.server_payload_prefix) b = static_cast<std::uint8_t>(rng.next());
  return f;
}

std::string table_text(const std::vector<FlowRecord>& flows) {
  std::ostringstream out;
  write_flow_table(out, flows);
  return out.str();
}

}  // namespace

TEST_CASE("flow table round trip of 1000 flows") {
  SplitMix64 rng(11);
  std::vector<FlowRecord> flows;
  for (std::uint64_t i = 0; i < 1000; ++i) flows.push_back(random_flow(rng, i));
  const std::string text = table_text(flows);
  std::istringstream in(text);
  const auto back = read_flow_table(in);
  CHECK(back == flows);
  CHECK(table_text(back) == text);
}

TEST_CASE("flow table header is fixed") {
  const std::string text = table_text({});
  CHECK(text == std::string(kFlowTableHeader) + "\n");
}

TEST_CASE("schema mismatch names the missing column") {
  std::string header(kFlowTableHeader);
  header.erase(header.find(",bytes_in"), 9);
  std::istringstream in(header + "\n");
  try {
    read_flow_table(in);
    FAIL("expected SchemaMismatch");
  } catch (const SchemaMismatch& e) {
    CHECK(std::string(e.what()).find("bytes_in") != std::string::npos);
  }
}

TEST_CASE("bad values report line and column") {
  SplitMix64 rng(1);
  auto text = table_text({random_flow(rng, 0), random_flow(rng, 1)});
  const auto second = text.find('\n', text.find('\n') + 1) + 1;
  text.replace(second, text.find(',', second) - second, "x9");
  std::istringstream in(text);
  try {
    read_flow_table(in, "flows.csv");
    FAIL("expected ValueError");
  } catch (const ValueError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("flows.csv") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("flow_id") != std::string::npos);
  }
}

TEST_CASE("flow invariants are enforced on read") {
  SplitMix64 rng(2);
  FlowRecord f = random_flow(rng, 0);
  f.last_ts_us = f.first_ts_us - 1;
  std::istringstream in(table_text({f}));
  CHECK_THROWS_AS(read_flow_table(in), ValueError);

  FlowRecord g = random_flow(rng, 1);
  g.packets_in = g.packets_out = 0;
  std::istringstream in2(table_text({g}));
  CHECK_THROWS_AS(read_flow_table(in2), ValueError);
}

TEST_CASE("missing flow table file") {
  CHECK_THROWS_AS(read_flow_table(std::filesystem::path("/nonexistent/flows.csv")), IoError);
}

TEST_CASE("tag map parsing and precedence") {
  const auto tags = TagMap::parse("# devices\nmac 02:00:00:00:00:01 tiktok\nvlan 7 bilibili\n\n");
  CHECK(tags.size() == 2);
  std::vector<FlowRecord> flows(3);
  flows[2].app_label = "kept";
  std::vector<FlowTagMeta> meta(3);
  meta[0].client_mac = *MacAddress::parse("02:00:00:00:00:01");
  meta[1].client_mac = *MacAddress::parse("02:00:00:00:00:01");
  meta[1].vlan_id = 7;
  meta[2].client_mac = *MacAddress::parse("02:00:00:00:00:09");
  const auto tagged = apply_tags(flows, tags, meta);
  CHECK(tagged[0].app_label == std::optional<std::string>("tiktok"));
  CHECK(tagged[1].app_label == std::optional<std::string>("bilibili"));
  CHECK(tagged[2].app_label == std::optional<std::string>("kept"));
}

TEST_CASE("tag map errors carry line numbers") {
  auto line_of = [](const char* text) -> std::size_t {
    try {
      TagMap::parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("mac 02:00:00:00:00:01 a\nmac zz b\n") == 2);
  CHECK(line_of("\n\nvlan 5000 a\n") == 3);
  CHECK(line_of("port 80 a\n") == 1);
  CHECK(line_of("vlan 1 a\nvlan 1 b\n") == 2);
  CHECK(line_of("vlan 1 a,b\n") == 1);
}

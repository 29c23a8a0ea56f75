#include "tclean/flow.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "tclean/error.hpp"

namespace tclean {

FlowKey FlowKey::of(Transport transport, const Endpoint& a, const Endpoint& b) {
  return a <= b ? FlowKey{transport, a, b} : FlowKey{transport, b, a};
}

namespace {

std::size_t hash_endpoint(const Endpoint& e) noexcept {
  std::size_t h = e.ip.v6 ? 0x9E3779B97F4A7C15ULL : 0;
  for (std::uint8_t b : e.ip.bytes) h = (h ^ b) * 0x100000001B3ULL;
  return (h ^ e.port) * 0x100000001B3ULL;
}

struct ActiveFlow {
  std::size_t index = 0;
  bool fin_out = false;
  bool fin_in = false;
  bool closed = false;
};

}  // namespace

std::size_t FlowKeyHash::operator()(const FlowKey& key) const noexcept {
  return hash_endpoint(key.lo) * 31 + hash_endpoint(key.hi) + static_cast<std::size_t>(key.transport);
}

AssembledFlows assemble_flows(std::span<const PacketRecord> packets, const FlowOptions& options) {
  if (!(options.idle_timeout_s > 0)) throw ValueError("idle_timeout_s must be positive");
  const auto timeout_us = static_cast<std::int64_t>(options.idle_timeout_s * 1e6);

  std::vector<std::size_t> order(packets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return packets[a].timestamp_us < packets[b].timestamp_us;
  });

  AssembledFlows out;
  std::unordered_map<FlowKey, ActiveFlow, FlowKeyHash> active;

  for (std::size_t idx : order) {
    const PacketRecord& pkt = packets[idx];
    const Endpoint src{pkt.src_ip, pkt.src_port};
    const Endpoint dst{pkt.dst_ip, pkt.dst_port};
    const FlowKey key = FlowKey::of(pkt.transport, src, dst);
    const bool syn = pkt.tcp_flags && pkt.tcp_flags->syn;

    auto it = active.find(key);
    bool start_new = it == active.end();
    if (!start_new) {
      const FlowRecord& f = out.flows[it->second.index];
      start_new = pkt.timestamp_us - f.last_ts_us > timeout_us || (it->second.closed && syn);
    }
    if (start_new) {
      FlowRecord f;
      f.flow_id = out.flows.size();
      f.transport = pkt.transport;
      f.client = src;
      f.server = dst;
      f.dst_port = dst.port;
      f.first_ts_us = f.last_ts_us = pkt.timestamp_us;
      out.flows.push_back(std::move(f));
      out.meta.push_back(FlowTagMeta{pkt.src_mac, pkt.vlan_id});
      it = active.insert_or_assign(key, ActiveFlow{out.flows.size() - 1}).first;
    }

    ActiveFlow& state = it->second;
    FlowRecord& f = out.flows[state.index];
    const bool outbound = src == f.client;
    f.last_ts_us = std::max(f.last_ts_us, pkt.timestamp_us);
    f.header_bytes_total += pkt.header_len;
    f.payload_bytes_total += pkt.payload_len;
    if (outbound) {
      f.bytes_out += pkt.wire_len;
      ++f.packets_out;
      if (f.client_payload_prefix.empty()) f.client_payload_prefix = pkt.payload_prefix;
    } else {
      f.bytes_in += pkt.wire_len;
      ++f.packets_in;
      if (f.server_payload_prefix.empty()) f.server_payload_prefix = pkt.payload_prefix;
    }
    if (pkt.tcp_flags) {
      if (pkt.tcp_flags->rst) state.closed = true;
      if (pkt.tcp_flags->fin) (outbound ? state.fin_out : state.fin_in) = true;
      if (state.fin_out && state.fin_in) state.closed = true;
    }
  }
  return out;
}

}  // namespace tclean

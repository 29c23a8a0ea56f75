#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclean/flow.hpp"

namespace tclean {

inline constexpr std::string_view kFlowTableHeader =
    "flow_id,app_label,transport,client_ip,client_port,server_ip,server_port,first_ts_us,"
    "last_ts_us,bytes_in,bytes_out,packets_in,packets_out,header_bytes_total,"
    "payload_bytes_total,dst_port,client_payload_prefix_hex,server_payload_prefix_hex";

/// Flow-table CSV. An absent app label is written as an empty field.
void write_flow_table(std::ostream& out, std::span<const FlowRecord> flows);
void write_flow_table(const std::filesystem::path& file, std::span<const FlowRecord> flows);

/// Throws SchemaMismatch when the header differs from kFlowTableHeader and
/// ValueError for unparsable fields or records violating flow invariants.
std::vector<FlowRecord> read_flow_table(std::istream& in, std::string_view source = "flow table");
std::vector<FlowRecord> read_flow_table(const std::filesystem::path& file);

}  // namespace tclean

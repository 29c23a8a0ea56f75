#include "tclean/flow_table.hpp"

#include <array>
#include <fstream>
#include <ostream>
#include <set>

#include "tclean/csv.hpp"
#include "tclean/error.hpp"
#include "tclean/tags.hpp"

namespace tclean {

namespace csv {

std::vector<std::string_view> split(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), p);
}

}  // namespace csv

namespace {

constexpr std::size_t kColumns = 18;

void check_header(std::string_view header, std::string_view source) {
  const auto got = csv::split(header);
  const auto want = csv::split(kFlowTableHeader);
  if (got == want) return;
  const std::set<std::string_view> have(got.begin(), got.end());
  std::string missing;
  for (auto col : want) {
    if (!have.count(col)) missing += (missing.empty() ? "" : ", ") + std::string(col);
  }
  throw SchemaMismatch(std::string(source) + ": flow-table header mismatch" +
                       (missing.empty() ? std::string(" (column order or extra columns)")
                                        : " (missing: " + missing + ")"));
}

class RowParser {
 public:
  RowParser(std::string_view source, std::size_t line, const std::vector<std::string_view>& fields)
      : source_(source), line_(line), fields_(fields) {}

  template <typename T>
  T number(std::size_t col) const {
    auto v = csv::parse_number<T>(fields_[col]);
    if (!v) fail(col, "not a valid number");
    return *v;
  }

  Endpoint endpoint(std::size_t ip_col, std::size_t port_col) const {
    auto ip = IpAddress::parse(fields_[ip_col]);
    if (!ip) fail(ip_col, "not a valid IP address");
    return Endpoint{*ip, number<std::uint16_t>(port_col)};
  }

  Bytes hex(std::size_t col) const {
    auto b = from_hex(fields_[col]);
    if (!b) fail(col, "not valid hex");
    return *b;
  }

  [[noreturn]] void fail(std::size_t col, const std::string& why) const {
    const auto names = csv::split(kFlowTableHeader);
    throw ValueError(std::string(source_) + ": line " + std::to_string(line_) + ": column '" +
                     std::string(names[col]) + "': " + why + " ('" + std::string(fields_[col]) +
                     "')");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ValueError(std::string(source_) + ": line " + std::to_string(line_) + ": " + why);
  }

 private:
  std::string_view source_;
  std::size_t line_;
  const std::vector<std::string_view>& fields_;
};

}  // namespace

void write_flow_table(std::ostream& out, std::span<const FlowRecord> flows) {
  out << kFlowTableHeader << '\n';
  for (const FlowRecord& f : flows) {
    if (f.app_label && !valid_label(*f.app_label)) {
      throw ValueError("flow " + std::to_string(f.flow_id) + ": label cannot be written to CSV");
    }
    out << f.flow_id << ',' << f.app_label.value_or("") << ',' << to_string(f.transport) << ','
        << f.client.ip.to_string() << ',' << f.client.port << ',' << f.server.ip.to_string() << ','
        << f.server.port << ',' << f.first_ts_us << ',' << f.last_ts_us << ',' << f.bytes_in
        << ',' << f.bytes_out << ',' << f.packets_in << ',' << f.packets_out << ','
        << f.header_bytes_total << ',' << f.payload_bytes_total << ',' << f.dst_port << ','
        << to_hex(f.client_payload_prefix) << ',' << to_hex(f.server_payload_prefix) << '\n';
  }
}

void write_flow_table(const std::filesystem::path& file, std::span<const FlowRecord> flows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  write_flow_table(out, flows);
  if (!out) throw IoError("write failed: " + file.string());
}

std::vector<FlowRecord> read_flow_table(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch(std::string(source) + ": missing header row");
  check_header(line, source);

  std::vector<FlowRecord> flows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    const RowParser row(source, line_no, fields);
    if (fields.size() != kColumns) {
      row.fail("expected " + std::to_string(kColumns) + " fields, got " +
               std::to_string(fields.size()));
    }
    FlowRecord f;
    f.flow_id = row.number<std::uint64_t>(0);
    if (!fields[1].empty()) f.app_label = std::string(fields[1]);
    auto transport = parse_transport(fields[2]);
    if (!transport) row.fail(2, "expected TCP or UDP");
    f.transport = *transport;
    f.client = row.endpoint(3, 4);
    f.server = row.endpoint(5, 6);
    f.first_ts_us = row.number<std::int64_t>(7);
    f.last_ts_us = row.number<std::int64_t>(8);
    f.bytes_in = row.number<std::uint64_t>(9);
    f.bytes_out = row.number<std::uint64_t>(10);
    f.packets_in = row.number<std::uint64_t>(11);
    f.packets_out = row.number<std::uint64_t>(12);
    f.header_bytes_total = row.number<std::uint64_t>(13);
    f.payload_bytes_total = row.number<std::uint64_t>(14);
    f.dst_port = row.number<std::uint16_t>(15);
    f.client_payload_prefix = row.hex(16);
    f.server_payload_prefix = row.hex(17);

    if (f.last_ts_us < f.first_ts_us) row.fail("last_ts_us precedes first_ts_us");
    if (f.packet_count() == 0) row.fail("flow has no packets");
    if (f.packets_in == 0 && f.bytes_in != 0) row.fail("bytes_in without packets_in");
    if (f.packets_out == 0 && f.bytes_out != 0) row.fail("bytes_out without packets_out");
    flows.push_back(std::move(f));
  }
  return flows;
}

std::vector<FlowRecord> read_flow_table(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open flow table " + file.string());
  return read_flow_table(in, file.string());
}

}  // namespace tclean

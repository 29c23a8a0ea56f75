#include "tclean/dpi.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "tclean/error.hpp"

namespace tclean::dpi {

std::string_view to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::PlaintextDns: return "PlaintextDNS";
    case VerdictKind::PlaintextHttp: return "PlaintextHTTP";
    case VerdictKind::TlsWithSni: return "TlsWithSni";
    case VerdictKind::TlsNoSni: return "TlsNoSni";
    case VerdictKind::OtherEncryptedAssumed: return "OtherEncryptedAssumed";
  }
  return "?";
}

namespace {

constexpr std::uint8_t kContentHandshake = 22;
constexpr std::uint8_t kHandshakeClientHello = 1;
constexpr std::uint16_t kExtServerName = 0;
constexpr std::uint8_t kNameTypeHost = 0;

char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool hostname_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_';
}

std::optional<std::string> normalize_hostname(std::string_view raw) {
  std::string host;
  host.reserve(raw.size());
  for (char c : raw) host.push_back(lower(c));
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty() || host.front() == '.') return std::nullopt;
  if (!std::all_of(host.begin(), host.end(), hostname_char)) return std::nullopt;
  return host;
}

// Walks server_name entries; returns the first host_name.
std::optional<std::string> read_server_name(const std::uint8_t* p, std::size_t len) {
  if (len < 2) return std::nullopt;
  const std::size_t list_end = std::min<std::size_t>(2 + read_be16(p), len);
  std::size_t off = 2;
  while (off + 3 <= list_end) {
    const std::uint8_t type = p[off];
    const std::size_t name_len = read_be16(p + off + 1);
    off += 3;
    if (off + name_len > list_end) return std::nullopt;
    if (type == kNameTypeHost) {
      return normalize_hostname(
          std::string_view(reinterpret_cast<const char*>(p + off), name_len));
    }
    off += name_len;
  }
  return std::nullopt;
}

}  // namespace

bool parse_dns(ByteView payload, std::uint16_t dst_port, Transport transport) {
  if (dst_port != 53) return false;
  if (transport == Transport::Tcp) {
    if (payload.size() < 2) return false;
    payload = payload.subspan(2);
  }
  if (payload.size() < 12) return false;
  const std::uint16_t flags = read_be16(payload.data() + 2);
  const unsigned opcode = (flags >> 11) & 0xF;
  const bool z_bit = (flags & 0x0040) != 0;
  const std::uint16_t qdcount = read_be16(payload.data() + 4);
  return opcode <= 5 && !z_bit && qdcount >= 1;
}

bool is_http_request(ByteView payload) {
  static constexpr std::array<std::string_view, 7> kMethods = {
      "GET ", "POST ", "PUT ", "HEAD ", "DELETE ", "OPTIONS ", "CONNECT "};
  const std::string_view text(reinterpret_cast<const char*>(payload.data()), payload.size());
  return std::any_of(kMethods.begin(), kMethods.end(),
                     [&](std::string_view m) { return text.starts_with(m); });
}

std::optional<ClientHello> inspect_client_hello(ByteView payload) {
  const std::uint8_t* p = payload.data();
  const std::size_t avail = payload.size();
  // record header (5) + handshake header (4) + client_version (2)
  if (avail < 11) return std::nullopt;
  if (p[0] != kContentHandshake || p[1] != 3 || p[2] < 1 || p[2] > 4) return std::nullopt;
  if (p[5] != kHandshakeClientHello) return std::nullopt;
  if (p[9] != 3) return std::nullopt;

  ClientHello hello;
  const std::size_t end = std::min<std::size_t>(avail, 5 + std::size_t{read_be16(p + 3)});
  std::size_t off = 11 + 32;  // random
  if (off + 1 > end) return hello;
  off += 1 + p[off];  // session id
  if (off + 2 > end) return hello;
  off += 2 + read_be16(p + off);  // cipher suites
  if (off + 1 > end) return hello;
  off += 1 + p[off];  // compression methods
  if (off + 2 > end) return hello;
  const std::size_t ext_end = std::min<std::size_t>(end, off + 2 + read_be16(p + off));
  off += 2;
  while (off + 4 <= ext_end) {
    const std::uint16_t type = read_be16(p + off);
    const std::size_t len = read_be16(p + off + 2);
    off += 4;
    if (off + len > ext_end) break;
    if (type == kExtServerName) {
      hello.sni = read_server_name(p + off, len);
      break;
    }
    off += len;
  }
  return hello;
}

std::optional<std::string> parse_tls_client_hello(ByteView payload) {
  auto hello = inspect_client_hello(payload);
  if (!hello) return std::nullopt;
  return hello->sni;
}

ProtocolVerdict classify_flow(const FlowRecord& flow) {
  const ByteView client = flow.client_payload_prefix;
  if (parse_dns(client, flow.dst_port, flow.transport)) return {VerdictKind::PlaintextDns, {}};
  if (is_http_request(client)) return {VerdictKind::PlaintextHttp, {}};
  if (auto hello = inspect_client_hello(client)) {
    if (hello->sni) return {VerdictKind::TlsWithSni, *hello->sni};
    return {VerdictKind::TlsNoSni, {}};
  }
  return {VerdictKind::OtherEncryptedAssumed, {}};
}

Blocklist::Blocklist(std::initializer_list<std::string_view> suffixes) {
  for (auto s : suffixes) add(s);
}

void Blocklist::add(std::string_view suffix) {
  if (suffix.starts_with("*.")) suffix.remove_prefix(2);
  while (suffix.starts_with('.')) suffix.remove_prefix(1);
  auto host = normalize_hostname(suffix);
  if (!host) throw ValueError("invalid blocklist suffix '" + std::string(suffix) + "'");
  suffixes_.insert(std::move(*host));
}

bool Blocklist::matches(std::string_view hostname) const {
  if (suffixes_.empty()) return false;
  auto host = normalize_hostname(hostname);
  if (!host) return false;
  std::string_view rest = *host;
  while (true) {
    if (suffixes_.find(rest) != suffixes_.end()) return true;
    const std::size_t dot = rest.find('.');
    if (dot == std::string_view::npos) return false;
    rest.remove_prefix(dot + 1);
  }
}

Blocklist Blocklist::defaults() {
  return Blocklist{"google.com", "gstatic.com", "googleapis.com",
                   "apple.com",  "icloud.com",  "cloudflare.com"};
}

Blocklist Blocklist::parse(std::string_view text) {
  Blocklist list;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string suffix, extra;
    if (!(fields >> suffix)) continue;
    if (fields >> extra) throw ParseError(line_no, "expected one suffix per line");
    try {
      list.add(suffix);
    } catch (const ValueError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return list;
}

Blocklist Blocklist::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open blocklist " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw e.in_file(file.string());
  }
}

bool discards(const ProtocolVerdict& verdict, const Blocklist& blocklist) {
  switch (verdict.kind) {
    case VerdictKind::PlaintextDns:
    case VerdictKind::PlaintextHttp:
      return true;
    case VerdictKind::TlsWithSni:
      return blocklist.matches(verdict.sni);
    default:
      return false;
  }
}

FilterResult filter_flows(std::span<const FlowRecord> flows, const Blocklist& blocklist) {
  FilterResult result;
  for (const FlowRecord& f : flows) {
    ProtocolVerdict verdict = classify_flow(f);
    if (discards(verdict, blocklist)) {
      result.discarded.push_back({f, std::move(verdict)});
    } else {
      result.kept.push_back(f);
    }
  }
  return result;
}

}  // namespace tclean::dpi

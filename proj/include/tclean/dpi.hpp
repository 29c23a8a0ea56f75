#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclean/flow.hpp"
#include "tclean/net.hpp"

namespace tclean::dpi {

enum class VerdictKind : std::uint8_t {
  PlaintextDns,
  PlaintextHttp,
  TlsWithSni,
  TlsNoSni,
  OtherEncryptedAssumed,
};

std::string_view to_string(VerdictKind kind) noexcept;

struct ProtocolVerdict {
  VerdictKind kind = VerdictKind::OtherEncryptedAssumed;
  std::string sni;  // lowercase; non-empty only for TlsWithSni

  bool operator==(const ProtocolVerdict&) const = default;
};

/// DNS message sniffing on the client's first payload. Requires destination
/// port 53 and a 12-byte header with opcode <= 5, QDCOUNT >= 1 and the
/// reserved Z bit clear. Over TCP the 2-byte length prefix is skipped first.
bool parse_dns(ByteView payload, std::uint16_t dst_port, Transport transport);

/// True if the payload opens with one of the HTTP/1.x request method tokens.
bool is_http_request(ByteView payload);

struct ClientHello {
  std::optional<std::string> sni;
};

/// Recognizes a TLS handshake record (content type 22, version 3.1-3.4)
/// carrying a ClientHello. nullopt when the payload is not one. The SNI is
/// the first host_name entry of the server_name extension, lowercased; it is
/// absent when the extension is missing, malformed, or beyond the captured
/// prefix.
std::optional<ClientHello> inspect_client_hello(ByteView payload);

/// SNI of a ClientHello payload, if any.
std::optional<std::string> parse_tls_client_hello(ByteView payload);

/// Verdict precedence: DNS, then HTTP, then TLS ClientHello, otherwise
/// assumed encrypted. Depends only on the payload prefixes, port and transport.
ProtocolVerdict classify_flow(const FlowRecord& flow);

/// Lowercase domain suffixes matched on label boundaries: "google.com"
/// blocks "google.com" and "api.google.com" but not "notgoogle.com".
class Blocklist {
 public:
  Blocklist() = default;
  Blocklist(std::initializer_list<std::string_view> suffixes);

  /// Normalizes case and strips a leading "*." or "." and a trailing dot.
  /// Throws ValueError for an empty or malformed suffix.
  void add(std::string_view suffix);
  bool matches(std::string_view hostname) const;

  const std::set<std::string, std::less<>>& suffixes() const noexcept { return suffixes_; }
  bool empty() const noexcept { return suffixes_.empty(); }

  /// google.com, gstatic.com, googleapis.com, apple.com, icloud.com, cloudflare.com
  static Blocklist defaults();
  /// One suffix per line; `#` comments and blank lines ignored.
  static Blocklist parse(std::string_view text);
  static Blocklist read(const std::filesystem::path& file);

 private:
  std::set<std::string, std::less<>> suffixes_;
};

struct DiscardedFlow {
  FlowRecord flow;
  ProtocolVerdict verdict;
};

struct FilterResult {
  std::vector<FlowRecord> kept;
  std::vector<DiscardedFlow> discarded;
};

/// True if the verdict is plaintext or a TLS SNI on the blocklist.
bool discards(const ProtocolVerdict& verdict, const Blocklist& blocklist);

/// Partitions flows into kept and discarded, preserving input order in both.
FilterResult filter_flows(std::span<const FlowRecord> flows, const Blocklist& blocklist);

}  // namespace tclean::dpi

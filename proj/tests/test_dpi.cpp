#include <string>

#include "doctest.h"
#include "support/dpi_fixtures.hpp"
#include "tclean/dpi.hpp"
#include "tclean/error.hpp"

using namespace tclean;
using namespace tclean::dpi;
using namespace testsupport;

TEST_CASE("hand-sized ClientHello fixture") {
  // 5 record + 4 handshake + 2 + 32 + 1 + 2 + 2 + 1 + 1 + 2 + (4 + 19) + 7
  CHECK(client_hello("api.google.com").size() == 82);
  CHECK(client_hello("").size() == 59);
}

TEST_CASE("fixtures produce the four verdicts") {
  CHECK(classify_flow(flow_with(dns_query(), 53, Transport::Udp)).kind == VerdictKind::PlaintextDns);
  CHECK(classify_flow(flow_with(text("GET /index.html HTTP/1.1\r\nHost: a\r\n\r\n"), 80)).kind ==
        VerdictKind::PlaintextHttp);
  const auto sni = classify_flow(flow_with(client_hello("api.google.com"), 443));
  CHECK(sni.kind == VerdictKind::TlsWithSni);
  CHECK(sni.sni == "api.google.com");
  CHECK(classify_flow(flow_with(client_hello(""), 443)).kind == VerdictKind::TlsNoSni);
  CHECK(classify_flow(flow_with(Bytes{0x17, 0x03, 0x03, 0x00, 0x10, 1, 2, 3}, 443)).kind ==
        VerdictKind::OtherEncryptedAssumed);
  CHECK(classify_flow(flow_with({}, 443)).kind == VerdictKind::OtherEncryptedAssumed);
}

TEST_CASE("verdict names") {
  CHECK(to_string(VerdictKind::PlaintextDns) == "PlaintextDNS");
  CHECK(to_string(VerdictKind::PlaintextHttp) == "PlaintextHTTP");
  CHECK(to_string(VerdictKind::TlsWithSni) == "TlsWithSni");
  CHECK(to_string(VerdictKind::TlsNoSni) == "TlsNoSni");
}

TEST_CASE("dns checks") {
  CHECK(parse_dns(dns_query(), 53, Transport::Udp));
  CHECK_FALSE(parse_dns(dns_query(), 5353, Transport::Udp));
  Bytes tcp = {0x00, static_cast<std::uint8_t>(dns_query().size())};
  const auto q = dns_query();
  tcp.insert(tcp.end(), q.begin(), q.end());
  CHECK(parse_dns(tcp, 53, Transport::Tcp));
  CHECK_FALSE(parse_dns(Bytes(q.begin(), q.begin() + 11), 53, Transport::Udp));
  Bytes no_question = q;
  no_question[5] = 0;
  CHECK_FALSE(parse_dns(no_question, 53, Transport::Udp));
  Bytes bad_opcode = q;
  bad_opcode[2] = 0x30;  // opcode 6
  CHECK_FALSE(parse_dns(bad_opcode, 53, Transport::Udp));
  Bytes z_bit = q;
  z_bit[3] |= 0x40;
  CHECK_FALSE(parse_dns(z_bit, 53, Transport::Udp));
}

TEST_CASE("http methods need a trailing space") {
  CHECK(is_http_request(text("POST /x HTTP/1.1")));
  CHECK(is_http_request(text("CONNECT host:443 HTTP/1.1")));
  CHECK_FALSE(is_http_request(text("GETX / HTTP/1.1")));
  CHECK_FALSE(is_http_request(text("get / HTTP/1.1")));
  CHECK_FALSE(is_http_request(text("GET")));
}

TEST_CASE("sni is lowercased") {
  CHECK(parse_tls_client_hello(client_hello("API.Example.COM")) == std::optional<std::string>("api.example.com"));
}

TEST_CASE("truncation never yields a wrong sni") {
  const std::string host = "media.static.example.org";
  const Bytes full = client_hello(host);
  std::size_t first_full = full.size() + 1;
  for (std::size_t len = 0; len <= full.size(); ++len) {
    const Bytes cut(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(len));
    const auto sni = parse_tls_client_hello(cut);
    if (sni) {
      CHECK(*sni == host);
      first_full = std::min(first_full, len);
    }
  }
  // The name is available once the whole server_name extension is present.
  const std::size_t ext_end = 5 + 4 + 2 + 32 + 1 + 2 + 2 + 1 + 1 + 2 + 4 + host.size() + 5;
  CHECK(first_full == ext_end);
}

TEST_CASE("blocklist matches on label boundaries") {
  Blocklist list{"google.com", "*.icloud.com", ".Apple.com."};
  CHECK(list.matches("google.com"));
  CHECK(list.matches("api.google.com"));
  CHECK(list.matches("A.B.GOOGLE.COM"));
  CHECK_FALSE(list.matches("notgoogle.com"));
  CHECK_FALSE(list.matches("google.com.evil.net"));
  CHECK(list.matches("gateway.icloud.com"));
  CHECK(list.matches("apple.com"));
  CHECK_FALSE(Blocklist{}.matches("google.com"));
  CHECK(Blocklist::defaults().matches("fonts.gstatic.com"));
}

TEST_CASE("blocklist parse errors") {
  const auto list = Blocklist::parse("# comment\nexample.com\n\n");
  CHECK(list.suffixes().size() == 1);
  try {
    Blocklist::parse("a.com\nb.com c.com\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("filter discards plaintext and blocklisted tls") {
  std::vector<FlowRecord> flows = {
      flow_with(dns_query(), 53, Transport::Udp), flow_with(text("HEAD / HTTP/1.0"), 80),
      flow_with(client_hello("www.google.com"), 443), flow_with(client_hello("cdn.example.net"), 443),
      flow_with(client_hello(""), 443), flow_with({}, 443)};
  for (std::size_t i = 0; i < flows.size(); ++i) flows[i].flow_id = i;
  const auto r = filter_flows(flows, Blocklist::defaults());
  REQUIRE(r.kept.size() == 3);
  CHECK(r.kept[0].flow_id == 3);
  CHECK(r.kept[1].flow_id == 4);
  CHECK(r.kept[2].flow_id == 5);
  REQUIRE(r.discarded.size() == 3);
  CHECK(r.discarded[2].verdict.sni == "www.google.com");
}

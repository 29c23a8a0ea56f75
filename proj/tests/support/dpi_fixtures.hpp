#pragma once

// Hand-laid DNS, HTTP and TLS payloads for DPI tests.

#include <string>

#include "tclean/flow.hpp"

namespace testsupport {

using tclean::Bytes;
using tclean::FlowRecord;
using tclean::Transport;


inline Bytes dns_query() {
  return {0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
          3,    'w',  'w',  'w',  7,    'e',  'x',  'a',  'm',  'p',  'l',  'e',
          3,    'c',  'o',  'm',  0,    0x00, 0x01, 0x00, 0x01};
}

inline void push16(Bytes& b, std::size_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

// Minimal ClientHello: one suite, null compression, optional SNI plus one
// trailing supported_versions extension.
inline Bytes client_hello(const std::string& sni) {
  Bytes ext;
  if (!sni.empty()) {
    push16(ext, 0x0000);
    push16(ext, sni.size() + 5);
    push16(ext, sni.size() + 3);
    ext.push_back(0);
    push16(ext, sni.size());
    ext.insert(ext.end(), sni.begin(), sni.end());
  }
  const Bytes versions = {0x00, 0x2b, 0x00, 0x03, 0x02, 0x03, 0x04};
  ext.insert(ext.end(), versions.begin(), versions.end());

  Bytes body = {0x03, 0x03};
  body.insert(body.end(), 32, 0x5a);
  body.push_back(0);
  push16(body, 2);
  push16(body, 0x1301);
  body.push_back(1);
  body.push_back(0);
  push16(body, ext.size());
  body.insert(body.end(), ext.begin(), ext.end());

  Bytes rec = {22, 3, 1};
  push16(rec, body.size() + 4);
  rec.push_back(1);
  rec.push_back(0);
  push16(rec, body.size());
  rec.insert(rec.end(), body.begin(), body.end());
  return rec;
}

inline FlowRecord flow_with(Bytes client, std::uint16_t port, Transport t = Transport::Tcp) {
  FlowRecord f;
  f.transport = t;
  f.dst_port = port;
  f.server.port = port;
  f.client_payload_prefix = std::move(client);
  return f;
}

inline Bytes text(const std::string& s) { return Bytes(s.begin(), s.end()); }


}  // namespace testsupport

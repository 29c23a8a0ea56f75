#include "tclean/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tclean/csv.hpp"
#include "tclean/error.hpp"
#include "tclean/features.hpp"
#include "tclean/rng.hpp"

namespace tclean::synth {

namespace {

constexpr std::array<std::string_view, kRoleCount> kRoleNames = {
    "DataPlane", "Heartbeat", "Dns", "BackgroundTls", "Upload"};

constexpr std::int64_t kCaptureEpochUs = 1'700'000'000'000'000;
constexpr double kTcpHeader = 66;  // Ethernet + IPv4 + TCP with timestamps
constexpr double kUdpHeader = 42;
constexpr std::size_t kPrefixCap = 256;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// DNS-safe rendering of an app label.
std::string host_label(std::string_view app_label) {
  std::string out;
  for (char c : lower(app_label)) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
  return out.empty() ? "app" : out;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void put16(Bytes& b, std::size_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

void put_qname(Bytes& b, std::string_view name) {
  std::size_t start = 0;
  while (start <= name.size()) {
    const std::size_t dot = std::min(name.find('.', start), name.size());
    const std::size_t len = dot - start;
    if (len > 0) {
      b.push_back(static_cast<std::uint8_t>(len));
      b.insert(b.end(), name.begin() + static_cast<std::ptrdiff_t>(start),
               name.begin() + static_cast<std::ptrdiff_t>(dot));
    }
    start = dot + 1;
  }
  b.push_back(0);
}

// Wraps a handshake body into a record with the given handshake type.
Bytes handshake_record(std::uint8_t type, const Bytes& body) {
  Bytes rec = {22, 3, 1};
  put16(rec, body.size() + 4);
  rec.push_back(type);
  rec.push_back(static_cast<std::uint8_t>(body.size() >> 16));
  put16(rec, body.size() & 0xFFFF);
  rec.insert(rec.end(), body.begin(), body.end());
  return rec;
}

void put_extension(Bytes& b, std::uint16_t type, const Bytes& data) {
  put16(b, type);
  put16(b, data.size());
  b.insert(b.end(), data.begin(), data.end());
}

}  // namespace

std::string_view to_string(Role role) noexcept { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<Role> parse_role(std::string_view text) noexcept {
  std::string key;
  for (char c : text) {
    if (c != '_' && c != '-') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (lower(kRoleNames[i]) == key) return static_cast<Role>(i);
  }
  return std::nullopt;
}

double LogNormal::mean() const noexcept { return median * std::exp(sigma * sigma / 2); }

double RoleSpec::mean_bytes_in() const noexcept { return download ? volume.mean() : 0.0; }

double RoleSpec::probability_ratio_above(double threshold) const {
  // ratio > t  <=>  reverse/volume < (1 - t) / (1 + t)
  const double bound = (1 - threshold) / (1 + threshold);
  const double sign = download ? 1.0 : -1.0;
  if (reverse_fraction.sigma == 0) {
    const double r = ratio(download ? 1.0 : reverse_fraction.median, download ? reverse_fraction.median : 1.0);
    return sign * r > threshold ? 1.0 : 0.0;
  }
  const double z = (std::log(bound) - std::log(reverse_fraction.median)) / reverse_fraction.sigma;
  return download ? standard_normal_cdf(z) : 0.0;
}

RoleSpec role_spec(Role role, std::size_t app_index, std::string_view app_label) {
  const std::string app = host_label(app_label);
  RoleSpec s;
  s.role = role;
  switch (role) {
    case Role::DataPlane: {
      struct Profile {
        double bytes_median, packet_in, packet_out, reverse, duration;
      };
      static constexpr std::array<Profile, 5> kProfiles = {{
          {3.0e6, 1380, 96, 0.012, 18},
          {1.8e6, 1240, 118, 0.020, 9},
          {4.5e6, 1448, 88, 0.009, 32},
          {2.4e6, 1310, 140, 0.016, 14},
          {6.0e6, 1180, 104, 0.024, 45},
      }};
      const Profile& p = kProfiles[app_index % kProfiles.size()];
      // Later generations of the palette shift volume and timing.
      const double shift = 1.0 + 0.35 * static_cast<double>(app_index / kProfiles.size());
      s.volume = {p.bytes_median * shift, 0.9};
      s.reverse_fraction = {p.reverse, 0.35};
      s.packet_size_in = p.packet_in;
      s.packet_size_out = p.packet_out;
      s.packet_size_jitter = 0.05;
      s.duration_s = {p.duration / shift, 0.6};
      s.hostnames = {"v1." + app + "-cdn.example.com", "v2." + app + "-cdn.example.com",
                     "video." + app + ".example.net"};
      break;
    }
    case Role::Heartbeat:
      s.download = true;
      s.volume = {15e3, 0.5};
      s.reverse_fraction = {0.8, 0.25};
      s.packet_size_in = 130;
      s.packet_size_out = 120;
      s.packet_size_jitter = 0.1;
      s.long_lived_min_fraction = 0.5;
      s.hostnames = {"push." + app + ".example.net", "ping." + app + ".example.net"};
      break;
    case Role::Dns:
      s.single_exchange = true;
      s.transport = Transport::Udp;
      s.server_port = 53;
      s.payload = PayloadTemplate::DnsQuery;
      s.duration_s = {0.02, 0.8};
      s.hostnames = {"v1." + app + "-cdn.example.com", "push." + app + ".example.net",
                     "www.google.com", "gateway.icloud.com", "connectivitycheck.gstatic.com"};
      break;
    case Role::BackgroundTls:
      s.volume = {40e3, 1.0};
      s.reverse_fraction = {0.3, 0.4};
      s.packet_size_in = 900;
      s.packet_size_out = 300;
      s.packet_size_jitter = 0.1;
      s.duration_s = {20, 1.0};
      s.hostnames = {"play.googleapis.com", "www.google.com",  "fonts.gstatic.com",
                     "gateway.icloud.com",  "gsp-ssl.apple.com", "speed.cloudflare.com"};
      break;
    case Role::Upload:
      s.download = false;
      s.volume = {8e6, 0.8};
      s.reverse_fraction = {0.015, 0.35};
      s.packet_size_in = 80;
      s.packet_size_out = 1300;
      s.packet_size_jitter = 0.05;
      s.duration_s = {60, 0.6};
      s.hostnames = {"upload." + app + ".example.net"};
      break;
  }
  return s;
}

std::size_t AppSpec::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

ScenarioSpec ScenarioSpec::standard_mix(std::size_t flows_per_app, std::uint64_t seed) {
  static constexpr std::array<double, kRoleCount> kMix = {0.55, 0.15, 0.15, 0.10, 0.05};
  ScenarioSpec spec;
  spec.seed = seed;
  for (char c = 'a'; c <= 'e'; ++c) {
    AppSpec app;
    app.label = std::string("app_") + c;
    std::size_t assigned = 0;
    for (std::size_t r = 1; r < kRoleCount; ++r) {
      app.counts[r] = static_cast<std::size_t>(std::llround(kMix[r] * static_cast<double>(flows_per_app)));
      assigned += app.counts[r];
    }
    app.counts[0] = flows_per_app - std::min(assigned, flows_per_app);
    spec.apps.push_back(std::move(app));
  }
  return spec;
}

void ScenarioSpec::validate() const {
  if (apps.empty()) throw InvalidSpec("scenario has no apps");
  if (!(capture_duration_s > 0)) throw InvalidSpec("capture_duration_s must be positive");
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const AppSpec& a = apps[i];
    if (a.label.empty() || a.label.find_first_of(",\" \t\r\n") != std::string::npos) {
      throw InvalidSpec("invalid app label '" + a.label + "'");
    }
    if (std::find(seen.begin(), seen.end(), a.label) != seen.end()) {
      throw InvalidSpec("duplicate app '" + a.label + "'");
    }
    seen.push_back(a.label);
    const RoleSpec dp = role_spec(Role::DataPlane, i, a.label);
    if (a.counts[0] > 0 && dp.probability_ratio_above(0.9) < 0.95) {
      throw InvalidSpec("DataPlane recipe for '" + a.label + "' does not keep ratio > 0.9");
    }
  }
}

ScenarioSpec ScenarioSpec::parse(std::string_view text) {
  ScenarioSpec spec;
  spec.apps.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key, a, b, extra;
    if (!(fields >> key)) continue;
    fields >> a >> b >> extra;
    if (!extra.empty()) throw ParseError(line_no, "too many fields");
    if (key == "app") {
      if (a.empty() || !b.empty()) throw ParseError(line_no, "expected 'app <label>'");
      spec.apps.push_back(AppSpec{a, {}});
    } else if (key == "role") {
      if (spec.apps.empty()) throw ParseError(line_no, "'role' before any 'app'");
      auto role = parse_role(a);
      if (!role) throw ParseError(line_no, "unknown role '" + a + "'");
      auto count = csv::parse_number<std::size_t>(b);
      if (!count) throw ParseError(line_no, "bad role count '" + b + "'");
      spec.apps.back().counts[static_cast<std::size_t>(*role)] = *count;
    } else if (key == "seed") {
      auto v = csv::parse_number<std::uint64_t>(a);
      if (!v || !b.empty()) throw ParseError(line_no, "bad seed '" + a + "'");
      spec.seed = *v;
    } else if (key == "capture_duration_s") {
      auto v = csv::parse_number<double>(a);
      if (!v || !b.empty()) throw ParseError(line_no, "bad capture_duration_s '" + a + "'");
      spec.capture_duration_s = *v;
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  return spec;
}

ScenarioSpec ScenarioSpec::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open scenario " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw e.in_file(file.string());
  }
}

std::string ScenarioSpec::to_text() const {
  std::ostringstream out;
  out << "seed " << seed << '\n' << "capture_duration_s " << csv::format_double(capture_duration_s) << '\n';
  for (const AppSpec& a : apps) {
    out << "app " << a.label << '\n';
    for (std::size_t r = 0; r < kRoleCount; ++r) {
      out << "role " << kRoleNames[r] << ' ' << a.counts[r] << '\n';
    }
  }
  return out.str();
}

Bytes make_dns_query(std::string_view qname, std::uint16_t id) {
  Bytes b;
  put16(b, id);
  put16(b, 0x0100);  // standard query, recursion desired
  put16(b, 1);
  put16(b, 0);
  put16(b, 0);
  put16(b, 0);
  put_qname(b, qname);
  put16(b, 1);  // A
  put16(b, 1);  // IN
  return b;
}

Bytes make_dns_response(std::string_view qname, std::uint16_t id) {
  Bytes b;
  put16(b, id);
  put16(b, 0x8180);
  put16(b, 1);
  put16(b, 1);
  put16(b, 0);
  put16(b, 0);
  put_qname(b, qname);
  put16(b, 1);
  put16(b, 1);
  const std::uint8_t answer[] = {0xC0, 0x0C, 0, 1, 0, 1, 0, 0, 0x0E, 0x10, 0, 4, 198, 51, 100, 7};
  b.insert(b.end(), std::begin(answer), std::end(answer));
  return b;
}

Bytes make_client_hello(std::string_view sni, std::span<const std::uint8_t, 32> random) {
  Bytes body = {3, 3};
  body.insert(body.end(), random.begin(), random.end());
  body.push_back(32);
  body.insert(body.end(), random.rbegin(), random.rend());
  static constexpr std::uint16_t kSuites[] = {0x1301, 0x1302, 0x1303, 0xC02B, 0xC02F, 0xC02C,
                                              0xC030, 0xCCA9, 0xCCA8, 0xC013, 0xC014, 0x009C,
                                              0x009D, 0x002F, 0x0035, 0x000A};
  put16(body, sizeof(kSuites));
  for (auto s : kSuites) put16(body, s);
  body.push_back(1);
  body.push_back(0);

  Bytes ext;
  if (!sni.empty()) {
    Bytes data;
    put16(data, sni.size() + 3);
    data.push_back(0);
    put16(data, sni.size());
    data.insert(data.end(), sni.begin(), sni.end());
    put_extension(ext, 0x0000, data);
  }
  put_extension(ext, 0x0017, {});                                    // extended_master_secret
  put_extension(ext, 0x000A, {0, 8, 0, 0x1D, 0, 0x17, 0, 0x18, 0, 0x19});  // supported_groups
  put_extension(ext, 0x000B, {1, 0});                                // ec_point_formats
  put_extension(ext, 0x000D, {0, 8, 4, 3, 8, 4, 4, 1, 5, 3});       // signature_algorithms
  put_extension(ext, 0x0010, {0, 12, 2, 'h', '2', 8, 'h', 't', 't', 'p', '/', '1', '.', '1'});
  put_extension(ext, 0x002B, {4, 3, 4, 3, 3});                       // supported_versions
  Bytes share = {0, 36, 0, 0x1D, 0, 32};
  share.insert(share.end(), random.begin(), random.end());
  put_extension(ext, 0x0033, share);                                 // key_share
  put16(body, ext.size());
  body.insert(body.end(), ext.begin(), ext.end());
  return handshake_record(1, body);
}

Bytes make_server_hello(std::span<const std::uint8_t, 32> random) {
  Bytes body = {3, 3};
  body.insert(body.end(), random.begin(), random.end());
  body.push_back(0);
  put16(body, 0x1301);
  body.push_back(0);
  put16(body, 0);
  Bytes rec = handshake_record(2, body);
  rec[2] = 3;
  return rec;
}

namespace {

class FlowSampler {
 public:
  FlowSampler(std::size_t app_index, const std::string& label, double capture_s, std::uint64_t seed)
      : app_index_(app_index), label_(label), capture_s_(capture_s), rng_(seed) {}

  FlowRecord sample(const RoleSpec& spec) {
    FlowRecord f;
    f.app_label = label_;
    f.transport = spec.transport;
    f.client = {IpAddress::v4(10, static_cast<std::uint8_t>(app_index_ / 250),
                              static_cast<std::uint8_t>(app_index_ % 250), 2),
                static_cast<std::uint16_t>(32768 + rng_.index(28232))};
    f.server = {server_address(spec.role), spec.server_port};
    f.dst_port = spec.server_port;

    const std::string& host = spec.hostnames[rng_.index(spec.hostnames.size())];
    const double header = spec.transport == Transport::Tcp ? kTcpHeader : kUdpHeader;

    double duration = 0;
    if (spec.single_exchange) {
      const auto id = static_cast<std::uint16_t>(rng_.next());
      f.client_payload_prefix = make_dns_query(host, id);
      f.server_payload_prefix = make_dns_response(host, id);
      f.packets_out = f.packets_in = 1;
      f.bytes_out = static_cast<std::uint64_t>(header) + f.client_payload_prefix.size();
      f.bytes_in = static_cast<std::uint64_t>(header) + f.server_payload_prefix.size();
      duration = std::min(spec.duration_s.median * std::exp(spec.duration_s.sigma * rng_.normal()), 1.0);
    } else {
      std::array<std::uint8_t, 32> random{};
      for (auto& b : random) b = static_cast<std::uint8_t>(rng_.next());
      f.client_payload_prefix = make_client_hello(host, random);
      f.server_payload_prefix = make_server_hello(random);
      sample_volumes(spec, header, f);
      if (spec.long_lived_min_fraction) {
        duration = capture_s_ * rng_.uniform(*spec.long_lived_min_fraction, 1.0);
      } else {
        duration = std::min(rng_.lognormal(std::log(spec.duration_s.median), spec.duration_s.sigma),
                            capture_s_);
      }
    }
    if (f.client_payload_prefix.size() > kPrefixCap) f.client_payload_prefix.resize(kPrefixCap);
    if (f.server_payload_prefix.size() > kPrefixCap) f.server_payload_prefix.resize(kPrefixCap);

    const double start = rng_.uniform() * (capture_s_ - duration);
    f.first_ts_us = kCaptureEpochUs + static_cast<std::int64_t>(std::llround(start * 1e6));
    f.last_ts_us = f.first_ts_us + static_cast<std::int64_t>(std::llround(duration * 1e6));
    f.header_bytes_total = static_cast<std::uint64_t>(header) * f.packet_count();
    f.payload_bytes_total = f.bytes_in + f.bytes_out - f.header_bytes_total;
    return f;
  }

 private:
  IpAddress server_address(Role role) {
    const auto host = static_cast<std::uint8_t>(1 + rng_.index(254));
    switch (role) {
      case Role::DataPlane: return IpAddress::v4(203, 0, 113, host);
      case Role::Heartbeat: return IpAddress::v4(198, 51, 100, host);
      case Role::Dns: return IpAddress::v4(9, 9, 9, 9);
      case Role::BackgroundTls: return IpAddress::v4(142, 250, static_cast<std::uint8_t>(rng_.index(256)), host);
      case Role::Upload: return IpAddress::v4(192, 0, 2, host);
    }
    return {};
  }

  void sample_volumes(const RoleSpec& spec, double header, FlowRecord& f) {
    const double volume = rng_.lognormal(std::log(spec.volume.median), spec.volume.sigma);
    double reverse = 0;
    // Download-dominated data-plane flows are redrawn until ratio > 0.9.
    for (int attempt = 0; attempt < 64; ++attempt) {
      reverse = volume * rng_.lognormal(std::log(spec.reverse_fraction.median), spec.reverse_fraction.sigma);
      if (spec.role != Role::DataPlane || ratio(volume, reverse) > 0.9) break;
      reverse = volume * spec.reverse_fraction.median;
    }
    const double in_bytes = spec.download ? volume : reverse;
    const double out_bytes = spec.download ? reverse : volume;
    const double size_in = std::clamp(
        spec.packet_size_in * rng_.lognormal(0, spec.packet_size_jitter), header + 1, 1514.0);
    const double size_out = std::clamp(
        spec.packet_size_out * rng_.lognormal(0, spec.packet_size_jitter), header + 1, 1514.0);
    f.packets_in = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(in_bytes / size_in)));
    f.packets_out = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(out_bytes / size_out)));
    f.bytes_in = std::max(static_cast<std::uint64_t>(std::llround(in_bytes)),
                          f.packets_in * static_cast<std::uint64_t>(header));
    f.bytes_out = std::max(static_cast<std::uint64_t>(std::llround(out_bytes)),
                           f.packets_out * static_cast<std::uint64_t>(header));
  }

  std::size_t app_index_;
  std::string label_;
  double capture_s_;
  SplitMix64 rng_;
};

}  // namespace

LabeledFlows generate(const ScenarioSpec& spec) {
  spec.validate();
  struct Item {
    FlowRecord flow;
    Role role;
  };
  std::vector<Item> items;
  for (std::size_t a = 0; a < spec.apps.size(); ++a) {
    const AppSpec& app = spec.apps[a];
    FlowSampler sampler(a, app.label, spec.capture_duration_s, derive_seed(spec.seed, a));
    for (std::size_t r = 0; r < kRoleCount; ++r) {
      const auto role = static_cast<Role>(r);
      const RoleSpec recipe = role_spec(role, a, app.label);
      for (std::size_t i = 0; i < app.counts[r]; ++i) items.push_back({sampler.sample(recipe), role});
    }
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& x, const Item& y) { return x.flow.first_ts_us < y.flow.first_ts_us; });
  LabeledFlows out;
  out.flows.reserve(items.size());
  out.roles.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].flow.flow_id = i;
    out.flows.push_back(std::move(items[i].flow));
    out.roles.push_back(items[i].role);
  }
  return out;
}

std::vector<FlowRecord> oracle_clean(std::span<const FlowRecord> flows, std::span<const Role> roles) {
  if (flows.size() != roles.size()) throw ShapeMismatch("roles do not match flows");
  std::vector<FlowRecord> out;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (roles[i] == Role::DataPlane) out.push_back(flows[i]);
  }
  return out;
}

void write_roles(std::ostream& out, std::span<const FlowRecord> flows, std::span<const Role> roles) {
  if (flows.size() != roles.size()) throw ShapeMismatch("roles do not match flows");
  out << "flow_id,role\n";
  for (std::size_t i = 0; i < flows.size(); ++i) out << flows[i].flow_id << ',' << to_string(roles[i]) << '\n';
}

void write_roles(const std::filesystem::path& file, std::span<const FlowRecord> flows,
                 std::span<const Role> roles) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  write_roles(out, flows, roles);
}

std::map<std::uint64_t, Role> read_roles(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open roles file " + file.string());
  std::string line;
  if (!std::getline(in, line) || csv::split(line) != std::vector<std::string_view>{"flow_id", "role"}) {
    throw SchemaMismatch(file.string() + ": expected header 'flow_id,role'");
  }
  std::map<std::uint64_t, Role> roles;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    auto id = fields.size() == 2 ? csv::parse_number<std::uint64_t>(fields[0]) : std::nullopt;
    auto role = fields.size() == 2 ? parse_role(fields[1]) : std::nullopt;
    if (!id || !role) throw ValueError(file.string() + ": line " + std::to_string(line_no) + ": bad role row");
    roles[*id] = *role;
  }
  return roles;
}

}  // namespace tclean::synth

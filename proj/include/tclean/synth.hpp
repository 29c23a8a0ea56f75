#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclean/flow.hpp"

namespace tclean::synth {

enum class Role : std::uint8_t { DataPlane, Heartbeat, Dns, BackgroundTls, Upload };
inline constexpr std::size_t kRoleCount = 5;

std::string_view to_string(Role role) noexcept;
/// Case-insensitive; also accepts snake_case ("data_plane").
std::optional<Role> parse_role(std::string_view text) noexcept;

struct LogNormal {
  double median = 1;
  double sigma = 0;

  double mean() const noexcept;
};

enum class PayloadTemplate : std::uint8_t { DnsQuery, TlsClientHello };

/// Sampling recipe for one role of one app. The dominant direction carries
/// `volume` wire bytes; the other direction carries volume * reverse_fraction.
struct RoleSpec {
  Role role = Role::DataPlane;
  bool download = true;  // dominant direction is server -> client
  LogNormal volume;
  LogNormal reverse_fraction;
  double packet_size_in = 1200;   // mean wire bytes per inbound packet
  double packet_size_out = 100;   // mean wire bytes per outbound packet
  double packet_size_jitter = 0;  // lognormal sigma applied per flow
  LogNormal duration_s;
  /// When set, duration is uniform in [long_lived_min_fraction, 1] x capture.
  std::optional<double> long_lived_min_fraction;
  /// Single request/response exchange (one packet each way).
  bool single_exchange = false;
  Transport transport = Transport::Tcp;
  std::uint16_t server_port = 443;
  PayloadTemplate payload = PayloadTemplate::TlsClientHello;
  std::vector<std::string> hostnames;  // SNI or DNS query names, picked uniformly

  /// Mean of the configured bytes_in distribution (download roles only).
  double mean_bytes_in() const noexcept;
  /// P(ratio > 0.9) implied by reverse_fraction for a download role.
  double probability_ratio_above(double threshold) const;
};

/// Built-in recipe for (role, app). DataPlane parameters vary with the app
/// index; the other roles are shared by all apps.
RoleSpec role_spec(Role role, std::size_t app_index, std::string_view app_label);

struct AppSpec {
  std::string label;
  std::array<std::size_t, kRoleCount> counts{};  // indexed by Role

  std::size_t total() const noexcept;
};

/// Text form:
///   seed 42
///   capture_duration_s 7200
///   app app_a
///   role DataPlane 1100
///   role Heartbeat 300
/// `role` lines apply to the most recent `app`; `#` starts a comment.
struct ScenarioSpec {
  std::vector<AppSpec> apps;
  double capture_duration_s = 7200;
  std::uint64_t seed = 42;

  /// Five apps (app_a .. app_e) with the role mix 55% DataPlane, 15%
  /// Heartbeat, 15% Dns, 10% BackgroundTls, 5% Upload.
  static ScenarioSpec standard_mix(std::size_t flows_per_app = 2000, std::uint64_t seed = 42);

  /// Throws InvalidSpec.
  void validate() const;

  static ScenarioSpec parse(std::string_view text);
  static ScenarioSpec read(const std::filesystem::path& file);
  std::string to_text() const;
};

struct LabeledFlows {
  std::vector<FlowRecord> flows;  // ordered by start time; flow_id = position
  std::vector<Role> roles;        // ground truth, parallel to flows
};

/// Deterministic in the spec. App i samples from
/// SplitMix64(derive_seed(seed, i)). Throws InvalidSpec.
LabeledFlows generate(const ScenarioSpec& spec);

/// The manual-cleaning stand-in: keeps exactly the DataPlane flows.
std::vector<FlowRecord> oracle_clean(std::span<const FlowRecord> flows, std::span<const Role> roles);

/// Ground-truth sidecar CSV `flow_id,role`.
void write_roles(std::ostream& out, std::span<const FlowRecord> flows, std::span<const Role> roles);
void write_roles(const std::filesystem::path& file, std::span<const FlowRecord> flows,
                 std::span<const Role> roles);
std::map<std::uint64_t, Role> read_roles(const std::filesystem::path& file);

/// Wire images used as payload prefixes.
Bytes make_dns_query(std::string_view qname, std::uint16_t id);
Bytes make_dns_response(std::string_view qname, std::uint16_t id);
Bytes make_client_hello(std::string_view sni, std::span<const std::uint8_t, 32> random);
Bytes make_server_hello(std::span<const std::uint8_t, 32> random);

}  // namespace tclean::synth

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclean/flow.hpp"
#include "tclean/net.hpp"

namespace tclean {

/// MAC/VLAN to app label. Text form, one entry per line:
///   mac aa:bb:cc:dd:ee:01 tiktok
///   vlan 100 bilibili
/// with `#` comments and blank lines ignored.
class TagMap {
 public:
  /// Throws ValueError if the key is already present.
  void add_mac(const MacAddress& mac, std::string label);
  void add_vlan(std::uint16_t vlan_id, std::string label);

  const std::string* find_mac(const MacAddress& mac) const;
  const std::string* find_vlan(std::uint16_t vlan_id) const;

  std::size_t size() const noexcept { return by_mac_.size() + by_vlan_.size(); }

  static TagMap parse(std::string_view text);
  static TagMap read(const std::filesystem::path& file);

 private:
  std::map<MacAddress, std::string> by_mac_;
  std::map<std::uint16_t, std::string> by_vlan_;
};

/// True if label can be stored in the flow-table CSV unquoted.
bool valid_label(std::string_view label) noexcept;

/// Labels flows from their first packet's VLAN (preferred) or source MAC.
/// Unmatched flows keep their current label. meta must parallel flows.
std::vector<FlowRecord> apply_tags(std::vector<FlowRecord> flows, const TagMap& tags,
                                   std::span<const FlowTagMeta> meta);

}  // namespace tclean

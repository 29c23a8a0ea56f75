#include "tclean/tags.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tclean/error.hpp"

namespace tclean {

bool valid_label(std::string_view label) noexcept {
  if (label.empty()) return false;
  for (char c : label) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r' || c == ' ' || c == '\t') return false;
  }
  return true;
}

void TagMap::add_mac(const MacAddress& mac, std::string label) {
  if (!valid_label(label)) throw ValueError("invalid label '" + label + "'");
  if (!by_mac_.emplace(mac, std::move(label)).second) {
    throw ValueError("duplicate tag for mac " + mac.to_string());
  }
}

void TagMap::add_vlan(std::uint16_t vlan_id, std::string label) {
  if (!valid_label(label)) throw ValueError("invalid label '" + label + "'");
  if (vlan_id > 4094) throw ValueError("vlan id out of range: " + std::to_string(vlan_id));
  if (!by_vlan_.emplace(vlan_id, std::move(label)).second) {
    throw ValueError("duplicate tag for vlan " + std::to_string(vlan_id));
  }
}

const std::string* TagMap::find_mac(const MacAddress& mac) const {
  auto it = by_mac_.find(mac);
  return it == by_mac_.end() ? nullptr : &it->second;
}

const std::string* TagMap::find_vlan(std::uint16_t vlan_id) const {
  auto it = by_vlan_.find(vlan_id);
  return it == by_vlan_.end() ? nullptr : &it->second;
}

TagMap TagMap::parse(std::string_view text) {
  TagMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind, key, label, extra;
    if (!(fields >> kind)) continue;
    if (!(fields >> key >> label) || (fields >> extra)) {
      throw ParseError(line_no, "expected '<mac|vlan> <key> <label>'");
    }
    try {
      if (kind == "mac") {
        auto mac = MacAddress::parse(key);
        if (!mac) throw ParseError(line_no, "bad mac address '" + key + "'");
        map.add_mac(*mac, label);
      } else if (kind == "vlan") {
        unsigned vlan = 0;
        auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), vlan);
        if (ec != std::errc{} || p != key.data() + key.size() || vlan > 4094) {
          throw ParseError(line_no, "bad vlan id '" + key + "'");
        }
        map.add_vlan(static_cast<std::uint16_t>(vlan), label);
      } else {
        throw ParseError(line_no, "unknown tag kind '" + kind + "'");
      }
    } catch (const ValueError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return map;
}

TagMap TagMap::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open tag map " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw e.in_file(file.string());
  }
}

std::vector<FlowRecord> apply_tags(std::vector<FlowRecord> flows, const TagMap& tags,
                                   std::span<const FlowTagMeta> meta) {
  if (meta.size() != flows.size()) throw ShapeMismatch("tag metadata does not match flows");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string* label = nullptr;
    if (meta[i].vlan_id) label = tags.find_vlan(*meta[i].vlan_id);
    if (!label) label = tags.find_mac(meta[i].client_mac);
    if (label) flows[i].app_label = *label;
  }
  return flows;
}

}  // namespace tclean

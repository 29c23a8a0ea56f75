#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tclean/cluster.hpp"
#include "tclean/dpi.hpp"
#include "tclean/forest.hpp"
#include "tclean/select.hpp"
#include "tclean/synth.hpp"

namespace tclean::cli {

struct CompareOptions {
  synth::ScenarioSpec scenario = synth::ScenarioSpec::standard_mix();
  select::SelectionPolicy policy = select::SelectionPolicy::download_only();
  dpi::Blocklist blocklist = dpi::Blocklist::defaults();
  std::vector<cluster::Algorithm> algorithms = {cluster::Algorithm::KMeans,
                                                cluster::Algorithm::Hierarchical};
  std::size_t k = 4;
  double train_frac = 0.75;
  std::uint64_t seed = 42;
  std::size_t n_trees = 100;
  bool skip_dpi = false;
  /// Also time every algorithm with the DPI stage switched off.
  bool time_without_dpi = true;
  std::size_t threads = 1;

  nlohmann::ordered_json to_json() const;
};

struct ArmResult {
  std::string arm;  // uncleaned, oracle, kmeans, hier
  std::size_t flows = 0;
  std::size_t train_flows = 0;
  std::size_t test_flows = 0;
  classify::Metrics metrics;
};

struct TimingRow {
  std::string algorithm;
  bool dpi = true;
  std::size_t flows = 0;
  select::StageTimings timings;
};

struct CompareReport {
  nlohmann::ordered_json config;
  std::vector<ArmResult> arms;
  std::vector<TimingRow> timings;
  /// Cleaning counts for each pipeline arm, keyed by arm name.
  std::vector<std::pair<std::string, select::CleanReport>> clean_reports;

  const ArmResult* arm(std::string_view name) const;
  /// Deterministic content: config, its hash, per-arm metrics and the
  /// accuracy loss against the oracle arm. No timings.
  nlohmann::ordered_json to_json() const;
  nlohmann::ordered_json timings_json() const;
  std::string table() const;
  std::string timings_table() const;
  std::string csv() const;
  std::string timings_csv() const;
};

CompareReport compare(const CompareOptions& options);

/// FNV-1a over the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::ordered_json& config);

/// Exit codes: 0 success, 1 validation error, 2 I/O error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tclean::cli

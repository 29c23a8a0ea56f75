#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tclean/cluster.hpp"
#include "tclean/dpi.hpp"
#include "tclean/features.hpp"
#include "tclean/flow.hpp"

namespace tclean::select {

enum class Action : std::uint8_t { Keep, Drop };
enum class Comparator : std::uint8_t { Less, LessEqual, Greater, GreaterEqual };

/// A literal, or the pNN percentile of the feature over the flows being
/// cleaned (nearest-rank).
struct Threshold {
  double value = 0;
  bool percentile = false;

  bool operator==(const Threshold&) const = default;
};

struct Predicate {
  Feature feature = Feature::Ratio;
  Comparator comparator = Comparator::Greater;
  Threshold threshold;

  bool operator==(const Predicate&) const = default;
};

/// Conjunction of predicates over a cluster's raw-space centroid.
struct Rule {
  Action action = Action::Keep;
  std::vector<Predicate> predicates;

  bool operator==(const Rule&) const = default;
};

/// Ordered rules, first match wins; clusters matching no rule get
/// default_action.
struct SelectionPolicy {
  std::vector<Rule> rules;
  Action default_action = Action::Drop;

  /// `keep ratio > 0.9`, default drop: keep download-dominated clusters.
  static SelectionPolicy download_only();
  /// `drop duration_s > p75, bytes_out < p25`, default keep: remove
  /// long-lived clusters that barely upload.
  static SelectionPolicy heartbeat_drop();

  bool operator==(const SelectionPolicy&) const = default;
};

/// Rule file grammar, one rule per line:
///   keep|drop <feature> <cmp> <number|pNN>[, <feature> <cmp> <number|pNN>]*
///   default keep|drop        (optional, must be the last rule line)
/// `#` starts a comment. Features: bytes_in bytes_out packets_in packets_out
/// duration_s ratio. Comparators: < <= > >= (also ≤ ≥).
/// Throws ParseError carrying the 1-based line number.
SelectionPolicy parse_rules(std::string_view text);
SelectionPolicy read_rules(const std::filesystem::path& file);
std::string to_string(const SelectionPolicy& policy);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (the
/// smallest for p = 0). values must be non-empty.
double percentile(std::vector<double> values, double p);

/// Ids of the clusters the policy keeps. raw_features holds the per-flow
/// raw clustering features used to resolve percentile thresholds.
std::set<std::size_t> evaluate(const SelectionPolicy& policy, const cluster::ClusterModel& model,
                               const FeatureMatrix& raw_features);

struct CleanOptions {
  cluster::Algorithm algorithm = cluster::Algorithm::KMeans;
  std::size_t k = 4;
  std::uint64_t seed = 42;
  cluster::Linkage linkage = cluster::Linkage::Ward;
  cluster::HierarchicalMethod hierarchical_method = cluster::HierarchicalMethod::NearestNeighborCache;
  cluster::KMeansOptions kmeans;
  bool skip_dpi = false;
  /// Cluster all apps together instead of one model per app.
  bool pooled = false;
  std::size_t threads = 1;
};

struct AppReport {
  std::string app_label;
  std::size_t input = 0;
  std::size_t dpi_discarded = 0;
  std::size_t clusters_formed = 0;
  std::size_t flows_kept = 0;
  std::size_t flows_dropped = 0;
  std::string status = "ok";  // or "AppTooSmall"

  bool operator==(const AppReport&) const = default;
};

/// Milliseconds per stage, summed over apps; total is wall clock.
struct StageTimings {
  double dpi_ms = 0;
  double features_ms = 0;
  double cluster_ms = 0;
  double select_ms = 0;
  double total_ms = 0;
};

struct CleanReport {
  std::vector<AppReport> apps;  // sorted by label
  StageTimings timings;

  AppReport totals() const;
  /// Counts under "apps" and "totals"; timings under "timings_ms" unless
  /// include_timings is false.
  nlohmann::ordered_json to_json(bool include_timings = true) const;
};

/// Clustering outcome for one group (an app, or "*" in pooled mode).
struct GroupClusters {
  std::string group;
  std::vector<std::uint64_t> flow_ids;  // rows of the model, in order
  cluster::ClusterModel model;
  std::set<std::size_t> kept_clusters;
};

struct CleanResult {
  std::vector<FlowRecord> cleaned;  // sorted by (app_label, flow_id)
  CleanReport report;
  std::vector<GroupClusters> groups;
  std::vector<dpi::DiscardedFlow> discarded;
};

/// DPI filter, feature extraction and standardization, clustering, then
/// cluster selection, per app label. Flows without a label are rejected
/// with ValueError. An app with fewer than max(k, 2) flows left after DPI
/// is skipped (status AppTooSmall, all its flows counted as dropped).
CleanResult clean(std::span<const FlowRecord> flows, const dpi::Blocklist& blocklist,
                  const SelectionPolicy& policy, const CleanOptions& options = {});

}  // namespace tclean::select

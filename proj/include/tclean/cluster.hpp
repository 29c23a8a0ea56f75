#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tclean/features.hpp"

namespace tclean::cluster {

enum class Algorithm : std::uint8_t { KMeans, Hierarchical };
enum class Linkage : std::uint8_t { Ward, Average, Complete };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(Linkage l) noexcept;
/// Accepts "kmeans" and "hier"/"hierarchical".
std::optional<Algorithm> parse_algorithm(std::string_view text) noexcept;
std::optional<Linkage> parse_linkage(std::string_view text) noexcept;

/// Cluster ids are canonical: cluster c is the c-th distinct cluster met
/// when scanning rows in order, so row 0 is always in cluster 0.
struct ClusterModel {
  Algorithm algorithm = Algorithm::KMeans;
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  FeatureMatrix centroids_std;  // k x d, in the clustered (standardized) space
  FeatureMatrix centroids_raw;  // k x d, de-standardized
  double sse = 0;
  std::uint64_t seed = 0;

  std::size_t iterations = 0;       // Lloyd iterations of the winning k-means run
  std::vector<double> sse_history;  // k-means: SSE after each Lloyd iteration
  std::vector<double> merge_costs;  // hierarchical: linkage distance of each merge

  std::vector<std::size_t> sizes() const;
};

struct KMeansOptions {
  std::size_t max_iter = 100;
  double tol = 1e-6;
  /// Independent k-means++ starts; the lowest SSE wins (earliest on ties).
  /// Start 0 uses the seed itself, start r uses derive_seed(seed, r).
  std::size_t restarts = 1;
};

/// k-means++ seeding followed by Lloyd iterations until the largest
/// centroid shift drops below tol. Nearest-centroid ties go to the lower id;
/// an empty cluster takes the point farthest from its own centroid.
/// Throws TooFewRows when rows < k, ValueError when k == 0.
ClusterModel kmeans(const FeatureMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

enum class HierarchicalMethod : std::uint8_t {
  /// Full O(n^2) pair scan per merge.
  Naive,
  /// Per-row cached nearest neighbour; same merge sequence as Naive.
  NearestNeighborCache,
};

/// Agglomerative clustering cut at k clusters. Ward uses Lance-Williams
/// updates on merge cost (increase in SSE); Average and Complete use
/// Euclidean distance. Ties go to the lexicographically smallest (i, j)
/// pair of current cluster slots, a merged cluster keeping the smaller slot.
ClusterModel hierarchical(const FeatureMatrix& matrix, std::size_t k,
                          Linkage linkage = Linkage::Ward,
                          HierarchicalMethod method = HierarchicalMethod::NearestNeighborCache);

/// Sum of squared distances from each row to its assigned centroid.
/// Throws ShapeMismatch on inconsistent shapes or out-of-range ids.
double sse(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
           const FeatureMatrix& centroids);

/// Per-cluster means of the rows; rows of empty clusters are zero.
FeatureMatrix centroids_of(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
                           std::size_t k);

inline constexpr std::string_view kClusterReportHeader =
    "cluster_id,size,bytes_in,bytes_out,packets_in,packets_out,duration_s,ratio";
inline constexpr std::string_view kAssignmentHeader = "flow_id,cluster_id";

/// Raw-space centroids, one row per cluster.
void write_cluster_report(std::ostream& out, const ClusterModel& model);
void write_assignments(std::ostream& out, std::span<const std::uint64_t> flow_ids,
                       std::span<const std::size_t> assignments);

}  // namespace tclean::cluster

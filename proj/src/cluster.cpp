#include "tclean/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tclean/csv.hpp"
#include "tclean/error.hpp"
#include "tclean/rng.hpp"

namespace tclean::cluster {

std::string_view to_string(Algorithm a) noexcept {
  return a == Algorithm::KMeans ? "kmeans" : "hier";
}

std::string_view to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::Ward: return "ward";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) noexcept {
  if (text == "kmeans" || text == "k-means") return Algorithm::KMeans;
  if (text == "hier" || text == "hierarchical") return Algorithm::Hierarchical;
  return std::nullopt;
}

std::optional<Linkage> parse_linkage(std::string_view text) noexcept {
  if (text == "ward") return Linkage::Ward;
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  return std::nullopt;
}

std::vector<std::size_t> ClusterModel::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (std::size_t a : assignments) ++out[a];
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_k(const FeatureMatrix& matrix, std::size_t k) {
  if (k == 0) throw ValueError("k must be at least 1");
  if (matrix.rows() < k) {
    throw TooFewRows("need at least k=" + std::to_string(k) + " rows, got " +
                     std::to_string(matrix.rows()));
  }
}

// Relabels clusters by first appearance; returns old -> new id map.
std::vector<std::size_t> canonical_relabel(std::vector<std::size_t>& assignments, std::size_t k) {
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> remap(k, kUnset);
  std::size_t next = 0;
  for (std::size_t& a : assignments) {
    if (remap[a] == kUnset) remap[a] = next++;
    a = remap[a];
  }
  return remap;
}

void finish_model(const FeatureMatrix& matrix, ClusterModel& model) {
  canonical_relabel(model.assignments, model.k);
  model.centroids_std = centroids_of(matrix, model.assignments, model.k);
  model.centroids_raw = FeatureMatrix(model.k, matrix.cols());
  for (std::size_t c = 0; c < model.k; ++c) {
    const auto raw = matrix.to_raw(model.centroids_std.row(c));
    for (std::size_t j = 0; j < matrix.cols(); ++j) model.centroids_raw(c, j) = raw[j];
  }
  model.sse = sse(matrix, model.assignments, model.centroids_std);
}

FeatureMatrix kmeans_plus_plus(const FeatureMatrix& m, std::size_t k, SplitMix64& rng) {
  const std::size_t n = m.rows();
  FeatureMatrix centers(k, m.cols());
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t c, std::size_t i) {
    chosen[i] = true;
    for (std::size_t j = 0; j < m.cols(); ++j) centers(c, j) = m(i, j);
  };

  take(0, rng.index(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(m.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0 && acc > target) {
          pick = i;
          break;
        }
      }
      // Rounding can leave the target just above the final sum.
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a center: first unchosen row.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    take(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(m.row(i), centers.row(c)));
    }
  }
  return centers;
}

ClusterModel lloyd(const FeatureMatrix& m, std::size_t k, std::uint64_t seed,
                   const KMeansOptions& options) {
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  SplitMix64 rng(seed);
  FeatureMatrix centers = kmeans_plus_plus(m, k, rng);

  ClusterModel model;
  model.algorithm = Algorithm::KMeans;
  model.k = k;
  model.seed = seed;
  model.assignments.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(m.row(i), centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = squared_distance(m.row(i), centers.row(c));
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      model.assignments[i] = best;
      dist[i] = best_d;
      ++counts[best];
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[model.assignments[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      --counts[model.assignments[far]];
      model.assignments[far] = c;
      counts[c] = 1;
      dist[far] = 0;
      for (std::size_t j = 0; j < d; ++j) centers(c, j) = m(far, j);
    }

    const FeatureMatrix updated = centroids_of(m, model.assignments, k);
    double shift = 0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(updated.row(c), centers.row(c))));
    }
    centers = updated;
    model.iterations = iter + 1;
    model.sse_history.push_back(sse(m, model.assignments, centers));
    if (shift < options.tol) break;
  }
  return model;
}

// Condensed upper-triangle distance store for i < j.
class PairDistances {
 public:
  explicit PairDistances(std::size_t n) : n_(n), d_(n * (n - 1) / 2) {}

  double& at(std::size_t i, std::size_t j) noexcept {
    if (i > j) std::swap(i, j);
    return d_[i * (2 * n_ - i - 1) / 2 + (j - i - 1)];
  }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

class Agglomerator {
 public:
  Agglomerator(const FeatureMatrix& m, Linkage linkage)
      : n_(m.rows()), linkage_(linkage), dist_(n_), size_(n_, 1), active_(n_, true), members_(n_) {
    for (std::size_t i = 0; i < n_; ++i) members_[i] = {i};
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double sq = squared_distance(m.row(i), m.row(j));
        // Ward: merge cost of two singletons is half their squared distance.
        dist_.at(i, j) = linkage == Linkage::Ward ? 0.5 * sq : std::sqrt(sq);
      }
    }
  }

  void run(std::size_t k, HierarchicalMethod method, std::vector<double>& costs) {
    if (method == HierarchicalMethod::NearestNeighborCache) init_cache();
    for (std::size_t merges = n_ - k; merges > 0; --merges) {
      const auto [i, j] = method == HierarchicalMethod::Naive ? naive_min() : cached_min();
      costs.push_back(dist_.at(i, j));
      merge(i, j);
      if (method == HierarchicalMethod::NearestNeighborCache) refresh_cache(i, j);
    }
  }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out(n_);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n_; ++s) {
      if (!active_[s]) continue;
      for (std::size_t p : members_[s]) out[p] = next;
      ++next;
    }
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::pair<std::size_t, std::size_t> naive_min() {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> arg{kNone, kNone};
    for (std::size_t i = 0; i < n_; ++i) {
      if (!active_[i]) continue;
      for (std::size_t j = i + 1; j < n_; ++j) {
        if (active_[j] && dist_.at(i, j) < best) {
          best = dist_.at(i, j);
          arg = {i, j};
        }
      }
    }
    return arg;
  }

  void recompute_row(std::size_t i) {
    nn_[i] = kNone;
    nn_dist_[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (active_[j] && dist_.at(i, j) < nn_dist_[i]) {
        nn_dist_[i] = dist_.at(i, j);
        nn_[i] = j;
      }
    }
  }

  void init_cache() {
    nn_.assign(n_, kNone);
    nn_dist_.assign(n_, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n_; ++i) recompute_row(i);
  }

  std::pair<std::size_t, std::size_t> cached_min() const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = kNone;
    for (std::size_t i = 0; i < n_; ++i) {
      if (active_[i] && nn_[i] != kNone && nn_dist_[i] < best) {
        best = nn_dist_[i];
        arg = i;
      }
    }
    return {arg, nn_[arg]};
  }

  void refresh_cache(std::size_t i, std::size_t j) {
    recompute_row(i);
    for (std::size_t m = 0; m < j; ++m) {
      if (!active_[m] || m == i) continue;
      if (nn_[m] == i || nn_[m] == j) {
        recompute_row(m);
      } else if (m < i) {
        const double d = dist_.at(m, i);
        if (d < nn_dist_[m] || (d == nn_dist_[m] && i < nn_[m])) {
          nn_dist_[m] = d;
          nn_[m] = i;
        }
      }
    }
  }

  // Merges slot j into slot i (i < j) with Lance-Williams updates.
  void merge(std::size_t i, std::size_t j) {
    const double ni = static_cast<double>(size_[i]);
    const double nj = static_cast<double>(size_[j]);
    const double dij = dist_.at(i, j);
    for (std::size_t m = 0; m < n_; ++m) {
      if (!active_[m] || m == i || m == j) continue;
      const double dim = dist_.at(i, m);
      const double djm = dist_.at(j, m);
      double updated = 0;
      switch (linkage_) {
        case Linkage::Ward: {
          const double nm = static_cast<double>(size_[m]);
          updated = ((ni + nm) * dim + (nj + nm) * djm - nm * dij) / (ni + nj + nm);
          break;
        }
        case Linkage::Average:
          updated = (ni * dim + nj * djm) / (ni + nj);
          break;
        case Linkage::Complete:
          updated = std::max(dim, djm);
          break;
      }
      dist_.at(i, m) = updated;
    }
    size_[i] += size_[j];
    active_[j] = false;
    members_[i].insert(members_[i].end(), members_[j].begin(), members_[j].end());
    members_[j].clear();
  }

  std::size_t n_;
  Linkage linkage_;
  PairDistances dist_;
  std::vector<std::size_t> size_;
  std::vector<bool> active_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> nn_;
  std::vector<double> nn_dist_;
};

}  // namespace

FeatureMatrix centroids_of(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
                           std::size_t k) {
  if (assignments.size() != matrix.rows()) throw ShapeMismatch("assignments do not match rows");
  FeatureMatrix sums(k, matrix.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const std::size_t c = assignments[r];
    if (c >= k) throw ShapeMismatch("cluster id out of range");
    ++counts[c];
    for (std::size_t j = 0; j < matrix.cols(); ++j) sums(c, j) += matrix(r, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < matrix.cols(); ++j) sums(c, j) /= static_cast<double>(counts[c]);
  }
  return sums;
}

double sse(const FeatureMatrix& matrix, std::span<const std::size_t> assignments,
           const FeatureMatrix& centroids) {
  if (assignments.size() != matrix.rows()) throw ShapeMismatch("assignments do not match rows");
  if (centroids.cols() != matrix.cols()) throw ShapeMismatch("centroid dimension mismatch");
  double total = 0;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (assignments[r] >= centroids.rows()) throw ShapeMismatch("cluster id out of range");
    total += squared_distance(matrix.row(r), centroids.row(assignments[r]));
  }
  return total;
}

ClusterModel kmeans(const FeatureMatrix& matrix, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  check_k(matrix, k);
  ClusterModel best;
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    const std::uint64_t run_seed = r == 0 ? seed : derive_seed(seed, r);
    ClusterModel candidate = lloyd(matrix, k, run_seed, options);
    finish_model(matrix, candidate);
    if (r == 0 || candidate.sse < best.sse) best = std::move(candidate);
  }
  best.seed = seed;
  return best;
}

ClusterModel hierarchical(const FeatureMatrix& matrix, std::size_t k, Linkage linkage,
                          HierarchicalMethod method) {
  check_k(matrix, k);
  ClusterModel model;
  model.algorithm = Algorithm::Hierarchical;
  model.k = k;
  if (matrix.rows() > 1) {
    Agglomerator agg(matrix, linkage);
    agg.run(k, method, model.merge_costs);
    model.assignments = agg.labels();
  } else {
    model.assignments.assign(matrix.rows(), 0);
  }
  finish_model(matrix, model);
  return model;
}

void write_cluster_report(std::ostream& out, const ClusterModel& model) {
  out << kClusterReportHeader << '\n';
  const auto sizes = model.sizes();
  for (std::size_t c = 0; c < model.k; ++c) {
    out << c << ',' << sizes[c];
    for (double v : model.centroids_raw.row(c)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_assignments(std::ostream& out, std::span<const std::uint64_t> flow_ids,
                       std::span<const std::size_t> assignments) {
  if (flow_ids.size() != assignments.size()) throw ShapeMismatch("assignments do not match flows");
  out << kAssignmentHeader << '\n';
  for (std::size_t i = 0; i < flow_ids.size(); ++i) out << flow_ids[i] << ',' << assignments[i] << '\n';
}

}  // namespace tclean::cluster

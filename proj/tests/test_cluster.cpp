#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "tclean/cluster.hpp"
#include "tclean/error.hpp"
#include "tclean/rng.hpp"

using namespace tclean;
using namespace tclean::cluster;

namespace {

double partition_sse(const FeatureMatrix& m, const std::vector<std::size_t>& labels, std::size_t k) {
  double total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> mean(m.cols(), 0.0);
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (labels[r] != c) continue;
      ++n;
      for (std::size_t d = 0; d < m.cols(); ++d) mean[d] += m(r, d);
    }
    if (n == 0) return std::numeric_limits<double>::infinity();
    for (auto& v : mean) v /= static_cast<double>(n);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (labels[r] != c) continue;
      for (std::size_t d = 0; d < m.cols(); ++d) total += (m(r, d) - mean[d]) * (m(r, d) - mean[d]);
    }
  }
  return total;
}

// Enumerates every assignment in canonical (first-appearance) form.
struct BruteForce {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels;
  std::size_t ties = 0;

  void search(const FeatureMatrix& m, std::size_t k, std::vector<std::size_t>& labels, std::size_t used) {
    const std::size_t i = labels.size();
    if (i == m.rows()) {
      if (used != k) return;
      const double s = partition_sse(m, labels, k);
      if (s < best - 1e-9) {
        best = s;
        best_labels = labels;
        ties = 0;
      } else if (std::abs(s - best) <= 1e-9) {
        ++ties;
      }
      return;
    }
    for (std::size_t c = 0; c < std::min(used + 1, k); ++c) {
      labels.push_back(c);
      search(m, k, labels, std::max(used, c + 1));
      labels.pop_back();
    }
  }
};

std::vector<std::size_t> canonical(const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out;
  for (auto l : labels) out.push_back(remap.emplace(l, remap.size()).first->second);
  return out;
}

FeatureMatrix random_matrix(SplitMix64& rng, std::size_t n, std::size_t d) {
  FeatureMatrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.normal() * 3 + static_cast<double>(rng.index(3)) * 4;
  }
  return m;
}

ClusterModel best_of_kmeans(const FeatureMatrix& m, std::size_t k, std::size_t seeds) {
  ClusterModel best;
  best.sse = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < seeds; ++s) {
    auto model = kmeans(m, k, s);
    if (model.sse < best.sse) best = std::move(model);
  }
  return best;
}

}  // namespace

TEST_CASE("best-of-10 kmeans finds the brute-force optimum") {
  SplitMix64 rng(77);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 60; ++trial) {
    const std::size_t n = 4 + rng.index(5);
    const std::size_t k = 2 + rng.index(2);
    const auto m = random_matrix(rng, n, 2);
    BruteForce bf;
    std::vector<std::size_t> labels;
    bf.search(m, k, labels, 0);
    if (bf.ties != 0) continue;
    ++checked;
    const auto km = best_of_kmeans(m, k, 10);
    CAPTURE(trial);
    CHECK(canonical(km.assignments) == bf.best_labels);
    CHECK(km.sse == doctest::Approx(bf.best).epsilon(1e-9));
  }
  CHECK(checked >= 30);
}

TEST_CASE("ward matches brute force on well-separated fixtures") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.index(2);
    const std::size_t n = 4 + rng.index(5);
    FeatureMatrix m(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
      const double cx = static_cast<double>(r % k) * 100;
      m(r, 0) = cx + rng.normal();
      m(r, 1) = rng.normal();
    }
    BruteForce bf;
    std::vector<std::size_t> labels;
    bf.search(m, k, labels, 0);
    REQUIRE(bf.ties == 0);
    CHECK(canonical(hierarchical(m, k, Linkage::Ward).assignments) == bf.best_labels);
    CHECK(canonical(best_of_kmeans(m, k, 10).assignments) == bf.best_labels);
  }
}

TEST_CASE("ward merge of two singletons costs half the squared distance") {
  FeatureMatrix m(3, 1, {0.0, 2.0, 10.0});
  const auto model = hierarchical(m, 1, Linkage::Ward);
  REQUIRE(model.merge_costs.size() == 2);
  CHECK(model.merge_costs[0] == 2.0);
  // {0,2} (mean 1) with {10}: 2*1/3 * 81 = 54
  CHECK(model.merge_costs[1] == doctest::Approx(54.0));
}

TEST_CASE("ward merge costs never decrease") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_matrix(rng, 60, 4);
    const auto model = hierarchical(m, 1, Linkage::Ward);
    for (std::size_t i = 1; i < model.merge_costs.size(); ++i) {
      CHECK(model.merge_costs[i] >= model.merge_costs[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("naive and cached hierarchical agree") {
  SplitMix64 rng(21);
  for (auto linkage : {Linkage::Ward, Linkage::Average, Linkage::Complete}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto m = random_matrix(rng, 80, 3);
      // Integer grids create many exact ties.
      if (trial % 2 == 1) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
          for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = std::round(m(r, c) / 3);
        }
      }
      for (std::size_t k : {1, 3, 7}) {
        const auto a = hierarchical(m, k, linkage, HierarchicalMethod::Naive);
        const auto b = hierarchical(m, k, linkage, HierarchicalMethod::NearestNeighborCache);
        CHECK(a.assignments == b.assignments);
        CHECK(a.merge_costs == b.merge_costs);
      }
    }
  }
}

TEST_CASE("lloyd sse never increases") {
  SplitMix64 rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_matrix(rng, 200, 6);
    const auto model = kmeans(m, 5, rng.next());
    for (std::size_t i = 1; i < model.sse_history.size(); ++i) {
      CHECK(model.sse_history[i] <= model.sse_history[i - 1] + 1e-9);
    }
    CHECK(model.sse == doctest::Approx(sse(m, model.assignments, model.centroids_std)));
  }
}

TEST_CASE("kmeans is deterministic and restarts never hurt") {
  SplitMix64 rng(4);
  const auto m = random_matrix(rng, 120, 3);
  const auto a = kmeans(m, 4, 42);
  const auto b = kmeans(m, 4, 42);
  CHECK(a.assignments == b.assignments);
  CHECK(a.sse == b.sse);
  KMeansOptions o;
  o.restarts = 5;
  CHECK(kmeans(m, 4, 42, o).sse <= a.sse);
}

TEST_CASE("cluster ids appear in first-seen order") {
  SplitMix64 rng(6);
  const auto m = random_matrix(rng, 50, 2);
  for (const auto& model : {kmeans(m, 4, 1), hierarchical(m, 4)}) {
    CHECK(model.assignments == canonical(model.assignments));
    const auto sizes = model.sizes();
    CHECK(std::count(sizes.begin(), sizes.end(), 0u) == 0);
  }
}

TEST_CASE("duplicate points still fill every cluster") {
  FeatureMatrix m(6, 1, {1, 1, 1, 1, 1, 5});
  const auto model = kmeans(m, 3, 0);
  const auto sizes = model.sizes();
  CHECK(std::count(sizes.begin(), sizes.end(), 0u) == 0);
}

TEST_CASE("raw centroids are destandardized") {
  FeatureMatrix raw(4, 1, {0.0, 2.0, 10.0, 12.0});
  const auto z = standardize(raw);
  const auto model = kmeans(z, 2, 3);
  REQUIRE(model.centroids_raw.rows() == 2);
  std::vector<double> c = {model.centroids_raw(0, 0), model.centroids_raw(1, 0)};
  std::sort(c.begin(), c.end());
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(11.0));
}

TEST_CASE("argument errors") {
  FeatureMatrix m(2, 1, {0.0, 1.0});
  CHECK_THROWS_AS(kmeans(m, 3, 0), TooFewRows);
  CHECK_THROWS_AS(kmeans(m, 0, 0), ValueError);
  std::vector<std::size_t> bad = {0, 5};
  CHECK_THROWS_AS(sse(m, bad, FeatureMatrix(1, 1)), ShapeMismatch);
}

TEST_CASE("ward is greedy: a fixture where it misses the optimum") {
  // Ward merges {-2.677, -4.102} (cost 1.015), then {22.197, 24.530}, then
  // joins the pair with -6.870 (8.07) rather than 0.137 (8.29). The optimum
  // instead pairs 0.137 with -2.677 and -6.870 with -4.102.
  FeatureMatrix m(6, 1, {0.137, -6.870, 24.530, 22.197, -2.677, -4.102});
  const auto ward = hierarchical(m, 3, Linkage::Ward);
  CHECK(ward.assignments == std::vector<std::size_t>{0, 1, 2, 2, 1, 1});
  BruteForce bf;
  std::vector<std::size_t> labels;
  bf.search(m, 3, labels, 0);
  CHECK(bf.best_labels == std::vector<std::size_t>{0, 1, 2, 2, 0, 1});
  CHECK(ward.sse > bf.best + 1);
  CHECK(canonical(best_of_kmeans(m, 3, 10).assignments) == bf.best_labels);
}

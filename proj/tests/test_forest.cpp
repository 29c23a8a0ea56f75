#include <algorithm>
#include <limits>
#include <map>

#include "doctest.h"
#include "tclean/error.hpp"
#include "tclean/forest.hpp"
#include "tclean/rng.hpp"

using namespace tclean;
using namespace tclean::classify;

namespace {

std::vector<FlowRecord> labelled(const std::map<std::string, std::size_t>& counts, std::uint64_t seed = 1) {
  SplitMix64 rng(seed);
  std::vector<FlowRecord> flows;
  std::size_t app = 0;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      FlowRecord f;
      f.flow_id = flows.size();
      f.app_label = label;
      f.packets_in = 10 + app * 10 + rng.index(5);
      f.packets_out = 5 + rng.index(3);
      f.bytes_in = f.packets_in * (500 + 300 * app) + rng.index(200);
      f.bytes_out = f.packets_out * 80;
      f.header_bytes_total = (f.packets_in + f.packets_out) * 66;
      f.payload_bytes_total = f.bytes_in + f.bytes_out - f.header_bytes_total;
      f.last_ts_us = static_cast<std::int64_t>(1'000'000 * (1 + app + rng.index(3)));
      flows.push_back(f);
    }
    ++app;
  }
  // Interleave so input order is not grouped by label.
  for (std::size_t i = flows.size() - 1; i > 0; --i) std::swap(flows[i], flows[rng.index(i + 1)]);
  return flows;
}

double gini_score(const std::vector<std::size_t>& y, std::size_t classes) {
  std::vector<double> c(classes, 0);
  for (auto v : y) c[v] += 1;
  double g = 1;
  for (double v : c) g -= (v / static_cast<double>(y.size())) * (v / static_cast<double>(y.size()));
  return g;
}

}  // namespace

TEST_CASE("stratified split sizes and order") {
  const auto flows = labelled({{"a", 10}, {"b", 7}, {"c", 4}});
  const auto s = split(flows, 0.75, 42);
  std::map<std::string, std::size_t> train, test;
  for (const auto& f : s.train) ++train[*f.app_label];
  for (const auto& f : s.test) ++test[*f.app_label];
  // round-half-up(n * 0.75): 10 -> 8, 7 -> 5, 4 -> 3
  CHECK(train["a"] == 8);
  CHECK(train["b"] == 5);
  CHECK(train["c"] == 3);
  CHECK(test["a"] == 2);
  CHECK(test["b"] == 2);
  CHECK(test["c"] == 1);
  auto position = [&](const FlowRecord& f) {
    return std::find(flows.begin(), flows.end(), f) - flows.begin();
  };
  for (const auto* half : {&s.train, &s.test}) {
    for (std::size_t i = 1; i < half->size(); ++i) CHECK(position((*half)[i - 1]) < position((*half)[i]));
  }
  const auto again = split(flows, 0.75, 42);
  CHECK(again.train == s.train);
  CHECK_THROWS_AS(split(labelled({{"a", 10}, {"b", 3}}), 0.75, 1), LabelTooSmall);
}

TEST_CASE("root split minimizes weighted gini over all thresholds") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12, d = 3, classes = 3;
    FeatureMatrix x(n, d);
    std::vector<std::size_t> y(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) x(r, c) = static_cast<double>(rng.index(6));
      y[r] = rng.index(classes);
    }
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    TreeOptions o;
    o.max_depth = 1;
    o.min_leaf = 1;
    o.features_per_split = 0;
    SplitMix64 tree_rng(1);
    const auto tree = DecisionTree::fit(x, y, classes, rows, o, tree_rng);

    double best = gini_score(y, classes);
    for (std::size_t f = 0; f < d; ++f) {
      for (double t = 0; t < 6; t += 1) {
        std::vector<std::size_t> l, r;
        for (std::size_t i = 0; i < n; ++i) (x(i, f) <= t ? l : r).push_back(y[i]);
        if (l.empty() || r.empty()) continue;
        const double w = (static_cast<double>(l.size()) * gini_score(l, classes) +
                          static_cast<double>(r.size()) * gini_score(r, classes)) / static_cast<double>(n);
        best = std::min(best, w);
      }
    }
    const auto& root = tree.nodes()[0];
    if (root.is_leaf()) {
      CHECK(best == doctest::Approx(gini_score(y, classes)));
      continue;
    }
    std::vector<std::size_t> l, r;
    for (std::size_t i = 0; i < n; ++i) {
      (x(i, static_cast<std::size_t>(root.feature)) <= root.threshold ? l : r).push_back(y[i]);
    }
    const double got = (static_cast<double>(l.size()) * gini_score(l, classes) +
                        static_cast<double>(r.size()) * gini_score(r, classes)) / static_cast<double>(n);
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("separable data is learned exactly") {
  const auto flows = labelled({{"a", 40}, {"b", 40}, {"c", 40}});
  ForestOptions o;
  o.n_trees = 15;
  const auto model = ForestModel::train(flows, o);
  const auto m = evaluate(model, flows);
  CHECK(m.accuracy > 0.95);
}

TEST_CASE("a one-tree forest without bootstrap is its tree") {
  const auto flows = labelled({{"a", 30}, {"b", 30}});
  ForestOptions o;
  o.n_trees = 1;
  o.bootstrap = false;
  o.seed = 9;
  const auto model = ForestModel::train(flows, o);
  const auto data = Dataset::from_flows(flows);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  SplitMix64 rng(derive_seed(9, 0));
  const auto tree = DecisionTree::fit(data.x, data.y, 2, rows, o.tree, rng);
  CHECK(model.trees()[0] == tree);
}

TEST_CASE("forest is deterministic across thread counts and json") {
  const auto flows = labelled({{"a", 25}, {"b", 25}, {"c", 25}}, 3);
  ForestOptions one;
  one.n_trees = 12;
  ForestOptions four = one;
  four.threads = 4;
  const auto a = ForestModel::train(flows, one);
  const auto b = ForestModel::train(flows, four);
  CHECK(a.to_json() == b.to_json());
  const auto back = ForestModel::from_json(a.to_json());
  CHECK(back.to_json() == a.to_json());
  CHECK(back.predict(std::span<const FlowRecord>(flows)) == a.predict(std::span<const FlowRecord>(flows)));
}

TEST_CASE("training needs two classes") {
  CHECK_THROWS_AS(ForestModel::train(labelled({{"a", 10}})), SingleClass);
}

TEST_CASE("metrics on a hand confusion matrix") {
  std::vector<std::string> actual, predicted;
  auto add = [&](const char* a, const char* p, int n) {
    for (int i = 0; i < n; ++i) {
      actual.emplace_back(a);
      predicted.emplace_back(p);
    }
  };
  add("x", "x", 8);
  add("x", "y", 2);
  add("y", "x", 3);
  add("y", "y", 7);
  const auto m = score(actual, predicted);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.macro_precision == doctest::Approx((8.0 / 11 + 7.0 / 9) / 2));
  CHECK(m.macro_recall == doctest::Approx(0.75));
  CHECK(m.confusion == std::vector<std::vector<std::size_t>>{{8, 2}, {3, 7}});
  CHECK_THROWS_AS(score({}, {}), EmptyTest);
}

TEST_CASE("macro averages skip labels absent from the truth") {
  const std::vector<std::string> actual = {"a", "a", "b"};
  const std::vector<std::string> predicted = {"a", "z", "b"};
  const auto m = score(actual, predicted);
  CHECK(m.labels == std::vector<std::string>{"a", "b", "z"});
  CHECK(m.macro_recall == doctest::Approx((0.5 + 1.0) / 2));
  CHECK(m.macro_precision == doctest::Approx(1.0));
}

#include "tclean/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tclean/error.hpp"
#include "tclean/parallel.hpp"

namespace tclean::classify {

Dataset Dataset::from_flows(std::span<const FlowRecord> flows, std::span<const std::string> classes) {
  Dataset d;
  if (classes.empty()) {
    std::set<std::string> seen;
    for (const FlowRecord& f : flows) {
      if (!f.app_label) throw ValueError("flow " + std::to_string(f.flow_id) + " has no app label");
      seen.insert(*f.app_label);
    }
    d.labels.assign(seen.begin(), seen.end());
  } else {
    d.labels.assign(classes.begin(), classes.end());
  }
  d.x = FeatureMatrix(flows.size(), kAllFeatures);
  d.y.resize(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const FlowRecord& f = flows[i];
    if (!f.app_label) throw ValueError("flow " + std::to_string(f.flow_id) + " has no app label");
    auto it = std::lower_bound(d.labels.begin(), d.labels.end(), *f.app_label);
    if (it == d.labels.end() || *it != *f.app_label) {
      throw ValueError("flow " + std::to_string(f.flow_id) + ": unknown label " + *f.app_label);
    }
    d.y[i] = static_cast<std::size_t>(it - d.labels.begin());
    const auto row = extract(f).all();
    for (std::size_t c = 0; c < kAllFeatures; ++c) d.x(i, c) = row[c];
  }
  return d;
}

TrainTestSplit split(std::span<const FlowRecord> flows, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0 && train_frac < 1)) throw ValueError("train_frac must be in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (!flows[i].app_label) {
      throw ValueError("flow " + std::to_string(flows[i].flow_id) + " has no app label");
    }
    by_label[*flows[i].app_label].push_back(i);
  }
  std::vector<bool> in_train(flows.size(), false);
  SplitMix64 rng(seed);
  for (auto& [label, idx] : by_label) {
    if (idx.size() < 4) {
      throw LabelTooSmall("label '" + label + "' has " + std::to_string(idx.size()) +
                          " flows; at least 4 needed");
    }
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * train_frac + 0.5));
    for (std::size_t i = 0; i < n_train; ++i) in_train[idx[i]] = true;
  }
  TrainTestSplit out;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(flows[i]);
  }
  return out;
}

namespace {

std::size_t argmax(std::span<const std::uint32_t> counts) {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double score = 0;  // sum over children of (sum of squared class counts / child size)
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
              const TreeOptions& options, SplitMix64& rng)
      : x_(x), y_(y), n_classes_(n_classes), options_(options), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = end - begin;
    std::vector<std::uint32_t> counts(n_classes_, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[y_[rows_[i]]];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

    if (pure || depth >= options_.max_depth || n < 2 * options_.min_leaf) {
      nodes_[id].histogram = std::move(counts);
      return id;
    }
    const SplitChoice choice = find_split(begin, end, counts);
    if (choice.feature < 0) {
      nodes_[id].histogram = std::move(counts);
      return id;
    }
    const auto f = static_cast<std::size_t>(choice.feature);
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return x_(r, f) <= choice.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
    const std::uint32_t left = grow(begin, split_at, depth + 1);
    const std::uint32_t right = grow(split_at, end, depth + 1);
    nodes_[id].feature = choice.feature;
    nodes_[id].threshold = choice.threshold;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  SplitChoice find_split(std::size_t begin, std::size_t end,
                         const std::vector<std::uint32_t>& counts) {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t tried = d;
    if (options_.features_per_split != 0 && options_.features_per_split < d) {
      for (std::size_t i = 0; i < d - 1; ++i) std::swap(order[i], order[i + rng_.index(d - i)]);
      tried = options_.features_per_split;
    }

    double parent = 0;
    for (auto c : counts) parent += static_cast<double>(c) * c;
    parent /= static_cast<double>(end - begin);
    const double min_score = parent * (1 + 1e-12);

    SplitChoice best;
    best.score = min_score;
    for (std::size_t k = 0; k < d; ++k) {
      if (k == tried && best.feature >= 0) break;
      scan_feature(order[k], begin, end, counts, best);
    }
    return best;
  }

  void scan_feature(std::size_t f, std::size_t begin, std::size_t end,
                    const std::vector<std::uint32_t>& counts, SplitChoice& best) {
    scratch_.clear();
    for (std::size_t i = begin; i < end; ++i) scratch_.emplace_back(x_(rows_[i], f), y_[rows_[i]]);
    std::sort(scratch_.begin(), scratch_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::size_t n = scratch_.size();
    left_.assign(n_classes_, 0);
    std::vector<double> right(counts.begin(), counts.end());
    double sq_left = 0;
    double sq_right = 0;
    for (double c : right) sq_right += c * c;

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t c = scratch_[i].second;
      sq_left += 2 * left_[c] + 1;
      sq_right -= 2 * right[c] - 1;
      left_[c] += 1;
      right[c] -= 1;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < options_.min_leaf) continue;
      if (n_right < options_.min_leaf) break;
      const double lo = scratch_[i].first;
      const double hi = scratch_[i + 1].first;
      if (lo == hi) continue;
      const double score = sq_left / static_cast<double>(n_left) + sq_right / static_cast<double>(n_right);
      if (score > best.score) {
        double threshold = lo + (hi - lo) / 2;
        if (!(threshold < hi)) threshold = lo;
        best = {static_cast<int>(f), threshold, score};
      }
    }
  }

  const FeatureMatrix& x_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  const TreeOptions& options_;
  SplitMix64& rng_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, std::size_t>> scratch_;
  std::vector<double> left_;
};

}  // namespace

DecisionTree DecisionTree::fit(const FeatureMatrix& x, std::span<const std::size_t> y,
                               std::size_t n_classes, std::span<const std::size_t> rows,
                               const TreeOptions& options, SplitMix64& rng) {
  if (rows.empty()) throw ValueError("cannot fit a tree on zero rows");
  if (options.min_leaf == 0) throw ValueError("min_leaf must be at least 1");
  DecisionTree tree;
  tree.nodes_ = TreeBuilder(x, y, n_classes, options, rng)
                    .build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return tree;
}

std::size_t DecisionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return argmax(nodes_[i].histogram);
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : nodes_) {
    if (n.is_leaf()) {
      nodes.push_back({{"leaf", n.histogram}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return nodes;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j, std::size_t n_classes) {
  DecisionTree tree;
  for (const auto& node : j) {
    TreeNode n;
    if (node.contains("leaf")) {
      n.histogram = node.at("leaf").get<std::vector<std::uint32_t>>();
      if (n.histogram.size() != n_classes) throw ValueError("leaf histogram has wrong class count");
    } else {
      n.feature = node.at("feature").get<int>();
      n.threshold = node.at("threshold").get<double>();
      n.left = node.at("left").get<std::uint32_t>();
      n.right = node.at("right").get<std::uint32_t>();
      if (n.feature < 0 || n.feature >= static_cast<int>(kAllFeatures)) {
        throw ValueError("tree node feature out of range");
      }
    }
    tree.nodes_.push_back(std::move(n));
  }
  if (tree.nodes_.empty()) throw ValueError("empty tree");
  for (const TreeNode& n : tree.nodes_) {
    if (!n.is_leaf() && (n.left >= tree.nodes_.size() || n.right >= tree.nodes_.size())) {
      throw ValueError("tree node child out of range");
    }
  }
  return tree;
}

ForestModel ForestModel::train(const Dataset& data, const ForestOptions& options) {
  std::set<std::size_t> present(data.y.begin(), data.y.end());
  if (present.size() < 2) throw SingleClass("training set needs at least two classes");
  if (options.n_trees == 0) throw ValueError("n_trees must be at least 1");

  ForestModel model;
  model.labels_ = data.labels;
  model.options_ = options;
  model.trees_.resize(options.n_trees);
  const std::size_t n = data.size();
  parallel_for(options.n_trees, options.threads, [&](std::size_t t) {
    SplitMix64 rng(derive_seed(options.seed, t));
    std::vector<std::size_t> rows(n);
    if (options.bootstrap) {
      for (std::size_t& r : rows) r = rng.index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees_[t] = DecisionTree::fit(data.x, data.y, data.labels.size(), rows, options.tree, rng);
  });
  return model;
}

ForestModel ForestModel::train(std::span<const FlowRecord> flows, const ForestOptions& options) {
  return train(Dataset::from_flows(flows), options);
}

std::size_t ForestModel::predict_index(std::span<const double> row) const {
  std::vector<std::uint32_t> votes(labels_.size(), 0);
  for (const DecisionTree& t : trees_) ++votes[t.predict(row)];
  return argmax(votes);
}

const std::string& ForestModel::predict(std::span<const double> row) const {
  return labels_[predict_index(row)];
}

std::vector<std::string> ForestModel::predict(std::span<const FlowRecord> flows) const {
  std::vector<std::string> out;
  out.reserve(flows.size());
  for (const FlowRecord& f : flows) {
    const auto row = extract(f).all();
    out.push_back(predict(row));
  }
  return out;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& t : trees_) trees.push_back(t.to_json());
  return {{"format", "tclean-forest-1"},
          {"labels", labels_},
          {"features", {"bytes_in", "bytes_out", "packets_in", "packets_out", "duration_s", "ratio",
                        "mean_header_size", "mean_payload_size"}},
          {"n_trees", options_.n_trees},
          {"max_depth", options_.tree.max_depth},
          {"min_leaf", options_.tree.min_leaf},
          {"features_per_split", options_.tree.features_per_split},
          {"bootstrap", options_.bootstrap},
          {"seed", options_.seed},
          {"trees", std::move(trees)}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "tclean-forest-1") throw ValueError("unknown model format");
    ForestModel m;
    m.labels_ = j.at("labels").get<std::vector<std::string>>();
    if (!std::is_sorted(m.labels_.begin(), m.labels_.end())) throw ValueError("model labels not sorted");
    m.options_.n_trees = j.at("n_trees").get<std::size_t>();
    m.options_.tree.max_depth = j.at("max_depth").get<std::size_t>();
    m.options_.tree.min_leaf = j.at("min_leaf").get<std::size_t>();
    m.options_.tree.features_per_split = j.at("features_per_split").get<std::size_t>();
    m.options_.bootstrap = j.at("bootstrap").get<bool>();
    m.options_.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) m.trees_.push_back(DecisionTree::from_json(t, m.labels_.size()));
    if (m.trees_.size() != m.options_.n_trees) throw ValueError("tree count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValueError(std::string("malformed model: ") + e.what());
  }
}

nlohmann::ordered_json Metrics::to_json(const nlohmann::ordered_json& config) const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["macro_precision"] = macro_precision;
  j["macro_recall"] = macro_recall;
  j["labels"] = labels;
  j["confusion"] = confusion;
  j["config"] = config;
  return j;
}

Metrics score(std::span<const std::string> actual, std::span<const std::string> predicted) {
  if (actual.size() != predicted.size()) throw ShapeMismatch("prediction count mismatch");
  if (actual.empty()) throw EmptyTest("test set is empty");
  std::set<std::string> all(actual.begin(), actual.end());
  all.insert(predicted.begin(), predicted.end());
  Metrics m;
  m.labels.assign(all.begin(), all.end());
  const std::size_t k = m.labels.size();
  auto index = [&](const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(m.labels.begin(), m.labels.end(), s) - m.labels.begin());
  };
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < actual.size(); ++i) ++m.confusion[index(actual[i])][index(predicted[i])];

  std::size_t correct = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    correct += m.confusion[c][c];
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t o = 0; o < k; ++o) {
      row += m.confusion[c][o];
      col += m.confusion[o][c];
    }
    if (row == 0) continue;  // not present in actual
    ++present;
    m.macro_recall += static_cast<double>(m.confusion[c][c]) / static_cast<double>(row);
    if (col != 0) m.macro_precision += static_cast<double>(m.confusion[c][c]) / static_cast<double>(col);
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(actual.size());
  m.macro_precision /= static_cast<double>(present);
  m.macro_recall /= static_cast<double>(present);
  return m;
}

Metrics evaluate(const ForestModel& model, std::span<const FlowRecord> test) {
  if (test.empty()) throw EmptyTest("test set is empty");
  std::vector<std::string> actual;
  actual.reserve(test.size());
  for (const FlowRecord& f : test) {
    if (!f.app_label) throw ValueError("test flow " + std::to_string(f.flow_id) + " has no app label");
    actual.push_back(*f.app_label);
  }
  const auto predicted = model.predict(test);
  return score(actual, predicted);
}

}  // namespace tclean::classify

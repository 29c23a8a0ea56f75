#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tclean/features.hpp"
#include "tclean/flow.hpp"
#include "tclean/rng.hpp"

namespace tclean::classify {

/// Labeled feature rows: the six clustering features plus the two mean sizes.
/// Classes are indexed in lexicographic label order.
struct Dataset {
  std::vector<std::string> labels;
  FeatureMatrix x;
  std::vector<std::size_t> y;

  std::size_t size() const noexcept { return y.size(); }

  /// Every flow needs an app label (ValueError otherwise). With an empty
  /// `classes` the class list is the sorted set of labels present.
  static Dataset from_flows(std::span<const FlowRecord> flows,
                            std::span<const std::string> classes = {});
};

struct TrainTestSplit {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> test;
};

/// Stratified split: per label, round-half-up(n * train_frac) flows go to
/// train, chosen by a seeded Fisher-Yates shuffle; both halves keep the
/// input order. Throws LabelTooSmall for a label with fewer than 4 flows.
TrainTestSplit split(std::span<const FlowRecord> flows, double train_frac = 0.75,
                     std::uint64_t seed = 42);

struct TreeOptions {
  std::size_t max_depth = 16;
  std::size_t min_leaf = 2;
  /// Features tried per node; 0 means all of them.
  std::size_t features_per_split = 3;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<std::uint32_t> histogram;  // leaves only: training samples per class

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// CART tree on Gini impurity. Rows with x[feature] <= threshold go left.
class DecisionTree {
 public:
  /// rows may repeat (bootstrap samples). Candidate features are drawn per
  /// node from rng; when none of them improves impurity the remaining
  /// features are searched as well.
  static DecisionTree fit(const FeatureMatrix& x, std::span<const std::size_t> y,
                          std::size_t n_classes, std::span<const std::size_t> rows,
                          const TreeOptions& options, SplitMix64& rng);

  /// Majority class of the reached leaf; ties go to the lower class index.
  std::size_t predict(std::span<const double> row) const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j, std::size_t n_classes);

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct ForestOptions {
  std::size_t n_trees = 100;
  TreeOptions tree;
  bool bootstrap = true;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

/// Random forest. Tree t draws its bootstrap sample and feature subsets from
/// SplitMix64(derive_seed(seed, t)), so the result does not depend on
/// threads. Prediction is a majority vote, ties going to the
/// lexicographically smallest label.
class ForestModel {
 public:
  /// Throws SingleClass when fewer than two classes are present.
  static ForestModel train(const Dataset& data, const ForestOptions& options = {});
  static ForestModel train(std::span<const FlowRecord> flows, const ForestOptions& options = {});

  std::size_t predict_index(std::span<const double> row) const;
  const std::string& predict(std::span<const double> row) const;
  std::vector<std::string> predict(std::span<const FlowRecord> flows) const;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ForestOptions& options() const noexcept { return options_; }

  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> labels_;
  std::vector<DecisionTree> trees_;
  ForestOptions options_;
};

struct Metrics {
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  std::vector<std::string> labels;               // sorted union of actual and predicted
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]

  /// Keys accuracy, macro_precision, macro_recall, labels, confusion, config.
  nlohmann::ordered_json to_json(const nlohmann::ordered_json& config = nlohmann::ordered_json::object()) const;
};

/// Confusion-matrix metrics. Macro averages run over the classes present in
/// `actual`; a class with a zero denominator scores 0. Throws EmptyTest on
/// empty input and ShapeMismatch on length mismatch.
Metrics score(std::span<const std::string> actual, std::span<const std::string> predicted);

Metrics evaluate(const ForestModel& model, std::span<const FlowRecord> test);

}  // namespace tclean::classify

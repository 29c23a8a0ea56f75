#include "tclean/select.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tclean/csv.hpp"
#include "tclean/error.hpp"
#include "tclean/parallel.hpp"

namespace tclean::select {

SelectionPolicy SelectionPolicy::download_only() {
  return {{Rule{Action::Keep, {Predicate{Feature::Ratio, Comparator::Greater, {0.9, false}}}}},
          Action::Drop};
}

SelectionPolicy SelectionPolicy::heartbeat_drop() {
  return {{Rule{Action::Drop,
                {Predicate{Feature::DurationS, Comparator::Greater, {75, true}},
                 Predicate{Feature::BytesOut, Comparator::Less, {25, true}}}}},
          Action::Keep};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::Greater: return ">";
    case Comparator::GreaterEqual: return ">=";
  }
  return "?";
}

Predicate parse_predicate(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text.empty()) throw ParseError(line, "empty predicate");
  std::size_t pos = 0;
  while (pos < text.size() && ((text[pos] >= 'a' && text[pos] <= 'z') || text[pos] == '_')) ++pos;
  const std::string_view name = text.substr(0, pos);
  const auto feature = parse_feature(name);
  if (!feature) {
    const std::string_view shown = name.empty() ? text : name;
    throw ParseError(line, "unknown feature '" + std::string(shown) + "'");
  }

  std::string_view rest = trim(text.substr(pos));
  Comparator cmp{};
  std::size_t cmp_len = 0;
  if (rest.starts_with("<=")) cmp = Comparator::LessEqual, cmp_len = 2;
  else if (rest.starts_with(">=")) cmp = Comparator::GreaterEqual, cmp_len = 2;
  else if (rest.starts_with("≤")) cmp = Comparator::LessEqual, cmp_len = 3;
  else if (rest.starts_with("≥")) cmp = Comparator::GreaterEqual, cmp_len = 3;
  else if (rest.starts_with("<")) cmp = Comparator::Less, cmp_len = 1;
  else if (rest.starts_with(">")) cmp = Comparator::Greater, cmp_len = 1;
  else throw ParseError(line, "unknown comparator in '" + std::string(text) + "'");

  const std::string_view value = trim(rest.substr(cmp_len));
  Predicate p{*feature, cmp, {}};
  if (!value.empty() && (value.front() == 'p' || value.front() == 'P')) {
    auto nn = csv::parse_number<double>(value.substr(1));
    if (!nn || *nn < 0 || *nn > 100) {
      throw ParseError(line, "malformed percentile '" + std::string(value) + "'");
    }
    p.threshold = {*nn, true};
  } else {
    auto v = csv::parse_number<double>(value);
    if (!v || !std::isfinite(*v)) {
      throw ParseError(line, "malformed threshold '" + std::string(value) + "'");
    }
    p.threshold = {*v, false};
  }
  return p;
}

bool compare(double lhs, Comparator c, double rhs) {
  switch (c) {
    case Comparator::Less: return lhs < rhs;
    case Comparator::LessEqual: return lhs <= rhs;
    case Comparator::Greater: return lhs > rhs;
    case Comparator::GreaterEqual: return lhs >= rhs;
  }
  return false;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

SelectionPolicy parse_rules(std::string_view text) {
  SelectionPolicy policy;
  bool saw_default = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (saw_default) throw ParseError(line_no, "'default' must be the last rule");

    const std::size_t space = line.find_first_of(" \t");
    const std::string_view verb = line.substr(0, space);
    const std::string_view body = space == std::string_view::npos ? "" : trim(line.substr(space));

    if (verb == "default") {
      if (body == "keep") policy.default_action = Action::Keep;
      else if (body == "drop") policy.default_action = Action::Drop;
      else throw ParseError(line_no, "expected 'default keep' or 'default drop'");
      saw_default = true;
      continue;
    }
    Rule rule;
    if (verb == "keep") rule.action = Action::Keep;
    else if (verb == "drop") rule.action = Action::Drop;
    else throw ParseError(line_no, "expected keep, drop or default, got '" + std::string(verb) + "'");

    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      rule.predicates.push_back(parse_predicate(body.substr(start, comma - start), line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    policy.rules.push_back(std::move(rule));
  }
  return policy;
}

SelectionPolicy read_rules(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open rule file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_rules(buf.str());
  } catch (const ParseError& e) {
    throw e.in_file(file.string());
  }
}

std::string to_string(const SelectionPolicy& policy) {
  std::string out;
  for (const Rule& r : policy.rules) {
    out += r.action == Action::Keep ? "keep " : "drop ";
    for (std::size_t i = 0; i < r.predicates.size(); ++i) {
      const Predicate& p = r.predicates[i];
      if (i) out += ", ";
      out += feature_name(p.feature);
      out += ' ';
      out += to_string(p.comparator);
      out += ' ';
      if (p.threshold.percentile) out += 'p';
      out += csv::format_double(p.threshold.value);
    }
    out += '\n';
  }
  out += policy.default_action == Action::Keep ? "default keep\n" : "default drop\n";
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ValueError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::set<std::size_t> evaluate(const SelectionPolicy& policy, const cluster::ClusterModel& model,
                               const FeatureMatrix& raw_features) {
  // Resolve each percentile threshold once.
  std::map<std::pair<std::size_t, double>, double> resolved;
  auto threshold = [&](const Predicate& p) {
    if (!p.threshold.percentile) return p.threshold.value;
    const auto col = static_cast<std::size_t>(p.feature);
    const auto key = std::make_pair(col, p.threshold.value);
    auto it = resolved.find(key);
    if (it != resolved.end()) return it->second;
    if (raw_features.rows() == 0 || col >= raw_features.cols()) {
      throw ValueError("cannot resolve percentile threshold without per-flow features");
    }
    std::vector<double> column(raw_features.rows());
    for (std::size_t r = 0; r < raw_features.rows(); ++r) column[r] = raw_features(r, col);
    return resolved[key] = percentile(std::move(column), p.threshold.value);
  };

  std::set<std::size_t> kept;
  for (std::size_t c = 0; c < model.k; ++c) {
    const auto centroid = model.centroids_raw.row(c);
    Action action = policy.default_action;
    for (const Rule& rule : policy.rules) {
      const bool match = std::all_of(rule.predicates.begin(), rule.predicates.end(), [&](const Predicate& p) {
        return compare(centroid[static_cast<std::size_t>(p.feature)], p.comparator, threshold(p));
      });
      if (match) {
        action = rule.action;
        break;
      }
    }
    if (action == Action::Keep) kept.insert(c);
  }
  return kept;
}

AppReport CleanReport::totals() const {
  AppReport t;
  t.app_label = "total";
  for (const AppReport& a : apps) {
    t.input += a.input;
    t.dpi_discarded += a.dpi_discarded;
    t.clusters_formed += a.clusters_formed;
    t.flows_kept += a.flows_kept;
    t.flows_dropped += a.flows_dropped;
  }
  return t;
}

nlohmann::ordered_json CleanReport::to_json(bool include_timings) const {
  auto counts = [](const AppReport& a) {
    nlohmann::ordered_json j;
    j["input"] = a.input;
    j["dpi_discarded"] = a.dpi_discarded;
    j["clusters_formed"] = a.clusters_formed;
    j["flows_kept"] = a.flows_kept;
    j["flows_dropped"] = a.flows_dropped;
    return j;
  };
  nlohmann::ordered_json j;
  j["apps"] = nlohmann::ordered_json::object();
  for (const AppReport& a : apps) {
    auto entry = counts(a);
    entry["status"] = a.status;
    j["apps"][a.app_label] = std::move(entry);
  }
  j["totals"] = counts(totals());
  if (include_timings) {
    j["timings_ms"] = {{"dpi", timings.dpi_ms},
                       {"features", timings.features_ms},
                       {"cluster", timings.cluster_ms},
                       {"select", timings.select_ms},
                       {"total", timings.total_ms}};
  }
  return j;
}

namespace {

struct DpiOutcome {
  std::vector<FlowRecord> survivors;
  std::vector<dpi::DiscardedFlow> discarded;
};

DpiOutcome run_dpi(std::vector<FlowRecord> flows, const dpi::Blocklist& blocklist,
                   const CleanOptions& options, StageTimings& t) {
  if (options.skip_dpi) return {std::move(flows), {}};
  const auto start = Clock::now();
  auto filtered = dpi::filter_flows(flows, blocklist);
  t.dpi_ms += elapsed_ms(start);
  return {std::move(filtered.kept), std::move(filtered.discarded)};
}

// Clusters `flows` and returns the kept subset. nullopt when too small.
std::optional<std::vector<FlowRecord>> cluster_and_select(const std::vector<FlowRecord>& flows,
                                                          const std::string& group,
                                                          const SelectionPolicy& policy,
                                                          const CleanOptions& options,
                                                          StageTimings& t, GroupClusters& out) {
  if (flows.size() < std::max<std::size_t>(options.k, 2)) return std::nullopt;

  auto start = Clock::now();
  const FeatureMatrix raw = FeatureMatrix::clustering(extract_all(flows));
  const FeatureMatrix standardized = standardize(raw);
  t.features_ms += elapsed_ms(start);

  start = Clock::now();
  out.group = group;
  out.model = options.algorithm == cluster::Algorithm::KMeans
                  ? cluster::kmeans(standardized, options.k, options.seed, options.kmeans)
                  : cluster::hierarchical(standardized, options.k, options.linkage,
                                          options.hierarchical_method);
  t.cluster_ms += elapsed_ms(start);

  start = Clock::now();
  out.kept_clusters = evaluate(policy, out.model, raw);
  out.flow_ids.reserve(flows.size());
  std::vector<FlowRecord> kept;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out.flow_ids.push_back(flows[i].flow_id);
    if (out.kept_clusters.count(out.model.assignments[i])) kept.push_back(flows[i]);
  }
  t.select_ms += elapsed_ms(start);
  return kept;
}

struct AppOutcome {
  AppReport report;
  DpiOutcome dpi;
  std::vector<FlowRecord> kept;
  std::optional<GroupClusters> clusters;
  StageTimings timings;
};

bool by_label_then_id(const FlowRecord& a, const FlowRecord& b) {
  if (*a.app_label != *b.app_label) return *a.app_label < *b.app_label;
  return a.flow_id < b.flow_id;
}

}  // namespace

CleanResult clean(std::span<const FlowRecord> flows, const dpi::Blocklist& blocklist,
                  const SelectionPolicy& policy, const CleanOptions& options) {
  const auto wall = Clock::now();
  if (options.k == 0) throw ValueError("k must be at least 1");
  std::map<std::string, std::vector<FlowRecord>> by_app;
  for (const FlowRecord& f : flows) {
    if (!f.app_label) throw ValueError("flow " + std::to_string(f.flow_id) + " has no app label");
    by_app[*f.app_label].push_back(f);
  }

  std::vector<AppOutcome> outcomes(by_app.size());
  {
    std::size_t i = 0;
    for (auto& [label, app_flows] : by_app) {
      outcomes[i].report.app_label = label;
      outcomes[i].report.input = app_flows.size();
      ++i;
    }
  }
  std::vector<std::vector<FlowRecord>*> inputs;
  for (auto& [label, app_flows] : by_app) inputs.push_back(&app_flows);

  parallel_for(outcomes.size(), options.threads, [&](std::size_t i) {
    AppOutcome& o = outcomes[i];
    o.dpi = run_dpi(std::move(*inputs[i]), blocklist, options, o.timings);
    o.report.dpi_discarded = o.dpi.discarded.size();
    if (options.pooled) return;
    GroupClusters gc;
    auto kept = cluster_and_select(o.dpi.survivors, o.report.app_label, policy, options, o.timings, gc);
    if (!kept) {
      o.report.status = "AppTooSmall";
      return;
    }
    o.kept = std::move(*kept);
    o.report.clusters_formed = gc.model.k;
    o.clusters = std::move(gc);
  });

  CleanResult result;
  StageTimings& t = result.report.timings;
  for (const AppOutcome& o : outcomes) {
    t.dpi_ms += o.timings.dpi_ms;
    t.features_ms += o.timings.features_ms;
    t.cluster_ms += o.timings.cluster_ms;
    t.select_ms += o.timings.select_ms;
  }

  if (options.pooled) {
    std::vector<FlowRecord> pooled;
    for (const AppOutcome& o : outcomes) {
      pooled.insert(pooled.end(), o.dpi.survivors.begin(), o.dpi.survivors.end());
    }
    GroupClusters gc;
    auto kept = cluster_and_select(pooled, "*", policy, options, t, gc);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < outcomes.size(); ++i) index[outcomes[i].report.app_label] = i;
    if (kept) {
      for (FlowRecord& f : *kept) outcomes[index[*f.app_label]].kept.push_back(std::move(f));
      for (AppOutcome& o : outcomes) o.report.clusters_formed = gc.model.k;
      result.groups.push_back(std::move(gc));
    } else {
      for (AppOutcome& o : outcomes) o.report.status = "AppTooSmall";
    }
  }

  for (AppOutcome& o : outcomes) {
    o.report.flows_kept = o.kept.size();
    o.report.flows_dropped = o.report.input - o.report.dpi_discarded - o.report.flows_kept;
    result.report.apps.push_back(o.report);
    result.cleaned.insert(result.cleaned.end(), std::make_move_iterator(o.kept.begin()),
                          std::make_move_iterator(o.kept.end()));
    result.discarded.insert(result.discarded.end(), std::make_move_iterator(o.dpi.discarded.begin()),
                            std::make_move_iterator(o.dpi.discarded.end()));
    if (o.clusters) result.groups.push_back(std::move(*o.clusters));
  }
  std::sort(result.cleaned.begin(), result.cleaned.end(), by_label_then_id);
  t.total_ms = elapsed_ms(wall);
  return result;
}

}  // namespace tclean::select

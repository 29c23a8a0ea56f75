#include "tclean/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tclean/csv.hpp"
#include "tclean/error.hpp"
#include "tclean/features.hpp"
#include "tclean/flow.hpp"
#include "tclean/flow_table.hpp"
#include "tclean/pcap.hpp"
#include "tclean/tags.hpp"

namespace tclean::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// Left-aligned first column, right-aligned rest.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out << "  ";
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << rows[r][c];
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

void write_text(const fs::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed: " + file.string());
}

void write_json(const fs::path& file, const nlohmann::ordered_json& j) { write_text(file, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

ArmResult train_and_score(std::string name, std::span<const FlowRecord> flows, const CompareOptions& o) {
  ArmResult arm;
  arm.arm = std::move(name);
  arm.flows = flows.size();
  const auto parts = classify::split(flows, o.train_frac, o.seed);
  arm.train_flows = parts.train.size();
  arm.test_flows = parts.test.size();
  classify::ForestOptions forest;
  forest.n_trees = o.n_trees;
  forest.seed = o.seed;
  forest.threads = o.threads;
  const auto model = classify::ForestModel::train(parts.train, forest);
  arm.metrics = classify::evaluate(model, parts.test);
  return arm;
}

select::CleanOptions clean_options(const CompareOptions& o, cluster::Algorithm algorithm, bool skip_dpi) {
  select::CleanOptions c;
  c.algorithm = algorithm;
  c.k = o.k;
  c.seed = o.seed;
  c.skip_dpi = skip_dpi;
  c.threads = o.threads;
  return c;
}

}  // namespace

nlohmann::ordered_json CompareOptions::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario.to_text();
  j["policy"] = select::to_string(policy);
  j["blocklist"] = std::vector<std::string>(blocklist.suffixes().begin(), blocklist.suffixes().end());
  std::vector<std::string> algos;
  for (auto a : algorithms) algos.emplace_back(cluster::to_string(a));
  j["algorithms"] = algos;
  j["k"] = k;
  j["train_frac"] = train_frac;
  j["seed"] = seed;
  j["n_trees"] = n_trees;
  j["skip_dpi"] = skip_dpi;
  return j;
}

std::string config_hash(const nlohmann::ordered_json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const ArmResult* CompareReport::arm(std::string_view name) const {
  for (const auto& a : arms) {
    if (a.arm == name) return &a;
  }
  return nullptr;
}

nlohmann::ordered_json CompareReport::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["config_hash"] = config_hash(config);
  const ArmResult* oracle = arm("oracle");
  j["arms"] = nlohmann::ordered_json::array();
  for (const auto& a : arms) {
    nlohmann::ordered_json row;
    row["arm"] = a.arm;
    row["flows"] = a.flows;
    row["train_flows"] = a.train_flows;
    row["test_flows"] = a.test_flows;
    row["accuracy"] = a.metrics.accuracy;
    row["macro_precision"] = a.metrics.macro_precision;
    row["macro_recall"] = a.metrics.macro_recall;
    if (oracle) row["accuracy_loss_vs_oracle"] = oracle->metrics.accuracy - a.metrics.accuracy;
    row["labels"] = a.metrics.labels;
    row["confusion"] = a.metrics.confusion;
    j["arms"].push_back(std::move(row));
  }
  j["cleaning"] = nlohmann::ordered_json::object();
  for (const auto& [name, report] : clean_reports) j["cleaning"][name] = report.to_json(false);
  return j;
}

nlohmann::ordered_json CompareReport::timings_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& t : timings) {
    j.push_back({{"algorithm", t.algorithm},
                 {"dpi", t.dpi},
                 {"flows", t.flows},
                 {"dpi_ms", t.timings.dpi_ms},
                 {"features_ms", t.timings.features_ms},
                 {"cluster_ms", t.timings.cluster_ms},
                 {"select_ms", t.timings.select_ms},
                 {"total_ms", t.timings.total_ms}});
  }
  return j;
}

std::string CompareReport::table() const {
  const ArmResult* oracle = arm("oracle");
  std::vector<std::vector<std::string>> rows = {
      {"arm", "flows", "test", "accuracy", "macro_prec", "macro_rec", "loss_vs_oracle"}};
  for (const auto& a : arms) {
    rows.push_back({a.arm, std::to_string(a.flows), std::to_string(a.test_flows),
                    fixed(100 * a.metrics.accuracy, 2), fixed(100 * a.metrics.macro_precision, 2),
                    fixed(100 * a.metrics.macro_recall, 2),
                    oracle ? fixed(100 * (oracle->metrics.accuracy - a.metrics.accuracy), 2) : "-"});
  }
  return render_table(rows);
}

std::string CompareReport::timings_table() const {
  std::vector<std::vector<std::string>> rows = {
      {"algorithm", "dpi", "flows", "dpi_ms", "features_ms", "cluster_ms", "select_ms", "total_ms"}};
  for (const auto& t : timings) {
    rows.push_back({t.algorithm, t.dpi ? "yes" : "no", std::to_string(t.flows), fixed(t.timings.dpi_ms, 1),
                    fixed(t.timings.features_ms, 1), fixed(t.timings.cluster_ms, 1),
                    fixed(t.timings.select_ms, 1), fixed(t.timings.total_ms, 1)});
  }
  return render_table(rows);
}

std::string CompareReport::csv() const {
  const ArmResult* oracle = arm("oracle");
  std::ostringstream out;
  out << "arm,flows,test_flows,accuracy,macro_precision,macro_recall,accuracy_loss_vs_oracle\n";
  for (const auto& a : arms) {
    out << a.arm << ',' << a.flows << ',' << a.test_flows << ',' << csv::format_double(a.metrics.accuracy) << ','
        << csv::format_double(a.metrics.macro_precision) << ',' << csv::format_double(a.metrics.macro_recall)
        << ',' << (oracle ? csv::format_double(oracle->metrics.accuracy - a.metrics.accuracy) : "") << '\n';
  }
  return out.str();
}

std::string CompareReport::timings_csv() const {
  std::ostringstream out;
  out << "algorithm,dpi,flows,dpi_ms,features_ms,cluster_ms,select_ms,total_ms\n";
  for (const auto& t : timings) {
    out << t.algorithm << ',' << (t.dpi ? 1 : 0) << ',' << t.flows << ',' << csv::format_double(t.timings.dpi_ms)
        << ',' << csv::format_double(t.timings.features_ms) << ',' << csv::format_double(t.timings.cluster_ms)
        << ',' << csv::format_double(t.timings.select_ms) << ',' << csv::format_double(t.timings.total_ms)
        << '\n';
  }
  return out.str();
}

CompareReport compare(const CompareOptions& o) {
  CompareReport report;
  report.config = o.to_json();
  const synth::LabeledFlows data = synth::generate(o.scenario);

  report.arms.push_back(train_and_score("uncleaned", data.flows, o));
  report.arms.push_back(train_and_score("oracle", synth::oracle_clean(data.flows, data.roles), o));
  for (auto algorithm : o.algorithms) {
    const std::string name(cluster::to_string(algorithm));
    auto cleaned = select::clean(data.flows, o.blocklist, o.policy, clean_options(o, algorithm, o.skip_dpi));
    report.timings.push_back({name, !o.skip_dpi, data.flows.size(), cleaned.report.timings});
    if (!o.skip_dpi && o.time_without_dpi) {
      auto raw = select::clean(data.flows, o.blocklist, o.policy, clean_options(o, algorithm, true));
      report.timings.push_back({name, false, data.flows.size(), raw.report.timings});
    }
    report.arms.push_back(train_and_score(name, cleaned.cleaned, o));
    report.clean_reports.emplace_back(name, std::move(cleaned.report));
  }
  return report;
}

namespace {

struct Common {
  fs::path out = ".";
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

struct CleanArgs {
  std::string policy;
  std::string blocklist;
  std::size_t k = 4;
  std::string algorithm = "kmeans";
  std::string linkage = "ward";
  bool skip_dpi = false;
  bool pooled = false;
};

select::SelectionPolicy load_policy(const std::string& path) {
  return path.empty() ? select::SelectionPolicy::download_only() : select::read_rules(path);
}

dpi::Blocklist load_blocklist(const std::string& path) {
  return path.empty() ? dpi::Blocklist::defaults() : dpi::Blocklist::read(path);
}

cluster::Algorithm algorithm_arg(const std::string& text) {
  auto a = cluster::parse_algorithm(text);
  if (!a) throw ValueError("unknown algorithm '" + text + "' (expected kmeans or hier)");
  return *a;
}

std::string safe_name(std::string_view group) {
  std::string s;
  for (char c : group) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_');
  return s == "_" ? "pooled" : s;
}

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
  sub->set_config("--config", "", "Read key = value options from a file");
  sub->allow_config_extras(CLI::config_extras_mode::error);
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  if (with_seed) sub->add_option("--seed", c.seed, "PRNG seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_clean_args(CLI::App* sub, CleanArgs& a) {
  sub->add_option("--policy", a.policy, "Selection rule file (default: keep ratio > 0.9)");
  sub->add_option("--blocklist", a.blocklist, "SNI suffix blocklist (default: built-in)");
  sub->add_option("--k", a.k, "Clusters per app")->capture_default_str()->check(CLI::Range(2, 8));
  sub->add_flag("--skip-dpi", a.skip_dpi, "Skip the DPI pre-filter");
}

int cmd_synth(const Common& c, const std::string& scenario_path, bool seed_given, std::size_t flows_per_app,
              std::ostream& out) {
  synth::ScenarioSpec spec = scenario_path.empty() ? synth::ScenarioSpec::standard_mix(flows_per_app, c.seed)
                                                   : synth::ScenarioSpec::read(scenario_path);
  if (seed_given) spec.seed = c.seed;
  const auto data = synth::generate(spec);
  ensure_dir(c.out);
  write_flow_table(c.out / "flows.csv", data.flows);
  synth::write_roles(c.out / "roles.csv", data.flows, data.roles);
  write_text(c.out / "scenario.scn", spec.to_text());
  out << "wrote " << data.flows.size() << " flows to " << (c.out / "flows.csv").string() << '\n';
  return 0;
}

int cmd_ingest(const Common& c, const std::string& pcap, const std::string& tags, double idle_timeout,
               std::ostream& out) {
  const Capture capture = read_packets(pcap);
  FlowOptions fo;
  fo.idle_timeout_s = idle_timeout;
  AssembledFlows assembled = assemble_flows(capture.packets, fo);
  std::vector<FlowRecord> flows = std::move(assembled.flows);
  if (!tags.empty()) flows = apply_tags(std::move(flows), TagMap::read(tags), assembled.meta);
  ensure_dir(c.out);
  write_flow_table(c.out / "flows.csv", flows);
  out << "records " << capture.stats.records << ", skipped non-IP " << capture.stats.skipped_non_ip
      << ", skipped truncated " << capture.stats.skipped_truncated << ", flows " << flows.size() << '\n';
  return 0;
}

int cmd_clean(const Common& c, const CleanArgs& a, const std::string& flows_path, std::ostream& out) {
  const auto flows = read_flow_table(fs::path(flows_path));
  select::CleanOptions opts;
  opts.algorithm = algorithm_arg(a.algorithm);
  auto linkage = cluster::parse_linkage(a.linkage);
  if (!linkage) throw ValueError("unknown linkage '" + a.linkage + "'");
  opts.linkage = *linkage;
  opts.k = a.k;
  opts.seed = c.seed;
  opts.skip_dpi = a.skip_dpi;
  opts.pooled = a.pooled;
  opts.threads = c.threads;
  const auto result = select::clean(flows, load_blocklist(a.blocklist), load_policy(a.policy), opts);

  ensure_dir(c.out);
  write_flow_table(c.out / "cleaned.csv", result.cleaned);
  write_json(c.out / "clean_report.json", result.report.to_json());
  write_feature_table(c.out / "features.csv", result.cleaned, extract_all(result.cleaned));

  std::ostringstream assignments;
  assignments << cluster::kAssignmentHeader << '\n';
  for (const auto& g : result.groups) {
    std::ostringstream report;
    cluster::write_cluster_report(report, g.model);
    write_text(c.out / ("clusters_" + safe_name(g.group) + ".csv"), report.str());
    std::ostringstream rows;
    cluster::write_assignments(rows, g.flow_ids, g.model.assignments);
    std::string body = rows.str();
    body.erase(0, body.find('\n') + 1);
    assignments << body;
  }
  write_text(c.out / "assignments.csv", assignments.str());

  std::ostringstream discarded;
  discarded << "flow_id,app_label,verdict,sni\n";
  for (const auto& d : result.discarded) {
    discarded << d.flow.flow_id << ',' << d.flow.app_label.value_or("") << ',' << dpi::to_string(d.verdict.kind)
              << ',' << d.verdict.sni << '\n';
  }
  write_text(c.out / "dpi_discarded.csv", discarded.str());

  std::vector<std::vector<std::string>> rows = {
      {"app", "input", "dpi_discarded", "clusters", "kept", "dropped", "status"}};
  auto add = [&](const select::AppReport& r) {
    rows.push_back({r.app_label, std::to_string(r.input), std::to_string(r.dpi_discarded),
                    std::to_string(r.clusters_formed), std::to_string(r.flows_kept),
                    std::to_string(r.flows_dropped), r.status});
  };
  for (const auto& r : result.report.apps) add(r);
  add(result.report.totals());
  const std::string table = render_table(rows);
  write_text(c.out / "clean_report.txt", table);
  out << table;
  return 0;
}

int cmd_train(const Common& c, const std::string& flows_path, double train_frac, std::size_t n_trees,
              std::ostream& out) {
  const auto flows = read_flow_table(fs::path(flows_path));
  const auto parts = classify::split(flows, train_frac, c.seed);
  classify::ForestOptions fo;
  fo.n_trees = n_trees;
  fo.seed = c.seed;
  fo.threads = c.threads;
  const auto model = classify::ForestModel::train(parts.train, fo);
  ensure_dir(c.out);
  write_text(c.out / "model.json", model.to_json().dump() + "\n");
  write_flow_table(c.out / "train.csv", parts.train);
  write_flow_table(c.out / "test.csv", parts.test);
  out << "trained " << n_trees << " trees on " << parts.train.size() << " flows; " << parts.test.size()
      << " held out in " << (c.out / "test.csv").string() << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& test_path, std::ostream& out) {
  std::ifstream model_in(model_path);
  if (!model_in) throw IoError("cannot open model " + model_path);
  nlohmann::json j;
  try {
    model_in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValueError(model_path + ": " + e.what());
  }
  const auto model = classify::ForestModel::from_json(j);
  std::error_code ec;
  const bool blank = fs::exists(test_path, ec) && fs::file_size(test_path, ec) == 0;
  const auto test = blank ? std::vector<FlowRecord>{} : read_flow_table(fs::path(test_path));
  const auto metrics = classify::evaluate(model, test);
  nlohmann::ordered_json config = {{"model", model_path}, {"test", test_path}, {"test_flows", test.size()}};
  ensure_dir(c.out);
  write_json(c.out / "metrics.json", metrics.to_json(config));
  out << "accuracy " << fixed(100 * metrics.accuracy, 2) << "%, macro precision "
      << fixed(100 * metrics.macro_precision, 2) << "%, macro recall " << fixed(100 * metrics.macro_recall, 2)
      << "%\n";
  return 0;
}

int cmd_compare(const Common& c, CompareOptions o, const CleanArgs& a, const std::string& algorithms,
                const std::string& scenario_path, bool seed_given, std::size_t flows_per_app, bool emit_csv,
                std::ostream& out) {
  o.scenario = scenario_path.empty() ? synth::ScenarioSpec::standard_mix(flows_per_app, c.seed)
                                     : synth::ScenarioSpec::read(scenario_path);
  if (seed_given) o.scenario.seed = c.seed;
  o.seed = c.seed;
  o.threads = c.threads;
  o.k = a.k;
  o.skip_dpi = a.skip_dpi;
  o.policy = load_policy(a.policy);
  o.blocklist = load_blocklist(a.blocklist);
  o.algorithms.clear();
  std::stringstream list(algorithms);
  for (std::string item; std::getline(list, item, ',');) {
    if (!item.empty()) o.algorithms.push_back(algorithm_arg(item));
  }
  if (o.algorithms.empty()) throw ValueError("--algorithm needs at least one of kmeans, hier");

  const auto started = std::chrono::steady_clock::now();
  const CompareReport report = compare(o);
  const double wall_ms = elapsed_ms(started);

  ensure_dir(c.out);
  write_json(c.out / "compare.json", report.to_json());
  write_text(c.out / "compare.txt", report.table());
  nlohmann::ordered_json timings = {{"wall_ms", wall_ms}, {"clean", report.timings_json()}};
  write_json(c.out / "timings.json", timings);
  write_text(c.out / "timings.txt", report.timings_table());
  if (emit_csv) {
    write_text(c.out / "compare.csv", report.csv());
    write_text(c.out / "timings.csv", report.timings_csv());
  }
  out << report.table() << '\n' << report.timings_table();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Traffic-cleaning toolkit for app-labelled encrypted flows", "tclean"};
  app.require_subcommand(1);

  Common common;
  CleanArgs clean_args;
  std::string scenario, pcap, tags, flows_path, model_path, test_path, algorithms = "kmeans,hier";
  std::size_t flows_per_app = 2000, n_trees = 100;
  double idle_timeout = 60, train_frac = 0.75;
  bool emit_csv = false;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a labelled synthetic flow table");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--scenario", scenario, "Scenario file (default: five-app mix)");
  synth_cmd->add_option("--flows-per-app", flows_per_app, "Flows per app for the built-in mix")
      ->capture_default_str();

  auto* ingest_cmd = app.add_subcommand("ingest", "Assemble flows from a pcap capture");
  add_common(ingest_cmd, common, false);
  ingest_cmd->add_option("--pcap", pcap, "Capture file")->required();
  ingest_cmd->add_option("--tags", tags, "MAC/VLAN to app label map");
  ingest_cmd->add_option("--idle-timeout", idle_timeout, "Flow idle timeout in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* clean_cmd = app.add_subcommand("clean", "DPI filter, cluster and select flows per app");
  add_common(clean_cmd, common);
  add_clean_args(clean_cmd, clean_args);
  clean_cmd->add_option("--flows", flows_path, "Flow table")->required();
  clean_cmd->add_option("--algorithm", clean_args.algorithm, "kmeans or hier")->capture_default_str();
  clean_cmd->add_option("--linkage", clean_args.linkage, "ward, average or complete")->capture_default_str();
  clean_cmd->add_flag("--pooled", clean_args.pooled, "Cluster all apps together");

  auto* train_cmd = app.add_subcommand("train", "Split a flow table and train a random forest");
  add_common(train_cmd, common);
  train_cmd->add_option("--flows", flows_path, "Flow table")->required();
  train_cmd->add_option("--train-frac", train_frac, "Training fraction per app")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--trees", n_trees, "Number of trees")->capture_default_str()->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("eval", "Score a trained forest on a flow table");
  add_common(eval_cmd, common, false);
  eval_cmd->add_option("--model", model_path, "model.json from train")->required();
  eval_cmd->add_option("--test", test_path, "Flow table to score")->required();

  auto* compare_cmd = app.add_subcommand("compare", "Uncleaned vs oracle vs pipeline-cleaned accuracy");
  add_common(compare_cmd, common);
  add_clean_args(compare_cmd, clean_args);
  compare_cmd->add_option("--scenario", scenario, "Scenario file (default: five-app mix)");
  compare_cmd->add_option("--flows-per-app", flows_per_app, "Flows per app for the built-in mix")
      ->capture_default_str();
  compare_cmd->add_option("--algorithm", algorithms, "Comma-separated: kmeans,hier")->capture_default_str();
  compare_cmd->add_option("--train-frac", train_frac, "Training fraction per app")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--trees", n_trees, "Number of trees")->capture_default_str()->check(CLI::PositiveNumber);
  compare_cmd->add_flag("--emit-csv", emit_csv, "Also write compare.csv and timings.csv");

  std::vector<const char*> argv;
  argv.push_back("tclean");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    // CLI11 reads config files only for the top-level app; run the
    // subcommand's own pass so its --config is applied (flags still win).
    for (CLI::App* sub : app.get_subcommands()) {
      if (sub->count("--config") > 0) {
        std::istringstream none;
        sub->parse_from_stream(none);
      }
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*synth_cmd) return cmd_synth(common, scenario, synth_cmd->count("--seed") > 0, flows_per_app, out);
    if (*ingest_cmd) return cmd_ingest(common, pcap, tags, idle_timeout, out);
    if (*clean_cmd) return cmd_clean(common, clean_args, flows_path, out);
    if (*train_cmd) return cmd_train(common, flows_path, train_frac, n_trees, out);
    if (*eval_cmd) return cmd_eval(common, model_path, test_path, out);
    CompareOptions o;
    o.train_frac = train_frac;
    o.n_trees = n_trees;
    return cmd_compare(common, o, clean_args, algorithms, scenario, compare_cmd->count("--seed") > 0,
                       flows_per_app, emit_csv, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tclean::cli

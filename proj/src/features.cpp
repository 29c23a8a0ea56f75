#include "tclean/features.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "tclean/csv.hpp"
#include "tclean/error.hpp"

namespace tclean {

namespace {
constexpr std::array<std::string_view, kClusterFeatures> kNames = {
    "bytes_in", "bytes_out", "packets_in", "packets_out", "duration_s", "ratio"};
}

std::string_view feature_name(Feature f) noexcept { return kNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> parse_feature(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

double FeatureVector::get(Feature f) const noexcept {
  return clustering()[static_cast<std::size_t>(f)];
}

std::array<double, kClusterFeatures> FeatureVector::clustering() const noexcept {
  return {bytes_in, bytes_out, packets_in, packets_out, duration_s, ratio};
}

std::array<double, kAllFeatures> FeatureVector::all() const noexcept {
  return {bytes_in,   bytes_out, packets_in,       packets_out,
          duration_s, ratio,     mean_header_size, mean_payload_size};
}

double ratio(double bytes_in, double bytes_out) noexcept {
  const double total = bytes_in + bytes_out;
  if (total == 0) return 0.0;
  return (bytes_in - bytes_out) / total;
}

FeatureVector extract(const FlowRecord& flow) {
  const std::uint64_t packets = flow.packet_count();
  if (packets == 0) throw EmptyFlow("flow " + std::to_string(flow.flow_id) + " has no packets");
  FeatureVector v;
  v.bytes_in = static_cast<double>(flow.bytes_in);
  v.bytes_out = static_cast<double>(flow.bytes_out);
  v.packets_in = static_cast<double>(flow.packets_in);
  v.packets_out = static_cast<double>(flow.packets_out);
  v.duration_s = static_cast<double>(flow.last_ts_us - flow.first_ts_us) / 1e6;
  v.ratio = ratio(v.bytes_in, v.bytes_out);
  v.mean_header_size = static_cast<double>(flow.header_bytes_total) / static_cast<double>(packets);
  v.mean_payload_size = static_cast<double>(flow.payload_bytes_total) / static_cast<double>(packets);
  return v;
}

std::vector<FeatureVector> extract_all(std::span<const FlowRecord> flows) {
  std::vector<FeatureVector> out;
  out.reserve(flows.size());
  for (const FlowRecord& f : flows) out.push_back(extract(f));
  return out;
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw ShapeMismatch("matrix value count does not match shape");
}

FeatureMatrix FeatureMatrix::clustering(std::span<const FeatureVector> features) {
  FeatureMatrix m(features.size(), kClusterFeatures);
  for (std::size_t r = 0; r < features.size(); ++r) {
    const auto row = features[r].clustering();
    std::copy(row.begin(), row.end(), m.values_.begin() + static_cast<std::ptrdiff_t>(r * kClusterFeatures));
  }
  return m;
}

std::vector<double> FeatureMatrix::to_raw(std::span<const double> point) const {
  if (point.size() != cols_) throw ShapeMismatch("point dimension does not match matrix");
  std::vector<double> raw(point.begin(), point.end());
  if (standardized()) {
    for (std::size_t c = 0; c < cols_; ++c) raw[c] = raw[c] * stds_[c] + means_[c];
  }
  return raw;
}

FeatureMatrix standardize(const FeatureMatrix& matrix) {
  if (matrix.rows() < 2) throw TooFewRows("standardize needs at least 2 rows");
  const std::size_t n = matrix.rows();
  const std::size_t d = matrix.cols();
  FeatureMatrix out(n, d);
  out.means_.assign(d, 0.0);
  out.stds_.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0;
    for (std::size_t r = 0; r < n; ++r) sum += matrix(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t r = 0; r < n; ++r) ss += (matrix(r, c) - mean) * (matrix(r, c) - mean);
    const double std = std::sqrt(ss / static_cast<double>(n));
    out.means_[c] = mean;
    // Columns whose spread is rounding noise relative to their magnitude count as constant.
    const bool constant = std == 0 || std <= 1e-12 * std::abs(mean);
    out.stds_[c] = constant ? 0.0 : std;
    for (std::size_t r = 0; r < n; ++r) out(r, c) = constant ? 0.0 : (matrix(r, c) - mean) / std;
  }
  return out;
}

FeatureMatrix destandardize(const FeatureMatrix& matrix) {
  FeatureMatrix out(matrix.rows(), matrix.cols());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto raw = matrix.to_raw(matrix.row(r));
    for (std::size_t c = 0; c < matrix.cols(); ++c) out(r, c) = raw[c];
  }
  return out;
}

void write_feature_table(std::ostream& out, std::span<const FlowRecord> flows,
                         std::span<const FeatureVector> features) {
  if (flows.size() != features.size()) throw ShapeMismatch("features do not match flows");
  out << kFeatureTableHeader << '\n';
  for (std::size_t i = 0; i < flows.size(); ++i) {
    out << flows[i].flow_id << ',' << flows[i].app_label.value_or("");
    for (double v : features[i].all()) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_feature_table(const std::filesystem::path& file, std::span<const FlowRecord> flows,
                         std::span<const FeatureVector> features) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  write_feature_table(out, flows, features);
}

}  // namespace tclean

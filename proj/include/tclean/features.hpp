#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tclean/flow.hpp"

namespace tclean {

/// The six clustering features, in matrix column order.
enum class Feature : std::uint8_t { BytesIn, BytesOut, PacketsIn, PacketsOut, DurationS, Ratio };

inline constexpr std::size_t kClusterFeatures = 6;
/// Clustering features plus the two mean-size features.
inline constexpr std::size_t kAllFeatures = 8;

std::string_view feature_name(Feature f) noexcept;
std::optional<Feature> parse_feature(std::string_view name) noexcept;

struct FeatureVector {
  double bytes_in = 0;
  double bytes_out = 0;
  double packets_in = 0;
  double packets_out = 0;
  double duration_s = 0;
  double ratio = 0;
  double mean_header_size = 0;
  double mean_payload_size = 0;

  double get(Feature f) const noexcept;
  std::array<double, kClusterFeatures> clustering() const noexcept;
  std::array<double, kAllFeatures> all() const noexcept;
};

/// (bytes_in - bytes_out) / (bytes_in + bytes_out), in [-1, 1]; 0 when both are 0.
double ratio(double bytes_in, double bytes_out) noexcept;

/// Throws EmptyFlow when the flow has no packets.
FeatureVector extract(const FlowRecord& flow);
std::vector<FeatureVector> extract_all(std::span<const FlowRecord> flows);

/// Dense row-major matrix. After standardize() it also carries the column
/// means and population standard deviations needed to map values back.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// One row per vector, the six clustering columns.
  static FeatureMatrix clustering(std::span<const FeatureVector> features);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool standardized() const noexcept { return !means_.empty(); }
  std::span<const double> means() const noexcept { return means_; }
  std::span<const double> stds() const noexcept { return stds_; }

  /// Maps a standardized-space point back to the original scale. Identity
  /// when the matrix is not standardized.
  std::vector<double> to_raw(std::span<const double> point) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  friend FeatureMatrix standardize(const FeatureMatrix&);
  friend FeatureMatrix destandardize(const FeatureMatrix&);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

/// Z-scores every column with the population std; zero-variance columns
/// become all zeros (their std is stored as 0). Throws TooFewRows below 2 rows.
FeatureMatrix standardize(const FeatureMatrix& matrix);

/// Inverse of standardize(); returns an unstandardized matrix.
FeatureMatrix destandardize(const FeatureMatrix& matrix);

inline constexpr std::string_view kFeatureTableHeader =
    "flow_id,app_label,bytes_in,bytes_out,packets_in,packets_out,duration_s,ratio,"
    "mean_header_size,mean_payload_size";

void write_feature_table(std::ostream& out, std::span<const FlowRecord> flows,
                         std::span<const FeatureVector> features);
void write_feature_table(const std::filesystem::path& file, std::span<const FlowRecord> flows,
                         std::span<const FeatureVector> features);

}  // namespace tclean

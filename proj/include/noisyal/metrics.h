#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace noisyal {

// One row of the learning curve.
struct CycleMetrics {
  int cycle = 0;
  long budget_total = 0;  // cumulative spend, initial set included
  int boxes_labeled = 0;  // query spend of this cycle
  int reviews_miss = 0;
  int reviews_flip = 0;
  double map = 0.0;
  std::optional<double> precision_miss;
  std::optional<double> precision_flip;
  int active_images = 0;
  long active_boxes = 0;
  double active_error_fraction = 0.0;

  // Diagnostics kept in checkpoints but not in the CSV.
  double skill = 0.0;
  int forfeited_miss = 0;
  int forfeited_flip = 0;
  bool pool_exhausted = false;
  std::optional<double> base_rate_miss;
  std::optional<double> base_rate_flip;

  friend bool operator==(const CycleMetrics&, const CycleMetrics&) = default;
};

inline constexpr std::string_view kMetricsHeader =
    "cycle,budget_total,boxes_labeled,reviews_miss,reviews_flip,map,precision_miss,"
    "precision_flip,active_images,active_boxes,active_error_fraction";

std::string metrics_csv(const std::vector<CycleMetrics>& history);
void write_metrics_csv(const std::vector<CycleMetrics>& history,
                       const std::filesystem::path& path);

// Per-cycle mean and sample standard deviation across runs of every numeric
// column. Header: cycle,runs,<column>_mean,<column>_std,... Undefined
// precisions are skipped; a statistic over zero values is left empty and
// the std of a single value is 0.
std::string aggregate_csv(const std::vector<std::vector<CycleMetrics>>& runs);
void write_aggregate_csv(const std::vector<std::vector<CycleMetrics>>& runs,
                         const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws DataError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // half-width of the std band; empty for none
};

// Reads mAP against cumulative budget from a metrics.csv or aggregate.csv.
Curve curve_from_csv(const CsvTable& table, std::string label);

// mAP-vs-budget chart as SVG. Output depends only on the inputs.
std::string render_svg(const std::vector<Curve>& curves, std::string_view title);

}  // namespace noisyal

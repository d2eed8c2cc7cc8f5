#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "noisyal/errors.h"
#include "noisyal/json_util.h"
#include "noisyal/metrics.h"

namespace noisyal {

namespace {

// Shortest text that reads back to the same double.
std::string number(double v) { return fmt::format("{}", v); }

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

struct Column {
  std::string_view name;
  std::function<std::optional<double>(const CycleMetrics&)> get;
};

const std::vector<Column>& numeric_columns() {
  static const std::vector<Column> cols = {
      {"budget_total", [](const CycleMetrics& m) { return std::optional<double>(m.budget_total); }},
      {"boxes_labeled", [](const CycleMetrics& m) { return std::optional<double>(m.boxes_labeled); }},
      {"reviews_miss", [](const CycleMetrics& m) { return std::optional<double>(m.reviews_miss); }},
      {"reviews_flip", [](const CycleMetrics& m) { return std::optional<double>(m.reviews_flip); }},
      {"map", [](const CycleMetrics& m) { return std::optional<double>(m.map); }},
      {"precision_miss", [](const CycleMetrics& m) { return m.precision_miss; }},
      {"precision_flip", [](const CycleMetrics& m) { return m.precision_flip; }},
      {"active_images", [](const CycleMetrics& m) { return std::optional<double>(m.active_images); }},
      {"active_boxes", [](const CycleMetrics& m) { return std::optional<double>(m.active_boxes); }},
      {"active_error_fraction",
       [](const CycleMetrics& m) { return std::optional<double>(m.active_error_fraction); }},
  };
  return cols;
}

}  // namespace

std::string metrics_csv(const std::vector<CycleMetrics>& history) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& m : history) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", m.cycle, m.budget_total,
                       m.boxes_labeled, m.reviews_miss, m.reviews_flip, number(m.map),
                       number(m.precision_miss), number(m.precision_flip), m.active_images,
                       m.active_boxes, number(m.active_error_fraction));
  }
  return out;
}

void write_metrics_csv(const std::vector<CycleMetrics>& history,
                       const std::filesystem::path& path) {
  detail::write_text_file(path, metrics_csv(history));
}

std::string aggregate_csv(const std::vector<std::vector<CycleMetrics>>& runs) {
  std::string out = "cycle,runs";
  for (const auto& col : numeric_columns()) {
    out += fmt::format(",{}_mean,{}_std", col.name, col.name);
  }
  out += '\n';

  std::size_t n_cycles = 0;
  for (const auto& r : runs) n_cycles = std::max(n_cycles, r.size());
  for (std::size_t i = 0; i < n_cycles; ++i) {
    std::vector<const CycleMetrics*> rows;
    for (const auto& r : runs) {
      if (i < r.size()) rows.push_back(&r[i]);
    }
    out += fmt::format("{},{}", rows.front()->cycle, rows.size());
    for (const auto& col : numeric_columns()) {
      std::vector<double> values;
      for (const auto* m : rows) {
        if (auto v = col.get(*m)) values.push_back(*v);
      }
      if (values.empty()) {
        out += ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
      out += "," + number(mean) + "," + number(sd);
    }
    out += '\n';
  }
  return out;
}

void write_aggregate_csv(const std::vector<std::vector<CycleMetrics>>& runs,
                         const std::filesystem::path& path) {
  detail::write_text_file(path, aggregate_csv(runs));
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("csv has no column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable parse_csv(std::string_view text) {
  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      cells.emplace_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return cells;
  };
  CsvTable table;
  std::size_t start = 0;
  bool first = true;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (first) {
      table.header = split(line);
      first = false;
    } else {
      auto cells = split(line);
      if (cells.size() != table.header.size()) {
        throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                         std::to_string(table.header.size()) + " cells, got " +
                         std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ParseError("csv is empty");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Curve curve_from_csv(const CsvTable& table, std::string label) {
  Curve curve;
  curve.label = std::move(label);
  const bool aggregate = table.has_column("map_mean");
  const std::size_t xi = table.column(aggregate ? "budget_total_mean" : "budget_total");
  const std::size_t yi = table.column(aggregate ? "map_mean" : "map");
  const std::optional<std::size_t> si =
      aggregate ? std::optional<std::size_t>(table.column("map_std")) : std::nullopt;
  auto number = [](const std::string& cell) {
    try {
      return std::stod(cell);
    } catch (const std::exception&) {
      throw ParseError("csv cell '" + cell + "' is not a number");
    }
  };
  for (const auto& row : table.rows) {
    curve.x.push_back(number(row[xi]));
    curve.y.push_back(number(row[yi]));
    if (si) curve.band.push_back(number(row[*si]));
  }
  return curve;
}

}  // namespace noisyal

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpcombine/csv.hpp"
#include "dpcombine/errors.hpp"

namespace dpcombine {

namespace detail {

inline void check_lengths(std::span<const double> actual, std::span<const double> forecast) {
  if (actual.size() != forecast.size() || actual.empty()) {
    throw LengthMismatch("actual length " + std::to_string(actual.size()) +
                         " vs forecast length " + std::to_string(forecast.size()));
  }
}

/// Pairwise summation, keeps dataset aggregates stable against ordering.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 4) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

}  // namespace detail

inline double mae(std::span<const double> actual, std::span<const double> forecast) {
  detail::check_lengths(actual, forecast);
  double acc = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) acc += std::fabs(actual[t] - forecast[t]);
  return acc / static_cast<double>(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> forecast) {
  detail::check_lengths(actual, forecast);
  double acc = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    const double e = actual[t] - forecast[t];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(actual.size()));
}

struct EvaluatedSeries {
  std::string id;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Per-series and dataset-level errors of one combination strategy.
struct MetricReport {
  std::string strategy;      // single | simple | weighted | mixed | trimmed
  std::string distribution;  // exp | beta | normal | mixed | none
  std::size_t pool_size = 0;
  std::uint64_t seed = 0;
  std::vector<EvaluatedSeries> per_series;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;

  std::size_t series_count() const { return per_series.size(); }
};

struct SeriesPrediction {
  std::string id;
  std::vector<double> actual;
  std::vector<double> forecast;
};

/// Per-series MAE/RMSE plus their unweighted means over the N series.
inline MetricReport dataset_metrics(const std::vector<SeriesPrediction>& data,
                                    const std::string& strategy) {
  if (data.empty()) throw EmptyDataset("no series to evaluate");
  MetricReport report;
  report.strategy = strategy;
  report.per_series.reserve(data.size());
  std::vector<double> maes, rmses;
  maes.reserve(data.size());
  rmses.reserve(data.size());
  for (const auto& d : data) {
    EvaluatedSeries e;
    e.id = d.id;
    e.mae = mae(d.actual, d.forecast);
    e.rmse = rmse(d.actual, d.forecast);
    maes.push_back(e.mae);
    rmses.push_back(e.rmse);
    report.per_series.push_back(std::move(e));
  }
  report.mean_mae = detail::pairwise_sum(maes) / static_cast<double>(maes.size());
  report.mean_rmse = detail::pairwise_sum(rmses) / static_cast<double>(rmses.size());
  return report;
}

/// CSV serialization: metadata comment lines, one row per series, then an
/// aggregate row.
inline std::string report_to_csv(const MetricReport& report) {
  std::string out;
  out += "# strategy," + report.strategy + '\n';
  out += "# distribution," + report.distribution + '\n';
  out += "# pool_size," + std::to_string(report.pool_size) + '\n';
  out += "# seed," + std::to_string(report.seed) + '\n';
  out += "series_id,mae,rmse\n";
  for (const auto& e : report.per_series) {
    out += e.id + ',' + fmt_double(e.mae) + ',' + fmt_double(e.rmse) + '\n';
  }
  out += "aggregate," + fmt_double(report.mean_mae) + ',' + fmt_double(report.mean_rmse) + '\n';
  return out;
}

inline MetricReport report_from_csv_text(const std::string& text) {
  MetricReport report;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto cells = split_csv_line(line.substr(2));
      if (cells.size() == 2) {
        if (cells[0] == "strategy") report.strategy = cells[1];
        if (cells[0] == "distribution") report.distribution = cells[1];
        if (cells[0] == "pool_size") report.pool_size = std::stoul(cells[1]);
        if (cells[0] == "seed") report.seed = std::stoull(cells[1]);
      }
      continue;
    }
    if (!saw_header) {
      saw_header = true;  // column header row
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw MalformedRow(cells.empty() ? "?" : cells[0], cells.size(), line);
    double m, r;
    if (!parse_double(cells[1], m) || !parse_double(cells[2], r)) {
      throw MalformedRow(cells[0], 1, line);
    }
    if (cells[0] == "aggregate") {
      report.mean_mae = m;
      report.mean_rmse = r;
    } else {
      report.per_series.push_back({cells[0], m, r});
    }
  }
  return report;
}

}  // namespace dpcombine

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dpcombine/csv.hpp"
#include "dpcombine/errors.hpp"

namespace dpcombine {

/// One series in original units: concatenated train+test observations plus
/// the forecast horizon that marks how many trailing points are held out.
struct RawSeries {
  std::string id;
  std::vector<double> observations;
  std::size_t horizon = 0;

  std::size_t length() const { return observations.size(); }
};

/// Min-max scaled copy of a series, keeping the statistics for inversion.
/// A constant series scales to all zeros with `degenerate` set instead of
/// failing, so corpus runs never abort on flat data.
struct ScaledSeries {
  std::string id;
  std::vector<double> values;
  double scale_min = 0.0;
  double scale_max = 0.0;
  bool degenerate = false;

  std::size_t length() const { return values.size(); }
};

/// Lag embedding of a scaled series: row r of `inputs` holds values
/// [r, r+b), and targets[r] is the value at r+b.
struct SupervisedFrame {
  std::size_t lag = 0;
  std::size_t rows = 0;
  std::vector<double> inputs;   // rows x lag, row-major
  std::vector<double> targets;  // rows

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(inputs).subspan(r * lag, lag);
  }
};

struct M4LoadResult {
  std::vector<RawSeries> series;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool looks_numeric(const std::string& cell) {
  double ignored;
  return parse_double(cell, ignored);
}

/// Parses an `id,v1,v2,...` file into id -> values. Header rows are detected
/// by a non-numeric second cell and skipped. Empty cells are treated as
/// absent (M4 exports pad ragged rows).
inline std::map<std::string, std::vector<double>> read_m4_csv(const std::string& path) {
  std::map<std::string, std::vector<double>> rows;
  bool first = true;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (first) {
      first = false;
      bool header = cells.size() > 1 && !cells[1].empty() && !looks_numeric(cells[1]);
      if (header) continue;
    }
    const std::string id = cells.empty() ? "" : cells[0];
    if (id.empty()) continue;
    std::vector<double> values;
    values.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty() || cells[c] == "NA") continue;
      double v;
      if (!parse_double(cells[c], v)) throw MalformedRow(id, c, cells[c]);
      if (!std::isfinite(v)) throw MalformedRow(id, c, cells[c]);
      values.push_back(v);
    }
    rows[id] = std::move(values);
  }
  return rows;
}

}  // namespace detail

/// Loads an M4-weekly-style corpus: per id, train values concatenated with
/// the test values. Series shorter than lag+1 after the merge are skipped
/// with a warning; ids missing from the test file load with an empty test
/// suffix and a warning.
inline M4LoadResult load_m4_weekly(const std::string& train_path, const std::string& test_path,
                                   std::size_t horizon, std::size_t lag = 7) {
  M4LoadResult result;
  auto train = detail::read_m4_csv(train_path);
  auto test = detail::read_m4_csv(test_path);
  for (auto& [id, values] : train) {
    RawSeries series;
    series.id = id;
    series.observations = values;
    series.horizon = horizon;
    auto it = test.find(id);
    if (it == test.end()) {
      result.warnings.push_back("series '" + id + "' has no test row; loaded train only");
    } else {
      series.observations.insert(series.observations.end(), it->second.begin(),
                                 it->second.end());
    }
    if (series.length() < lag + 1) {
      result.warnings.push_back("series '" + id + "' too short (" +
                                std::to_string(series.length()) + " < " +
                                std::to_string(lag + 1) + "); skipped");
      continue;
    }
    result.series.push_back(std::move(series));
  }
  for (auto& [id, values] : test) {
    if (!train.count(id)) {
      result.warnings.push_back("series '" + id + "' present in test only; ignored");
    }
  }
  return result;
}

inline ScaledSeries minmax_scale(const RawSeries& series) {
  if (series.observations.empty()) throw SeriesTooShort("cannot scale an empty series");
  const auto [min_it, max_it] =
      std::minmax_element(series.observations.begin(), series.observations.end());
  ScaledSeries scaled;
  scaled.id = series.id;
  scaled.scale_min = *min_it;
  scaled.scale_max = *max_it;
  scaled.degenerate = !(*max_it > *min_it);
  scaled.values.reserve(series.length());
  const double span = *max_it - *min_it;
  for (double y : series.observations) {
    scaled.values.push_back(scaled.degenerate ? 0.0 : (y - scaled.scale_min) / span);
  }
  return scaled;
}

/// Builds the (T-b) x b input matrix and (T-b) target vector.
inline SupervisedFrame embed_lags(const ScaledSeries& scaled, std::size_t lag) {
  if (lag < 1) throw SeriesTooShort("lag must be positive");
  if (scaled.length() < lag + 1) {
    throw SeriesTooShort("series '" + scaled.id + "' has length " +
                         std::to_string(scaled.length()) + " < lag+1 = " +
                         std::to_string(lag + 1));
  }
  SupervisedFrame frame;
  frame.lag = lag;
  frame.rows = scaled.length() - lag;
  frame.inputs.reserve(frame.rows * lag);
  frame.targets.reserve(frame.rows);
  for (std::size_t r = 0; r < frame.rows; ++r) {
    for (std::size_t c = 0; c < lag; ++c) frame.inputs.push_back(scaled.values[r + c]);
    frame.targets.push_back(scaled.values[r + lag]);
  }
  return frame;
}

/// Multi-step prediction by recursion: predict one step, append it to the
/// window, drop the oldest value, repeat h times.
inline std::vector<double> recursive_forecast(
    const std::function<double(std::span<const double>)>& predict_one,
    std::span<const double> last_window, std::size_t horizon) {
  std::vector<double> window(last_window.begin(), last_window.end());
  std::vector<double> preds;
  preds.reserve(horizon);
  for (std::size_t step = 0; step < horizon; ++step) {
    const double next = predict_one(window);
    preds.push_back(next);
    window.erase(window.begin());
    window.push_back(next);
  }
  return preds;
}

/// Maps scaled predictions back to original units. Values are not clamped to
/// [0, 1] first; out-of-range forecasts extrapolate linearly.
inline std::vector<double> invert_scale(std::span<const double> preds, double scale_min,
                                        double scale_max) {
  std::vector<double> out;
  out.reserve(preds.size());
  for (double p : preds) out.push_back(scale_min + p * (scale_max - scale_min));
  return out;
}

/// Series-length histogram as `length_bin,count` CSV with fixed-width bins;
/// bins are labeled by their lower edge and cover min..max length.
inline std::string length_histogram_csv(const std::vector<RawSeries>& series,
                                        std::size_t bin_width = 100) {
  std::string out = "length_bin,count\n";
  if (series.empty() || bin_width == 0) return out;
  std::size_t min_len = series.front().length(), max_len = min_len;
  for (const auto& s : series) {
    min_len = std::min(min_len, s.length());
    max_len = std::max(max_len, s.length());
  }
  const std::size_t first_bin = (min_len / bin_width) * bin_width;
  const std::size_t last_bin = (max_len / bin_width) * bin_width;
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t bin = first_bin; bin <= last_bin; bin += bin_width) counts[bin] = 0;
  for (const auto& s : series) counts[(s.length() / bin_width) * bin_width]++;
  for (const auto& [bin, count] : counts) {
    out += std::to_string(bin) + ',' + std::to_string(count) + '\n';
  }
  return out;
}

/// Scaled-series dump, one row per series: id followed by scaled values.
inline std::string scaled_series_csv(const std::vector<ScaledSeries>& series) {
  std::string out;
  for (const auto& s : series) {
    out += s.id;
    for (double v : s.values) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace dpcombine

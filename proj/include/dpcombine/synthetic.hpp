#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dpcombine/csv.hpp"
#include "dpcombine/rng.hpp"
#include "dpcombine/series.hpp"

namespace dpcombine {

/// Weekly-style synthetic corpus: AR(1) noise on top of a linear trend and a
/// two-harmonic annual seasonality. Stands in for the real weekly benchmark
/// when that data is not on disk; generation is a pure function of the seed.
struct SyntheticConfig {
  std::size_t series_count = 20;
  std::size_t min_length = 280;   // total length including the held-out tail
  std::size_t max_length = 420;
  std::size_t horizon = 13;
  std::size_t season_period = 52;
  std::uint64_t seed = 7;
};

inline std::vector<RawSeries> synthetic_corpus(const SyntheticConfig& config) {
  std::vector<RawSeries> corpus;
  corpus.reserve(config.series_count);
  for (std::size_t s = 0; s < config.series_count; ++s) {
    RandomStream rng = derive_stream(config.seed, "synth/" + std::to_string(s));
    const std::size_t span = config.max_length - config.min_length + 1;
    const std::size_t length = config.min_length + rng.uniform_index(span);
    const double level = 50.0 + 450.0 * rng.uniform01();
    const double trend = (-0.2 + 0.6 * rng.uniform01()) * level / 100.0;
    const double season_amp = (0.10 + 0.25 * rng.uniform01()) * level;
    const double phase1 = 2.0 * std::numbers::pi * rng.uniform01();
    const double phase2 = 2.0 * std::numbers::pi * rng.uniform01();
    const double ar_coeff = 0.55 + 0.35 * rng.uniform01();
    const double innovation_sd = (0.02 + 0.05 * rng.uniform01()) * level;

    RawSeries series;
    series.id = "S" + std::to_string(s + 1);
    series.horizon = config.horizon;
    series.observations.reserve(length);
    const double w = 2.0 * std::numbers::pi / static_cast<double>(config.season_period);
    double ar = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      // Box-Muller innovation.
      const double u1 = rng.uniform_open0();
      const double u2 = rng.uniform01();
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      ar = ar_coeff * ar + innovation_sd * z;
      const double td = static_cast<double>(t);
      const double season = season_amp * (std::sin(w * td + phase1) +
                                          0.35 * std::sin(2.0 * w * td + phase2));
      series.observations.push_back(level + trend * td + season + ar);
    }
    corpus.push_back(std::move(series));
  }
  return corpus;
}

/// Writes a corpus as M4-style train/test CSVs: the last `horizon` points of
/// each series form its test row.
inline void write_m4_csvs(const std::vector<RawSeries>& corpus, const std::string& train_path,
                          const std::string& test_path) {
  std::string train, test;
  for (const auto& series : corpus) {
    const std::size_t split = series.length() - series.horizon;
    train += series.id;
    for (std::size_t t = 0; t < split; ++t) {
      train += ',';
      train += fmt_double(series.observations[t]);
    }
    train += '\n';
    test += series.id;
    for (std::size_t t = split; t < series.length(); ++t) {
      test += ',';
      test += fmt_double(series.observations[t]);
    }
    test += '\n';
  }
  write_text_file(train_path, train);
  write_text_file(test_path, test);
}

}  // namespace dpcombine

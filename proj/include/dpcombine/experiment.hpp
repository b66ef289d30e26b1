#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dpcombine/csv.hpp"
#include "dpcombine/dp_sampler.hpp"
#include "dpcombine/ensemble.hpp"
#include "dpcombine/errors.hpp"
#include "dpcombine/evaluation.hpp"
#include "dpcombine/rng.hpp"
#include "dpcombine/series.hpp"
#include "dpcombine/training.hpp"

namespace dpcombine {

/// How the drawn combination-weight vector is assigned to pool members.
/// `Ranked` (default) pairs the largest weights with the most-annealed
/// snapshots at the head of the pool; `Drawn` keeps raw stick order.
enum class WeightAlignment { Ranked, Drawn };

inline const std::vector<std::string>& known_strategies() {
  static const std::vector<std::string> k = {"single", "simple", "weighted", "mixed", "trimmed"};
  return k;
}

struct ExperimentConfig {
  std::string train_csv;
  std::string test_csv;
  std::string out_dir;

  std::size_t lag = 7;
  std::size_t horizon = 13;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  double dropout = 0.2;
  std::size_t iterations_per_segment = 200;  // I
  std::vector<std::size_t> model_counts = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

  double alpha = 1000.0;
  double exp_mean = 1e-3;
  double normal_mean = 1e-3;
  double normal_sd = 1e-2;
  double beta_a = 1.0;
  double beta_b = 1000.0;
  double support_lo = 1e-8;
  double support_hi = 1.0;

  double single_rate = 1e-3;
  /// Iteration budget of the fixed-rate control model; 0 means
  /// max(model_counts) * iterations_per_segment, the largest ensemble budget.
  std::size_t single_total_iterations = 0;

  std::vector<std::string> strategies = {"single", "simple", "weighted", "mixed"};
  std::size_t series_limit = 20;
  std::uint64_t master_seed = 1;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool original_units = false;
  bool paper_exact_diversity = false;
  WeightAlignment weight_alignment = WeightAlignment::Ranked;
  std::size_t trim_k = 0;  // 0: half the pool, at least 2
  bool dump_scaled = false;
  bool save_checkpoints = false;

  bool has_strategy(const std::string& name) const {
    return std::find(strategies.begin(), strategies.end(), name) != strategies.end();
  }

  bool needs_pools() const {
    return has_strategy("simple") || has_strategy("weighted") || has_strategy("mixed") ||
           has_strategy("trimmed");
  }

  std::size_t single_budget() const {
    if (single_total_iterations > 0) return single_total_iterations;
    std::size_t max_p = 1;
    for (std::size_t p : model_counts) max_p = std::max(max_p, p);
    return max_p * iterations_per_segment;
  }

  void validate() const {
    if (train_csv.empty() || test_csv.empty()) throw ConfigInvalid("data paths are required");
    if (lag < 1 || horizon < 1) throw ConfigInvalid("lag and horizon must be positive");
    if (series_limit < 1) throw ConfigInvalid("series limit must be >= 1");
    if (strategies.empty()) throw ConfigInvalid("at least one strategy is required");
    for (const auto& s : strategies) {
      const auto& known = known_strategies();
      if (std::find(known.begin(), known.end(), s) == known.end()) {
        throw ConfigInvalid("unknown strategy '" + s + "'");
      }
    }
    if (needs_pools() && model_counts.empty()) {
      throw ConfigInvalid("model counts are required for ensemble strategies");
    }
    for (std::size_t p : model_counts) {
      if (p < 1) throw ConfigInvalid("every model count must be >= 1");
    }
    if (!(single_rate > 0.0)) throw ConfigInvalid("single-model learning rate must be positive");
    if (!(alpha > 0.0)) throw ConfigInvalid("alpha must be positive");
  }
};

inline std::vector<std::pair<std::string, BaseDistributionSpec>> base_distributions(
    const ExperimentConfig& config) {
  auto with_support = [&](BaseDistributionSpec spec) {
    spec.lo = config.support_lo;
    spec.hi = config.support_hi;
    return spec;
  };
  return {
      {"exp", with_support(BaseDistributionSpec::exponential(config.exp_mean))},
      {"beta", with_support(BaseDistributionSpec::beta(config.beta_a, config.beta_b))},
      {"normal",
       with_support(BaseDistributionSpec::truncated_gaussian(config.normal_mean, config.normal_sd))},
  };
}

struct DiversityEntry {
  std::string distribution;  // exp | beta | normal | mixed
  std::size_t pool_size = 0;
  std::vector<double> matrix;
};

struct ExperimentResult {
  std::vector<MetricReport> reports;
  std::vector<DiversityEntry> diversity;
  std::vector<std::string> warnings;
  std::size_t loaded_series = 0;
  std::size_t evaluated_series = 0;
  std::size_t diverged_series = 0;
};

inline const MetricReport* find_report(const std::vector<MetricReport>& reports,
                                       const std::string& strategy,
                                       const std::string& distribution, std::size_t p) {
  for (const auto& r : reports) {
    if (r.strategy == strategy && r.distribution == distribution && r.pool_size == p) return &r;
  }
  return nullptr;
}

namespace detail {

struct SeriesTask {
  RawSeries raw;
};

struct SeriesOutcome {
  std::string id;
  bool usable = false;
  std::string note;
  std::exception_ptr failure;

  double scale_min = 0.0;
  double scale_max = 0.0;
  std::vector<double> actual_scaled;
  std::vector<double> actual_original;
  std::vector<double> single_forecast;               // scaled space
  std::vector<std::vector<ForecastTensor>> tensors;  // [distribution][p index], scaled space
};

struct GlobalDraws {
  // Indexed [distribution][p index]; mixed weights indexed [p index].
  std::vector<std::vector<std::vector<double>>> rates;
  std::vector<std::vector<std::vector<double>>> weights;
  std::vector<std::vector<double>> mixed_weights;
};

inline std::string rates_label(const std::string& dist, std::size_t p) {
  return "rates/" + dist + "/p=" + std::to_string(p);
}

inline std::string weights_label(const std::string& dist, std::size_t p) {
  return "weights/" + dist + "/p=" + std::to_string(p);
}

inline std::string series_train_label(const std::string& id, const std::string& dist,
                                      std::size_t p) {
  return "series/" + id + "/train/" + dist + "/p=" + std::to_string(p);
}

inline std::string series_single_label(const std::string& id) { return "series/" + id + "/single"; }

inline SeriesOutcome run_series_task(const RawSeries& raw, const ExperimentConfig& config,
                                     const std::vector<std::pair<std::string, BaseDistributionSpec>>& dists,
                                     const GlobalDraws& draws) {
  SeriesOutcome out;
  out.id = raw.id;
  try {
    const std::size_t total = raw.length();
    if (total < config.horizon + config.lag + 1) {
      out.note = "series '" + raw.id + "' too short to hold out " +
                 std::to_string(config.horizon) + " points; skipped";
      return out;
    }
    const ScaledSeries scaled = minmax_scale(raw);
    const std::size_t train_len = total - config.horizon;

    ScaledSeries train_part;
    train_part.id = scaled.id;
    train_part.scale_min = scaled.scale_min;
    train_part.scale_max = scaled.scale_max;
    train_part.degenerate = scaled.degenerate;
    train_part.values.assign(scaled.values.begin(),
                             scaled.values.begin() + static_cast<std::ptrdiff_t>(train_len));
    const SupervisedFrame frame = embed_lags(train_part, config.lag);

    const std::span<const double> window =
        std::span<const double>(scaled.values).subspan(train_len - config.lag, config.lag);
    out.scale_min = scaled.scale_min;
    out.scale_max = scaled.scale_max;
    out.actual_scaled.assign(scaled.values.begin() + static_cast<std::ptrdiff_t>(train_len),
                             scaled.values.end());
    out.actual_original.assign(raw.observations.begin() + static_cast<std::ptrdiff_t>(train_len),
                               raw.observations.end());

    if (config.has_strategy("single")) {
      TrainingConfig tc;
      tc.lag = config.lag;
      tc.hidden1 = config.hidden1;
      tc.hidden2 = config.hidden2;
      tc.dropout_rate = config.dropout;
      tc.iterations_per_segment = config.single_budget();
      tc.schedule = {config.single_rate};
      tc.seed = derive_seed(config.master_seed, series_single_label(raw.id));
      RandomStream rng(tc.seed);
      const auto checkpoints = train_with_schedule(frame, tc, rng);
      out.single_forecast = recursive_forecast(
          [&](std::span<const double> w) { return predict(checkpoints.back().params, w); },
          window, config.horizon);
    }

    if (config.needs_pools()) {
      out.tensors.resize(dists.size());
      for (std::size_t d = 0; d < dists.size(); ++d) {
        out.tensors[d].resize(config.model_counts.size());
        for (std::size_t pi = 0; pi < config.model_counts.size(); ++pi) {
          TrainingConfig tc;
          tc.lag = config.lag;
          tc.hidden1 = config.hidden1;
          tc.hidden2 = config.hidden2;
          tc.dropout_rate = config.dropout;
          tc.iterations_per_segment = config.iterations_per_segment;
          tc.schedule = draws.rates[d][pi];
          tc.seed = derive_seed(config.master_seed,
                                series_train_label(raw.id, dists[d].first, config.model_counts[pi]));
          RandomStream rng(tc.seed);
          const auto checkpoints = train_with_schedule(frame, tc, rng);
          const ModelPool pool = build_pool(checkpoints, dists[d].first);
          ForecastTensor tensor = predict_pool(pool, window, config.horizon);
          tensor.series_id = raw.id;
          out.tensors[d][pi] = std::move(tensor);
        }
      }
    }
    out.usable = true;
  } catch (const DivergenceDetected& e) {
    out.note = "series '" + raw.id + "' diverged: " + e.what();
    out.usable = false;
    out.failure = nullptr;
    out.tensors.clear();
    out.single_forecast.clear();
    // Divergence is reported, not fatal.
    out.note += " (excluded from aggregates)";
    out.failure = nullptr;
    out.single_forecast.clear();
    out.actual_scaled.clear();
    out.actual_original.clear();
    out.note = out.note;  // keep
    out.skipped_by_divergence = true;
  } catch (...) {
    out.failure = std::current_exception();
  }
  return out;
}

}  // namespace detail

}  // namespace dpcombine

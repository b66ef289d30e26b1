#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpcombine/checkpoint.hpp"
#include "dpcombine/errors.hpp"
#include "dpcombine/lstm.hpp"
#include "dpcombine/rng.hpp"
#include "dpcombine/series.hpp"

namespace dpcombine {

struct TrainingConfig {
  std::size_t lag = 7;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  double dropout_rate = 0.2;
  std::size_t iterations_per_segment = 200;  // I
  std::vector<double> schedule;              // descending learning rates, length p
  std::uint64_t seed = 0;
  Activation head_act1 = Activation::Tanh;
  Activation head_act2 = Activation::Identity;

  void validate() const {
    if (lag < 1 || hidden1 < 1 || hidden2 < 1) throw ConfigInvalid("sizes must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ConfigInvalid("dropout rate must lie in [0, 1)");
    }
    if (iterations_per_segment < 1) throw ConfigInvalid("iterations per segment must be >= 1");
    if (schedule.empty()) throw ConfigInvalid("schedule must hold at least one learning rate");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i] > 0.0)) throw ConfigInvalid("learning rates must be positive");
      if (i > 0 && schedule[i] > schedule[i - 1]) {
        throw ConfigInvalid("schedule must be non-increasing");
      }
    }
  }

  std::size_t total_iterations() const { return schedule.size() * iterations_per_segment; }
};

/// One scheduled training run. Runs p*I stochastic-gradient iterations (one
/// randomly drawn frame row each, plain SGD); segment j holds the rate
/// schedule[j], and a checkpoint is snapshotted at the end of every segment,
/// so a single run yields the whole base-model pool.
///
/// The stream seeds initialization, row sampling and dropout, so a fixed
/// config and seed reproduce the checkpoint sequence bit for bit.
inline std::vector<Checkpoint> train_with_schedule(const SupervisedFrame& frame,
                                                   const TrainingConfig& config,
                                                   RandomStream& rng) {
  config.validate();
  if (frame.rows == 0) throw SeriesTooShort("training frame is empty");
  if (frame.lag != config.lag) {
    throw ShapeMismatch("frame lag " + std::to_string(frame.lag) +
                        " does not match training lag " + std::to_string(config.lag));
  }

  LstmParams params;
  params.resize(config.lag, config.hidden1, config.hidden2);
  params.dropout_rate = config.dropout_rate;
  params.head_act1 = config.head_act1;
  params.head_act2 = config.head_act2;
  init_params(params, rng);

  std::vector<Checkpoint> checkpoints;
  checkpoints.reserve(config.schedule.size());
  std::size_t iteration = 0;
  for (std::size_t segment = 0; segment < config.schedule.size(); ++segment) {
    const double rate = config.schedule[segment];
    for (std::size_t step = 0; step < config.iterations_per_segment; ++step) {
      ++iteration;
      const std::size_t row = rng.uniform_index(frame.rows);
      ForwardCache cache = forward_train(params, frame.row(row), rng);
      const double err = cache.prediction - frame.targets[row];
      if (!std::isfinite(err * err)) throw DivergenceDetected(segment + 1, iteration);
      LstmParams grads = backward(cache, frame.targets[row], params);
      sgd_update(params, grads, rate);
    }
    Checkpoint c;
    c.params = params;
    c.segment_index = segment + 1;
    c.iteration = iteration;
    c.learning_rate_at_save = rate;
    c.train_seed = config.seed;
    checkpoints.push_back(std::move(c));
  }
  return checkpoints;
}

}  // namespace dpcombine

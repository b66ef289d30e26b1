#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dpcombine/checkpoint.hpp"
#include "dpcombine/csv.hpp"
#include "dpcombine/errors.hpp"
#include "dpcombine/series.hpp"

namespace dpcombine {

/// One base model inside a pool. The checkpoint may live in memory, on disk
/// behind `checkpoint_path`, or both.
struct PoolMember {
  std::shared_ptr<const Checkpoint> checkpoint;
  std::string checkpoint_path;
  std::string provenance;  // exp | beta | normal | mixed
  double learning_rate = 0.0;
  std::size_t segment_index = 0;
};

/// Ordered collection of base models.
///
/// Member order is part of the contract because combination weights align by
/// index: members sit in reverse training order, the most-annealed snapshot
/// first (descending segment index, equivalently ascending learning rate).
/// The leading stick-breaking weights, which are stochastically the largest,
/// therefore land on the snapshots trained furthest down the schedule.
struct ModelPool {
  std::vector<PoolMember> members;

  std::size_t size() const { return members.size(); }
};

/// Builds a pool from one training run's checkpoint sequence.
inline ModelPool build_pool(const std::vector<Checkpoint>& checkpoints,
                            const std::string& provenance,
                            const std::vector<std::string>& paths = {}) {
  if (checkpoints.empty()) throw InsufficientMembers("cannot build a pool from zero checkpoints");
  ModelPool pool;
  pool.members.reserve(checkpoints.size());
  for (std::size_t i = checkpoints.size(); i-- > 0;) {
    PoolMember m;
    m.checkpoint = std::make_shared<Checkpoint>(checkpoints[i]);
    if (i < paths.size()) m.checkpoint_path = paths[i];
    m.provenance = provenance;
    m.learning_rate = checkpoints[i].learning_rate_at_save;
    m.segment_index = checkpoints[i].segment_index;
    pool.members.push_back(std::move(m));
  }
  return pool;
}

/// Per-series forecasts of every pool member: entry (i, h) is member i's
/// h-step-ahead scaled forecast.
struct ForecastTensor {
  std::string series_id;
  std::size_t pool_size = 0;
  std::size_t horizon = 0;
  std::vector<double> values;  // pool_size x horizon, row-major

  double at(std::size_t member, std::size_t step) const {
    return values[member * horizon + step];
  }

  std::span<const double> row(std::size_t member) const {
    return std::span<const double>(values).subspan(member * horizon, horizon);
  }
};

namespace detail {

inline const Checkpoint& resolve_member(const PoolMember& member, std::size_t index,
                                        std::shared_ptr<const Checkpoint>& holder) {
  if (member.checkpoint) return *member.checkpoint;
  if (member.checkpoint_path.empty()) {
    throw CorruptFile("pool member " + std::to_string(index) +
                          " has neither an in-memory checkpoint nor a path",
                      static_cast<std::ptrdiff_t>(index));
  }
  try {
    holder = std::make_shared<Checkpoint>(load_checkpoint(member.checkpoint_path));
  } catch (const CorruptFile& e) {
    throw CorruptFile(std::string(e.what()) + " (pool member " + std::to_string(index) + ")",
                      static_cast<std::ptrdiff_t>(index));
  }
  return *holder;
}

}  // namespace detail

/// Loads every on-disk member into memory. Corruption reports the offending
/// member index.
inline void load_pool(ModelPool& pool) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.members[i].checkpoint) continue;
    std::shared_ptr<const Checkpoint> holder;
    detail::resolve_member(pool.members[i], i, holder);
    pool.members[i].checkpoint = holder;
  }
}

/// Runs the recursive forecaster of every member over the same window.
inline ForecastTensor predict_pool(const ModelPool& pool, std::span<const double> window,
                                   std::size_t horizon) {
  if (pool.size() == 0) throw InsufficientMembers("empty pool");
  ForecastTensor tensor;
  tensor.pool_size = pool.size();
  tensor.horizon = horizon;
  tensor.values.reserve(pool.size() * horizon);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::shared_ptr<const Checkpoint> holder;
    const Checkpoint& c = detail::resolve_member(pool.members[i], i, holder);
    const auto preds = recursive_forecast(
        [&c](std::span<const double> w) { return predict(c.params, w); }, window, horizon);
    for (double v : preds) {
      if (!std::isfinite(v)) {
        throw Error("non-finite forecast from pool member " + std::to_string(i));
      }
      tensor.values.push_back(v);
    }
  }
  return tensor;
}

/// Column-wise arithmetic mean across the pool.
inline std::vector<double> combine_simple(const ForecastTensor& tensor) {
  if (tensor.pool_size == 0) throw InsufficientMembers("empty forecast tensor");
  std::vector<double> out(tensor.horizon, 0.0);
  for (std::size_t i = 0; i < tensor.pool_size; ++i) {
    for (std::size_t h = 0; h < tensor.horizon; ++h) out[h] += tensor.at(i, h);
  }
  for (double& v : out) v /= static_cast<double>(tensor.pool_size);
  return out;
}

/// Nonnegative raw weights plus their normalization to the simplex.
struct CombinationWeights {
  std::vector<double> raw;
  std::vector<double> normalized;

  static CombinationWeights from_raw(std::vector<double> raw) {
    CombinationWeights w;
    double total = 0.0;
    for (double v : raw) {
      if (!(v >= 0.0)) throw InvalidWeights("raw weights must be nonnegative");
      total += v;
    }
    if (!(total > 0.0)) throw InvalidWeights("raw weights must not all be zero");
    w.normalized.reserve(raw.size());
    for (double v : raw) w.normalized.push_back(v / total);
    w.raw = std::move(raw);
    return w;
  }
};

/// Weighted average across the pool: output_h = sum_i normalized_i * f_ih.
inline std::vector<double> combine_weighted(const ForecastTensor& tensor,
                                            const CombinationWeights& weights) {
  if (weights.normalized.size() != tensor.pool_size) {
    throw LengthMismatch("weight vector length " + std::to_string(weights.normalized.size()) +
                         " does not match pool size " + std::to_string(tensor.pool_size));
  }
  std::vector<double> out(tensor.horizon, 0.0);
  for (std::size_t i = 0; i < tensor.pool_size; ++i) {
    const double w = weights.normalized[i];
    for (std::size_t h = 0; h < tensor.horizon; ++h) out[h] += w * tensor.at(i, h);
  }
  return out;
}

/// Normalization of the pairwise diversity sum. The squared disagreement
/// is averaged per (series, horizon step) by default; the literal prefactor
/// variant divides by horizon^2 instead and ignores the series count.
enum class DiversityNormalization { PerSeriesStep, HorizonSquared };

/// Pairwise diversity matrix over N series:
/// DIV_{i,j} = norm * sum_k sum_h (f_ikh - f_jkh)^2.
inline std::vector<double> diversity_matrix(
    const std::vector<ForecastTensor>& tensors, std::size_t pool_size,
    DiversityNormalization norm = DiversityNormalization::PerSeriesStep) {
  if (tensors.empty()) throw InconsistentShapes("diversity needs at least one series");
  const std::size_t horizon = tensors.front().horizon;
  for (const auto& t : tensors) {
    if (t.pool_size != pool_size || t.horizon != horizon) {
      throw InconsistentShapes("forecast tensors disagree on pool size or horizon");
    }
  }
  std::vector<double> div(pool_size * pool_size, 0.0);
  for (const auto& t : tensors) {
    for (std::size_t i = 0; i < pool_size; ++i) {
      for (std::size_t j = i + 1; j < pool_size; ++j) {
        double acc = 0.0;
        for (std::size_t h = 0; h < horizon; ++h) {
          const double d = t.at(i, h) - t.at(j, h);
          acc += d * d;
        }
        div[i * pool_size + j] += acc;
      }
    }
  }
  const double scale =
      norm == DiversityNormalization::PerSeriesStep
          ? 1.0 / (static_cast<double>(tensors.size()) * static_cast<double>(horizon))
          : 1.0 / (static_cast<double>(horizon) * static_cast<double>(horizon));
  for (std::size_t i = 0; i < pool_size; ++i) {
    for (std::size_t j = i + 1; j < pool_size; ++j) {
      div[i * pool_size + j] *= scale;
      div[j * pool_size + i] = div[i * pool_size + j];
    }
  }
  return div;
}

inline double mean_offdiagonal(const std::vector<double>& div, std::size_t pool_size) {
  if (pool_size < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pool_size; ++i) {
    for (std::size_t j = 0; j < pool_size; ++j) {
      if (i != j) acc += div[i * pool_size + j];
    }
  }
  return acc / static_cast<double>(pool_size * (pool_size - 1));
}

/// Mixed pool: floor(p/3) members from each source in index order; the
/// remainder (p mod 3) takes one extra member from exp, then beta.
inline ModelPool mixed_pool(const ModelPool& pool_exp, const ModelPool& pool_beta,
                            const ModelPool& pool_normal, std::size_t p) {
  const std::size_t base = p / 3;
  const std::size_t remainder = p % 3;
  const std::size_t need = (p + 2) / 3;
  for (const ModelPool* src : {&pool_exp, &pool_beta, &pool_normal}) {
    if (src->size() < need) {
      throw InsufficientMembers("mixed pool needs at least " + std::to_string(need) +
                                " members per source, have " + std::to_string(src->size()));
    }
  }
  const std::size_t take_exp = base + (remainder >= 1 ? 1 : 0);
  const std::size_t take_beta = base + (remainder >= 2 ? 1 : 0);
  ModelPool mixed;
  mixed.members.reserve(p);
  for (std::size_t i = 0; i < take_exp; ++i) mixed.members.push_back(pool_exp.members[i]);
  for (std::size_t i = 0; i < take_beta; ++i) mixed.members.push_back(pool_beta.members[i]);
  for (std::size_t i = 0; i < base; ++i) mixed.members.push_back(pool_normal.members[i]);
  return mixed;
}

/// Greedy diversity trimming: seed with the pair of maximal DIV, then
/// repeatedly add the member with the largest total DIV against the selected
/// set until K members remain. Ties break toward the lowest index; K = 1
/// degenerates to the lower-index member of the best pair. The result keeps
/// index order.
inline ModelPool trim_by_diversity(const ModelPool& pool, const std::vector<double>& div,
                                   std::size_t k) {
  const std::size_t p = pool.size();
  if (div.size() != p * p) throw InconsistentShapes("diversity matrix does not match pool size");
  if (k == 0 || k > p) throw InsufficientMembers("trim size must lie in [1, pool size]");
  std::vector<std::size_t> selected;
  if (k >= p) {
    ModelPool out = pool;
    return out;
  }
  std::size_t best_i = 0, best_j = std::min<std::size_t>(1, p - 1);
  double best = -1.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      if (div[i * p + j] > best) {
        best = div[i * p + j];
        best_i = i;
        best_j = j;
      }
    }
  }
  if (k == 1) {
    selected = {best_i};
  } else {
    selected = {best_i, best_j};
    std::vector<bool> in(p, false);
    in[best_i] = in[best_j] = true;
    while (selected.size() < k) {
      std::size_t pick = p;
      double pick_score = -1.0;
      for (std::size_t c = 0; c < p; ++c) {
        if (in[c]) continue;
        double score = 0.0;
        for (std::size_t s : selected) score += div[c * p + s];
        if (score > pick_score) {
          pick_score = score;
          pick = c;
        }
      }
      in[pick] = true;
      selected.push_back(pick);
    }
  }
  std::sort(selected.begin(), selected.end());
  ModelPool out;
  out.members.reserve(selected.size());
  for (std::size_t s : selected) out.members.push_back(pool.members[s]);
  return out;
}

/// CSV export of a diversity matrix: p rows of p entries.
inline std::string diversity_csv(const std::vector<double>& div, std::size_t pool_size) {
  std::string out;
  for (std::size_t i = 0; i < pool_size; ++i) {
    for (std::size_t j = 0; j < pool_size; ++j) {
      if (j) out += ',';
      out += fmt_double(div[i * pool_size + j]);
    }
    out += '\n';
  }
  return out;
}

/// Pool manifest CSV: member index, provenance, learning rate, segment, path.
inline std::string pool_manifest_csv(const ModelPool& pool) {
  std::string out = "member_index,provenance,learning_rate,segment_index,checkpoint_path\n";
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const PoolMember& m = pool.members[i];
    out += std::to_string(i) + ',' + m.provenance + ',' + fmt_double(m.learning_rate) + ',' +
           std::to_string(m.segment_index) + ',' + m.checkpoint_path + '\n';
  }
  return out;
}

}  // namespace dpcombine

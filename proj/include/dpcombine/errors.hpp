#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpcombine {

/// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- sampling ---

/// Rejection sampling gave up; the truncation window is infeasible.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

// --- data loading ---

class IoFailure : public Error {
 public:
  using Error::Error;
};

/// A CSV cell that should be numeric is not. Carries series id and column.
class MalformedRow : public Error {
 public:
  MalformedRow(const std::string& series_id, std::size_t column, const std::string& cell)
      : Error("malformed row: series '" + series_id + "', column " + std::to_string(column) +
              ", cell '" + cell + "'"),
        series_id_(series_id),
        column_(column) {}

  const std::string& series_id() const { return series_id_; }
  std::size_t column() const { return column_; }

 private:
  std::string series_id_;
  std::size_t column_;
};

class SeriesTooShort : public Error {
 public:
  using Error::Error;
};

// --- model / checkpoint ---

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DivergenceDetected : public Error {
 public:
  DivergenceDetected(std::size_t segment, std::size_t iteration)
      : Error("training diverged in segment " + std::to_string(segment) + " at iteration " +
              std::to_string(iteration)),
        segment_(segment),
        iteration_(iteration) {}

  std::size_t segment() const { return segment_; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t segment_;
  std::size_t iteration_;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class CorruptFile : public Error {
 public:
  explicit CorruptFile(const std::string& what, std::ptrdiff_t member_index = -1)
      : Error(what), member_index_(member_index) {}

  /// Pool member that failed to load, or -1 outside pool context.
  std::ptrdiff_t member_index() const { return member_index_; }

 private:
  std::ptrdiff_t member_index_;
};

// --- combination / evaluation ---

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InconsistentShapes : public Error {
 public:
  using Error::Error;
};

class InsufficientMembers : public Error {
 public:
  using Error::Error;
};

class InvalidWeights : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

// --- experiment orchestration ---

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

class DataLoadFailure : public Error {
 public:
  using Error::Error;
};

/// emit_tables found a hole in the (strategy, p) grid.
class IncompleteGrid : public Error {
 public:
  IncompleteGrid(const std::string& strategy, std::size_t models)
      : Error("incomplete grid: missing cell (" + strategy + ", " + std::to_string(models) + ")"),
        strategy_(strategy),
        models_(models) {}

  const std::string& strategy() const { return strategy_; }
  std::size_t models() const { return models_; }

 private:
  std::string strategy_;
  std::size_t models_;
};

}  // namespace dpcombine

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "pyramidai/geometry.hpp"
#include "pyramidai/ground_truth.hpp"

namespace pyramidai {

struct TablePrediction {
  double probability = 0.0;
  bool label = false;

  friend bool operator==(const TablePrediction&, const TablePrediction&) = default;
};

/// Recorded per-tile probabilities with their ground-truth labels.
class PredictionTable {
 public:
  /// Throws DataError for a probability outside [0, 1].
  void insert(const TileId& t, double probability, bool label);

  /// Throws MissingPredictionError when t has no entry.
  const TablePrediction& at(const TileId& t) const;
  const TablePrediction* find(const TileId& t) const;

  bool has_level(int level) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<TileId, TablePrediction>& entries() const noexcept { return entries_; }

  friend bool operator==(const PredictionTable&, const PredictionTable&) = default;

 private:
  std::map<TileId, TablePrediction> entries_;
};

/// Per-level parameters of the synthetic classifier. `sensitivity` is the
/// mean score of a positive tile (negatives mirror it at 1 - sensitivity);
/// `spread` widens the score distribution, 0 makes it degenerate.
struct OracleLevelParams {
  double sensitivity = 0.9;
  double spread = 0.25;

  friend bool operator==(const OracleLevelParams&, const OracleLevelParams&) = default;
};

/// Synthetic stand-in for a per-level tile classifier: scores are drawn from
/// a Beta distribution whose mean follows the tile's ground-truth label.
/// Every score is a pure function of (seed, tile).
class NoisyOracle {
 public:
  /// Throws ConfigError unless there is one parameter set per level with
  /// sensitivity in [0, 1] and spread >= 0.
  NoisyOracle(std::shared_ptr<const GroundTruthPyramid> truth,
              std::vector<OracleLevelParams> params, std::uint64_t seed);

  double predict(const TileId& t) const;

  const std::vector<OracleLevelParams>& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const GroundTruthPyramid& truth() const noexcept { return *truth_; }

  /// The score formula itself, exposed for tests.
  static double draw(std::uint64_t seed, const TileId& t, bool positive,
                     const OracleLevelParams& p);

 private:
  std::shared_ptr<const GroundTruthPyramid> truth_;
  std::vector<OracleLevelParams> params_;
  std::uint64_t seed_;
  std::vector<LevelGrid<double>> scores_;
};

/// Analysis-block stand-in: returns a probability in [0, 1] for a tile.
class PredictionSource {
 public:
  explicit PredictionSource(PredictionTable table) : impl_(std::move(table)) {}
  explicit PredictionSource(NoisyOracle oracle) : impl_(std::move(oracle)) {}

  /// Throws MissingPredictionError when a table has no entry for t.
  double predict(const TileId& t) const;

  bool is_table() const noexcept { return std::holds_alternative<PredictionTable>(impl_); }
  const PredictionTable* table() const noexcept { return std::get_if<PredictionTable>(&impl_); }
  const NoisyOracle* oracle() const noexcept { return std::get_if<NoisyOracle>(&impl_); }

 private:
  std::variant<PredictionTable, NoisyOracle> impl_;
};

/// Scores every foreground-descended tile at every level into a table,
/// attaching ground-truth labels.
PredictionTable materialize(const GroundTruthPyramid& gt, const PredictionSource& src);

struct LabeledScore {
  double probability = 0.0;
  bool label = false;
};

/// (score, label) for every foreground-descended tile at one level.
std::vector<LabeledScore> level_scores(const GroundTruthPyramid& gt, const PredictionSource& src,
                                       int level);

/// (score, label) for every table entry at one level; throws DataError when
/// the level is absent.
std::vector<LabeledScore> level_scores(const PredictionTable& table, int level);

}  // namespace pyramidai

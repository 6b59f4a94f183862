#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pyramidai/engine.hpp"
#include "pyramidai/prediction.hpp"

namespace pyramidai {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// F-beta in count form: (1+b^2)TP / ((1+b^2)TP + b^2 FN + FP); 0 when the
/// denominator vanishes. Throws std::domain_error for beta <= 0.
double f_beta(const ConfusionCounts& c, double beta);

/// Counts of the classifier "positive iff p >= threshold".
ConfusionCounts confusion_at(std::span<const LabeledScore> scores, double threshold);

/// `size` evenly spaced values covering [0, 1] (size >= 2).
std::vector<double> threshold_grid(std::size_t size = 1001);

struct ThresholdChoice {
  double threshold = 0.0;
  double f_beta = 0.0;
};

/// Grid threshold maximizing F-beta; ties go to the largest threshold.
/// Throws std::invalid_argument for an empty or unsorted grid.
ThresholdChoice best_threshold(std::span<const LabeledScore> scores, double beta,
                               std::span<const double> grid);
/// Restricts the table to `level` first; throws DataError if it is absent.
ThresholdChoice best_threshold(const PredictionTable& table, int level, double beta,
                               std::span<const double> grid);

/// One image of a tuning corpus.
struct LabeledImage {
  std::shared_ptr<const GroundTruthPyramid> truth;
  std::shared_ptr<const PredictionSource> source;
};

struct IsolatedRetention {
  std::optional<double> retention;  // absent when the reference has no TP
  double tile_reduction = 0.0;      // reference tiles / pyramidal tiles
};

/// Runs the pyramid with `threshold` at `level` and pass-through everywhere
/// else. Throws std::out_of_range unless 1 <= level <= N.
IsolatedRetention isolated_level_retention(const GroundTruthPyramid& gt,
                                           const PredictionSource& src, int level,
                                           double threshold,
                                           double positive_threshold_l0 = 0.5);

struct TuningOptions {
  std::vector<double> betas;   // empty: 1..14
  std::size_t grid_size = 1001;
  double positive_threshold_l0 = 0.5;
};

std::vector<double> default_betas();

/// Per-level F-beta optimal thresholds for each beta, computed on the
/// pooled scores of all training images.
class ThresholdTable {
 public:
  ThresholdTable(std::span<const LabeledImage> train, const TuningOptions& opts);

  int num_levels() const noexcept { return num_levels_; }
  const std::vector<double>& betas() const noexcept { return betas_; }
  /// Zoom threshold of `level` (1..N) for betas()[beta_index].
  double threshold(std::size_t beta_index, int level) const;
  double f_beta(std::size_t beta_index, int level) const;

  ThresholdSchedule schedule(std::size_t beta_index, double positive_threshold_l0) const;

 private:
  int num_levels_ = 0;
  std::vector<double> betas_;
  std::vector<std::vector<ThresholdChoice>> choices_;  // [beta][level]
};

struct LevelSelection {
  int level = 0;
  double beta = 0.0;
  double threshold = 0.0;
  double mean_isolated_retention = 0.0;
  double mean_tile_reduction = 0.0;
};

struct MetricBasedResult {
  ThresholdSchedule schedule;
  double objective = 0.0;            // r
  double per_level_objective = 0.0;  // r^(1/N)
  std::vector<LevelSelection> levels;  // ordered N..1
  /// Product of the selected per-level isolated retentions.
  double retention_product = 1.0;
};

/// Mean over images with a defined reference; std::nullopt if none.
std::optional<double> mean_isolated_retention(std::span<const LabeledImage> images, int level,
                                              double threshold, double positive_threshold_l0,
                                              double* mean_tile_reduction = nullptr);

/// For each level independently, picks the smallest beta whose threshold
/// keeps the mean isolated retention >= r^(1/N). Throws
/// UnreachableObjectiveError naming the first level where no beta does, and
/// ConfigError for r outside (0, 1].
MetricBasedResult tune_metric_based(std::span<const LabeledImage> train, double objective_r,
                                    const TuningOptions& opts = {});

struct BetaSweepRow {
  double beta = 0.0;
  std::vector<double> thresholds;  // levels 1..N
  std::optional<double> retention;
  double tile_reduction = 0.0;
};

/// Same-beta thresholds at every level; mean full-run retention and mean
/// tile reduction over the images, rows sorted by beta.
std::vector<BetaSweepRow> tune_empirical(std::span<const LabeledImage> train,
                                         const TuningOptions& opts = {});

struct CorpusRunSummary {
  std::optional<double> mean_retention;
  double mean_tile_reduction = 0.0;
  std::size_t images_with_positives = 0;
};

/// Full pyramidal runs of `sched` on every image, averaged per image.
CorpusRunSummary evaluate_schedule(std::span<const LabeledImage> images,
                                   const ThresholdSchedule& sched);

}  // namespace pyramidai

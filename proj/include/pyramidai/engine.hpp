#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "pyramidai/geometry.hpp"
#include "pyramidai/ground_truth.hpp"
#include "pyramidai/prediction.hpp"

namespace pyramidai {

/// Zoom-in thresholds for levels N..1 plus the level-0 positive threshold.
/// A tile zooms in (or is detected positive at level 0) when p >= threshold.
class ThresholdSchedule {
 public:
  ThresholdSchedule() = default;
  /// Throws ConfigError for values outside [0, 1] or fewer than 2 levels.
  explicit ThresholdSchedule(int num_levels, double zoom_threshold = 0.0,
                             double positive_threshold_l0 = 0.5);

  static ThresholdSchedule pass_through(int num_levels, double positive_threshold_l0 = 0.5) {
    return ThresholdSchedule(num_levels, 0.0, positive_threshold_l0);
  }
  static ThresholdSchedule never_zoom(int num_levels, double positive_threshold_l0 = 0.5) {
    return ThresholdSchedule(num_levels, 1.0, positive_threshold_l0);
  }

  int num_levels() const noexcept { return static_cast<int>(zoom_.size()); }
  /// Threshold of level 1..N; throws std::out_of_range otherwise.
  double zoom(int level) const;
  void set_zoom(int level, double threshold);
  double positive_threshold_l0() const noexcept { return positive_l0_; }
  void set_positive_threshold_l0(double threshold);

  friend bool operator==(const ThresholdSchedule&, const ThresholdSchedule&) = default;

 private:
  std::vector<double> zoom_;  // index 0 unused
  double positive_l0_ = 0.5;
};

enum class Decision : std::uint8_t { Stop = 1, ZoomIn = 2, Positive = 3 };

const char* to_string(Decision d) noexcept;
/// Parses "stop", "zoom" or "pos"; throws DataError otherwise.
Decision parse_decision(std::string_view s);

/// Decision block: thresholded comparison, inclusive.
inline Decision decide(const ThresholdSchedule& sched, int level, double p) {
  if (level == 0) return p >= sched.positive_threshold_l0() ? Decision::Positive : Decision::Stop;
  return p >= sched.zoom(level) ? Decision::ZoomIn : Decision::Stop;
}

struct Node {
  double probability = 0.0;
  Decision decision = Decision::Stop;

  friend bool operator==(const Node&, const Node&) = default;
};

/// The realized pyramidal execution: every analyzed tile with its
/// probability and decision. Stored densely per level; iteration follows
/// TileId order (coarsest level first, row-major).
class ExecutionTree {
 public:
  ExecutionTree() = default;
  explicit ExecutionTree(const PyramidGeometry& geometry);

  const PyramidGeometry& geometry() const noexcept { return geometry_; }

  /// Inserting an identical node twice is a no-op; a conflicting node throws
  /// IntegrityError.
  void insert(const TileId& t, const Node& node);
  std::optional<Node> find(const TileId& t) const;
  bool contains(const TileId& t) const { return find(t).has_value(); }

  std::size_t size() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }
  std::size_t count(int level) const { return counts_.at(static_cast<std::size_t>(level)); }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  void for_each(const std::function<void(const TileId&, const Node&)>& fn) const;
  std::vector<TileId> tiles(int level) const;
  std::vector<TileId> roots() const { return tiles(geometry_.top_level()); }

  /// Union of node sets; throws IntegrityError on conflicting duplicates or
  /// mismatched geometry.
  void merge(const ExecutionTree& other);

  /// Throws IntegrityError unless every non-root node has a ZoomIn parent and
  /// level-0 nodes never zoom.
  void validate() const;

  friend bool operator==(const ExecutionTree& a, const ExecutionTree& b) {
    return a.geometry_ == b.geometry_ && a.state_ == b.state_ && a.probability_ == b.probability_;
  }

 private:
  PyramidGeometry geometry_;
  std::vector<std::vector<std::uint8_t>> state_;  // 0 = absent, else Decision
  std::vector<std::vector<double>> probability_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

/// Analyzes one tile: prediction plus decision.
inline Node analyze_tile(const PredictionSource& src, const ThresholdSchedule& sched,
                         const TileId& t) {
  const double p = src.predict(t);
  return {p, decide(sched, t.level, p)};
}

/// Coarse-to-fine execution from the level-N foreground tiles, level by
/// level in TileId order. Missing predictions propagate as
/// MissingPredictionError naming the tile.
ExecutionTree run_pyramidal(const GroundTruthPyramid& gt, const PredictionSource& src,
                            const ThresholdSchedule& sched);

/// Flat execution of every foreground-descended level-0 tile.
ExecutionTree run_reference(const GroundTruthPyramid& gt, const PredictionSource& src,
                            double positive_threshold_l0);

/// Level-0 tiles detected positive in `ref` and labelled positive.
std::vector<TileId> reference_true_positives(const ExecutionTree& ref,
                                             const GroundTruthPyramid& gt);

/// Fraction of the reference's true-positive level-0 tiles that `pyr` also
/// analyzed and detected. Throws UndefinedMetricError when the reference has
/// no true positives.
double positive_retention(const ExecutionTree& pyr, const ExecutionTree& ref,
                          const GroundTruthPyramid& gt);

/// Worst-case ratio of pyramidal to reference tile counts when nothing is
/// filtered: f^2 / (f^2 - 1) for an unbounded pyramid, or the finite sum
/// over `levels` levels. Throws std::domain_error for f < 2 or levels < 1.
double slowdown_bound(int scale_factor, std::optional<int> levels = std::nullopt);

/// Per-phase compute costs in seconds. Defaults are the measured values of
/// the reference deployment (init, per-tile analysis at levels 0..2, task
/// creation).
struct CostModel {
  double init_s = 0.02;
  std::vector<double> analysis_s = {0.33, 0.33, 0.31};
  double task_creation_s = 2.77e-5;

  /// Throws ConfigError for negative values.
  void validate() const;
};

enum class ExecutionMode { Pyramidal, Reference };

struct TimeEstimate {
  double analysis_s = 0.0;       // headline figure
  double init_s = 0.0;
  double task_creation_s = 0.0;
  double total_s = 0.0;          // analysis + init + task creation
};

/// Post-mortem time estimate from per-level analyzed counts. The headline
/// (returned by estimate_time) counts analysis blocks only.
TimeEstimate estimate_time_breakdown(const ExecutionTree& tree, const CostModel& cm,
                                     ExecutionMode mode);
double estimate_time(const ExecutionTree& tree, const CostModel& cm, ExecutionMode mode);

/// Assigns every level-0 tile under a leaf node that leaf's probability.
std::map<TileId, double> project_probabilities(const ExecutionTree& tree);

struct RunMetrics {
  std::vector<std::size_t> tiles_analyzed_per_level;
  std::size_t tiles_analyzed_total = 0;
  std::size_t tiles_reference = 0;
  std::optional<double> speedup;                  // absent when nothing was analyzed
  std::optional<double> positive_retention_rate;  // absent when the reference has no TP
  std::size_t reference_true_positives = 0;
  std::size_t retained_true_positives = 0;
  double estimated_time_s = 0.0;
  double estimated_time_with_overhead_s = 0.0;
  double reference_time_s = 0.0;
  double reference_time_with_overhead_s = 0.0;

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

RunMetrics compute_metrics(const ExecutionTree& pyr, const ExecutionTree& ref,
                           const GroundTruthPyramid& gt, const CostModel& cm = {});

}  // namespace pyramidai

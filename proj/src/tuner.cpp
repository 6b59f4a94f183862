#include "pyramidai/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pyramidai/errors.hpp"

namespace pyramidai {

double f_beta(const ConfusionCounts& c, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("f_beta needs beta > 0");
  const double b2 = beta * beta;
  const double num = (1.0 + b2) * static_cast<double>(c.tp);
  const double den = num + b2 * static_cast<double>(c.fn) + static_cast<double>(c.fp);
  return den == 0.0 ? 0.0 : num / den;
}

ConfusionCounts confusion_at(std::span<const LabeledScore> scores, double threshold) {
  ConfusionCounts c;
  for (const auto& s : scores) {
    const bool predicted = s.probability >= threshold;
    if (predicted && s.label) ++c.tp;
    else if (predicted) ++c.fp;
    else if (s.label) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::vector<double> threshold_grid(std::size_t size) {
  if (size < 2) throw ConfigError("threshold grid needs at least 2 points");
  std::vector<double> grid(size);
  const double step = 1.0 / static_cast<double>(size - 1);
  for (std::size_t i = 0; i < size; ++i) grid[i] = static_cast<double>(i) * step;
  grid.back() = 1.0;
  return grid;
}

ThresholdChoice best_threshold(std::span<const LabeledScore> scores, double beta,
                               std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("threshold grid must be sorted");
  }
  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& s : scores) (s.label ? pos : neg).push_back(s.probability);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  // Number of values >= t in a sorted vector.
  auto at_least = [](const std::vector<double>& v, double t) {
    return static_cast<std::uint64_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
  };

  ThresholdChoice best{grid.front(), -1.0};
  for (double t : grid) {
    ConfusionCounts c;
    c.tp = at_least(pos, t);
    c.fn = pos.size() - c.tp;
    c.fp = at_least(neg, t);
    c.tn = neg.size() - c.fp;
    const double f = f_beta(c, beta);
    if (f >= best.f_beta) best = {t, f};
  }
  return best;
}

ThresholdChoice best_threshold(const PredictionTable& table, int level, double beta,
                               std::span<const double> grid) {
  const auto scores = level_scores(table, level);
  return best_threshold(scores, beta, grid);
}

IsolatedRetention isolated_level_retention(const GroundTruthPyramid& gt,
                                           const PredictionSource& src, int level,
                                           double threshold, double positive_threshold_l0) {
  const int levels = gt.geometry().num_levels();
  ThresholdSchedule sched = ThresholdSchedule::pass_through(levels, positive_threshold_l0);
  sched.set_zoom(level, threshold);
  const ExecutionTree pyr = run_pyramidal(gt, src, sched);
  const ExecutionTree ref = run_reference(gt, src, positive_threshold_l0);
  const RunMetrics m = compute_metrics(pyr, ref, gt);
  return {m.positive_retention_rate, m.speedup.value_or(0.0)};
}

std::vector<double> default_betas() {
  std::vector<double> b;
  for (int i = 1; i <= 14; ++i) b.push_back(i);
  return b;
}

ThresholdTable::ThresholdTable(std::span<const LabeledImage> train, const TuningOptions& opts)
    : betas_(opts.betas.empty() ? default_betas() : opts.betas) {
  if (train.empty()) throw ConfigError("tuning needs at least one training image");
  std::sort(betas_.begin(), betas_.end());
  for (double b : betas_) {
    if (!(b > 0.0)) throw ConfigError("beta values must be positive");
  }
  num_levels_ = train.front().truth->geometry().num_levels();
  for (const auto& img : train) {
    if (img.truth->geometry().num_levels() != num_levels_) {
      throw ConfigError("training images must share the number of levels");
    }
  }
  const auto grid = threshold_grid(opts.grid_size);

  std::vector<std::vector<LabeledScore>> pooled(static_cast<std::size_t>(num_levels_));
  for (const auto& img : train) {
    for (int n = 1; n < num_levels_; ++n) {
      auto s = level_scores(*img.truth, *img.source, n);
      auto& dst = pooled[static_cast<std::size_t>(n)];
      dst.insert(dst.end(), s.begin(), s.end());
    }
  }
  for (double b : betas_) {
    std::vector<ThresholdChoice> row(static_cast<std::size_t>(num_levels_));
    for (int n = 1; n < num_levels_; ++n) {
      row[static_cast<std::size_t>(n)] = best_threshold(pooled[static_cast<std::size_t>(n)], b, grid);
    }
    choices_.push_back(std::move(row));
  }
}

double ThresholdTable::threshold(std::size_t beta_index, int level) const {
  return choices_.at(beta_index).at(static_cast<std::size_t>(level)).threshold;
}

double ThresholdTable::f_beta(std::size_t beta_index, int level) const {
  return choices_.at(beta_index).at(static_cast<std::size_t>(level)).f_beta;
}

ThresholdSchedule ThresholdTable::schedule(std::size_t beta_index,
                                           double positive_threshold_l0) const {
  ThresholdSchedule s = ThresholdSchedule::pass_through(num_levels_, positive_threshold_l0);
  for (int n = 1; n < num_levels_; ++n) s.set_zoom(n, threshold(beta_index, n));
  return s;
}

namespace {

// Reference trees are independent of the schedule; compute them once.
struct PreparedImage {
  const LabeledImage* image;
  ExecutionTree reference;
};

std::vector<PreparedImage> prepare(std::span<const LabeledImage> images, double positive_l0) {
  std::vector<PreparedImage> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    out.push_back({&img, run_reference(*img.truth, *img.source, positive_l0)});
  }
  return out;
}

CorpusRunSummary summarize(const std::vector<PreparedImage>& prepared,
                           const ThresholdSchedule& sched) {
  CorpusRunSummary out;
  double retention_sum = 0.0;
  double reduction_sum = 0.0;
  std::size_t reduction_n = 0;
  for (const auto& p : prepared) {
    const ExecutionTree pyr = run_pyramidal(*p.image->truth, *p.image->source, sched);
    const RunMetrics m = compute_metrics(pyr, p.reference, *p.image->truth);
    if (m.positive_retention_rate) {
      retention_sum += *m.positive_retention_rate;
      ++out.images_with_positives;
    }
    if (m.speedup) {
      reduction_sum += *m.speedup;
      ++reduction_n;
    }
  }
  if (out.images_with_positives > 0) {
    out.mean_retention = retention_sum / static_cast<double>(out.images_with_positives);
  }
  if (reduction_n > 0) out.mean_tile_reduction = reduction_sum / static_cast<double>(reduction_n);
  return out;
}

}  // namespace

CorpusRunSummary evaluate_schedule(std::span<const LabeledImage> images,
                                   const ThresholdSchedule& sched) {
  return summarize(prepare(images, sched.positive_threshold_l0()), sched);
}

std::optional<double> mean_isolated_retention(std::span<const LabeledImage> images, int level,
                                              double threshold, double positive_threshold_l0,
                                              double* mean_tile_reduction) {
  if (images.empty()) return std::nullopt;
  const int levels = images.front().truth->geometry().num_levels();
  ThresholdSchedule sched = ThresholdSchedule::pass_through(levels, positive_threshold_l0);
  sched.set_zoom(level, threshold);
  const auto s = summarize(prepare(images, positive_threshold_l0), sched);
  if (mean_tile_reduction) *mean_tile_reduction = s.mean_tile_reduction;
  return s.mean_retention;
}

MetricBasedResult tune_metric_based(std::span<const LabeledImage> train, double objective_r,
                                    const TuningOptions& opts) {
  if (!(objective_r > 0.0 && objective_r <= 1.0)) {
    throw ConfigError("retention objective must be in (0, 1]");
  }
  const ThresholdTable table(train, opts);
  const int levels = table.num_levels();
  const int intermediate = levels - 1;

  MetricBasedResult result;
  result.objective = objective_r;
  result.per_level_objective = std::pow(objective_r, 1.0 / intermediate);
  result.schedule = ThresholdSchedule::pass_through(levels, opts.positive_threshold_l0);

  const auto prepared = prepare(train, opts.positive_threshold_l0);
  for (int n = levels - 1; n >= 1; --n) {
    std::optional<LevelSelection> chosen;
    for (std::size_t b = 0; b < table.betas().size() && !chosen; ++b) {
      ThresholdSchedule iso = ThresholdSchedule::pass_through(levels, opts.positive_threshold_l0);
      iso.set_zoom(n, table.threshold(b, n));
      const auto s = summarize(prepared, iso);
      if (!s.mean_retention) {
        throw UndefinedMetricError("no training image has reference true positives");
      }
      if (*s.mean_retention >= result.per_level_objective) {
        chosen = LevelSelection{n, table.betas()[b], table.threshold(b, n), *s.mean_retention,
                                s.mean_tile_reduction};
      }
    }
    if (!chosen) {
      throw UnreachableObjectiveError(
          "no beta reaches isolated retention " + std::to_string(result.per_level_objective) +
              " at level " + std::to_string(n),
          n);
    }
    result.schedule.set_zoom(n, chosen->threshold);
    result.retention_product *= chosen->mean_isolated_retention;
    result.levels.push_back(*chosen);
  }
  return result;
}

std::vector<BetaSweepRow> tune_empirical(std::span<const LabeledImage> train,
                                         const TuningOptions& opts) {
  const ThresholdTable table(train, opts);
  const auto prepared = prepare(train, opts.positive_threshold_l0);
  std::vector<BetaSweepRow> rows;
  for (std::size_t b = 0; b < table.betas().size(); ++b) {
    const ThresholdSchedule sched = table.schedule(b, opts.positive_threshold_l0);
    const auto s = summarize(prepared, sched);
    BetaSweepRow row;
    row.beta = table.betas()[b];
    for (int n = 1; n < table.num_levels(); ++n) row.thresholds.push_back(table.threshold(b, n));
    row.retention = s.mean_retention;
    row.tile_reduction = s.mean_tile_reduction;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pyramidai

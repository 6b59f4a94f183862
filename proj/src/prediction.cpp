#include "pyramidai/prediction.hpp"

#include <random>

#include "pyramidai/errors.hpp"
#include "pyramidai/rng.hpp"

namespace pyramidai {

void PredictionTable::insert(const TileId& t, double probability, bool label) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw DataError("probability " + std::to_string(probability) + " for " + to_string(t) +
                    " outside [0,1]");
  }
  entries_[t] = {probability, label};
}

const TablePrediction* PredictionTable::find(const TileId& t) const {
  auto it = entries_.find(t);
  return it == entries_.end() ? nullptr : &it->second;
}

const TablePrediction& PredictionTable::at(const TileId& t) const {
  if (const auto* p = find(t)) return *p;
  throw MissingPredictionError("missing prediction for tile " + to_string(t));
}

bool PredictionTable::has_level(int level) const {
  auto it = entries_.lower_bound(TileId{level, 0, 0});
  return it != entries_.end() && it->first.level == level;
}

NoisyOracle::NoisyOracle(std::shared_ptr<const GroundTruthPyramid> truth,
                         std::vector<OracleLevelParams> params, std::uint64_t seed)
    : truth_(std::move(truth)), params_(std::move(params)), seed_(seed) {
  if (!truth_) throw ConfigError("noisy oracle needs ground truth");
  const auto& geom = truth_->geometry();
  if (params_.size() != static_cast<std::size_t>(geom.num_levels())) {
    throw ConfigError("noisy oracle needs " + std::to_string(geom.num_levels()) +
                      " level parameter sets, got " + std::to_string(params_.size()));
  }
  for (const auto& p : params_) {
    if (!(p.sensitivity >= 0.0 && p.sensitivity <= 1.0) || !(p.spread >= 0.0)) {
      throw ConfigError("oracle sensitivity must be in [0,1] and spread >= 0");
    }
  }
  scores_.reserve(params_.size());
  for (int n = 0; n < geom.num_levels(); ++n) {
    LevelGrid<double> grid(geom.cols(n), geom.rows(n));
    const Mask& labels = truth_->labels(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid[i] = draw(seed_, geom.tile_at(n, i), labels[i] != 0,
                     params_[static_cast<std::size_t>(n)]);
    }
    scores_.push_back(std::move(grid));
  }
}

double NoisyOracle::draw(std::uint64_t seed, const TileId& t, bool positive,
                         const OracleLevelParams& p) {
  const double mean = positive ? p.sensitivity : 1.0 - p.sensitivity;
  if (p.spread == 0.0 || mean == 0.0 || mean == 1.0) return mean;

  SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(t.level),
                          static_cast<std::uint64_t>(t.col), static_cast<std::uint64_t>(t.row)));
  const double concentration = 1.0 / p.spread;
  std::gamma_distribution<double> ga(mean * concentration, 1.0);
  std::gamma_distribution<double> gb((1.0 - mean) * concentration, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mean ? 1.0 : 0.0;
  return x / (x + y);
}

double NoisyOracle::predict(const TileId& t) const {
  if (!truth_->geometry().contains(t)) {
    throw MissingPredictionError("tile " + to_string(t) + " outside oracle geometry");
  }
  return scores_[static_cast<std::size_t>(t.level)](t.col, t.row);
}

double PredictionSource::predict(const TileId& t) const {
  if (const auto* table = std::get_if<PredictionTable>(&impl_)) return table->at(t).probability;
  return std::get<NoisyOracle>(impl_).predict(t);
}

PredictionTable materialize(const GroundTruthPyramid& gt, const PredictionSource& src) {
  PredictionTable out;
  const auto& geom = gt.geometry();
  for (int n = geom.top_level(); n >= 0; --n) {
    for (std::size_t i = 0; i < geom.tile_count(n); ++i) {
      const TileId t = geom.tile_at(n, i);
      if (gt.in_foreground(t)) out.insert(t, src.predict(t), gt.label(t));
    }
  }
  return out;
}

std::vector<LabeledScore> level_scores(const GroundTruthPyramid& gt, const PredictionSource& src,
                                       int level) {
  std::vector<LabeledScore> out;
  const auto& geom = gt.geometry();
  for (std::size_t i = 0; i < geom.tile_count(level); ++i) {
    const TileId t = geom.tile_at(level, i);
    if (gt.in_foreground(t)) out.push_back({src.predict(t), gt.label(t)});
  }
  return out;
}

std::vector<LabeledScore> level_scores(const PredictionTable& table, int level) {
  if (!table.has_level(level)) {
    throw DataError("prediction table has no entries at level " + std::to_string(level));
  }
  std::vector<LabeledScore> out;
  for (auto it = table.entries().lower_bound(TileId{level, 0, 0});
       it != table.entries().end() && it->first.level == level; ++it) {
    out.push_back({it->second.probability, it->second.label});
  }
  return out;
}

}  // namespace pyramidai

#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include "pyramidai/engine.hpp"
#include "pyramidai/synth.hpp"
#include "pyramidai/tuner.hpp"

namespace pyramidai::testing {

inline constexpr std::uint64_t kCorpusSeed = 20240611;
inline constexpr int kCorpusSize = 20;
inline constexpr std::size_t kTrainCount = 10;

inline LabeledImage to_labeled(SynthImage img) {
  return {img.truth, std::make_shared<const PredictionSource>(std::move(img.source))};
}

inline LabeledImage synth_image(const SynthConfig& cfg) { return to_labeled(synth_pyramid(cfg)); }

/// The seeded 20-image corpus: f = 2, three levels, grids up to 512 x 512.
inline std::vector<LabeledImage> seeded_corpus(int count = kCorpusSize, int max_grid = 512) {
  std::vector<LabeledImage> out;
  for (const auto& cfg : corpus_configs(count, kCorpusSeed, max_grid)) out.push_back(synth_image(cfg));
  return out;
}

/// Level-0 labels from a predicate over (col, row).
template <typename Pred>
Mask make_mask(int cols, int rows, Pred pred) {
  Mask m(cols, rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(c, r) = pred(c, r) ? 1 : 0;
  }
  return m;
}

inline std::shared_ptr<const GroundTruthPyramid> full_foreground_truth(const PyramidGeometry& geom,
                                                                       Mask labels) {
  const int top = geom.top_level();
  return std::make_shared<const GroundTruthPyramid>(
      geom, std::move(labels), Mask(geom.cols(top), geom.rows(top), 1));
}

/// Oracle whose scores equal the labels exactly.
inline PredictionSource exact_oracle(const std::shared_ptr<const GroundTruthPyramid>& gt) {
  std::vector<OracleLevelParams> params(static_cast<std::size_t>(gt->geometry().num_levels()),
                                        OracleLevelParams{1.0, 0.0});
  return PredictionSource(NoisyOracle(gt, std::move(params), 0));
}

/// Every tile in the tree at every level.
inline std::set<TileId> tile_set(const ExecutionTree& tree) {
  std::set<TileId> out;
  tree.for_each([&](const TileId& t, const Node&) { out.insert(t); });
  return out;
}

inline std::set<TileId> detected_positive_l0(const ExecutionTree& tree) {
  std::set<TileId> out;
  tree.for_each([&](const TileId& t, const Node& n) {
    if (t.level == 0 && n.decision == Decision::Positive) out.insert(t);
  });
  return out;
}

/// Random schedule with zoom thresholds drawn from `choices`.
template <typename Rng>
ThresholdSchedule random_schedule(int num_levels, Rng& rng, const std::vector<double>& choices) {
  ThresholdSchedule s(num_levels);
  std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
  for (int n = 1; n < num_levels; ++n) s.set_zoom(n, choices[pick(rng)]);
  return s;
}

}  // namespace pyramidai::testing

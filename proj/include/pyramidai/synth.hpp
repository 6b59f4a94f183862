#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pyramidai/ground_truth.hpp"
#include "pyramidai/prediction.hpp"

namespace pyramidai {

/// Elliptic tumor region in level-0 tile coordinates.
struct Region {
  double center_col = 0.0;
  double center_row = 0.0;
  double radius_col = 1.0;
  double radius_row = 1.0;
  double angle = 0.0;  // radians
};

struct SynthConfig {
  int grid_cols = 64;
  int grid_rows = 64;
  int scale_factor = 2;
  int num_levels = 3;

  /// Randomly placed blobs; radii in level-0 tiles.
  int region_count = 1;
  double region_radius_min = 2.0;
  double region_radius_max = 8.0;
  /// Placed verbatim in addition to the random ones.
  std::vector<Region> regions;

  /// Fraction of the image area covered by the elliptic tissue mask; 1.0
  /// marks every level-N tile as foreground.
  double tissue_fraction = 0.75;

  std::vector<OracleLevelParams> oracle;  // empty: default_oracle_params()
  std::uint64_t seed = 0;
};

std::vector<OracleLevelParams> default_oracle_params(int num_levels);

struct SynthImage {
  std::shared_ptr<const GroundTruthPyramid> truth;
  PredictionSource source;
};

/// Builds blob-shaped positive regions, a tissue mask and a matching noisy
/// oracle. Deterministic per seed; throws ConfigError for infeasible input.
SynthImage synth_pyramid(const SynthConfig& cfg);

/// Seeded mix of image types used for experiments: single large tumors,
/// several small ones and tumor-free images, on f=2, 3-level grids between
/// 256 and 512 tiles per side.
std::vector<SynthConfig> corpus_configs(int count, std::uint64_t seed, int max_grid = 512);

enum class ImageKind { LargeRegion, SmallRegions, Negative };
SynthConfig corpus_image_config(ImageKind kind, int grid, std::uint64_t seed);

}  // namespace pyramidai

#include "pyramidai/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pyramidai/errors.hpp"
#include "pyramidai/rng.hpp"

namespace pyramidai {

namespace {

struct Blob {
  Region shape;
  // Boundary wobble: r(theta) scaled by 1 + sum amp_k * sin(k theta + phase_k).
  double amp2 = 0.0, phase2 = 0.0, amp3 = 0.0, phase3 = 0.0;

  bool contains(double col, double row) const {
    const double dc = col - shape.center_col;
    const double dr = row - shape.center_row;
    const double cs = std::cos(shape.angle);
    const double sn = std::sin(shape.angle);
    const double u = (dc * cs + dr * sn) / shape.radius_col;
    const double v = (-dc * sn + dr * cs) / shape.radius_row;
    const double theta = std::atan2(v, u);
    const double scale =
        1.0 + amp2 * std::sin(2.0 * theta + phase2) + amp3 * std::sin(3.0 * theta + phase3);
    return u * u + v * v <= scale * scale;
  }
};

void validate(const SynthConfig& cfg) {
  if (cfg.region_count < 0) throw ConfigError("region_count must be >= 0");
  if (cfg.region_count > 0) {
    const double max_dim = std::max(cfg.grid_cols, cfg.grid_rows);
    if (!(cfg.region_radius_min > 0.0) || cfg.region_radius_min > cfg.region_radius_max) {
      throw ConfigError("region radii need 0 < min <= max");
    }
    if (cfg.region_radius_max > max_dim) {
      throw ConfigError("region radius " + std::to_string(cfg.region_radius_max) +
                        " does not fit a grid of " + std::to_string(cfg.grid_cols) + "x" +
                        std::to_string(cfg.grid_rows));
    }
  }
  for (const auto& r : cfg.regions) {
    if (!(r.radius_col > 0.0) || !(r.radius_row > 0.0)) {
      throw ConfigError("explicit region radii must be positive");
    }
  }
  if (!(cfg.tissue_fraction >= 0.0 && cfg.tissue_fraction <= 1.0)) {
    throw ConfigError("tissue_fraction must be in [0,1]");
  }
}

}  // namespace

std::vector<OracleLevelParams> default_oracle_params(int num_levels) {
  std::vector<OracleLevelParams> out;
  for (int n = 0; n < num_levels; ++n) {
    // Coarser levels see less detail and are noisier.
    out.push_back({0.92 - 0.04 * n, 0.20 + 0.05 * n});
  }
  for (auto& p : out) p.sensitivity = std::clamp(p.sensitivity, 0.5, 1.0);
  return out;
}

SynthImage synth_pyramid(const SynthConfig& cfg) {
  PyramidGeometry geom(cfg.num_levels, cfg.scale_factor, cfg.grid_cols, cfg.grid_rows);
  validate(cfg);

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5EEDu));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Blob> blobs;
  for (const auto& r : cfg.regions) blobs.push_back({r});
  for (int i = 0; i < cfg.region_count; ++i) {
    Blob b;
    const double span = cfg.region_radius_max - cfg.region_radius_min;
    b.shape.center_col = unit(rng) * cfg.grid_cols;
    b.shape.center_row = unit(rng) * cfg.grid_rows;
    b.shape.radius_col = cfg.region_radius_min + unit(rng) * span;
    b.shape.radius_row = cfg.region_radius_min + unit(rng) * span;
    b.shape.angle = unit(rng) * std::numbers::pi;
    b.amp2 = 0.15 * unit(rng);
    b.phase2 = unit(rng) * 2.0 * std::numbers::pi;
    b.amp3 = 0.10 * unit(rng);
    b.phase3 = unit(rng) * 2.0 * std::numbers::pi;
    blobs.push_back(b);
  }

  Mask labels(geom.cols(0), geom.rows(0));
  for (int r = 0; r < labels.rows(); ++r) {
    for (int c = 0; c < labels.cols(); ++c) {
      const double x = c + 0.5;
      const double y = r + 0.5;
      for (const auto& b : blobs) {
        if (b.contains(x, y)) {
          labels(c, r) = 1;
          break;
        }
      }
    }
  }

  const int top = geom.top_level();
  Mask foreground(geom.cols(top), geom.rows(top));
  const double s = static_cast<double>(geom.scale_pow(top));
  const double w = cfg.grid_cols;
  const double h = cfg.grid_rows;
  const double k = std::sqrt(cfg.tissue_fraction / std::numbers::pi);
  for (int r = 0; r < foreground.rows(); ++r) {
    for (int c = 0; c < foreground.cols(); ++c) {
      if (cfg.tissue_fraction >= 1.0) {
        foreground(c, r) = 1;
        continue;
      }
      const double u = ((c + 0.5) * s - w / 2) / (w * k);
      const double v = ((r + 0.5) * s - h / 2) / (h * k);
      foreground(c, r) = (u * u + v * v <= 1.0) ? 1 : 0;
    }
  }
  // Tumors always sit on tissue.
  for (int r = 0; r < labels.rows(); ++r) {
    for (int c = 0; c < labels.cols(); ++c) {
      if (labels(c, r)) {
        const TileId root = geom.ancestor({0, c, r}, top);
        foreground(root.col, root.row) = 1;
      }
    }
  }

  auto truth = std::make_shared<const GroundTruthPyramid>(geom, std::move(labels),
                                                          std::move(foreground));
  auto params = cfg.oracle.empty() ? default_oracle_params(cfg.num_levels) : cfg.oracle;
  NoisyOracle oracle(truth, std::move(params), mix_seed(cfg.seed, 0x0AC1Eu));
  return {truth, PredictionSource(std::move(oracle))};
}

SynthConfig corpus_image_config(ImageKind kind, int grid, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.grid_cols = grid;
  cfg.grid_rows = grid;
  cfg.seed = seed;
  switch (kind) {
    case ImageKind::LargeRegion:
      cfg.region_count = 1;
      cfg.region_radius_min = grid * 0.08;
      cfg.region_radius_max = grid * 0.14;
      break;
    case ImageKind::SmallRegions:
      cfg.region_count = 6;
      cfg.region_radius_min = grid * 0.01 + 1.0;
      cfg.region_radius_max = grid * 0.04 + 1.0;
      break;
    case ImageKind::Negative:
      cfg.region_count = 0;
      break;
  }
  return cfg;
}

std::vector<SynthConfig> corpus_configs(int count, std::uint64_t seed, int max_grid) {
  if (count < 0) throw ConfigError("corpus size must be >= 0");
  if (max_grid < 16) throw ConfigError("corpus grid must be >= 16");
  std::mt19937_64 rng(mix_seed(seed, 0xC0C0u));
  const int min_grid = std::max(16, max_grid / 2);
  std::uniform_int_distribution<int> grid_dist(min_grid, max_grid);
  std::vector<SynthConfig> out;
  for (int i = 0; i < count; ++i) {
    // Two tumor images for every tumor-free one.
    const ImageKind kind = i % 3 == 0   ? ImageKind::LargeRegion
                           : i % 3 == 1 ? ImageKind::SmallRegions
                                        : ImageKind::Negative;
    out.push_back(corpus_image_config(kind, grid_dist(rng), mix_seed(seed, i)));
  }
  return out;
}

}  // namespace pyramidai

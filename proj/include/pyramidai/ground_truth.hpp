#pragma once

#include <vector>

#include "pyramidai/geometry.hpp"

namespace pyramidai {

/// Tumor labels and tissue foreground for one image.
///
/// Only level-0 labels and the level-N foreground are inputs. Labels at
/// coarser levels are derived: a tile is positive iff any level-0 tile it
/// covers is positive.
class GroundTruthPyramid {
 public:
  /// Throws DataError when mask dimensions disagree with the geometry or a
  /// positive level-0 tile lies outside the foreground.
  GroundTruthPyramid(PyramidGeometry geometry, Mask level0_labels, Mask foreground);

  const PyramidGeometry& geometry() const noexcept { return geometry_; }
  const Mask& level0_labels() const noexcept { return labels_.front(); }
  const Mask& foreground() const noexcept { return foreground_; }
  const Mask& labels(int level) const { return labels_.at(static_cast<std::size_t>(level)); }

  bool label(const TileId& t) const { return labels(t.level)(t.col, t.row) != 0; }
  /// True when t descends from (or is) a level-N foreground tile.
  bool in_foreground(const TileId& t) const;

  /// Level-N foreground tiles in row-major order.
  std::vector<TileId> roots() const;

  std::size_t positive_count(int level) const;

  friend bool operator==(const GroundTruthPyramid&, const GroundTruthPyramid&) = default;

 private:
  PyramidGeometry geometry_;
  std::vector<Mask> labels_;
  Mask foreground_;
};

}  // namespace pyramidai

#include "pyramidai/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include "pyramidai/errors.hpp"

namespace pyramidai {

std::string to_string(const TileId& t) {
  return "(level " + std::to_string(t.level) + ", col " + std::to_string(t.col) + ", row " +
         std::to_string(t.row) + ")";
}

PyramidGeometry::PyramidGeometry(int num_levels, int scale_factor, int grid_cols_l0,
                                 int grid_rows_l0, int tile_px)
    : num_levels_(num_levels), scale_factor_(scale_factor), tile_px_(tile_px) {
  if (num_levels < 2) throw ConfigError("pyramid needs at least 2 levels");
  if (scale_factor < 2) throw ConfigError("scale factor must be >= 2");
  if (grid_cols_l0 < 1 || grid_rows_l0 < 1) throw ConfigError("level-0 grid must be nonempty");
  cols_.reserve(static_cast<std::size_t>(num_levels));
  rows_.reserve(static_cast<std::size_t>(num_levels));
  int c = grid_cols_l0;
  int r = grid_rows_l0;
  for (int n = 0; n < num_levels; ++n) {
    cols_.push_back(c);
    rows_.push_back(r);
    c = (c + scale_factor - 1) / scale_factor;
    r = (r + scale_factor - 1) / scale_factor;
  }
}

int PyramidGeometry::cols(int level) const {
  return cols_.at(static_cast<std::size_t>(level));
}

int PyramidGeometry::rows(int level) const {
  return rows_.at(static_cast<std::size_t>(level));
}

bool PyramidGeometry::contains(const TileId& t) const noexcept {
  return t.level >= 0 && t.level < num_levels_ && t.col >= 0 && t.row >= 0 &&
         t.col < cols_[static_cast<std::size_t>(t.level)] &&
         t.row < rows_[static_cast<std::size_t>(t.level)];
}

long long PyramidGeometry::scale_pow(int k) const noexcept {
  long long p = 1;
  for (int i = 0; i < k; ++i) p *= scale_factor_;
  return p;
}

TileId PyramidGeometry::ancestor(const TileId& t, int level) const {
  if (level < t.level || level >= num_levels_) {
    throw std::out_of_range("ancestor level out of range for " + to_string(t));
  }
  const long long s = scale_pow(level - t.level);
  return {level, static_cast<int>(t.col / s), static_cast<int>(t.row / s)};
}

void append_children(const PyramidGeometry& geom, const TileId& t, std::vector<TileId>& out) {
  if (t.level == 0) throw std::domain_error("level-0 tile " + to_string(t) + " has no children");
  if (!geom.contains(t)) throw std::out_of_range("tile " + to_string(t) + " outside geometry");
  const int f = geom.scale_factor();
  const int child_level = t.level - 1;
  const int col_end = std::min((t.col + 1) * f, geom.cols(child_level));
  const int row_end = std::min((t.row + 1) * f, geom.rows(child_level));
  for (int r = t.row * f; r < row_end; ++r) {
    for (int c = t.col * f; c < col_end; ++c) out.push_back({child_level, c, r});
  }
}

std::vector<TileId> children(const PyramidGeometry& geom, const TileId& t) {
  std::vector<TileId> out;
  out.reserve(static_cast<std::size_t>(geom.scale_factor() * geom.scale_factor()));
  append_children(geom, t, out);
  return out;
}

void for_each_level0_descendant(const PyramidGeometry& geom, const TileId& t,
                                const std::function<void(const TileId&)>& fn) {
  if (!geom.contains(t)) throw std::out_of_range("tile " + to_string(t) + " outside geometry");
  const long long span = geom.scale_pow(t.level);
  const long long col_end = std::min<long long>((t.col + 1) * span, geom.cols(0));
  const long long row_end = std::min<long long>((t.row + 1) * span, geom.rows(0));
  for (long long r = t.row * span; r < row_end; ++r) {
    for (long long c = t.col * span; c < col_end; ++c) {
      fn(TileId{0, static_cast<int>(c), static_cast<int>(r)});
    }
  }
}

}  // namespace pyramidai

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pyramidai {

/// Address of one tile in the pyramid. Level 0 is the highest resolution.
struct TileId {
  int level = 0;
  int col = 0;
  int row = 0;

  friend bool operator==(const TileId&, const TileId&) = default;

  /// Iteration order: coarsest level first, then row-major within a level.
  friend std::strong_ordering operator<=>(const TileId& a, const TileId& b) {
    if (auto c = b.level <=> a.level; c != 0) return c;
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

std::string to_string(const TileId& t);

/// Tile-grid layout of a multi-resolution image.
///
/// Level n has ceil(dims_l0 / f^n) tiles per axis, so a tile covers up to
/// f x f tiles of the level below; right and bottom border tiles may cover
/// fewer.
class PyramidGeometry {
 public:
  PyramidGeometry() = default;
  /// Throws ConfigError unless num_levels >= 2, scale_factor >= 2 and the
  /// level-0 grid is nonempty.
  PyramidGeometry(int num_levels, int scale_factor, int grid_cols_l0,
                  int grid_rows_l0, int tile_px = 224);

  int num_levels() const noexcept { return num_levels_; }
  /// Index of the coarsest level (N).
  int top_level() const noexcept { return num_levels_ - 1; }
  int scale_factor() const noexcept { return scale_factor_; }
  int tile_px() const noexcept { return tile_px_; }

  int cols(int level) const;
  int rows(int level) const;
  std::size_t tile_count(int level) const {
    return static_cast<std::size_t>(cols(level)) * static_cast<std::size_t>(rows(level));
  }

  bool contains(const TileId& t) const noexcept;
  /// Row-major offset of t inside its level grid.
  std::size_t index(const TileId& t) const noexcept {
    return static_cast<std::size_t>(t.row) * static_cast<std::size_t>(cols_[t.level]) +
           static_cast<std::size_t>(t.col);
  }
  TileId tile_at(int level, std::size_t index) const noexcept {
    const auto c = static_cast<std::size_t>(cols_[level]);
    return {level, static_cast<int>(index % c), static_cast<int>(index / c)};
  }

  /// Integer f^k.
  long long scale_pow(int k) const noexcept;

  /// The level `level` tile covering t (level >= t.level).
  TileId ancestor(const TileId& t, int level) const;

  friend bool operator==(const PyramidGeometry&, const PyramidGeometry&) = default;

 private:
  int num_levels_ = 0;
  int scale_factor_ = 0;
  int tile_px_ = 0;
  std::vector<int> cols_;
  std::vector<int> rows_;
};

/// All level-(t.level-1) tiles covered by t, in row-major order.
/// Throws std::domain_error for a level-0 tile and std::out_of_range for a
/// tile outside the geometry.
std::vector<TileId> children(const PyramidGeometry& geom, const TileId& t);

/// Appends the children of t to `out` without allocating a new vector.
void append_children(const PyramidGeometry& geom, const TileId& t, std::vector<TileId>& out);

/// Calls fn(TileId) for every level-0 tile covered by t, row-major.
void for_each_level0_descendant(const PyramidGeometry& geom, const TileId& t,
                                const std::function<void(const TileId&)>& fn);

/// Dense row-major per-tile storage for one pyramid level.
template <typename T>
class LevelGrid {
 public:
  LevelGrid() = default;
  LevelGrid(int cols, int rows, T fill = T{})
      : cols_(cols), rows_(rows),
        data_(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), fill) {}

  int cols() const noexcept { return cols_; }
  int rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int col, int row) {
    return data_[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(col)];
  }
  const T& operator()(int col, int row) const {
    return data_[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(col)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const LevelGrid&, const LevelGrid&) = default;

 private:
  int cols_ = 0;
  int rows_ = 0;
  std::vector<T> data_;
};

using Mask = LevelGrid<std::uint8_t>;

}  // namespace pyramidai

template <>
struct std::hash<pyramidai::TileId> {
  std::size_t operator()(const pyramidai::TileId& t) const noexcept {
    std::size_t h = static_cast<std::size_t>(t.level) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::size_t>(t.col) + 0x7F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(t.row) + 0x9E3779B9ULL + (h << 6) + (h >> 2);
    return h;
  }
};

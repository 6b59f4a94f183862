#include "pyramidai/ground_truth.hpp"

#include <algorithm>

#include "pyramidai/errors.hpp"

namespace pyramidai {

GroundTruthPyramid::GroundTruthPyramid(PyramidGeometry geometry, Mask level0_labels,
                                       Mask foreground)
    : geometry_(std::move(geometry)), foreground_(std::move(foreground)) {
  const int top = geometry_.top_level();
  if (level0_labels.cols() != geometry_.cols(0) || level0_labels.rows() != geometry_.rows(0)) {
    throw DataError("label mask is " + std::to_string(level0_labels.cols()) + "x" +
                    std::to_string(level0_labels.rows()) + ", expected " +
                    std::to_string(geometry_.cols(0)) + "x" + std::to_string(geometry_.rows(0)));
  }
  if (foreground_.cols() != geometry_.cols(top) || foreground_.rows() != geometry_.rows(top)) {
    throw DataError("foreground mask is " + std::to_string(foreground_.cols()) + "x" +
                    std::to_string(foreground_.rows()) + ", expected " +
                    std::to_string(geometry_.cols(top)) + "x" + std::to_string(geometry_.rows(top)));
  }
  for (auto& v : level0_labels.data()) v = v ? 1 : 0;
  for (auto& v : foreground_.data()) v = v ? 1 : 0;

  labels_.reserve(static_cast<std::size_t>(geometry_.num_levels()));
  labels_.push_back(std::move(level0_labels));
  const int f = geometry_.scale_factor();
  for (int n = 1; n <= top; ++n) {
    const Mask& below = labels_.back();
    Mask up(geometry_.cols(n), geometry_.rows(n));
    for (int r = 0; r < below.rows(); ++r) {
      for (int c = 0; c < below.cols(); ++c) {
        if (below(c, r)) up(c / f, r / f) = 1;
      }
    }
    labels_.push_back(std::move(up));
  }

  const Mask& top_labels = labels_.back();
  for (std::size_t i = 0; i < top_labels.size(); ++i) {
    if (top_labels[i] && !foreground_[i]) {
      throw DataError("positive tiles under background tile " +
                      to_string(geometry_.tile_at(top, i)));
    }
  }
}

bool GroundTruthPyramid::in_foreground(const TileId& t) const {
  const TileId root = geometry_.ancestor(t, geometry_.top_level());
  return foreground_(root.col, root.row) != 0;
}

std::vector<TileId> GroundTruthPyramid::roots() const {
  std::vector<TileId> out;
  const int top = geometry_.top_level();
  for (std::size_t i = 0; i < foreground_.size(); ++i) {
    if (foreground_[i]) out.push_back(geometry_.tile_at(top, i));
  }
  return out;
}

std::size_t GroundTruthPyramid::positive_count(int level) const {
  const auto& d = labels(level).data();
  return static_cast<std::size_t>(std::count(d.begin(), d.end(), std::uint8_t{1}));
}

}  // namespace pyramidai

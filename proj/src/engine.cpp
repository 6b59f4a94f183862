#include "pyramidai/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pyramidai/errors.hpp"

namespace pyramidai {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(what) + " " + std::to_string(v) + " outside [0,1]");
  }
}

void check_schedule(const GroundTruthPyramid& gt, const ThresholdSchedule& sched) {
  if (sched.num_levels() != gt.geometry().num_levels()) {
    throw ConfigError("schedule covers " + std::to_string(sched.num_levels()) +
                      " levels, pyramid has " + std::to_string(gt.geometry().num_levels()));
  }
}

}  // namespace

ThresholdSchedule::ThresholdSchedule(int num_levels, double zoom_threshold,
                                     double positive_threshold_l0)
    : zoom_(static_cast<std::size_t>(std::max(num_levels, 0)), zoom_threshold),
      positive_l0_(positive_threshold_l0) {
  if (num_levels < 2) throw ConfigError("schedule needs at least 2 levels");
  check_unit(zoom_threshold, "zoom threshold");
  check_unit(positive_threshold_l0, "level-0 positive threshold");
  zoom_[0] = 0.0;
}

double ThresholdSchedule::zoom(int level) const {
  if (level < 1 || level >= num_levels()) {
    throw std::out_of_range("no zoom threshold for level " + std::to_string(level));
  }
  return zoom_[static_cast<std::size_t>(level)];
}

void ThresholdSchedule::set_zoom(int level, double threshold) {
  if (level < 1 || level >= num_levels()) {
    throw std::out_of_range("no zoom threshold for level " + std::to_string(level));
  }
  check_unit(threshold, "zoom threshold");
  zoom_[static_cast<std::size_t>(level)] = threshold;
}

void ThresholdSchedule::set_positive_threshold_l0(double threshold) {
  check_unit(threshold, "level-0 positive threshold");
  positive_l0_ = threshold;
}

const char* to_string(Decision d) noexcept {
  switch (d) {
    case Decision::Stop: return "stop";
    case Decision::ZoomIn: return "zoom";
    case Decision::Positive: return "pos";
  }
  return "?";
}

Decision parse_decision(std::string_view s) {
  if (s == "stop") return Decision::Stop;
  if (s == "zoom") return Decision::ZoomIn;
  if (s == "pos") return Decision::Positive;
  throw DataError("unknown decision '" + std::string(s) + "'");
}

ExecutionTree::ExecutionTree(const PyramidGeometry& geometry) : geometry_(geometry) {
  const auto levels = static_cast<std::size_t>(geometry_.num_levels());
  state_.resize(levels);
  probability_.resize(levels);
  counts_.assign(levels, 0);
  for (std::size_t n = 0; n < levels; ++n) {
    state_[n].assign(geometry_.tile_count(static_cast<int>(n)), 0);
    probability_[n].assign(geometry_.tile_count(static_cast<int>(n)), 0.0);
  }
}

void ExecutionTree::insert(const TileId& t, const Node& node) {
  if (!geometry_.contains(t)) throw IntegrityError("node " + to_string(t) + " outside geometry");
  const auto lvl = static_cast<std::size_t>(t.level);
  const std::size_t i = geometry_.index(t);
  auto& s = state_[lvl][i];
  if (s != 0) {
    if (s != static_cast<std::uint8_t>(node.decision) || probability_[lvl][i] != node.probability) {
      throw IntegrityError("conflicting duplicate node " + to_string(t));
    }
    return;
  }
  s = static_cast<std::uint8_t>(node.decision);
  probability_[lvl][i] = node.probability;
  ++counts_[lvl];
  ++total_;
}

std::optional<Node> ExecutionTree::find(const TileId& t) const {
  if (!geometry_.contains(t)) return std::nullopt;
  const auto lvl = static_cast<std::size_t>(t.level);
  const std::size_t i = geometry_.index(t);
  if (state_[lvl][i] == 0) return std::nullopt;
  return Node{probability_[lvl][i], static_cast<Decision>(state_[lvl][i])};
}

void ExecutionTree::for_each(const std::function<void(const TileId&, const Node&)>& fn) const {
  for (int n = geometry_.top_level(); n >= 0; --n) {
    const auto lvl = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < state_[lvl].size(); ++i) {
      if (state_[lvl][i] != 0) {
        fn(geometry_.tile_at(n, i), Node{probability_[lvl][i], static_cast<Decision>(state_[lvl][i])});
      }
    }
  }
}

std::vector<TileId> ExecutionTree::tiles(int level) const {
  std::vector<TileId> out;
  out.reserve(count(level));
  const auto& st = state_[static_cast<std::size_t>(level)];
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i] != 0) out.push_back(geometry_.tile_at(level, i));
  }
  return out;
}

void ExecutionTree::merge(const ExecutionTree& other) {
  if (other.empty()) return;
  if (!(other.geometry_ == geometry_)) throw IntegrityError("cannot merge trees of different geometry");
  other.for_each([this](const TileId& t, const Node& n) { insert(t, n); });
}

void ExecutionTree::validate() const {
  const int top = geometry_.top_level();
  for_each([&](const TileId& t, const Node& node) {
    if (t.level == 0 && node.decision == Decision::ZoomIn) {
      throw IntegrityError("level-0 node " + to_string(t) + " cannot zoom in");
    }
    if (t.level > 0 && node.decision == Decision::Positive) {
      throw IntegrityError("node " + to_string(t) + " above level 0 marked positive");
    }
    if (t.level < top) {
      const auto parent = find(geometry_.ancestor(t, t.level + 1));
      if (!parent || parent->decision != Decision::ZoomIn) {
        throw IntegrityError("node " + to_string(t) + " has no zoom-in parent");
      }
    }
  });
}

ExecutionTree run_pyramidal(const GroundTruthPyramid& gt, const PredictionSource& src,
                            const ThresholdSchedule& sched) {
  check_schedule(gt, sched);
  const auto& geom = gt.geometry();
  ExecutionTree tree(geom);
  std::vector<TileId> frontier = gt.roots();
  std::vector<TileId> next;
  for (int level = geom.top_level(); level >= 0 && !frontier.empty(); --level) {
    next.clear();
    for (const TileId& t : frontier) {
      const Node node = analyze_tile(src, sched, t);
      tree.insert(t, node);
      if (node.decision == Decision::ZoomIn) append_children(geom, t, next);
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return tree;
}

ExecutionTree run_reference(const GroundTruthPyramid& gt, const PredictionSource& src,
                            double positive_threshold_l0) {
  check_unit(positive_threshold_l0, "level-0 positive threshold");
  const auto& geom = gt.geometry();
  ExecutionTree tree(geom);
  for (std::size_t i = 0; i < geom.tile_count(0); ++i) {
    const TileId t = geom.tile_at(0, i);
    if (!gt.in_foreground(t)) continue;
    const double p = src.predict(t);
    tree.insert(t, {p, p >= positive_threshold_l0 ? Decision::Positive : Decision::Stop});
  }
  return tree;
}

std::vector<TileId> reference_true_positives(const ExecutionTree& ref,
                                             const GroundTruthPyramid& gt) {
  std::vector<TileId> out;
  for (const TileId& t : ref.tiles(0)) {
    if (ref.find(t)->decision == Decision::Positive && gt.label(t)) out.push_back(t);
  }
  return out;
}

namespace {

std::size_t retained_count(const ExecutionTree& pyr, const std::vector<TileId>& tp_ref) {
  std::size_t kept = 0;
  for (const TileId& t : tp_ref) {
    const auto n = pyr.find(t);
    if (n && n->decision == Decision::Positive) ++kept;
  }
  return kept;
}

}  // namespace

double positive_retention(const ExecutionTree& pyr, const ExecutionTree& ref,
                          const GroundTruthPyramid& gt) {
  if (!(pyr.geometry() == ref.geometry())) throw DataError("trees have different geometry");
  const auto tp_ref = reference_true_positives(ref, gt);
  if (tp_ref.empty()) {
    throw UndefinedMetricError("positive retention undefined: reference has no true positives");
  }
  return static_cast<double>(retained_count(pyr, tp_ref)) / static_cast<double>(tp_ref.size());
}

double slowdown_bound(int scale_factor, std::optional<int> levels) {
  if (scale_factor < 2) throw std::domain_error("slowdown bound needs scale factor >= 2");
  const double f2 = static_cast<double>(scale_factor) * scale_factor;
  if (!levels) return f2 / (f2 - 1.0);
  if (*levels < 1) throw std::domain_error("slowdown bound needs at least one level");
  double sum = 0.0;
  double term = 1.0;
  for (int n = 0; n < *levels; ++n) {
    sum += term;
    term /= f2;
  }
  return sum;
}

void CostModel::validate() const {
  if (init_s < 0.0 || task_creation_s < 0.0) throw ConfigError("costs must be nonnegative");
  for (double c : analysis_s) {
    if (c < 0.0) throw ConfigError("costs must be nonnegative");
  }
}

TimeEstimate estimate_time_breakdown(const ExecutionTree& tree, const CostModel& cm,
                                     ExecutionMode mode) {
  TimeEstimate est;
  if (tree.empty()) return est;
  const auto& counts = tree.counts();
  auto cost = [&](std::size_t level) {
    if (level >= cm.analysis_s.size()) {
      throw ConfigError("cost model has no analysis cost for level " + std::to_string(level));
    }
    return cm.analysis_s[level];
  };
  if (mode == ExecutionMode::Reference) {
    est.analysis_s = static_cast<double>(counts[0]) * cost(0);
  } else {
    for (std::size_t n = 0; n < counts.size(); ++n) {
      if (counts[n] > 0) est.analysis_s += static_cast<double>(counts[n]) * cost(n);
    }
    const std::size_t created = tree.size() - counts.back();
    est.task_creation_s = static_cast<double>(created) * cm.task_creation_s;
  }
  est.init_s = cm.init_s;
  est.total_s = est.analysis_s + est.init_s + est.task_creation_s;
  return est;
}

double estimate_time(const ExecutionTree& tree, const CostModel& cm, ExecutionMode mode) {
  return estimate_time_breakdown(tree, cm, mode).analysis_s;
}

std::map<TileId, double> project_probabilities(const ExecutionTree& tree) {
  std::map<TileId, double> out;
  const auto& geom = tree.geometry();
  tree.for_each([&](const TileId& t, const Node& node) {
    if (node.decision == Decision::ZoomIn) return;
    for_each_level0_descendant(geom, t, [&](const TileId& d) { out.emplace(d, node.probability); });
  });
  return out;
}

RunMetrics compute_metrics(const ExecutionTree& pyr, const ExecutionTree& ref,
                           const GroundTruthPyramid& gt, const CostModel& cm) {
  RunMetrics m;
  m.tiles_analyzed_per_level = pyr.counts();
  m.tiles_analyzed_total = pyr.size();
  m.tiles_reference = ref.count(0);
  if (m.tiles_analyzed_total > 0) {
    m.speedup = static_cast<double>(m.tiles_reference) / static_cast<double>(m.tiles_analyzed_total);
  }
  const auto tp_ref = reference_true_positives(ref, gt);
  m.reference_true_positives = tp_ref.size();
  m.retained_true_positives = retained_count(pyr, tp_ref);
  if (!tp_ref.empty()) {
    m.positive_retention_rate =
        static_cast<double>(m.retained_true_positives) / static_cast<double>(tp_ref.size());
  }
  const auto pyr_time = estimate_time_breakdown(pyr, cm, ExecutionMode::Pyramidal);
  const auto ref_time = estimate_time_breakdown(ref, cm, ExecutionMode::Reference);
  m.estimated_time_s = pyr_time.analysis_s;
  m.estimated_time_with_overhead_s = pyr_time.total_s;
  m.reference_time_s = ref_time.analysis_s;
  m.reference_time_with_overhead_s = ref_time.total_s;
  return m;
}

}  // namespace pyramidai

#include "pyramidai/distsim.hpp"

#include <algorithm>
#include <random>

#include "pyramidai/errors.hpp"
#include "pyramidai/rng.hpp"

namespace pyramidai {

const char* to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::RoundRobin: return "round_robin";
    case Distribution::Random: return "random";
    case Distribution::Block: return "block";
  }
  return "?";
}

const char* to_string(Policy p) noexcept {
  switch (p) {
    case Policy::NoRebalance: return "none";
    case Policy::LevelSync: return "level_sync";
    case Policy::WorkStealing: return "work_stealing";
  }
  return "?";
}

Distribution parse_distribution(std::string_view s) {
  if (s == "round_robin") return Distribution::RoundRobin;
  if (s == "random") return Distribution::Random;
  if (s == "block") return Distribution::Block;
  throw ConfigError("unknown distribution '" + std::string(s) + "'");
}

Policy parse_policy(std::string_view s) {
  if (s == "none") return Policy::NoRebalance;
  if (s == "level_sync") return Policy::LevelSync;
  if (s == "work_stealing") return Policy::WorkStealing;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

namespace {

std::vector<TaskQueue> split_blocks(const std::vector<TileId>& tiles, int workers) {
  std::vector<TaskQueue> queues(static_cast<std::size_t>(workers));
  const std::size_t w = queues.size();
  const std::size_t base = tiles.size() / w;
  const std::size_t extra = tiles.size() % w;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    queues[i].assign(tiles.begin() + static_cast<std::ptrdiff_t>(pos),
                     tiles.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return queues;
}

std::vector<TaskQueue> round_robin(const std::vector<TileId>& tiles, int workers) {
  std::vector<TaskQueue> queues(static_cast<std::size_t>(workers));
  for (std::size_t i = 0; i < tiles.size(); ++i) queues[i % queues.size()].push_back(tiles[i]);
  return queues;
}

void check_workers(int workers) {
  if (workers < 1) throw ConfigError("number of workers must be >= 1");
}

SimReport finish_report(std::vector<std::size_t> loads, std::size_t rounds) {
  SimReport r;
  r.worker_loads = std::move(loads);
  for (std::size_t l : r.worker_loads) {
    r.total_tiles += l;
    r.max_load = std::max(r.max_load, l);
  }
  r.makespan_steps = rounds;
  return r;
}

SimResult simulate_level_sync(const GroundTruthPyramid& gt, const PredictionSource& src,
                              const ThresholdSchedule& sched, std::vector<TaskQueue> queues) {
  const auto& geom = gt.geometry();
  ExecutionTree tree(geom);
  std::vector<std::size_t> loads(queues.size(), 0);
  std::size_t rounds = 0;
  std::vector<TileId> pending;
  for (int level = geom.top_level(); level >= 0; --level) {
    pending.clear();
    bool busy = true;
    while (busy) {
      busy = false;
      for (std::size_t w = 0; w < queues.size(); ++w) {
        if (queues[w].empty()) continue;
        busy = true;
        const TileId t = queues[w].front();
        queues[w].pop_front();
        const Node node = analyze_tile(src, sched, t);
        tree.insert(t, node);
        ++loads[w];
        if (node.decision == Decision::ZoomIn) append_children(geom, t, pending);
      }
      if (busy) ++rounds;
    }
    // Barrier: rebalance the next level over all workers.
    std::sort(pending.begin(), pending.end());
    queues = round_robin(pending, static_cast<int>(queues.size()));
  }
  return {std::move(tree), finish_report(std::move(loads), rounds)};
}

SimResult simulate_async(const GroundTruthPyramid& gt, const PredictionSource& src,
                         const ThresholdSchedule& sched, std::vector<TaskQueue> queues,
                         bool stealing, std::uint64_t seed) {
  const auto& geom = gt.geometry();
  const std::size_t w_count = queues.size();
  ExecutionTree tree(geom);
  std::vector<std::size_t> loads(w_count, 0);
  std::size_t rounds = 0;
  std::size_t attempted = 0;
  std::size_t successful = 0;

  std::mt19937_64 rng(mix_seed(seed, 0x57EA1u));
  auto all_but = [w_count](std::size_t self) {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < w_count; ++i) {
      if (i != self) v.push_back(i);
    }
    return v;
  };
  std::vector<std::vector<std::size_t>> victims(w_count);
  std::vector<int> last_level(w_count, -1);
  for (std::size_t w = 0; w < w_count; ++w) victims[w] = all_but(w);

  std::vector<TileId> kids;
  auto any_work = [&] {
    return std::any_of(queues.begin(), queues.end(), [](const TaskQueue& q) { return !q.empty(); });
  };
  while (any_work()) {
    ++rounds;
    for (std::size_t w = 0; w < w_count; ++w) {
      if (queues[w].empty()) continue;
      const TileId t = queues[w].front();
      queues[w].pop_front();
      if (t.level != last_level[w]) {
        // New level of own work: earlier "empty" answers are stale.
        last_level[w] = t.level;
        victims[w] = all_but(w);
      }
      const Node node = analyze_tile(src, sched, t);
      tree.insert(t, node);
      ++loads[w];
      if (node.decision == Decision::ZoomIn) {
        kids.clear();
        append_children(geom, t, kids);
        queues[w].insert(queues[w].end(), kids.begin(), kids.end());
      }
    }
    if (!stealing) continue;
    for (std::size_t thief = 0; thief < w_count; ++thief) {
      if (!queues[thief].empty()) continue;
      auto& list = victims[thief];
      while (!list.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
        const std::size_t k = pick(rng);
        const std::size_t victim = list[k];
        ++attempted;
        if (queues[victim].size() >= 2) {
          // Newest pending task: a leaf of the current execution graph.
          queues[thief].push_back(queues[victim].back());
          queues[victim].pop_back();
          ++successful;
          break;
        }
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
  }
  SimReport report = finish_report(std::move(loads), rounds);
  report.steals_attempted = attempted;
  report.steals_successful = successful;
  return {std::move(tree), std::move(report)};
}

}  // namespace

std::vector<TaskQueue> distribute(const std::vector<TileId>& roots, int workers,
                                  Distribution distribution, std::uint64_t seed) {
  check_workers(workers);
  switch (distribution) {
    case Distribution::RoundRobin:
      return round_robin(roots, workers);
    case Distribution::Random: {
      std::vector<TileId> shuffled = roots;
      std::mt19937_64 rng(mix_seed(seed, 0x5u));
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      return split_blocks(shuffled, workers);
    }
    case Distribution::Block: {
      std::vector<TileId> sorted = roots;
      std::stable_sort(sorted.begin(), sorted.end());
      return split_blocks(sorted, workers);
    }
  }
  throw ConfigError("unknown distribution");
}

SimResult simulate(const GroundTruthPyramid& gt, const PredictionSource& src,
                   const ThresholdSchedule& sched, const SimConfig& cfg) {
  check_workers(cfg.workers);
  if (sched.num_levels() != gt.geometry().num_levels()) {
    throw ConfigError("schedule does not match pyramid levels");
  }
  auto queues = distribute(gt.roots(), cfg.workers, cfg.distribution, cfg.seed);
  switch (cfg.policy) {
    case Policy::LevelSync:
      return simulate_level_sync(gt, src, sched, std::move(queues));
    case Policy::WorkStealing:
      return simulate_async(gt, src, sched, std::move(queues), true, cfg.seed);
    case Policy::NoRebalance:
      return simulate_async(gt, src, sched, std::move(queues), false, cfg.seed);
  }
  throw ConfigError("unknown policy");
}

std::size_t oracle_max_load(std::size_t total_tiles, int workers) {
  check_workers(workers);
  const auto w = static_cast<std::size_t>(workers);
  return (total_tiles + w - 1) / w;
}

std::size_t oracle_max_load(const ExecutionTree& tree, int workers) {
  return oracle_max_load(tree.size(), workers);
}

}  // namespace pyramidai

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "pyramidai/engine.hpp"

namespace pyramidai {

enum class Distribution { RoundRobin, Random, Block };
enum class Policy { NoRebalance, LevelSync, WorkStealing };

const char* to_string(Distribution d) noexcept;
const char* to_string(Policy p) noexcept;
/// Accepts "round_robin", "random", "block"; throws ConfigError otherwise.
Distribution parse_distribution(std::string_view s);
/// Accepts "none", "level_sync", "work_stealing"; throws ConfigError otherwise.
Policy parse_policy(std::string_view s);

struct SimConfig {
  int workers = 1;
  Distribution distribution = Distribution::RoundRobin;
  Policy policy = Policy::NoRebalance;
  std::uint64_t seed = 0;  // shuffles Random, picks victims for WorkStealing
};

using TaskQueue = std::deque<TileId>;

/// Splits the ordered root list over `workers` queues.
/// RoundRobin: tile i goes to worker i mod W. Random: seeded shuffle, then
/// contiguous blocks. Block: row-major sorted, then contiguous blocks.
/// Block sizes differ by at most one, larger blocks first. Throws
/// ConfigError for workers < 1.
std::vector<TaskQueue> distribute(const std::vector<TileId>& roots, int workers,
                                  Distribution distribution, std::uint64_t seed = 0);

struct SimReport {
  std::vector<std::size_t> worker_loads;
  std::size_t max_load = 0;
  std::size_t total_tiles = 0;
  std::size_t steals_attempted = 0;
  std::size_t steals_successful = 0;
  std::size_t makespan_steps = 0;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

struct SimResult {
  ExecutionTree tree;
  SimReport report;
};

/// Lock-step simulation of a distributed pyramidal run with unit tile cost.
/// Each round every worker holding tasks analyzes the head of its queue and
/// appends zoom-in children to its own tail; the policy then rebalances.
SimResult simulate(const GroundTruthPyramid& gt, const PredictionSource& src,
                   const ThresholdSchedule& sched, const SimConfig& cfg);

/// Ideal balanced load: ceil(total / W). Throws ConfigError for W < 1.
std::size_t oracle_max_load(const ExecutionTree& tree, int workers);
std::size_t oracle_max_load(std::size_t total_tiles, int workers);

}  // namespace pyramidai

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pyramidai/cluster/transport.hpp"
#include "pyramidai/distsim.hpp"
#include "pyramidai/engine.hpp"

namespace pyramidai::cluster {

/// Identity and peers of one worker. `peers` lists every worker's address
/// indexed by id, the worker's own entry included; id 0 is the coordinator.
struct WorkerOptions {
  int id = 0;
  std::vector<PeerAddress> peers;
  std::uint64_t seed = 0;  // victim selection
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds run_timeout{120000};
};

struct WorkerStats {
  std::size_t tiles_processed = 0;
  std::size_t steal_requests_sent = 0;
  std::size_t tasks_received = 0;
  std::size_t empties_received = 0;
  std::size_t requests_served = 0;
  std::size_t tasks_granted = 0;
  std::size_t messages_sent = 0;
};

struct WorkerOutcome {
  ExecutionTree partial;
  WorkerStats stats;
  /// Coordinator only: every worker's partial tree, indexed by id.
  std::vector<ExecutionTree> partials;
  /// Coordinator only: the gathered full tree.
  std::optional<ExecutionTree> gathered;
};

/// Runs one worker to completion.
///
/// The worker analyzes its own queue front to back, appending zoom-in
/// children to its tail. When the queue is empty it asks a uniformly random
/// candidate victim for a task; a victim with >= 2 pending tasks grants its
/// newest one, otherwise it answers Empty and the thief drops it from its
/// candidates. A victim also drops the requester, which has run out of
/// work. Once both queue and candidate set are empty the worker uploads its
/// subtree to worker 0, which doubles as its idle notice, and keeps
/// answering requests until worker 0 broadcasts Shutdown. Worker 0 gathers
/// the uploads into the full tree.
///
/// Throws TransportError naming the peer on connection loss or timeout.
WorkerOutcome worker_run(Listener& listener, const WorkerOptions& options, TaskQueue initial,
                         const GroundTruthPyramid& gt, const PredictionSource& src,
                         const ThresholdSchedule& sched);

/// Merges partial trees; throws IntegrityError for conflicting duplicates or
/// a result that breaks the execution-tree invariants.
ExecutionTree gather(std::span<const ExecutionTree> partials);

/// Number of nodes present in more than one partial tree; 0 means every
/// tile was analyzed exactly once.
std::size_t overlapping_nodes(std::span<const ExecutionTree> partials);

struct LocalClusterResult {
  ExecutionTree tree;
  std::vector<ExecutionTree> partials;
  std::vector<WorkerStats> stats;
};

/// Runs `workers` workers as threads on loopback with round-robin initial
/// distribution of the roots, and returns the coordinator's gathered tree.
LocalClusterResult run_local_cluster(const GroundTruthPyramid& gt, const PredictionSource& src,
                                     const ThresholdSchedule& sched, int workers,
                                     std::uint64_t seed,
                                     std::chrono::milliseconds run_timeout = std::chrono::minutes(2));

}  // namespace pyramidai::cluster

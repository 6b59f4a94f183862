#pragma once

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "pyramidai/distsim.hpp"
#include "pyramidai/engine.hpp"
#include "pyramidai/tuner.hpp"

namespace pyramidai {

using Json = nlohmann::json;

Json tile_to_json(const TileId& t);
/// Throws DataError for missing or non-integer fields.
TileId tile_from_json(const Json& j);

/// {"levels":[{"level":n,"threshold":t},...],"positive_threshold_l0":v},
/// levels listed N..1.
Json schedule_to_json(const ThresholdSchedule& s);
ThresholdSchedule schedule_from_json(const Json& j);

/// Mirrors RunMetrics; undefined metrics are null and listed under
/// "undefined".
Json metrics_to_json(const RunMetrics& m);
RunMetrics metrics_from_json(const Json& j);

Json sim_report_to_json(const SimReport& r);
SimReport sim_report_from_json(const Json& j);

Json node_to_json(const TileId& t, const Node& n);

/// JSON lines {"level","col","row","p","decision"} in traversal order.
void write_trace(std::ostream& out, const ExecutionTree& tree);
/// Rebuilds a tree from a trace; throws DataError on malformed lines.
ExecutionTree read_trace(std::istream& in, const PyramidGeometry& geometry);

/// `beta,threshold_l1,...,threshold_lN,retention,tile_reduction`.
void write_sweep_csv(std::ostream& out, const std::vector<BetaSweepRow>& rows, int num_levels);
std::vector<BetaSweepRow> read_sweep_csv(std::istream& in);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace pyramidai

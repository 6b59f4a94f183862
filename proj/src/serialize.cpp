#include "pyramidai/serialize.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "pyramidai/errors.hpp"

namespace pyramidai {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("bad field '") + key + "': " + e.what());
  }
}

int int_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_integer()) {
    throw DataError(std::string("missing or non-integer field '") + key + "'");
  }
  return j.at(key).get<int>();
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<double>(j, key);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

Json tile_to_json(const TileId& t) { return {{"level", t.level}, {"col", t.col}, {"row", t.row}}; }

TileId tile_from_json(const Json& j) {
  return {int_field(j, "level"), int_field(j, "col"), int_field(j, "row")};
}

Json schedule_to_json(const ThresholdSchedule& s) {
  Json levels = Json::array();
  for (int n = s.num_levels() - 1; n >= 1; --n) {
    levels.push_back({{"level", n}, {"threshold", s.zoom(n)}});
  }
  return {{"levels", levels}, {"positive_threshold_l0", s.positive_threshold_l0()}};
}

ThresholdSchedule schedule_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("levels") || !j.at("levels").is_array()) {
    throw ConfigError("schedule needs a 'levels' array");
  }
  const auto& levels = j.at("levels");
  int top = 0;
  for (const auto& l : levels) top = std::max(top, int_field(l, "level"));
  const double pos = j.contains("positive_threshold_l0") ? field<double>(j, "positive_threshold_l0") : 0.5;
  ThresholdSchedule s(top + 1, 0.0, pos);
  std::vector<bool> seen(static_cast<std::size_t>(top + 1), false);
  for (const auto& l : levels) {
    const int n = int_field(l, "level");
    if (n < 1) throw ConfigError("schedule level must be >= 1");
    if (seen[static_cast<std::size_t>(n)]) throw ConfigError("duplicate schedule level " + std::to_string(n));
    seen[static_cast<std::size_t>(n)] = true;
    s.set_zoom(n, field<double>(l, "threshold"));
  }
  for (int n = 1; n <= top; ++n) {
    if (!seen[static_cast<std::size_t>(n)]) throw ConfigError("schedule misses level " + std::to_string(n));
  }
  return s;
}

Json metrics_to_json(const RunMetrics& m) {
  Json undefined = Json::array();
  if (!m.speedup) undefined.push_back("speedup");
  if (!m.positive_retention_rate) undefined.push_back("positive_retention_rate");
  return {
      {"tiles_analyzed_per_level", m.tiles_analyzed_per_level},
      {"tiles_analyzed_total", m.tiles_analyzed_total},
      {"tiles_reference", m.tiles_reference},
      {"speedup", optional_number(m.speedup)},
      {"positive_retention_rate", optional_number(m.positive_retention_rate)},
      {"reference_true_positives", m.reference_true_positives},
      {"retained_true_positives", m.retained_true_positives},
      {"estimated_time_s", m.estimated_time_s},
      {"estimated_time_with_overhead_s", m.estimated_time_with_overhead_s},
      {"reference_time_s", m.reference_time_s},
      {"reference_time_with_overhead_s", m.reference_time_with_overhead_s},
      {"undefined", undefined},
  };
}

RunMetrics metrics_from_json(const Json& j) {
  RunMetrics m;
  m.tiles_analyzed_per_level = field<std::vector<std::size_t>>(j, "tiles_analyzed_per_level");
  m.tiles_analyzed_total = field<std::size_t>(j, "tiles_analyzed_total");
  m.tiles_reference = field<std::size_t>(j, "tiles_reference");
  m.speedup = optional_from(j, "speedup");
  m.positive_retention_rate = optional_from(j, "positive_retention_rate");
  m.reference_true_positives = field<std::size_t>(j, "reference_true_positives");
  m.retained_true_positives = field<std::size_t>(j, "retained_true_positives");
  m.estimated_time_s = field<double>(j, "estimated_time_s");
  m.estimated_time_with_overhead_s = field<double>(j, "estimated_time_with_overhead_s");
  m.reference_time_s = field<double>(j, "reference_time_s");
  m.reference_time_with_overhead_s = field<double>(j, "reference_time_with_overhead_s");
  return m;
}

Json sim_report_to_json(const SimReport& r) {
  return {{"worker_loads", r.worker_loads},         {"max_load", r.max_load},
          {"total_tiles", r.total_tiles},           {"steals_attempted", r.steals_attempted},
          {"steals_successful", r.steals_successful}, {"makespan_steps", r.makespan_steps}};
}

SimReport sim_report_from_json(const Json& j) {
  SimReport r;
  r.worker_loads = field<std::vector<std::size_t>>(j, "worker_loads");
  r.max_load = field<std::size_t>(j, "max_load");
  r.total_tiles = field<std::size_t>(j, "total_tiles");
  r.steals_attempted = field<std::size_t>(j, "steals_attempted");
  r.steals_successful = field<std::size_t>(j, "steals_successful");
  r.makespan_steps = field<std::size_t>(j, "makespan_steps");
  return r;
}

Json node_to_json(const TileId& t, const Node& n) {
  return {{"level", t.level}, {"col", t.col}, {"row", t.row}, {"p", n.probability},
          {"decision", to_string(n.decision)}};
}

void write_trace(std::ostream& out, const ExecutionTree& tree) {
  tree.for_each([&](const TileId& t, const Node& n) { out << node_to_json(t, n).dump() << '\n'; });
  if (!out) throw DataError("trace write failed");
}

ExecutionTree read_trace(std::istream& in, const PyramidGeometry& geometry) {
  ExecutionTree tree(geometry);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      tree.insert(tile_from_json(j), {field<double>(j, "p"), parse_decision(field<std::string>(j, "decision"))});
    } catch (const Json::exception& e) {
      throw DataError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tree;
}

void write_sweep_csv(std::ostream& out, const std::vector<BetaSweepRow>& rows, int num_levels) {
  out << "beta";
  for (int n = 1; n < num_levels; ++n) out << ",threshold_l" << n;
  out << ",retention,tile_reduction\n";
  for (const auto& r : rows) {
    if (static_cast<int>(r.thresholds.size()) != num_levels - 1) {
      throw DataError("sweep row has wrong number of thresholds");
    }
    out << format_double(r.beta);
    for (double t : r.thresholds) out << ',' << format_double(t);
    out << ',' << (r.retention ? format_double(*r.retention) : "") << ','
        << format_double(r.tile_reduction) << '\n';
  }
}

std::vector<BetaSweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty sweep CSV");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
  if (columns < 3) throw DataError("sweep CSV header too short");
  std::vector<BetaSweepRow> rows;
  auto num = [](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw DataError("bad number '" + s + "' in sweep CSV");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != columns) throw DataError("sweep CSV row has " + std::to_string(f.size()) + " fields");
    BetaSweepRow r;
    r.beta = num(f[0]);
    for (std::size_t i = 1; i + 2 < f.size(); ++i) r.thresholds.push_back(num(f[i]));
    if (!f[f.size() - 2].empty()) r.retention = num(f[f.size() - 2]);
    r.tile_reduction = num(f.back());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pyramidai

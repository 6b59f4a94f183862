// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "pyramidai/cluster/wire.hpp"
#include "pyramidai/cluster/worker.hpp"
#include "pyramidai/distsim.hpp"
#include "pyramidai/serialize.hpp"
#include "support.hpp"

using namespace pyramidai;
using namespace pyramidai::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures while letting the criterion keep checking.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_++ < 5) msg_ << (msg_.tellp() > 0 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  Outcome outcome() const {
    if (failures_ == 0) return {true, notes_.str()};
    return {false, std::to_string(failures_) + " failure(s): " + msg_.str()};
  }

 private:
  std::ostringstream msg_;
  std::ostringstream notes_;
  int failures_ = 0;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int failed = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_s > 0 && secs > limit_s) {
    out.pass = false;
    out.detail += " (runtime " + fmt(secs, 3) + " s over the " + fmt(limit_s, 3) + " s limit)";
  }
  if (!out.pass) ++failed;
  std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << title << " ["
            << fmt(secs, 3) << " s]";
  if (!out.detail.empty()) std::cout << " :: " << out.detail;
  std::cout << std::endl;
}

const std::vector<LabeledImage>& corpus() {
  static const std::vector<LabeledImage> images = seeded_corpus();
  return images;
}

std::span<const LabeledImage> train_split() { return {corpus().data(), kTrainCount}; }
std::span<const LabeledImage> test_split() {
  return {corpus().data() + kTrainCount, corpus().size() - kTrainCount};
}

const MetricBasedResult& tuned() {
  static const MetricBasedResult r = tune_metric_based(train_split(), 0.90);
  return r;
}

// --- criterion 1 -----------------------------------------------------------

Outcome slowdown_bound_exact() {
  Check c;
  c.expect(std::abs(slowdown_bound(2) - 4.0 / 3.0) <= 1e-12, "S(2) != 4/3");
  c.expect(std::abs(slowdown_bound(3) - 9.0 / 8.0) <= 1e-12, "S(3) != 9/8");
  c.expect(std::abs(slowdown_bound(2, 3) - 1.3125) <= 1e-12, "finite S(2, 3 levels) != 1.3125");

  const PyramidGeometry geom(3, 2, 16, 16);
  auto gt = full_foreground_truth(geom, make_mask(16, 16, [](int c, int r) { return (c + r) % 5 == 0; }));
  const auto src = exact_oracle(gt);
  const auto pyr = run_pyramidal(*gt, src, ThresholdSchedule::pass_through(3));
  const auto ref = run_reference(*gt, src, 0.5);
  const double ratio = static_cast<double>(pyr.size()) / static_cast<double>(ref.size());
  c.expect(std::abs(ratio - 1.3125) <= 1e-9, "pass-through ratio " + fmt(ratio, 12));
  c.note("16x16 ratio " + fmt(ratio, 10));
  return c.outcome();
}

// --- criterion 2 -----------------------------------------------------------

double f_beta_pr_form(const ConfusionCounts& k, double beta) {
  const double precision = static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp);
  const double recall = static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn);
  const double b2 = beta * beta;
  return (1 + b2) * precision * recall / (b2 * precision + recall);
}

ThresholdChoice exhaustive_scan(const std::vector<LabeledScore>& scores, double beta,
                                const std::vector<double>& grid) {
  ThresholdChoice best{grid.front(), -1.0};
  for (double t : grid) {
    ConfusionCounts k;
    for (const auto& s : scores) {
      const bool predicted = s.probability >= t;
      if (predicted && s.label) ++k.tp;
      else if (predicted) ++k.fp;
      else if (s.label) ++k.fn;
      else ++k.tn;
    }
    const double b2 = beta * beta;
    const double denom = (1 + b2) * k.tp + b2 * k.fn + k.fp;
    const double f = denom == 0 ? 0.0 : (1 + b2) * k.tp / denom;
    if (f >= best.f_beta) best = {t, f};  // later (larger) thresholds win ties
  }
  return best;
}

Outcome f_beta_oracles() {
  Check c;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> count(0, 10000);
  std::uniform_real_distribution<double> beta_dist(0.1, 14.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ConfusionCounts k{count(rng) + 1, count(rng), count(rng), count(rng)};
    const double beta = beta_dist(rng);
    const double diff = std::abs(f_beta(k, beta) - f_beta_pr_form(k, beta));
    worst = std::max(worst, diff);
  }
  c.expect(worst <= 1e-12, "f_beta differs from precision/recall form by " + fmt(worst));

  const auto grid = threshold_grid(1001);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<LabeledScore> scores(50);
    std::bernoulli_distribution coin(0.3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& s : scores) {
      s.label = coin(rng);
      // Mix of continuous scores and scores sitting exactly on grid points.
      s.probability = coin(rng) ? grid[static_cast<std::size_t>(unit(rng) * 1000)] : unit(rng);
    }
    const double beta = 1.0 + static_cast<double>(i % 14);
    const auto got = best_threshold(scores, beta, grid);
    const auto want = exhaustive_scan(scores, beta, grid);
    if (got.threshold != want.threshold || std::abs(got.f_beta - want.f_beta) > 1e-12) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " best_threshold mismatches");
  c.note("max |dF| " + fmt(worst, 3));
  return c.outcome();
}

// --- criterion 3 -----------------------------------------------------------

Outcome retention_consistency() {
  Check c;
  for (std::size_t i = 0; i < corpus().size(); ++i) {
    const auto& img = corpus()[i];
    const auto pyr = run_pyramidal(*img.truth, *img.source, ThresholdSchedule::pass_through(3));
    const auto ref = run_reference(*img.truth, *img.source, 0.5);
    c.expect(detected_positive_l0(pyr) == detected_positive_l0(ref),
             "image " + std::to_string(i) + ": detected set differs from reference");
    if (!reference_true_positives(ref, *img.truth).empty()) {
      c.expect(positive_retention(pyr, ref, *img.truth) == 1.0,
               "image " + std::to_string(i) + ": pass-through retention below 1");
    }
  }

  // Exhaustive anti-monotonicity on 32x32 instances: for every base schedule
  // on a coarse grid and every single-level raise, the analyzed set shrinks.
  const std::vector<double> steps = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t comparisons = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SynthConfig cfg;
    cfg.grid_cols = cfg.grid_rows = 32;
    cfg.region_count = static_cast<int>(seed);
    cfg.region_radius_min = 2;
    cfg.region_radius_max = 6;
    cfg.seed = seed;
    const auto img = synth_image(cfg);
    for (double t2 : steps) {
      for (double t1 : steps) {
        ThresholdSchedule base(3);
        base.set_zoom(2, t2);
        base.set_zoom(1, t1);
        const auto base_set = tile_set(run_pyramidal(*img.truth, *img.source, base));
        for (int level = 1; level <= 2; ++level) {
          for (double raised : steps) {
            if (raised <= base.zoom(level)) continue;
            ThresholdSchedule up = base;
            up.set_zoom(level, raised);
            const auto up_set = tile_set(run_pyramidal(*img.truth, *img.source, up));
            ++comparisons;
            c.expect(std::includes(base_set.begin(), base_set.end(), up_set.begin(), up_set.end()),
                     "raising level " + std::to_string(level) + " enlarged the analyzed set");
          }
        }
      }
    }
  }
  c.note(std::to_string(corpus().size()) + " images, " + std::to_string(comparisons) +
         " threshold raises");
  return c.outcome();
}

// --- criterion 4 -----------------------------------------------------------

Outcome metric_based() {
  Check c;
  const auto& r = tuned();
  const double target = std::sqrt(0.90);
  c.expect(std::abs(r.per_level_objective - target) <= 1e-12, "per-level objective mismatch");
  // 0.9487 is sqrt(0.9) rounded to four digits.
  c.expect(std::abs(r.per_level_objective - 0.9487) <= 5e-5, "objective does not round to 0.9487");
  for (const auto& l : r.levels) {
    c.expect(l.mean_isolated_retention >= target,
             "level " + std::to_string(l.level) + " isolated retention " + fmt(l.mean_isolated_retention));
    c.note("L" + std::to_string(l.level) + " beta " + fmt(l.beta, 3) + " t " + fmt(l.threshold, 4) +
           " iso " + fmt(l.mean_isolated_retention, 5));
  }
  const auto train = evaluate_schedule(train_split(), r.schedule);
  const auto test = evaluate_schedule(test_split(), r.schedule);
  c.expect(train.mean_retention.has_value(), "train retention undefined");
  c.expect(test.mean_retention.has_value() && *test.mean_retention >= 0.85,
           "test retention " + (test.mean_retention ? fmt(*test.mean_retention) : std::string("undefined")));
  c.note("product " + fmt(r.retention_product, 5));
  if (train.mean_retention) c.note("train full-run " + fmt(*train.mean_retention, 5));
  if (test.mean_retention) c.note("test full-run " + fmt(*test.mean_retention, 5));
  c.note("test reduction " + fmt(test.mean_tile_reduction, 4) + "x");
  return c.outcome();
}

// --- criterion 5 -----------------------------------------------------------

Outcome empirical_sweep() {
  Check c;
  const auto rows = tune_empirical(train_split());
  std::ostringstream csv;
  write_sweep_csv(csv, rows, 3);
  std::istringstream in(csv.str());
  const auto parsed = read_sweep_csv(in);
  c.expect(parsed.size() == 14, "sweep has " + std::to_string(parsed.size()) + " rows");
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    c.expect(parsed[i].beta == static_cast<double>(i + 1), "row " + std::to_string(i) + " beta");
  }
  int violations = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool ret_ok = rows[i].retention.value_or(0) >= rows[i - 1].retention.value_or(0);
    const bool red_ok = rows[i].tile_reduction <= rows[i - 1].tile_reduction;
    if (!ret_ok || !red_ok) ++violations;
  }
  c.expect(violations <= 1, std::to_string(violations) + " monotonicity violations");
  c.note("violations " + std::to_string(violations));
  c.note("beta 1: ret " + fmt(rows.front().retention.value_or(-1), 4) + " red " +
         fmt(rows.front().tile_reduction, 4));
  c.note("beta 14: ret " + fmt(rows.back().retention.value_or(-1), 4) + " red " +
         fmt(rows.back().tile_reduction, 4));
  return c.outcome();
}

// --- criterion 6 -----------------------------------------------------------

Outcome simulator_bounds() {
  Check c;
  const auto& sched = tuned().schedule;
  const std::vector<int> worker_counts = {1, 2, 4, 8, 12, 16};
  std::size_t runs = 0;
  std::size_t worst_slack = 0;
  int block_below_rr = 0;
  for (int w : worker_counts) {
    double block_sum = 0;
    double rr_sum = 0;
    for (std::size_t i = 0; i < corpus().size(); ++i) {
      const auto& img = corpus()[i];
      const auto single = run_pyramidal(*img.truth, *img.source, sched);
      const std::size_t ideal = oracle_max_load(single, w);
      for (auto d : {Distribution::RoundRobin, Distribution::Random, Distribution::Block}) {
        for (auto p : {Policy::NoRebalance, Policy::LevelSync, Policy::WorkStealing}) {
          const SimConfig cfg{w, d, p, 1000 + i};
          const auto r = simulate(*img.truth, *img.source, sched, cfg);
          ++runs;
          std::size_t sum = 0;
          for (auto l : r.report.worker_loads) sum += l;
          const std::string where = "W=" + std::to_string(w) + " " + to_string(d) + "/" +
                                    to_string(p) + " image " + std::to_string(i);
          c.expect(sum == single.size() && r.report.total_tiles == single.size(), where + ": loads not conserved");
          c.expect(r.report.max_load >= ideal, where + ": below ideal");
          if (p == Policy::WorkStealing) {
            worst_slack = std::max(worst_slack, r.report.max_load - ideal);
            c.expect(r.report.max_load <= ideal + 3,
                     where + ": stealing max_load " + std::to_string(r.report.max_load) +
                         " > ideal " + std::to_string(ideal) + " + 3");
          }
          if (p == Policy::NoRebalance && d == Distribution::Block) block_sum += r.report.max_load;
          if (p == Policy::NoRebalance && d == Distribution::RoundRobin) rr_sum += r.report.max_load;
        }
      }
    }
    if (w > 1 && block_sum < rr_sum) ++block_below_rr;
    c.expect(block_sum >= rr_sum, "W=" + std::to_string(w) + ": mean Block max_load below RoundRobin");
    if (w == 16) {
      c.note("W=16 mean max_load Block " + fmt(block_sum / corpus().size(), 5) + " vs RoundRobin " +
             fmt(rr_sum / corpus().size(), 5));
    }
  }
  c.note(std::to_string(runs) + " runs");
  c.note("worst stealing slack " + std::to_string(worst_slack));
  return c.outcome();
}

// --- criterion 7 -----------------------------------------------------------

Outcome cost_model() {
  Check c;
  const PyramidGeometry geom(3, 2, 100, 100);
  auto gt = full_foreground_truth(geom, Mask(100, 100));
  const auto src = exact_oracle(gt);
  const auto ref = run_reference(*gt, src, 0.5);
  c.expect(ref.count(0) == 10000, "reference tree has " + std::to_string(ref.count(0)) + " tiles");
  const double t = estimate_time(ref, CostModel{}, ExecutionMode::Reference);
  c.expect(std::abs(t - 3300.0) <= 1e-9, "reference estimate " + fmt(t, 17));

  // With per-tile costs c_n, a pyramidal run is cheaper than the reference
  // as soon as the tile-count speedup exceeds max_n c_n / c_0.
  const CostModel cm;
  const double break_even = *std::max_element(cm.analysis_s.begin(), cm.analysis_s.end()) / cm.analysis_s[0];
  int premises = 0;
  for (std::size_t i = 0; i < corpus().size(); ++i) {
    const auto& img = corpus()[i];
    const auto pyr = run_pyramidal(*img.truth, *img.source, tuned().schedule);
    const auto ref_i = run_reference(*img.truth, *img.source, 0.5);
    const RunMetrics m = compute_metrics(pyr, ref_i, *img.truth, cm);
    if (m.speedup && *m.speedup > break_even) {
      ++premises;
      c.expect(m.estimated_time_s < m.reference_time_s,
               "image " + std::to_string(i) + ": pyramidal estimate not below reference");
    }
  }
  c.expect(premises > 0, "no corpus image beats break-even");
  c.note("reference 10000 tiles = " + fmt(t, 10) + " s");
  c.note(std::to_string(premises) + "/" + std::to_string(corpus().size()) + " images above break-even " +
         fmt(break_even, 4));
  return c.outcome();
}

// --- criterion 8 -----------------------------------------------------------

Outcome cluster_equivalence() {
  Check c;
  double slowest = 0;
  std::size_t nodes = 0;
  for (std::size_t i = 0; i < 3; ++i) {  // large region, small regions, negative
    const auto& img = corpus()[i];
    const auto expected = run_pyramidal(*img.truth, *img.source, tuned().schedule);
    nodes += expected.size();
    for (int w : {1, 2, 4}) {
      const auto start = Clock::now();
      const auto r = cluster::run_local_cluster(*img.truth, *img.source, tuned().schedule, w, 77 + i,
                                                std::chrono::minutes(2));
      const double secs = std::chrono::duration<double>(Clock::now() - start).count();
      slowest = std::max(slowest, secs);
      const std::string where = "image " + std::to_string(i) + " W=" + std::to_string(w);
      c.expect(r.tree == expected, where + ": gathered tree differs");
      c.expect(cluster::overlapping_nodes(r.partials) == 0, where + ": tile analyzed twice");
      std::size_t processed = 0;
      for (const auto& s : r.stats) processed += s.tiles_processed;
      c.expect(processed == expected.size(), where + ": processed count mismatch");
      c.expect(secs < 120.0, where + ": took " + fmt(secs, 3) + " s");
    }
  }
  c.note(std::to_string(nodes) + " nodes per worker count");
  c.note("slowest run " + fmt(slowest, 3) + " s");
  return c.outcome();
}

// --- criterion 9 -----------------------------------------------------------

cluster::WireMessage random_message(std::mt19937_64& rng) {
  using cluster::MessageType;
  std::uniform_int_distribution<int> type(0, 4);
  std::uniform_int_distribution<int> id(0, 1 << 20);
  std::uniform_int_distribution<int> level(0, 12);
  std::uniform_int_distribution<int> coord(0, 1 << 24);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> nodes(0, 40);
  std::uniform_int_distribution<int> decision(1, 3);
  cluster::WireMessage m;
  m.type = static_cast<MessageType>(type(rng));
  m.sender = id(rng);
  if (m.type == MessageType::TaskGrant) m.tile = TileId{level(rng), coord(rng), coord(rng)};
  if (m.type == MessageType::SubtreeUpload) {
    const int n = nodes(rng);
    for (int k = 0; k < n; ++k) {
      // Include exact endpoints and values with long decimal expansions.
      double p = unit(rng);
      if (k % 7 == 0) p = 0.0;
      if (k % 11 == 0) p = 1.0;
      if (k % 13 == 0) p = std::nextafter(1.0, 0.0);
      m.nodes.push_back({TileId{level(rng), coord(rng), coord(rng)},
                         Node{p, static_cast<Decision>(decision(rng))}});
    }
  }
  return m;
}

Outcome wire_round_trip() {
  Check c;
  std::mt19937_64 rng(99);
  std::string stream;
  std::vector<cluster::WireMessage> sent;
  for (int i = 0; i < 10000; ++i) {
    sent.push_back(random_message(rng));
    stream += cluster::encode_frame(sent.back());
  }
  // Feed the concatenated stream in random chunk sizes.
  cluster::FrameDecoder decoder;
  std::vector<cluster::WireMessage> got;
  std::uniform_int_distribution<std::size_t> chunk(1, 4096);
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t n = std::min(chunk(rng), stream.size() - pos);
    decoder.feed(std::string_view(stream).substr(pos, n));
    pos += n;
    while (auto m = decoder.next()) got.push_back(std::move(*m));
  }
  c.expect(got.size() == sent.size(), "decoded " + std::to_string(got.size()) + " messages");
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < std::min(got.size(), sent.size()); ++i) {
    if (!(got[i] == sent[i]) || cluster::encode_frame(got[i]) != cluster::encode_frame(sent[i])) ++mismatched;
  }
  c.expect(mismatched == 0, std::to_string(mismatched) + " messages differ after round trip");
  c.expect(decoder.buffered() == 0, "leftover bytes in decoder");
  c.note(std::to_string(stream.size()) + " bytes");
  return c.outcome();
}

}  // namespace

int main() {
  run(1, "slowdown bound exact and attained", 1.0, slowdown_bound_exact);
  run(2, "F-beta oracle equivalence", 10.0, f_beta_oracles);
  {
    const auto start = Clock::now();
    corpus();
    std::cout << "      corpus of " << corpus().size() << " images built in "
              << fmt(std::chrono::duration<double>(Clock::now() - start).count(), 3) << " s" << std::endl;
  }
  run(3, "retention and speedup consistency", 60.0, retention_consistency);
  run(4, "metric-based strategy at r = 0.90", 300.0, metric_based);
  run(5, "empirical beta sweep", 300.0, empirical_sweep);
  run(6, "simulator conservation and bounds", 300.0, simulator_bounds);
  run(7, "cost model", 0.0, cost_model);
  run(8, "loopback cluster equivalence", 0.0, cluster_equivalence);
  run(9, "wire protocol round trip", 0.0, wire_round_trip);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed")
            << std::endl;
  return failed;
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "pyramidai/errors.hpp"
#include "support.hpp"

using namespace pyramidai;
using namespace pyramidai::testing;

namespace {

std::vector<LabeledScore> random_scores(std::mt19937_64& rng, std::size_t n, double positive_rate) {
  std::bernoulli_distribution coin(positive_rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledScore> out(n);
  for (auto& s : out) {
    s.label = coin(rng);
    s.probability = unit(rng);
  }
  return out;
}

LabeledImage region_image(std::uint64_t seed, int grid = 32) {
  SynthConfig cfg;
  cfg.grid_cols = cfg.grid_rows = grid;
  cfg.region_count = 2;
  cfg.region_radius_min = 2;
  cfg.region_radius_max = 5;
  cfg.seed = seed;
  return synth_image(cfg);
}

}  // namespace

TEST_SUITE("f-beta") {
  TEST_CASE("hand-evaluated example") {
    CHECK(f_beta({3, 1, 1, 0}, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("no true positives scores zero") {
    CHECK(f_beta({0, 5, 3, 2}, 2.0) == 0.0);
    CHECK(f_beta({0, 0, 0, 9}, 1.0) == 0.0);
  }

  TEST_CASE("equal precision and recall is a fixed point") {
    // precision = recall = 0.8 with TP = 8, FP = FN = 2.
    for (double beta : {0.5, 1.0, 3.0, 14.0}) CHECK(f_beta({8, 2, 2, 0}, beta) == doctest::Approx(0.8));
  }

  TEST_CASE("beta must be positive") {
    CHECK_THROWS_AS(f_beta({1, 1, 1, 1}, 0.0), std::domain_error);
    CHECK_THROWS_AS(f_beta({1, 1, 1, 1}, -1.0), std::domain_error);
  }

  TEST_CASE("property: count form equals precision/recall form") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> count(0, 500);
    std::uniform_real_distribution<double> beta(0.05, 20.0);
    for (int i = 0; i < 2000; ++i) {
      const ConfusionCounts c{count(rng) + 1, count(rng), count(rng), count(rng)};
      const double b = beta(rng);
      const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
      const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      const double pr = (1 + b * b) * precision * recall / (b * b * precision + recall);
      CHECK(std::abs(f_beta(c, b) - pr) <= 1e-12);
    }
  }

  TEST_CASE("confusion counts are inclusive at the threshold") {
    const std::vector<LabeledScore> s = {{0.5, true}, {0.49, true}, {0.5, false}, {0.1, false}};
    CHECK(confusion_at(s, 0.5) == ConfusionCounts{1, 1, 1, 1});
  }
}

TEST_SUITE("threshold search") {
  TEST_CASE("separable scores") {
    std::vector<LabeledScore> s;
    for (int i = 0; i < 5; ++i) s.push_back({0.9, true});
    for (int i = 0; i < 5; ++i) s.push_back({0.1, false});
    const std::vector<double> grid = {0.0, 0.5, 1.0};
    const auto r = best_threshold(s, 1.0, grid);
    CHECK(r.threshold == 0.5);
    CHECK(r.f_beta == 1.0);
  }

  TEST_CASE("all-negative labels tie at zero and pick the largest threshold") {
    std::vector<LabeledScore> s = {{0.3, false}, {0.8, false}};
    const std::vector<double> grid = {0.0, 0.5, 1.0};
    const auto r = best_threshold(s, 2.0, grid);
    CHECK(r.threshold == 1.0);
    CHECK(r.f_beta == 0.0);
  }

  TEST_CASE("grid validation and missing level") {
    const std::vector<LabeledScore> s = {{0.3, true}};
    const std::vector<double> unsorted = {0.5, 0.1};
    CHECK_THROWS_AS(best_threshold(s, 1.0, std::span<const double>()), std::invalid_argument);
    CHECK_THROWS_AS(best_threshold(s, 1.0, unsorted), std::invalid_argument);
    PredictionTable table;
    table.insert({1, 0, 0}, 0.4, true);
    const auto grid = threshold_grid(11);
    CHECK_NOTHROW(best_threshold(table, 1, 1.0, grid));
    CHECK_THROWS_AS(best_threshold(table, 2, 1.0, grid), DataError);
  }

  TEST_CASE("grid spacing") {
    const auto g = threshold_grid(1001);
    REQUIRE(g.size() == 1001);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    CHECK(g[500] == 0.5);
    CHECK(g[123] == doctest::Approx(0.123).epsilon(1e-15));
  }

  TEST_CASE("property: result is in the grid and beats every other grid point") {
    std::mt19937_64 rng(8);
    const auto grid = threshold_grid(101);
    for (int trial = 0; trial < 300; ++trial) {
      const auto scores = random_scores(rng, 50, 0.35);
      const double beta = 1.0 + trial % 14;
      const auto r = best_threshold(scores, beta, grid);
      REQUIRE(std::find(grid.begin(), grid.end(), r.threshold) != grid.end());
      CHECK(r.f_beta == f_beta(confusion_at(scores, r.threshold), beta));
      for (double t : grid) {
        const double f = f_beta(confusion_at(scores, t), beta);
        CHECK(f <= r.f_beta);
        if (f == r.f_beta) CHECK(t <= r.threshold);
      }
    }
  }

  TEST_CASE("property: a very large beta removes false negatives") {
    std::mt19937_64 rng(12);
    const auto grid = threshold_grid(1001);
    for (int trial = 0; trial < 100; ++trial) {
      auto scores = random_scores(rng, 60, 0.3);
      scores.push_back({0.7, true});
      const auto r = best_threshold(scores, 1e4, grid);
      CHECK(confusion_at(scores, r.threshold).fn == 0);
    }
  }
}

TEST_SUITE("isolated retention") {
  TEST_CASE("extreme thresholds") {
    const auto img = region_image(2);
    for (int level = 1; level <= 2; ++level) {
      CHECK(isolated_level_retention(*img.truth, *img.source, level, 0.0).retention == 1.0);
      CHECK(isolated_level_retention(*img.truth, *img.source, level, 1.0).retention == 0.0);
    }
    CHECK_THROWS_AS(isolated_level_retention(*img.truth, *img.source, 0, 0.5), std::out_of_range);
    CHECK_THROWS_AS(isolated_level_retention(*img.truth, *img.source, 3, 0.5), std::out_of_range);
  }

  TEST_CASE("level-1 filter matches an independent recomputation") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const auto img = region_image(seed, 24 + static_cast<int>(seed));
      const auto& gt = *img.truth;
      const auto& src = *img.source;
      const auto& geom = gt.geometry();
      std::size_t tp = 0, kept = 0, ref_tiles = 0, l1 = 0;
      for (int r = 0; r < geom.rows(0); ++r) {
        for (int c = 0; c < geom.cols(0); ++c) {
          const TileId t{0, c, r};
          if (!gt.in_foreground(t)) continue;
          ++ref_tiles;
          const bool detected = src.predict(t) >= 0.5;
          const bool parent_open = src.predict({1, c / 2, r / 2}) >= 0.5;
          if (detected && gt.label(t)) {
            ++tp;
            kept += parent_open;
          }
        }
      }
      std::size_t l0 = 0;
      for (int r = 0; r < geom.rows(1); ++r) {
        for (int c = 0; c < geom.cols(1); ++c) {
          if (!gt.in_foreground({1, c, r})) continue;
          ++l1;
          if (src.predict({1, c, r}) >= 0.5) l0 += children(geom, {1, c, r}).size();
        }
      }
      const std::size_t total = gt.roots().size() + l1 + l0;
      const auto iso = isolated_level_retention(gt, src, 1, 0.5);
      if (tp == 0) {
        CHECK_FALSE(iso.retention.has_value());
      } else {
        REQUIRE(iso.retention.has_value());
        CHECK(*iso.retention == static_cast<double>(kept) / static_cast<double>(tp));
      }
      CHECK(iso.tile_reduction == static_cast<double>(ref_tiles) / static_cast<double>(total));
    }
  }
}

TEST_SUITE("metric-based strategy") {
  TEST_CASE("per-level objective is the n-th root") {
    std::vector<LabeledImage> train;
    for (std::uint64_t s = 0; s < 4; ++s) train.push_back(region_image(s));
    const auto r = tune_metric_based(train, 0.90);
    CHECK(r.per_level_objective == doctest::Approx(std::sqrt(0.9)).epsilon(1e-15));
    CHECK(r.per_level_objective == doctest::Approx(0.9487).epsilon(1e-4));
    REQUIRE(r.levels.size() == 2);
    CHECK(r.levels[0].level == 2);
    CHECK(r.levels[1].level == 1);
    double product = 1.0;
    for (const auto& l : r.levels) {
      CHECK(l.mean_isolated_retention >= r.per_level_objective);
      CHECK(r.schedule.zoom(l.level) == l.threshold);
      // The chosen beta is the smallest that meets the objective.
      ThresholdTable table(train, {});
      for (std::size_t b = 0; b < table.betas().size() && table.betas()[b] < l.beta; ++b) {
        const auto m = mean_isolated_retention(train, l.level, table.threshold(b, l.level), 0.5);
        REQUIRE(m.has_value());
        CHECK(*m < r.per_level_objective);
      }
      product *= l.mean_isolated_retention;
    }
    CHECK(r.retention_product == doctest::Approx(product));
  }

  TEST_CASE("objective 1 keeps every reference true positive") {
    std::vector<LabeledImage> train;
    for (std::uint64_t s = 10; s < 14; ++s) train.push_back(region_image(s));
    TuningOptions opts;
    opts.betas = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 1e6};
    const auto r = tune_metric_based(train, 1.0, opts);
    for (const auto& l : r.levels) CHECK(l.mean_isolated_retention == 1.0);
    const auto full = evaluate_schedule(train, r.schedule);
    REQUIRE(full.mean_retention.has_value());
    CHECK(*full.mean_retention == 1.0);
  }

  TEST_CASE("unreachable objective names the level") {
    // Level-2 scores: one positive tile hidden among the negatives at 0.1.
    const PyramidGeometry geom(3, 2, 24, 24);
    auto gt = full_foreground_truth(geom, make_mask(24, 24, [](int c, int r) {
      return (c < 8 && r < 8) || (c >= 20 && r >= 20);
    }));
    PredictionTable table = materialize(*gt, exact_oracle(gt));
    PredictionTable shifted;
    for (const auto& [t, e] : table.entries()) {
      double p = e.probability;
      if (t.level == 2) p = e.label && !(t.col == 5 && t.row == 5) ? 0.9 : 0.1;
      shifted.insert(t, p, e.label);
    }
    const std::vector<LabeledImage> train = {{gt, std::make_shared<const PredictionSource>(shifted)}};
    TuningOptions opts;
    opts.betas = {1};
    try {
      tune_metric_based(train, 1.0, opts);
      FAIL("expected an unreachable objective");
    } catch (const UnreachableObjectiveError& e) {
      CHECK(e.level() == 2);
    }
    CHECK_THROWS_AS(tune_metric_based(train, 0.0, opts), ConfigError);
    CHECK_THROWS_AS(tune_metric_based(train, 1.5, opts), ConfigError);
  }
}

TEST_SUITE("empirical strategy") {
  TEST_CASE("one row per beta, sorted") {
    std::vector<LabeledImage> train = {region_image(1), region_image(2)};
    TuningOptions opts;
    opts.betas = {3, 1, 2};
    const auto rows = tune_empirical(train, opts);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].beta == 1);
    CHECK(rows[2].beta == 3);
    CHECK(tune_empirical(train).size() == 14);
  }

  TEST_CASE("degenerate scores force pass-through rows") {
    const PyramidGeometry geom(3, 2, 16, 16);
    auto gt = full_foreground_truth(geom, make_mask(16, 16, [](int c, int r) { return c < 5 && r < 3; }));
    const auto src = std::make_shared<const PredictionSource>(
        NoisyOracle(gt, std::vector<OracleLevelParams>(3, {0.5, 0.0}), 1));
    const std::vector<LabeledImage> train = {{gt, src}};
    for (const auto& row : tune_empirical(train)) {
      REQUIRE(row.retention.has_value());
      CHECK(*row.retention == 1.0);
      CHECK(row.tile_reduction == doctest::Approx(1.0 / slowdown_bound(2, 3)).epsilon(1e-12));
    }
  }

  TEST_CASE("rows match per-image runs on a two-image corpus") {
    const std::vector<LabeledImage> train = {region_image(5, 28), region_image(6, 36)};
    const auto rows = tune_empirical(train);
    for (const auto& row : rows) {
      ThresholdSchedule s(3);
      s.set_zoom(1, row.thresholds.at(0));
      s.set_zoom(2, row.thresholds.at(1));
      double retention = 0, reduction = 0;
      int defined = 0;
      for (const auto& img : train) {
        const auto pyr = run_pyramidal(*img.truth, *img.source, s);
        const auto ref = run_reference(*img.truth, *img.source, 0.5);
        const auto tp = reference_true_positives(ref, *img.truth);
        std::size_t kept = 0;
        for (const auto& t : tp) {
          const auto n = pyr.find(t);
          kept += n && n->decision == Decision::Positive;
        }
        if (!tp.empty()) {
          retention += static_cast<double>(kept) / static_cast<double>(tp.size());
          ++defined;
        }
        reduction += static_cast<double>(ref.count(0)) / static_cast<double>(pyr.size());
      }
      REQUIRE(defined > 0);
      REQUIRE(row.retention.has_value());
      CHECK(*row.retention == doctest::Approx(retention / defined).epsilon(1e-12));
      CHECK(row.tile_reduction == doctest::Approx(reduction / 2).epsilon(1e-12));
    }
  }

  TEST_CASE("images without reference positives are left out of the retention mean") {
    SynthConfig neg;
    neg.region_count = 0;
    neg.grid_cols = neg.grid_rows = 32;
    neg.seed = 4;
    const std::vector<LabeledImage> with = {region_image(7), synth_image(neg)};
    const std::vector<LabeledImage> without = {region_image(7)};
    const ThresholdSchedule s(3, 0.5);
    const auto a = evaluate_schedule(with, s);
    const auto b = evaluate_schedule(without, s);
    CHECK(a.mean_retention == b.mean_retention);
    CHECK(a.images_with_positives == 1);
  }
}

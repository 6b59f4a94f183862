// Command-line front end: generate, analyze, tune-metric, tune-empirical,
// simulate and cluster.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "pyramidai/cluster/worker.hpp"
#include "pyramidai/config.hpp"
#include "pyramidai/errors.hpp"
#include "pyramidai/io.hpp"

#ifndef PYRAMIDAI_VERSION
#define PYRAMIDAI_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace pyramidai;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTransport = 4;

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.out, "Output directory");
  cmd->add_option("--seed", args.seed, "Overrides the config seed");
}

AppConfig load(const CommonArgs& args) {
  AppConfig cfg = load_config(args.config);
  if (args.seed) {
    cfg.seed = args.seed;
    cfg.simulation.seed = *args.seed;
    if (cfg.image && cfg.image->synthetic) cfg.image->synthetic->seed = *args.seed;
  }
  return cfg;
}

const ImageSpec& require_image(const AppConfig& cfg) {
  if (!cfg.image) throw ConfigError("config needs an 'image' section");
  return *cfg.image;
}

const CorpusSpec& require_corpus(const AppConfig& cfg) {
  if (!cfg.corpus) throw ConfigError("config needs a 'corpus' section");
  return *cfg.corpus;
}

ThresholdSchedule schedule_for(const AppConfig& cfg, const GroundTruthPyramid& gt) {
  if (cfg.schedule) return *cfg.schedule;
  return ThresholdSchedule(gt.geometry().num_levels(), 0.5, 0.5);
}

void write_json(const fs::path& path, const Json& j) {
  auto out = io::open_output(path);
  out << j.dump(2) << '\n';
}

void write_trace_file(const fs::path& path, const ExecutionTree& tree) {
  auto out = io::open_output(path);
  write_trace(out, tree);
}

int cmd_generate(const CommonArgs& args, bool with_predictions) {
  const AppConfig cfg = load(args);
  const ImageSpec& spec = require_image(cfg);
  if (!spec.synthetic) throw ConfigError("generate needs image.synthetic");
  const LabeledImage img = load_image(spec);
  const fs::path out(args.out);
  io::write_pgm(out / "labels.pgm", img.truth->level0_labels());
  io::write_pgm(out / "foreground.pgm", img.truth->foreground());
  if (with_predictions) io::write_prediction_csv(out / "predictions.csv", materialize(*img.truth, *img.source));
  std::cout << "wrote " << img.truth->geometry().cols(0) << "x" << img.truth->geometry().rows(0)
            << " pyramid to " << out << "\n";
  return 0;
}

struct Analysis {
  ExecutionTree pyramidal;
  ExecutionTree reference;
  RunMetrics metrics;
};

Analysis analyze(const LabeledImage& img, const ThresholdSchedule& sched, const CostModel& cm) {
  Analysis a;
  a.pyramidal = run_pyramidal(*img.truth, *img.source, sched);
  a.reference = run_reference(*img.truth, *img.source, sched.positive_threshold_l0());
  a.metrics = compute_metrics(a.pyramidal, a.reference, *img.truth, cm);
  return a;
}

int cmd_analyze(const CommonArgs& args) {
  const AppConfig cfg = load(args);
  const LabeledImage img = load_image(require_image(cfg));
  const ThresholdSchedule sched = schedule_for(cfg, *img.truth);
  const Analysis a = analyze(img, sched, cfg.cost_model);
  const fs::path out(args.out);
  write_trace_file(out / "pyramidal_trace.jsonl", a.pyramidal);
  write_trace_file(out / "reference_trace.jsonl", a.reference);
  write_json(out / "metrics.json", metrics_to_json(a.metrics));
  std::cout << metrics_to_json(a.metrics).dump(2) << "\n";
  return 0;
}

int cmd_tune_metric(const CommonArgs& args) {
  const AppConfig cfg = load(args);
  const CorpusSpec& spec = require_corpus(cfg);
  const auto images = load_corpus(spec);
  std::span<const LabeledImage> train(images.data(), spec.train_count);
  const MetricBasedResult r = tune_metric_based(train, cfg.objective_r, cfg.tuning);

  Json levels = Json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"level", l.level}, {"beta", l.beta}, {"threshold", l.threshold},
                      {"isolated_retention", l.mean_isolated_retention},
                      {"isolated_tile_reduction", l.mean_tile_reduction}});
  }
  const CorpusRunSummary full_train = evaluate_schedule(train, r.schedule);
  Json report = {{"objective", r.objective},
                 {"per_level_objective", r.per_level_objective},
                 {"levels", levels},
                 {"retention_product", r.retention_product},
                 {"train_retention", full_train.mean_retention ? Json(*full_train.mean_retention) : Json(nullptr)},
                 {"train_tile_reduction", full_train.mean_tile_reduction}};
  if (spec.train_count < images.size()) {
    std::span<const LabeledImage> test(images.data() + spec.train_count, images.size() - spec.train_count);
    const CorpusRunSummary t = evaluate_schedule(test, r.schedule);
    report["test_retention"] = t.mean_retention ? Json(*t.mean_retention) : Json(nullptr);
    report["test_tile_reduction"] = t.mean_tile_reduction;
  }
  const fs::path out(args.out);
  write_json(out / "schedule.json", schedule_to_json(r.schedule));
  write_json(out / "tuning_report.json", report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_tune_empirical(const CommonArgs& args) {
  const AppConfig cfg = load(args);
  const CorpusSpec& spec = require_corpus(cfg);
  const auto images = load_corpus(spec);
  std::span<const LabeledImage> train(images.data(), spec.train_count);
  const auto rows = tune_empirical(train, cfg.tuning);
  auto out = io::open_output(fs::path(args.out) / "sweep.csv");
  write_sweep_csv(out, rows, images.front().truth->geometry().num_levels());
  write_sweep_csv(std::cout, rows, images.front().truth->geometry().num_levels());
  return 0;
}

int cmd_simulate(const CommonArgs& args, bool sweep) {
  const AppConfig cfg = load(args);
  const fs::path out(args.out);
  if (!sweep) {
    const LabeledImage img = load_image(require_image(cfg));
    const ThresholdSchedule sched = schedule_for(cfg, *img.truth);
    const SimResult r = simulate(*img.truth, *img.source, sched, cfg.simulation);
    Json j = sim_report_to_json(r.report);
    j["oracle_max_load"] = oracle_max_load(r.tree, cfg.simulation.workers);
    j["workers"] = cfg.simulation.workers;
    j["distribution"] = to_string(cfg.simulation.distribution);
    j["policy"] = to_string(cfg.simulation.policy);
    write_json(out / "sim_report.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  const auto images = load_corpus(require_corpus(cfg));
  auto csv = io::open_output(out / "sim_sweep.csv");
  csv << "image,workers,distribution,policy,max_load,total,steals_ok,steals_failed\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ThresholdSchedule sched = schedule_for(cfg, *images[i].truth);
    for (int w : cfg.sweep_workers) {
      for (auto d : {Distribution::RoundRobin, Distribution::Random, Distribution::Block}) {
        for (auto p : {Policy::NoRebalance, Policy::LevelSync, Policy::WorkStealing}) {
          const SimConfig sc{w, d, p, cfg.simulation.seed};
          const SimResult r = simulate(*images[i].truth, *images[i].source, sched, sc);
          csv << i << ',' << w << ',' << to_string(d) << ',' << to_string(p) << ','
              << r.report.max_load << ',' << r.report.total_tiles << ','
              << r.report.steals_successful << ','
              << r.report.steals_attempted - r.report.steals_successful << '\n';
        }
      }
    }
  }
  std::cout << "wrote " << (out / "sim_sweep.csv").string() << "\n";
  return 0;
}

int finish_cluster(const CommonArgs& args, const AppConfig& cfg, const LabeledImage& img,
                   const ThresholdSchedule& sched, const ExecutionTree& gathered,
                   std::size_t overlaps) {
  const ExecutionTree reference = run_reference(*img.truth, *img.source, sched.positive_threshold_l0());
  const RunMetrics m = compute_metrics(gathered, reference, *img.truth, cfg.cost_model);
  const fs::path out(args.out);
  write_trace_file(out / "cluster_trace.jsonl", gathered);
  Json j = metrics_to_json(m);
  j["overlapping_nodes"] = overlaps;
  write_json(out / "cluster_metrics.json", j);
  std::cout << j.dump(2) << "\n";
  if (overlaps != 0) throw IntegrityError(std::to_string(overlaps) + " tiles analyzed more than once");
  return 0;
}

int cmd_cluster_worker(const CommonArgs& args, int id, const std::string& peers,
                       const std::string& listen) {
  const AppConfig cfg = load(args);
  const LabeledImage img = load_image(require_image(cfg));
  const ThresholdSchedule sched = schedule_for(cfg, *img.truth);

  cluster::WorkerOptions opts;
  opts.id = id;
  opts.peers = cluster::parse_address_list(peers);
  opts.seed = cfg.seed.value_or(0);
  if (id < 0 || id >= static_cast<int>(opts.peers.size())) {
    throw ConfigError("--id must index into --peers");
  }
  cluster::PeerAddress bind = listen.empty() ? opts.peers[static_cast<std::size_t>(id)]
                                             : cluster::parse_address(listen);
  cluster::Listener listener(bind);
  // Data is replicated: every worker derives the same round-robin split.
  auto queues = distribute(img.truth->roots(), static_cast<int>(opts.peers.size()), Distribution::RoundRobin);
  auto outcome = cluster::worker_run(listener, opts, std::move(queues[static_cast<std::size_t>(id)]),
                                     *img.truth, *img.source, sched);
  std::cerr << "worker " << id << ": analyzed " << outcome.stats.tiles_processed << " tiles, "
            << outcome.stats.steal_requests_sent << " steal requests\n";
  if (id != 0) return 0;
  return finish_cluster(args, cfg, img, sched, *outcome.gathered,
                        cluster::overlapping_nodes(outcome.partials));
}

int cmd_cluster_local(const CommonArgs& args, int workers) {
  const AppConfig cfg = load(args);
  const LabeledImage img = load_image(require_image(cfg));
  const ThresholdSchedule sched = schedule_for(cfg, *img.truth);
  auto r = cluster::run_local_cluster(*img.truth, *img.source, sched, workers, cfg.seed.value_or(0));
  return finish_cluster(args, cfg, img, sched, r.tree, cluster::overlapping_nodes(r.partials));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine pyramidal tile analysis: tuning, simulation and cluster runtime"};
  app.set_version_flag("--version", std::string("pyramidai ") + PYRAMIDAI_VERSION);
  app.require_subcommand(1);

  CommonArgs gen_args, analyze_args, metric_args, empirical_args, sim_args, worker_args, local_args;
  bool no_predictions = false;
  bool sweep = false;
  int worker_id = 0;
  int local_workers = 2;
  std::string peers;
  std::string listen;

  auto* gen = app.add_subcommand("generate", "Write ground-truth PGMs and a prediction CSV");
  add_common(gen, gen_args);
  gen->add_flag("--no-predictions", no_predictions, "Skip the prediction CSV");

  auto* analyze_cmd = app.add_subcommand("analyze", "Pyramidal vs reference run with metrics");
  add_common(analyze_cmd, analyze_args);

  auto* metric = app.add_subcommand("tune-metric", "Metric-based threshold selection");
  add_common(metric, metric_args);

  auto* empirical = app.add_subcommand("tune-empirical", "Beta sweep for empirical selection");
  add_common(empirical, empirical_args);

  auto* sim = app.add_subcommand("simulate", "Distributed execution simulator");
  add_common(sim, sim_args);
  sim->add_flag("--sweep", sweep, "Sweep workers, distributions and policies over the corpus");

  auto* cluster_cmd = app.add_subcommand("cluster", "TCP cluster runtime");
  cluster_cmd->require_subcommand(1);
  auto* worker = cluster_cmd->add_subcommand("worker", "Run one worker process (id 0 coordinates)");
  add_common(worker, worker_args);
  worker->add_option("--id", worker_id, "Worker id")->required();
  worker->add_option("--peers", peers, "Comma-separated host:port of every worker, by id")->required();
  worker->add_option("--listen", listen, "host:port to listen on (default: own --peers entry)");
  auto* local = cluster_cmd->add_subcommand("local", "Run a loopback cluster of threads");
  add_common(local, local_args);
  local->add_option("-w,--workers", local_workers, "Number of workers")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_args, !no_predictions);
    if (*analyze_cmd) return cmd_analyze(analyze_args);
    if (*metric) return cmd_tune_metric(metric_args);
    if (*empirical) return cmd_tune_empirical(empirical_args);
    if (*sim) return cmd_simulate(sim_args, sweep);
    if (*worker) return cmd_cluster_worker(worker_args, worker_id, peers, listen);
    if (*local) return cmd_cluster_local(local_args, local_workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "pyramidai/config.hpp"

#include <fstream>

#include "pyramidai/errors.hpp"
#include "pyramidai/io.hpp"

namespace pyramidai {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<OracleLevelParams> oracle_from_json(const Json& j) {
  std::vector<OracleLevelParams> out;
  if (!j.is_array()) throw ConfigError("'oracle' must be an array of per-level objects");
  for (const auto& e : j) {
    require_object(e, "oracle level");
    out.push_back({get_or(e, "sensitivity", 0.9), get_or(e, "spread", 0.25)});
  }
  return out;
}

Json oracle_to_json(const std::vector<OracleLevelParams>& params) {
  Json out = Json::array();
  for (const auto& p : params) out.push_back({{"sensitivity", p.sensitivity}, {"spread", p.spread}});
  return out;
}

ImageSpec image_from_json(const Json& j, const std::filesystem::path& base) {
  require_object(j, "image");
  ImageSpec spec;
  spec.name = get_or<std::string>(j, "name", "");
  if (j.contains("synthetic")) {
    spec.synthetic = synth_config_from_json(j.at("synthetic"));
    return spec;
  }
  spec.labels_pgm = resolve(base, get_or<std::string>(j, "labels_pgm", ""));
  spec.foreground_pgm = resolve(base, get_or<std::string>(j, "foreground_pgm", ""));
  spec.predictions_csv = resolve(base, get_or<std::string>(j, "predictions_csv", ""));
  spec.scale_factor = get_or(j, "scale_factor", 2);
  spec.num_levels = get_or(j, "num_levels", 3);
  if (j.contains("oracle")) spec.oracle = oracle_from_json(j.at("oracle"));
  spec.oracle_seed = get_or<std::uint64_t>(j, "oracle_seed", 0);
  if (spec.labels_pgm.empty() || spec.foreground_pgm.empty()) {
    throw ConfigError("image needs 'synthetic' or both 'labels_pgm' and 'foreground_pgm'");
  }
  if (spec.predictions_csv.empty() && spec.oracle.empty()) {
    throw ConfigError("file-backed image needs 'predictions_csv' or 'oracle'");
  }
  return spec;
}

}  // namespace

SynthConfig synth_config_from_json(const Json& j) {
  require_object(j, "synthetic");
  SynthConfig c;
  c.grid_cols = get_or(j, "grid_cols", c.grid_cols);
  c.grid_rows = get_or(j, "grid_rows", c.grid_rows);
  c.scale_factor = get_or(j, "scale_factor", c.scale_factor);
  c.num_levels = get_or(j, "num_levels", c.num_levels);
  c.region_count = get_or(j, "region_count", c.region_count);
  c.region_radius_min = get_or(j, "region_radius_min", c.region_radius_min);
  c.region_radius_max = get_or(j, "region_radius_max", c.region_radius_max);
  c.tissue_fraction = get_or(j, "tissue_fraction", c.tissue_fraction);
  if (!j.contains("seed")) throw ConfigError("synthetic image needs a 'seed'");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("regions")) {
    for (const auto& r : j.at("regions")) {
      require_object(r, "region");
      c.regions.push_back({get_or(r, "center_col", 0.0), get_or(r, "center_row", 0.0),
                           get_or(r, "radius_col", 1.0), get_or(r, "radius_row", 1.0),
                           get_or(r, "angle", 0.0)});
    }
  }
  if (j.contains("oracle")) c.oracle = oracle_from_json(j.at("oracle"));
  return c;
}

Json synth_config_to_json(const SynthConfig& c) {
  Json regions = Json::array();
  for (const auto& r : c.regions) {
    regions.push_back({{"center_col", r.center_col}, {"center_row", r.center_row},
                       {"radius_col", r.radius_col}, {"radius_row", r.radius_row},
                       {"angle", r.angle}});
  }
  Json j = {{"grid_cols", c.grid_cols},
            {"grid_rows", c.grid_rows},
            {"scale_factor", c.scale_factor},
            {"num_levels", c.num_levels},
            {"region_count", c.region_count},
            {"region_radius_min", c.region_radius_min},
            {"region_radius_max", c.region_radius_max},
            {"tissue_fraction", c.tissue_fraction},
            {"seed", c.seed},
            {"regions", regions}};
  if (!c.oracle.empty()) j["oracle"] = oracle_to_json(c.oracle);
  return j;
}

AppConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
  require_object(j, "config");
  AppConfig cfg;
  if (j.contains("seed")) cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("image")) cfg.image = image_from_json(j.at("image"), base_dir);

  if (j.contains("corpus")) {
    const Json& c = j.at("corpus");
    require_object(c, "corpus");
    CorpusSpec corpus;
    if (c.contains("synthetic")) {
      const Json& s = c.at("synthetic");
      require_object(s, "corpus.synthetic");
      const int count = get_or(s, "count", 20);
      if (!s.contains("seed") && !cfg.seed) throw ConfigError("synthetic corpus needs a 'seed'");
      const auto seed = get_or<std::uint64_t>(s, "seed", cfg.seed.value_or(0));
      for (auto& sc : corpus_configs(count, seed, get_or(s, "max_grid", 512))) {
        ImageSpec spec;
        spec.synthetic = std::move(sc);
        corpus.images.push_back(std::move(spec));
      }
    }
    if (c.contains("images")) {
      for (const auto& img : c.at("images")) corpus.images.push_back(image_from_json(img, base_dir));
    }
    if (corpus.images.empty()) throw ConfigError("corpus has no images");
    corpus.train_count = get_or<std::size_t>(c, "train_count", (corpus.images.size() + 1) / 2);
    if (corpus.train_count == 0 || corpus.train_count > corpus.images.size()) {
      throw ConfigError("corpus train_count must be in [1, image count]");
    }
    cfg.corpus = std::move(corpus);
  }

  if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));

  if (j.contains("cost_model")) {
    const Json& c = j.at("cost_model");
    require_object(c, "cost_model");
    cfg.cost_model.init_s = get_or(c, "init_s", cfg.cost_model.init_s);
    cfg.cost_model.analysis_s = get_or(c, "analysis_s", cfg.cost_model.analysis_s);
    cfg.cost_model.task_creation_s = get_or(c, "task_creation_s", cfg.cost_model.task_creation_s);
    cfg.cost_model.validate();
  }

  if (j.contains("simulation")) {
    const Json& s = j.at("simulation");
    require_object(s, "simulation");
    cfg.simulation.workers = get_or(s, "workers", cfg.simulation.workers);
    cfg.simulation.distribution =
        parse_distribution(get_or<std::string>(s, "distribution", "round_robin"));
    cfg.simulation.policy = parse_policy(get_or<std::string>(s, "policy", "none"));
    const bool stochastic = cfg.simulation.distribution == Distribution::Random ||
                            cfg.simulation.policy == Policy::WorkStealing;
    if (stochastic && !s.contains("seed") && !cfg.seed) {
      throw ConfigError("random distribution and work stealing need a seed");
    }
    cfg.simulation.seed = get_or<std::uint64_t>(s, "seed", cfg.seed.value_or(0));
    cfg.sweep_workers = get_or(s, "sweep_workers", cfg.sweep_workers);
    if (cfg.simulation.workers < 1) throw ConfigError("simulation.workers must be >= 1");
  } else if (cfg.seed) {
    cfg.simulation.seed = *cfg.seed;
  }

  if (j.contains("tuning")) {
    const Json& t = j.at("tuning");
    require_object(t, "tuning");
    cfg.tuning.betas = get_or(t, "betas", std::vector<double>{});
    cfg.tuning.grid_size = get_or<std::size_t>(t, "grid_size", cfg.tuning.grid_size);
    cfg.tuning.positive_threshold_l0 = get_or(t, "positive_threshold_l0", 0.5);
    cfg.objective_r = get_or(t, "objective_r", cfg.objective_r);
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

LabeledImage load_image(const ImageSpec& spec) {
  if (spec.synthetic) {
    SynthImage img = synth_pyramid(*spec.synthetic);
    return {img.truth, std::make_shared<const PredictionSource>(std::move(img.source))};
  }
  Mask labels = io::read_pgm(spec.labels_pgm);
  Mask foreground = io::read_pgm(spec.foreground_pgm);
  PyramidGeometry geom(spec.num_levels, spec.scale_factor, labels.cols(), labels.rows());
  auto truth = std::make_shared<const GroundTruthPyramid>(geom, std::move(labels), std::move(foreground));
  if (!spec.predictions_csv.empty()) {
    return {truth, std::make_shared<const PredictionSource>(io::read_prediction_csv(spec.predictions_csv))};
  }
  return {truth, std::make_shared<const PredictionSource>(NoisyOracle(truth, spec.oracle, spec.oracle_seed))};
}

std::vector<LabeledImage> load_corpus(const CorpusSpec& spec) {
  std::vector<LabeledImage> out;
  out.reserve(spec.images.size());
  for (const auto& img : spec.images) out.push_back(load_image(img));
  return out;
}

}  // namespace pyramidai

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pyramidai/distsim.hpp"
#include "pyramidai/engine.hpp"
#include "pyramidai/serialize.hpp"
#include "pyramidai/synth.hpp"
#include "pyramidai/tuner.hpp"

namespace pyramidai {

/// Where one image comes from: synthesized, or loaded from PGM masks plus
/// either a prediction CSV or a noisy oracle over the loaded labels.
struct ImageSpec {
  std::optional<SynthConfig> synthetic;
  std::filesystem::path labels_pgm;
  std::filesystem::path foreground_pgm;
  std::filesystem::path predictions_csv;
  int scale_factor = 2;
  int num_levels = 3;
  std::vector<OracleLevelParams> oracle;
  std::uint64_t oracle_seed = 0;
  std::string name;
};

struct CorpusSpec {
  std::vector<ImageSpec> images;
  /// Images [0, train_count) form the train split, the rest the test split.
  std::size_t train_count = 0;
};

struct AppConfig {
  std::optional<ImageSpec> image;
  std::optional<CorpusSpec> corpus;
  std::optional<ThresholdSchedule> schedule;
  CostModel cost_model;
  SimConfig simulation;
  std::vector<int> sweep_workers = {1, 2, 4, 8, 12, 16};
  TuningOptions tuning;
  double objective_r = 0.9;
  std::optional<std::uint64_t> seed;
};

/// Relative paths resolve against `base_dir`. Throws ConfigError.
AppConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

SynthConfig synth_config_from_json(const Json& j);
Json synth_config_to_json(const SynthConfig& c);

/// Materializes an image; throws ConfigError or DataError.
LabeledImage load_image(const ImageSpec& spec);
std::vector<LabeledImage> load_corpus(const CorpusSpec& spec);

}  // namespace pyramidai

#pragma once

#include "acf/boosting.hpp"
#include "acf/eval.hpp"
#include "acf/postprocess.hpp"
#include "acf/pyramid.hpp"
#include "acf/synth.hpp"

#include <json.hpp>

#include <string>

namespace acf {

struct RunPaths
{
  std::string trainDir;    ///< dataset directory (synth layout); empty = render trainSet
  std::string testDir;     ///< empty = render testSet
  std::string negativeDir; ///< directory of target-free .ppm images; empty = render negativeSet
  std::string model = "model.acf";
  std::string output = "out";
  bool operator==(const RunPaths &) const = default;
};

/// How training windows are cut from annotated boxes.
struct PositiveSampling
{
  int jitterCopies = 2;   ///< extra randomly shifted/scaled copies per box
  double maxShift = 0.03; ///< fraction of the box size
  double maxScale = 0.05; ///< relative size change
  int marginCells = 2;    ///< image context per side, in pooled cells

  void validate() const;
  bool operator==(const PositiveSampling &) const = default;
};

/// Everything a train / detect / evaluate / ablate run needs, stored as one JSON file.
struct RunConfig
{
  ChannelConfig channels;
  TrainConfig train;
  PyramidConfig pyramid;
  FusionConfig fusion;
  EvalConfig eval;
  SynthConfig trainSet, testSet, negativeSet;
  PositiveSampling positives;
  int windowSize = 80;
  int views = 6;
  int stride = 1;
  RunPaths paths;

  /// Desk-scale defaults: seed-0 training set (about 2000 targets), 500
  /// negative images, a 200-image held-out test set and 512 trees.
  static RunConfig desk_defaults();

  void validate() const;
  bool operator==(const RunConfig &) const = default;
};

nlohmann::json to_json(const ChannelConfig &c);
nlohmann::json to_json(const TrainConfig &c);
nlohmann::json to_json(const PyramidConfig &c);
nlohmann::json to_json(const FusionConfig &c);
nlohmann::json to_json(const EvalConfig &c);
nlohmann::json to_json(const SynthConfig &c);
nlohmann::json to_json(const PositiveSampling &c);
nlohmann::json to_json(const RunConfig &c);

/// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
ChannelConfig channel_config_from_json(const nlohmann::json &j);
TrainConfig train_config_from_json(const nlohmann::json &j);
PyramidConfig pyramid_config_from_json(const nlohmann::json &j);
FusionConfig fusion_config_from_json(const nlohmann::json &j);
EvalConfig eval_config_from_json(const nlohmann::json &j);
SynthConfig synth_config_from_json(const nlohmann::json &j, SynthConfig defaults = {});
PositiveSampling positive_sampling_from_json(const nlohmann::json &j);
RunConfig run_config_from_json(const nlohmann::json &j);

RunConfig load_run_config(const std::string &path);
void save_run_config(const RunConfig &config, const std::string &path);

} // namespace acf

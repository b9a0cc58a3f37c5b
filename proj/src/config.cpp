#include "acf/config.hpp"

#include <fstream>
#include <set>

namespace acf {

using nlohmann::json;

RunConfig RunConfig::desk_defaults()
{
  RunConfig c;
  c.train.numTrees = 512;
  c.train.bootstrapSchedule = {64, 256};
  c.train.initialNegatives = 5000;
  c.train.negativesPerRound = 2500;

  c.trainSet.rngSeed = 0;
  c.trainSet.imageCount = 660;
  c.trainSet.minTargets = 2;
  c.trainSet.maxTargets = 4;

  c.negativeSet = c.trainSet;
  c.negativeSet.rngSeed = 1;
  c.negativeSet.imageCount = 500;
  c.negativeSet.minTargets = 0;
  c.negativeSet.maxTargets = 0;

  c.testSet = c.trainSet;
  c.testSet.rngSeed = 2;
  c.testSet.imageCount = 200;
  c.testSet.minTargets = 1;
  c.testSet.maxTargets = 3;
  return c;
}

void PositiveSampling::validate() const
{
  if (jitterCopies < 0 || marginCells < 0)
    throw ConfigError("jitter copies and margin cells must be non-negative");
  if (!(maxShift >= 0.0 && maxShift < 0.5) || !(maxScale >= 0.0 && maxScale < 0.5))
    throw ConfigError("jitter shift and scale must be in [0, 0.5)");
}

void RunConfig::validate() const
{
  positives.validate();
  channels.validate(windowSize);
  train.validate();
  pyramid.validate();
  fusion.validate();
  eval.validate();
  trainSet.validate();
  testSet.validate();
  negativeSet.validate();
  if (views < 1)
    throw ConfigError("views must be >= 1");
  if (stride < 1)
    throw ConfigError("stride must be >= 1");
  if (trainSet.yawLevels != views && views > 1)
    throw ConfigError("views must equal the training set's yaw levels");
}

namespace {

/// Reads optional keys from an object and rejects anything not consumed.
class Reader
{
public:
  Reader(const json &j, std::string where) : j_(j), where_(std::move(where))
  {
    if (!j.is_object())
      throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char *key, T &out)
  {
    seen_.insert(key);
    if (!j_.contains(key))
      return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception &e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename Fn>
  void with(const char *key, Fn &&fn)
  {
    seen_.insert(key);
    if (j_.contains(key))
      fn(j_.at(key));
  }

  void finish() const
  {
    for (const auto &[k, v] : j_.items())
      if (!seen_.count(k))
        throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

private:
  const json &j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string combination_to_string(CombinationWeighting w)
{
  return w == CombinationWeighting::ScoreWeighted ? "ScoreWeighted" : "Uniform";
}

CombinationWeighting combination_from_string(const std::string &s)
{
  if (s == "ScoreWeighted")
    return CombinationWeighting::ScoreWeighted;
  if (s == "Uniform")
    return CombinationWeighting::Uniform;
  throw ConfigError("unknown combination weighting: " + s);
}

std::string split_to_string(SplitSearch s)
{
  return s == SplitSearch::Greedy ? "Greedy" : "Exhaustive";
}

SplitSearch split_from_string(const std::string &s)
{
  if (s == "Greedy")
    return SplitSearch::Greedy;
  if (s == "Exhaustive")
    return SplitSearch::Exhaustive;
  throw ConfigError("unknown split search: " + s);
}

} // namespace

json to_json(const ChannelConfig &c)
{
  json j{{"colorSpace", to_string(c.colorSpace)},
         {"gradientColorSpace", to_string(c.gradientColorSpace)},
         {"numOrientationBins", c.numOrientationBins},
         {"preSmoothRadii", c.preSmoothRadii},
         {"postSmoothRadius", c.postSmoothRadius},
         {"shrink", c.shrink},
         {"pooling", to_string(c.pooling)},
         {"luv",
          {{"lMin", c.luv.lMin},
           {"lMax", c.luv.lMax},
           {"uMin", c.luv.uMin},
           {"uMax", c.luv.uMax},
           {"vMin", c.luv.vMin},
           {"vMax", c.luv.vMax}}}};
  if (c.stochasticSeed)
    j["stochasticSeed"] = *c.stochasticSeed;
  return j;
}

json to_json(const TrainConfig &c)
{
  return {{"numTrees", c.numTrees},
          {"thresholdQuantization", c.thresholdQuantization},
          {"bootstrapSchedule", c.bootstrapSchedule},
          {"negativesPerRound", c.negativesPerRound},
          {"initialNegatives", c.initialNegatives},
          {"maxNegativesPerImage", c.maxNegativesPerImage},
          {"rejectionQuantile", c.rejectionQuantile},
          {"rngSeed", c.rngSeed},
          {"splitSearch", split_to_string(c.splitSearch)},
          {"threads", c.threads}};
}

json to_json(const PyramidConfig &c)
{
  return {{"scalesPerOctave", c.scalesPerOctave}, {"maxUpscale", c.maxUpscale}};
}

json to_json(const FusionConfig &c)
{
  json j{{"rerank", to_string(c.rerank)},
         {"rerankOverlapThreshold", c.rerankOverlapThreshold},
         {"merging", to_string(c.merging)},
         {"mergeOverlapThreshold", c.mergeOverlapThreshold},
         {"combinationWeighting", combination_to_string(c.combinationWeighting)}};
  j["scoreThreshold"] = c.scoreThreshold ? json(*c.scoreThreshold) : json(nullptr);
  return j;
}

json to_json(const EvalConfig &c)
{
  return {{"jaccardThreshold", c.jaccardThreshold}, {"fppiPoints", c.fppiPoints}};
}

json to_json(const SynthConfig &c)
{
  return {{"rngSeed", c.rngSeed},
          {"imageCount", c.imageCount},
          {"imageWidth", c.imageWidth},
          {"imageHeight", c.imageHeight},
          {"minTargets", c.minTargets},
          {"maxTargets", c.maxTargets},
          {"minSize", c.minSize},
          {"maxSize", c.maxSize},
          {"yawLevels", c.yawLevels},
          {"clutterDensity", c.clutterDensity},
          {"noiseAmplitude", c.noiseAmplitude}};
}

json to_json(const PositiveSampling &c)
{
  return {{"jitterCopies", c.jitterCopies},
          {"maxShift", c.maxShift},
          {"maxScale", c.maxScale},
          {"marginCells", c.marginCells}};
}

json to_json(const RunConfig &c)
{
  return {{"channels", to_json(c.channels)},
          {"train", to_json(c.train)},
          {"pyramid", to_json(c.pyramid)},
          {"fusion", to_json(c.fusion)},
          {"eval", to_json(c.eval)},
          {"trainSet", to_json(c.trainSet)},
          {"testSet", to_json(c.testSet)},
          {"negativeSet", to_json(c.negativeSet)},
          {"positives", to_json(c.positives)},
          {"windowSize", c.windowSize},
          {"views", c.views},
          {"stride", c.stride},
          {"paths",
           {{"trainDir", c.paths.trainDir},
            {"testDir", c.paths.testDir},
            {"negativeDir", c.paths.negativeDir},
            {"model", c.paths.model},
            {"output", c.paths.output}}}};
}

ChannelConfig channel_config_from_json(const json &j)
{
  ChannelConfig c;
  Reader r(j, "channels");
  r.with("colorSpace", [&](const json &v) { c.colorSpace = color_space_from_string(v.get<std::string>()); });
  r.with("gradientColorSpace",
         [&](const json &v) { c.gradientColorSpace = gradient_color_space_from_string(v.get<std::string>()); });
  r.get("numOrientationBins", c.numOrientationBins);
  r.get("preSmoothRadii", c.preSmoothRadii);
  r.get("postSmoothRadius", c.postSmoothRadius);
  r.get("shrink", c.shrink);
  r.with("pooling", [&](const json &v) { c.pooling = pooling_from_string(v.get<std::string>()); });
  r.with("stochasticSeed", [&](const json &v) {
    if (!v.is_null())
      c.stochasticSeed = v.get<std::uint64_t>();
  });
  r.with("luv", [&](const json &v) {
    Reader l(v, "channels.luv");
    l.get("lMin", c.luv.lMin);
    l.get("lMax", c.luv.lMax);
    l.get("uMin", c.luv.uMin);
    l.get("uMax", c.luv.uMax);
    l.get("vMin", c.luv.vMin);
    l.get("vMax", c.luv.vMax);
    l.finish();
  });
  r.finish();
  return c;
}

TrainConfig train_config_from_json(const json &j)
{
  TrainConfig c;
  Reader r(j, "train");
  r.get("numTrees", c.numTrees);
  r.get("thresholdQuantization", c.thresholdQuantization);
  r.get("bootstrapSchedule", c.bootstrapSchedule);
  r.get("negativesPerRound", c.negativesPerRound);
  r.get("initialNegatives", c.initialNegatives);
  r.get("maxNegativesPerImage", c.maxNegativesPerImage);
  r.get("rejectionQuantile", c.rejectionQuantile);
  r.get("rngSeed", c.rngSeed);
  r.with("splitSearch", [&](const json &v) { c.splitSearch = split_from_string(v.get<std::string>()); });
  r.get("threads", c.threads);
  r.finish();
  return c;
}

PyramidConfig pyramid_config_from_json(const json &j)
{
  PyramidConfig c;
  Reader r(j, "pyramid");
  r.get("scalesPerOctave", c.scalesPerOctave);
  r.get("maxUpscale", c.maxUpscale);
  r.finish();
  return c;
}

FusionConfig fusion_config_from_json(const json &j)
{
  FusionConfig c;
  Reader r(j, "fusion");
  r.with("rerank", [&](const json &v) { c.rerank = rerank_from_string(v.get<std::string>()); });
  r.get("rerankOverlapThreshold", c.rerankOverlapThreshold);
  r.with("merging", [&](const json &v) { c.merging = merge_from_string(v.get<std::string>()); });
  r.get("mergeOverlapThreshold", c.mergeOverlapThreshold);
  r.with("combinationWeighting",
         [&](const json &v) { c.combinationWeighting = combination_from_string(v.get<std::string>()); });
  r.with("scoreThreshold", [&](const json &v) {
    c.scoreThreshold = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  });
  r.finish();
  return c;
}

EvalConfig eval_config_from_json(const json &j)
{
  EvalConfig c;
  Reader r(j, "eval");
  r.get("jaccardThreshold", c.jaccardThreshold);
  r.get("fppiPoints", c.fppiPoints);
  r.finish();
  return c;
}

SynthConfig synth_config_from_json(const json &j, SynthConfig c)
{
  Reader r(j, "synth");
  r.get("rngSeed", c.rngSeed);
  r.get("imageCount", c.imageCount);
  r.get("imageWidth", c.imageWidth);
  r.get("imageHeight", c.imageHeight);
  r.get("minTargets", c.minTargets);
  r.get("maxTargets", c.maxTargets);
  r.get("minSize", c.minSize);
  r.get("maxSize", c.maxSize);
  r.get("yawLevels", c.yawLevels);
  r.get("clutterDensity", c.clutterDensity);
  r.get("noiseAmplitude", c.noiseAmplitude);
  r.finish();
  return c;
}

PositiveSampling positive_sampling_from_json(const json &j)
{
  PositiveSampling c;
  Reader r(j, "positives");
  r.get("jitterCopies", c.jitterCopies);
  r.get("maxShift", c.maxShift);
  r.get("maxScale", c.maxScale);
  r.get("marginCells", c.marginCells);
  r.finish();
  return c;
}

RunConfig run_config_from_json(const json &j)
{
  RunConfig c = RunConfig::desk_defaults();
  try {
    Reader r(j, "config");
    r.with("channels", [&](const json &v) { c.channels = channel_config_from_json(v); });
    r.with("train", [&](const json &v) { c.train = train_config_from_json(v); });
    r.with("pyramid", [&](const json &v) { c.pyramid = pyramid_config_from_json(v); });
    r.with("fusion", [&](const json &v) { c.fusion = fusion_config_from_json(v); });
    r.with("eval", [&](const json &v) { c.eval = eval_config_from_json(v); });
    r.with("trainSet", [&](const json &v) { c.trainSet = synth_config_from_json(v, c.trainSet); });
    r.with("testSet", [&](const json &v) { c.testSet = synth_config_from_json(v, c.testSet); });
    r.with("negativeSet", [&](const json &v) { c.negativeSet = synth_config_from_json(v, c.negativeSet); });
    r.with("positives", [&](const json &v) { c.positives = positive_sampling_from_json(v); });
    r.get("windowSize", c.windowSize);
    r.get("views", c.views);
    r.get("stride", c.stride);
    r.with("paths", [&](const json &v) {
      Reader p(v, "paths");
      p.get("trainDir", c.paths.trainDir);
      p.get("testDir", c.paths.testDir);
      p.get("negativeDir", c.paths.negativeDir);
      p.get("model", c.paths.model);
      p.get("output", c.paths.output);
      p.finish();
    });
    r.finish();
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig &config, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write config " + path);
  out << to_json(config).dump(2) << '\n';
  if (!out)
    throw IoError("write failed: " + path);
}

} // namespace acf

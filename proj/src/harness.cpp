#include "acf/harness.hpp"

#include "acf/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <random>
#include <thread>

namespace acf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn &&fn)
{
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      (void)w;
      for (std::size_t i; (i = next.fetch_add(1)) < n && !failed;) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true))
            error = std::current_exception();
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace

std::vector<Image> view_positives(const Dataset &dataset, int view, int views)
{
  if (views < 1 || view < 0 || view >= views)
    throw ConfigError("view index out of range");
  const int mirror = views - 1 - view;
  std::vector<Image> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = dataset.annotations.images.find(dataset.ids[i]);
    if (it == dataset.annotations.images.end())
      continue;
    const Image &img = dataset.images[i];
    for (const auto &g : it->second) {
      if (g.ignore)
        continue;
      const bool direct = views == 1 || g.yaw == view;
      const bool mirrored = views > 1 && g.yaw == mirror;
      if (!direct && !mirrored)
        continue;
      const int x0 = std::max(0, static_cast<int>(std::lround(g.box.x)));
      const int y0 = std::max(0, static_cast<int>(std::lround(g.box.y)));
      const int x1 = std::min(img.width(), static_cast<int>(std::lround(g.box.x + g.box.w)));
      const int y1 = std::min(img.height(), static_cast<int>(std::lround(g.box.y + g.box.h)));
      if (x1 - x0 < 4 || y1 - y0 < 4)
        continue;
      Image c = crop(img, x0, y0, x1 - x0, y1 - y0);
      if (direct)
        out.push_back(c);
      // The self-mirrored middle view of an odd count gets both orientations.
      if (mirrored || (views > 1 && mirror == view))
        out.push_back(flip_horizontal(c));
    }
  }
  return out;
}

FeatureMatrix view_positive_features(const Dataset &dataset, int view, int views, const ChannelConfig &channels,
                                     int windowSize, const PositiveSampling &sampling, std::uint64_t seed)
{
  if (views < 1 || view < 0 || view >= views)
    throw ConfigError("view index out of range");
  sampling.validate();
  const int mirror = views - 1 - view;
  std::mt19937_64 rng(seed ^ 0x7f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  FeatureMatrix out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = dataset.annotations.images.find(dataset.ids[i]);
    if (it == dataset.annotations.images.end())
      continue;
    for (const auto &g : it->second) {
      if (g.ignore)
        continue;
      const bool direct = views == 1 || g.yaw == view;
      const bool mirrored = views > 1 && g.yaw == mirror;
      if (!direct && !mirrored)
        continue;
      for (int k = 0; k <= sampling.jitterCopies; ++k) {
        Box b = g.box;
        if (k > 0) {
          const double s = 1.0 + sampling.maxScale * unit(rng);
          const double cx = b.x + b.w / 2 + sampling.maxShift * b.w * unit(rng);
          const double cy = b.y + b.h / 2 + sampling.maxShift * b.h * unit(rng);
          b = {cx - b.w * s / 2, cy - b.h * s / 2, b.w * s, b.h * s};
        }
        const auto stack =
          window_stack_in_context(dataset.images[i], b, channels, windowSize, sampling.marginCells);
        if (direct)
          out.append(stack.flatten());
        if (mirrored || (views > 1 && mirror == view))
          out.append(flip_horizontal(stack).flatten());
      }
    }
  }
  return out;
}

std::vector<std::vector<PyramidLevel>> negative_pyramids(const NegativeSource &negatives, const ChannelConfig &channels,
                                                         const PyramidConfig &pyramid, int window, int threads)
{
  std::vector<std::vector<PyramidLevel>> out(negatives.count);
  parallel_for(negatives.count, threads,
               [&](std::size_t i) { out[i] = build_pyramid(negatives.load(i), channels, pyramid, window); });
  return out;
}

FeatureMatrix random_negative_windows(const std::vector<std::vector<PyramidLevel>> &pyramids, std::size_t count,
                                      int grid, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  FeatureMatrix out;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < pyramids.size(); ++i)
    if (!pyramids[i].empty() && pyramids[i].front().stack.width >= grid && pyramids[i].front().stack.height >= grid)
      usable.push_back(i);
  if (usable.empty())
    return out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto &levels = pyramids[usable[k % usable.size()]];
    std::vector<std::size_t> fit;
    for (std::size_t l = 0; l < levels.size(); ++l)
      if (levels[l].stack.width >= grid && levels[l].stack.height >= grid)
        fit.push_back(l);
    const auto &stack = levels[fit[std::uniform_int_distribution<std::size_t>(0, fit.size() - 1)(rng)]].stack;
    const int x = std::uniform_int_distribution<int>(0, stack.width - grid)(rng);
    const int y = std::uniform_int_distribution<int>(0, stack.height - grid)(rng);
    out.append(window_features_at(stack, x, y, grid));
  }
  return out;
}

NegativeSource synth_negative_source(const SynthConfig &config)
{
  config.validate();
  if (config.maxTargets != 0)
    throw ConfigError("negative set must not contain targets");
  NegativeSource s;
  s.count = static_cast<std::size_t>(config.imageCount);
  s.load = [config](std::size_t i) { return synth_image(config, i); };
  return s;
}

NegativeSource directory_negative_source(const std::string &dir)
{
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto &e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".ppm")
      files.push_back(e.path().string());
  if (ec)
    throw IoError("cannot list " + dir + ": " + ec.message());
  std::sort(files.begin(), files.end());
  NegativeSource s;
  s.count = files.size();
  s.load = [files](std::size_t i) { return read_ppm(files[i]); };
  return s;
}

MultiViewModel train_multiview(const Dataset &train, const NegativeSource &negatives, const RunConfig &config,
                               std::vector<TrainingLog> *logs, std::ostream *progress)
{
  config.validate();
  if (negatives.count == 0)
    throw ValidationError("no negative images");
  auto t0 = std::chrono::steady_clock::now();
  const auto pyramids =
    negative_pyramids(negatives, config.channels, config.pyramid, config.windowSize, config.train.threads);
  if (progress)
    *progress << "negative pyramids: " << pyramids.size() << " images, " << seconds_since(t0) << " s" << std::endl;

  const int grid = config.windowSize / config.channels.shrink;
  MiningScanner scanner = [&](const SoftCascadeModel &m, std::size_t index, std::size_t maxWindows,
                              std::uint64_t seed) { return mine_false_positives(pyramids[index], m, maxWindows, seed); };

  const int trained = (config.views + 1) / 2;
  std::vector<SoftCascadeModel> models;
  for (int v = 0; v < trained; ++v) {
    t0 = std::chrono::steady_clock::now();
    TrainConfig tc = config.train;
    tc.rngSeed = config.train.rngSeed + static_cast<std::uint64_t>(v);
    const auto positives = view_positive_features(train, v, config.views, config.channels, config.windowSize,
                                                  config.positives, tc.rngSeed);
    if (positives.rows == 0)
      throw ValidationError("no positives for view " + std::to_string(v));
    auto initial = random_negative_windows(pyramids, static_cast<std::size_t>(tc.initialNegatives), grid,
                                           tc.rngSeed ^ 0x5bd1e995ULL);
    if (initial.rows == 0)
      throw ValidationError("negative images are smaller than the window");
    TrainingLog log;
    models.push_back(adaboost_train_features(positives, std::move(initial), tc, config.channels, config.windowSize,
                                             &negatives, scanner, &log));
    if (progress)
      *progress << "view " << v << ": " << log.positives << " positives, " << log.negatives << " negatives, "
                << models.back().size() << " trees, " << seconds_since(t0) << " s" << std::endl;
    if (logs)
      logs->push_back(std::move(log));
  }
  MultiViewModel m = MultiViewModel::from_trained(std::move(models), config.views);
  m.fusion = config.fusion;
  m.pyramid = config.pyramid;
  m.stride = config.stride;
  m.validate();
  return m;
}

DetectionSet detect_dataset_raw(const MultiViewModel &model, const Dataset &dataset, CascadeMode mode, int threads,
                                DetectStats *stats)
{
  std::vector<std::vector<Detection>> perImage(dataset.size());
  std::vector<DetectStats> perStats(dataset.size());
  parallel_for(dataset.size(), threads,
               [&](std::size_t i) { perImage[i] = detect_raw(dataset.images[i], model, mode, &perStats[i]); });
  DetectionSet out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out[dataset.ids[i]] = std::move(perImage[i]);
    if (stats)
      stats->merge(perStats[i]);
  }
  return out;
}

DetectionSet fuse_dataset(const DetectionSet &raw, const MultiViewModel &model, const FusionConfig &fusion,
                          std::vector<std::string> *events)
{
  const auto ranges = model.score_ranges();
  DetectionSet out;
  for (const auto &[id, dets] : raw)
    out[id] = fuse_detections(dets, fusion, ranges, model.adjustments, events);
  return out;
}

EvalReport evaluate_model(const MultiViewModel &model, const Dataset &test, const EvalConfig &evalConfig)
{
  const auto raw = detect_dataset_raw(model, test);
  return evaluate(fuse_dataset(raw, model, model.fusion), test.annotations, evalConfig);
}

std::vector<FeatureVariant> AblationOptions::default_feature_variants()
{
  ChannelConfig single;
  ChannelConfig multi;
  multi.preSmoothRadii = {1, 2};
  return {{"single-scale", single}, {"multi-local-scale", multi}};
}

std::vector<FeatureVariant> AblationOptions::extended_feature_variants()
{
  auto v = default_feature_variants();
  ChannelConfig c;
  c.colorSpace = ColorSpace::RGB;
  v.push_back({"rgb-color", c});
  c = {};
  c.colorSpace = ColorSpace::Gray;
  v.push_back({"gray-color", c});
  c = {};
  c.colorSpace = ColorSpace::HSV;
  v.push_back({"hsv-color", c});
  c = {};
  c.gradientColorSpace = GradientColorSpace::LUV;
  v.push_back({"gradient-on-luv", c});
  c = {};
  c.pooling = PoolingMethod::Max;
  v.push_back({"max-pooling", c});
  c = {};
  c.pooling = PoolingMethod::Stochastic;
  c.stochasticSeed = 7;
  v.push_back({"stochastic-pooling", c});
  return v;
}

namespace {

json report_row(const EvalReport &r)
{
  return {{"ap", r.ap},
          {"truePositives", r.truePositives},
          {"falsePositives", r.falsePositives},
          {"detections", r.detections},
          {"discreteTprAt1Fppi", r.discrete.readouts.empty() ? 0.0 : r.discrete.readouts.front().second},
          {"continuousTprAt1Fppi", r.continuous.readouts.empty() ? 0.0 : r.continuous.readouts.front().second}};
}

} // namespace

json run_ablation(const RunConfig &config, const AblationOptions &options, const Dataset &train,
                  const NegativeSource &negatives, const Dataset &test, const MultiViewModel *fusionModel,
                  std::ostream *progress)
{
  json report;
  report["reference"] = {
    {"note", "Published AP (%) on the AFW face benchmark for the same re-ranking and merging variants. Shown as "
             "context for the orderings below; not comparable to synthetic-data numbers and not asserted."},
    {"rerankWithGreedyNMS",
     {{"None", 91.7}, {"Normalization", 93.5}, {"NewScore", 92.9}, {"OverlapRerank", 95.0}, {"SumOfOverlap", 93.7}}},
    {"merging", {{"GreedyNMS", 91.7}, {"Combination", 93.4}}}};
  report["dataset"] = {{"trainImages", train.size()},
                       {"trainBoxes", train.annotations.box_count()},
                       {"negativeImages", negatives.count},
                       {"testImages", test.size()},
                       {"testBoxes", test.annotations.box_count()},
                       {"jaccardThreshold", config.eval.jaccardThreshold}};
  json timing = json::object();

  MultiViewModel trainedHere;
  if (!fusionModel) {
    const auto t0 = std::chrono::steady_clock::now();
    trainedHere = train_multiview(train, negatives, config, nullptr, progress);
    timing["fusionModelTrainSeconds"] = seconds_since(t0);
    fusionModel = &trainedHere;
  }

  json fusionRows = json::array();
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto raw = detect_dataset_raw(*fusionModel, test);
    timing["fusionDetectSeconds"] = seconds_since(t0);
    for (auto merge : options.merges)
      for (auto rerank : options.reranks) {
        json row{{"rerank", to_string(rerank)}, {"merging", to_string(merge)}};
        try {
          FusionConfig f = config.fusion;
          f.rerank = rerank;
          f.merging = merge;
          f.scoreThreshold = std::nullopt;
          row.update(report_row(evaluate(fuse_dataset(raw, *fusionModel, f), test.annotations, config.eval)));
        } catch (const std::exception &e) {
          row["error"] = e.what();
        }
        if (progress)
          *progress << "fusion " << row["rerank"].get<std::string>() << " + " << row["merging"].get<std::string>()
                    << ": AP " << row.value("ap", 0.0) << std::endl;
        fusionRows.push_back(row);
      }
  }
  report["fusion"] = fusionRows;

  json featureRows = json::array();
  json featureTiming = json::array();
  for (const auto &variant : options.featureVariants) {
    json row{{"variant", variant.name}, {"channels", to_json(variant.channels)}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RunConfig rc = config;
      rc.channels = variant.channels;
      if (options.featureTrees > 0) {
        rc.train.numTrees = options.featureTrees;
        std::erase_if(rc.train.bootstrapSchedule, [&](int b) { return b >= options.featureTrees; });
      }
      row["featurePoolSize"] = static_cast<std::size_t>(rc.channels.channel_count()) *
                               static_cast<std::size_t>(rc.windowSize / rc.channels.shrink) *
                               static_cast<std::size_t>(rc.windowSize / rc.channels.shrink);
      row["trees"] = rc.train.numTrees;
      const auto model = train_multiview(train, negatives, rc, nullptr, progress);
      row.update(report_row(evaluate_model(model, test, config.eval)));
    } catch (const std::exception &e) {
      row["error"] = e.what();
    }
    featureTiming.push_back({{"variant", variant.name}, {"seconds", seconds_since(t0)}});
    if (progress)
      *progress << "feature variant " << variant.name << ": AP " << row.value("ap", 0.0) << std::endl;
    featureRows.push_back(row);
  }
  report["features"] = featureRows;
  timing["features"] = featureTiming;
  report["timing"] = timing;
  return report;
}

BenchRow bench(const MultiViewModel &model, const Dataset &images, int threads, CascadeMode mode)
{
  BenchRow row;
  row.threads = threads;
  row.mode = mode;
  row.images = images.size();
  const auto t0 = std::chrono::steady_clock::now();
  const auto raw = detect_dataset_raw(model, images, mode, threads, &row.stats);
  const auto fused = fuse_dataset(raw, model, model.fusion);
  row.seconds = seconds_since(t0);
  for (const auto &[id, d] : fused)
    row.detections += d.size();
  return row;
}

json to_json(const BenchRow &row, std::size_t treesPerView)
{
  const auto &s = row.stats;
  const double secs = std::max(row.seconds, 1e-9);
  const auto mean = [](std::uint64_t a, std::uint64_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  // Power-of-two stage buckets: [0,1), [1,2), [2,4), ...
  json hist = json::array();
  for (std::size_t lo = 0, hi = 1; lo < s.rejectionsPerStage.size(); lo = hi, hi *= 2) {
    std::uint64_t n = 0;
    for (std::size_t k = lo; k < std::min(hi, s.rejectionsPerStage.size()); ++k)
      n += s.rejectionsPerStage[k];
    hist.push_back({{"fromStage", lo}, {"toStage", std::min(hi, s.rejectionsPerStage.size())}, {"rejected", n}});
  }
  return {{"threads", row.threads},
          {"cascade", row.mode == CascadeMode::EarlyExit ? "early-exit" : "full-trajectory"},
          {"images", row.images},
          {"detections", row.detections},
          {"windows", s.windows},
          {"passedWindows", s.passedWindows},
          {"rejectedWindows", s.rejectedWindows},
          {"treesEvaluated", s.treesEvaluated},
          {"treesPerView", treesPerView},
          {"meanTreesPerWindow", mean(s.treesEvaluated, s.windows)},
          {"meanTreesPerRejectedWindow", mean(s.treesInRejected, s.rejectedWindows)},
          {"rejectionHistogram", hist},
          {"timing",
           {{"seconds", row.seconds},
            {"imagesPerSecond", static_cast<double>(row.images) / secs},
            {"windowsPerSecond", static_cast<double>(s.windows) / secs}}}};
}

json to_json(const TrainingLog &log)
{
  json rounds = json::array();
  for (const auto &r : log.rounds)
    rounds.push_back({{"weightedError", r.weightedError},
                      {"alpha", r.alpha},
                      {"logLoss", r.logLoss},
                      {"trainingError", r.trainingError}});
  return {{"positives", log.positives}, {"negatives", log.negatives}, {"events", log.events}, {"rounds", rounds}};
}

} // namespace acf

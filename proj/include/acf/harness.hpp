#pragma once

#include "acf/config.hpp"
#include "acf/detector.hpp"
#include "acf/eval.hpp"
#include "acf/synth.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace acf {

/// Positive windows for trained view `view` of `views`: crops of boxes with
/// yaw == view, plus flipped crops of the mirror yaw (views-1-view). With a
/// single view every non-ignored box is used. Boxes are rounded and clipped.
std::vector<Image> view_positives(const Dataset &dataset, int view, int views);

/// Feature vectors for trained view `view`: each selected box (same rule as
/// view_positives) contributes its in-context window plus jittered copies;
/// mirror-yaw boxes are flipped in channel space.
FeatureMatrix view_positive_features(const Dataset &dataset, int view, int views, const ChannelConfig &channels,
                                     int windowSize, const PositiveSampling &sampling, std::uint64_t seed);

/// Negative images rendered on demand from a target-free synth config.
NegativeSource synth_negative_source(const SynthConfig &config);

/// Every .ppm in a directory, in lexicographic order.
NegativeSource directory_negative_source(const std::string &dir);

/// Pyramids of every negative image, computed once and shared by all views
/// and mining rounds.
std::vector<std::vector<PyramidLevel>> negative_pyramids(const NegativeSource &negatives, const ChannelConfig &channels,
                                                         const PyramidConfig &pyramid, int window, int threads = 1);

/// `count` uniformly random grid-aligned windows from the cached pyramids,
/// cycling through the images.
FeatureMatrix random_negative_windows(const std::vector<std::vector<PyramidLevel>> &pyramids, std::size_t count,
                                      int grid, std::uint64_t seed);

/// Trains ceil(views/2) cascades and mirrors the rest. View v uses rngSeed + v.
MultiViewModel train_multiview(const Dataset &train, const NegativeSource &negatives, const RunConfig &config,
                               std::vector<TrainingLog> *logs = nullptr, std::ostream *progress = nullptr);

/// Raw (unfused) detections for every image; threads > 1 splits images
/// across workers without changing results or counts.
DetectionSet detect_dataset_raw(const MultiViewModel &model, const Dataset &dataset,
                                CascadeMode mode = CascadeMode::EarlyExit, int threads = 1,
                                DetectStats *stats = nullptr);

DetectionSet fuse_dataset(const DetectionSet &raw, const MultiViewModel &model, const FusionConfig &fusion,
                          std::vector<std::string> *events = nullptr);

EvalReport evaluate_model(const MultiViewModel &model, const Dataset &test, const EvalConfig &evalConfig);

struct FeatureVariant
{
  std::string name;
  ChannelConfig channels;
};

struct AblationOptions
{
  std::vector<RerankMode> reranks{RerankMode::None, RerankMode::Normalization, RerankMode::NewScore,
                                  RerankMode::OverlapRerank, RerankMode::SumOfOverlap};
  std::vector<MergeMode> merges{MergeMode::GreedyNMS, MergeMode::Combination};
  /// Default: single-scale (radius 1) and multi-local-scale (radii 1, 2).
  std::vector<FeatureVariant> featureVariants = default_feature_variants();
  int featureTrees = 0; ///< trees for feature-variant models; 0 = config's numTrees

  static std::vector<FeatureVariant> default_feature_variants();
  /// Adds channel-type subsets and pooling methods to the defaults.
  static std::vector<FeatureVariant> extended_feature_variants();
};

/// Fusion rows (re-ranking x merging, no score threshold) on `fusionModel`
/// (trained from `config` when null), then one row per feature variant,
/// each trained and evaluated with the configured fusion. Row failures are
/// recorded in the row's "error" field. Timings are kept under "timing".
nlohmann::json run_ablation(const RunConfig &config, const AblationOptions &options, const Dataset &train,
                            const NegativeSource &negatives, const Dataset &test,
                            const MultiViewModel *fusionModel = nullptr, std::ostream *progress = nullptr);

struct BenchRow
{
  int threads = 1;
  CascadeMode mode = CascadeMode::EarlyExit;
  std::size_t images = 0;
  std::size_t detections = 0; ///< after fusion
  double seconds = 0.0;
  DetectStats stats;
};

BenchRow bench(const MultiViewModel &model, const Dataset &images, int threads,
               CascadeMode mode = CascadeMode::EarlyExit);

nlohmann::json to_json(const BenchRow &row, std::size_t treesPerView);
nlohmann::json to_json(const TrainingLog &log);

} // namespace acf

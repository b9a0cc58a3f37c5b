#pragma once

#include "acf/channels.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace acf {

/// Split node over one flattened feature; values below threshold go left.
struct TreeNode
{
  std::uint32_t feature = 0;
  float threshold = 0.0f;
  bool operator==(const TreeNode &) const = default;
};

/// Three internal nodes (root, left child, right child) and four leaves.
/// Leaves 0,1 hang under the left child, 2,3 under the right child.
struct DepthTwoTree
{
  std::array<TreeNode, 3> nodes{};
  std::array<float, 4> leaves{};

  template <typename Accessor>
  int leaf_index(Accessor &&feature) const
  {
    const int child = feature(nodes[0].feature) < nodes[0].threshold ? 1 : 2;
    const auto &n = nodes[static_cast<std::size_t>(child)];
    return 2 * (child - 1) + (feature(n.feature) < n.threshold ? 0 : 1);
  }

  template <typename Accessor>
  float evaluate(Accessor &&feature) const
  {
    return leaves[static_cast<std::size_t>(leaf_index(feature))];
  }

  bool operator==(const DepthTwoTree &) const = default;
};

struct ScoreRange
{
  double min = 0.0, max = 0.0;
  bool operator==(const ScoreRange &) const = default;
};

struct SoftCascadeModel
{
  static constexpr std::uint32_t kFormatVersion = 1;

  std::vector<DepthTwoTree> trees;
  std::vector<double> weights;         ///< alpha_t > 0
  std::vector<double> stageThresholds; ///< one per tree
  int windowSize = 80;
  ChannelConfig channelConfig;
  ScoreRange scoreRange;
  int viewId = 0;

  int grid() const { return windowSize / channelConfig.shrink; }
  std::size_t feature_count() const
  {
    return static_cast<std::size_t>(channelConfig.channel_count()) * grid() * grid();
  }
  std::size_t size() const { return trees.size(); }

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  bool operator==(const SoftCascadeModel &) const = default;
};

enum class SplitSearch {
  Greedy,    ///< root by stump error, then each child on its subset
  Exhaustive ///< root chosen for minimal depth-2 error; small problems only
};

struct TrainConfig
{
  int numTrees = 2048;
  int thresholdQuantization = 256;
  std::vector<int> bootstrapSchedule{64, 256, 1024};
  int negativesPerRound = 5000;
  int initialNegatives = 5000;
  int maxNegativesPerImage = 25;
  double rejectionQuantile = 0.0;
  std::uint64_t rngSeed = 0;
  SplitSearch splitSearch = SplitSearch::Greedy;
  int threads = 1;

  void validate() const;
  bool operator==(const TrainConfig &) const = default;
};

/// Dense sample matrix, one row of flattened features per sample.
struct FeatureMatrix
{
  std::size_t rows = 0, cols = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  void append(std::span<const float> sample);
};

/// Per-feature linear binning between the feature's min and max.
/// A value v falls in bin #{k : edge_k <= v}; thresholds at edge_t send
/// exactly the bins below t left. Constant features keep +inf edges.
struct QuantizedFeatures
{
  int bins = 256;
  std::size_t samples = 0, features = 0;
  std::vector<std::uint8_t> codes; ///< feature-major: codes[f * samples + i]
  std::vector<float> edges;        ///< edges[f * (bins - 1) + (t - 1)], t in [1, bins)

  std::uint8_t code(std::size_t f, std::size_t i) const { return codes[f * samples + i]; }
  float edge(std::size_t f, int t) const;
};

QuantizedFeatures quantize_features(const FeatureMatrix &samples, int bins = 256);

/// Bin of a raw value given a feature's edges.
int quantize_value(const QuantizedFeatures &q, std::size_t feature, float value);

struct TrainedTree
{
  DepthTwoTree tree;
  std::array<int, 3> binThresholds{}; ///< bins == "everything left" (leaf-equivalent)
  double weightedError = 0.0;
};

/// labels in {-1,+1}; weights >= 0 with positive sum.
TrainedTree train_depth2_tree(const QuantizedFeatures &features, std::span<const std::int8_t> labels,
                              std::span<const double> weights, SplitSearch search = SplitSearch::Greedy,
                              int threads = 1);

/// Clamped discrete-AdaBoost weight 1/2 ln((1-e)/e).
double adaboost_alpha(double weightedError);

enum class CascadeMode {
  EarlyExit,      ///< stop at the first threshold violation
  FullTrajectory, ///< evaluate every tree, report the first violation
  Disabled        ///< ignore thresholds
};

struct CascadeResult
{
  bool passed = false;
  double score = 0.0;
  int rejectedAtStage = -1;
  int treesEvaluated = 0;
  int positiveVotes = 0;
};

/// Accessor maps a flattened feature index to the window's channel value.
template <typename Accessor>
CascadeResult evaluate_cascade(const SoftCascadeModel &model, Accessor &&feature,
                               CascadeMode mode = CascadeMode::EarlyExit)
{
  CascadeResult r;
  const std::size_t n = model.trees.size();
  for (std::size_t t = 0; t < n; ++t) {
    const float h = model.trees[t].evaluate(feature);
    r.score += model.weights[t] * (h > 0 ? 1.0 : -1.0);
    r.positiveVotes += h > 0 ? 1 : 0;
    ++r.treesEvaluated;
    if (mode != CascadeMode::Disabled && r.rejectedAtStage < 0 && r.score < model.stageThresholds[t]) {
      r.rejectedAtStage = static_cast<int>(t);
      if (mode == CascadeMode::EarlyExit)
        return r;
    }
  }
  r.passed = r.rejectedAtStage < 0;
  return r;
}

inline CascadeResult evaluate_cascade(const SoftCascadeModel &model, std::span<const float> features,
                                      CascadeMode mode = CascadeMode::EarlyExit)
{
  return evaluate_cascade(model, [&](std::uint32_t f) { return features[f]; }, mode);
}

/// Cumulative score after each tree, for one sample.
std::vector<double> cumulative_scores(const SoftCascadeModel &model, std::span<const float> features);

/// threshold_t = (q-quantile of the positives' cumulative scores after tree t) - 1e-6.
/// The quantile is the sorted value at index floor(q * (n - 1)).
std::vector<double> calibrate_soft_cascade(const SoftCascadeModel &model, const FeatureMatrix &positives, double q);

/// Supplies negative (target-free) images for mining.
struct NegativeSource
{
  std::size_t count = 0;
  std::function<Image(std::size_t)> load;
};

struct RoundRecord
{
  double weightedError = 0.0; ///< before clamping
  double alpha = 0.0;
  double logLoss = 0.0; ///< log of the class-balanced exponential loss after the round
  double trainingError = 0.0;
};

struct TrainingLog
{
  std::vector<RoundRecord> rounds;
  std::vector<std::string> events;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Returns up to maxWindows feature vectors of windows in negative image
/// `imageIndex` that pass the interim cascade.
using MiningScanner = std::function<std::vector<std::vector<float>>(
  const SoftCascadeModel &, std::size_t imageIndex, std::size_t maxWindows, std::uint64_t seed)>;

/// Discrete AdaBoost over depth-2 trees on pre-computed feature vectors,
/// with optional bootstrapping through `scanner`. Used by adaboost_train.
SoftCascadeModel adaboost_train_features(const FeatureMatrix &positives, FeatureMatrix negatives,
                                         const TrainConfig &trainConfig, const ChannelConfig &channelConfig,
                                         int windowSize, const NegativeSource *negativeSource = nullptr,
                                         const MiningScanner &scanner = {}, TrainingLog *log = nullptr);

/// Full training: positive windows are resized to windowSize and turned into
/// channels; initial negatives are random crops of the negative images, and
/// hard negatives are mined at each bootstrap point by a full-image scan.
SoftCascadeModel adaboost_train(const std::vector<Image> &positiveWindows, const NegativeSource &negativeSource,
                                const TrainConfig &trainConfig, const ChannelConfig &channelConfig,
                                int windowSize = 80, TrainingLog *log = nullptr);

/// Channels of a window resized to windowSize, flattened in model feature order.
std::vector<float> window_features(const Image &window, const ChannelConfig &config, int windowSize);

/// Features of `box` as the sliding-window detector sees them: the box plus
/// marginCells pooled cells of context per side is resampled (half-pixel
/// centered bilinear, edge-replicated outside the image) so that the box spans
/// windowSize pixels, channels are computed, and the interior grid is kept.
ChannelStack window_stack_in_context(const Image &image, const Box &box, const ChannelConfig &config,
                                     int windowSize, int marginCells = 2);
std::vector<float> window_features_in_context(const Image &image, const Box &box, const ChannelConfig &config,
                                              int windowSize, int marginCells = 2);

} // namespace acf

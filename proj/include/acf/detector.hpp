#pragma once

#include "acf/boosting.hpp"
#include "acf/postprocess.hpp"
#include "acf/pyramid.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace acf {

/// Remaps every feature (c, x, y) to (c', G-1-x, y), where orientation bin k
/// becomes (numBins - k) mod numBins inside its pre-smooth group.
SoftCascadeModel mirror_model(const SoftCascadeModel &model);

struct DetectStats
{
  std::uint64_t windows = 0;
  std::uint64_t treesEvaluated = 0;
  std::uint64_t rejectedWindows = 0;
  std::uint64_t treesInRejected = 0;
  std::uint64_t passedWindows = 0;
  std::vector<std::uint64_t> rejectionsPerStage;

  void merge(const DetectStats &other);
};

struct ScanOptions
{
  int stride = 1; ///< in pooled cells
  double scoreThreshold = -std::numeric_limits<double>::infinity();
  CascadeMode mode = CascadeMode::EarlyExit;
};

/// Window feature of a stack at pooled offset (x0, y0), in model index order.
std::vector<float> window_features_at(const ChannelStack &stack, int x0, int y0, int grid);

/// Raw sliding-window detections over every grid-aligned window of every level.
std::vector<Detection> detect_single_view(const std::vector<PyramidLevel> &pyramid, const SoftCascadeModel &model,
                                          const ScanOptions &options = {}, DetectStats *stats = nullptr);

/// Up to maxWindows full-pass windows (seeded random subset), as feature vectors.
std::vector<std::vector<float>> mine_false_positives(const Image &image, const SoftCascadeModel &model,
                                                     const PyramidConfig &pyramid, std::size_t maxWindows,
                                                     std::uint64_t seed);
std::vector<std::vector<float>> mine_false_positives(const std::vector<PyramidLevel> &levels,
                                                     const SoftCascadeModel &model, std::size_t maxWindows,
                                                     std::uint64_t seed);

struct ViewEntry
{
  SoftCascadeModel model;
  int mirrorOf = -1; ///< index of the trained view this one mirrors
};

struct MultiViewModel
{
  static constexpr std::uint32_t kFormatVersion = 1;

  std::vector<ViewEntry> views;
  std::vector<AdjustmentParams> adjustments;
  FusionConfig fusion;
  PyramidConfig pyramid;
  int stride = 1;

  /// Views 0..n-1 from trained right-side models; view n-1-i mirrors view i
  /// (an odd middle view stays unmirrored).
  static MultiViewModel from_trained(std::vector<SoftCascadeModel> trained, int totalViews);

  std::vector<ScoreRange> score_ranges() const;
  int window() const { return views.empty() ? 0 : views.front().model.windowSize; }
  const ChannelConfig &channel_config() const { return views.front().model.channelConfig; }

  /// Re-derives mirrored views from their sources and checks shared geometry.
  void finalize();
  void validate() const;
};

/// Raw detections of all views over one shared pyramid.
std::vector<Detection> detect_raw(const Image &image, const MultiViewModel &model, CascadeMode mode = CascadeMode::EarlyExit,
                                  DetectStats *stats = nullptr);

/// Pyramid -> all views -> rerank -> merge -> adjust, sorted by the total order.
std::vector<Detection> detect_multiview(const Image &image, const MultiViewModel &model,
                                        std::vector<std::string> *events = nullptr);

class ModelFormatError : public ValidationError
{
public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Invalid };
  ModelFormatError(Kind kind, const std::string &what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

std::vector<std::uint8_t> serialize_cascade(const SoftCascadeModel &model);
SoftCascadeModel deserialize_cascade(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_model(const MultiViewModel &model);
MultiViewModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const MultiViewModel &model, const std::string &path);
MultiViewModel load_model(const std::string &path);

} // namespace acf

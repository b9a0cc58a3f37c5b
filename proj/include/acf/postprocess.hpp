#pragma once

#include "acf/boosting.hpp"
#include "acf/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace acf {

struct Detection
{
  double x = 0, y = 0, w = 0, h = 0;
  double score = 0;
  int viewId = 0;
  double scale = 1.0;
  int votes = 0; ///< trees voting +1 (NewScore re-ranking)

  Box box() const { return {x, y, w, h}; }
  bool operator==(const Detection &) const = default;
};

/// Deterministic total order: score desc, then viewId, scale, x, y, w, h ascending.
bool detection_before(const Detection &a, const Detection &b);
void sort_detections(std::vector<Detection> &dets);

enum class RerankMode { None, Normalization, NewScore, OverlapRerank, SumOfOverlap };
enum class MergeMode { GreedyNMS, Combination };
enum class CombinationWeighting { ScoreWeighted, Uniform };

std::string to_string(RerankMode m);
std::string to_string(MergeMode m);
RerankMode rerank_from_string(const std::string &s);
MergeMode merge_from_string(const std::string &s);

struct FusionConfig
{
  RerankMode rerank = RerankMode::Normalization;
  double rerankOverlapThreshold = 0.65;
  MergeMode merging = MergeMode::GreedyNMS;
  double mergeOverlapThreshold = 0.65;
  CombinationWeighting combinationWeighting = CombinationWeighting::ScoreWeighted;
  /// Applied after re-ranking; nullopt keeps everything.
  std::optional<double> scoreThreshold = 0.0;

  void validate() const;
  bool operator==(const FusionConfig &) const = default;
};

/// Per-view box correction: center shift (dx*w, dy*h), scale (sw, sh) about the center.
struct AdjustmentParams
{
  double dx = 0.0, dy = 0.0, sw = 1.0, sh = 1.0;

  void validate() const;
  /// Parameters undoing this adjustment.
  AdjustmentParams inverse() const;
  bool operator==(const AdjustmentParams &) const = default;
};

/// score' = clamp((score - min) / (max - min), 0, 1) with the detection's
/// view range. Degenerate ranges map to 1 and are reported through `events`.
std::vector<Detection> rerank_normalization(std::vector<Detection> dets, std::span<const ScoreRange> viewRanges,
                                            std::vector<std::string> *events = nullptr);

/// score' = number of trees that voted +1.
std::vector<Detection> rerank_new_score(std::vector<Detection> dets);

/// score' = score * rank / N, ranks ascending in overlap count. Equal counts
/// are ordered so that the detection earlier in the total order gets the
/// higher rank.
std::vector<Detection> rerank_by_overlap_counts(std::vector<Detection> dets, std::span<const int> overlapCounts);

/// Overlap counts are Jaccard >= threshold against every other detection.
std::vector<int> overlap_counts(std::span<const Detection> dets, double threshold);
std::vector<Detection> rerank_overlap(std::vector<Detection> dets, double threshold);

/// score' = sum of scores of all detections (self included) with Jaccard >= threshold.
std::vector<Detection> rerank_sum_overlap(std::vector<Detection> dets, double threshold);

/// Greedy* suppression in total order, min-area overlap.
std::vector<Detection> nms_greedy(std::vector<Detection> dets, double threshold);

/// Greedy clustering around seeds in total order; each cluster emits the
/// weighted mean box with the seed's score and view.
std::vector<Detection> merge_combination(std::vector<Detection> dets, double threshold,
                                         CombinationWeighting weighting = CombinationWeighting::ScoreWeighted);

AdjustmentParams identity_adjustment();
Detection adjust_detection(const Detection &d, const AdjustmentParams &p);
std::vector<Detection> adjust_detections(std::vector<Detection> dets, std::span<const AdjustmentParams> perView);

std::vector<Detection> apply_rerank(std::vector<Detection> dets, const FusionConfig &config,
                                    std::span<const ScoreRange> viewRanges, std::vector<std::string> *events = nullptr);
std::vector<Detection> apply_merge(std::vector<Detection> dets, const FusionConfig &config);

/// rerank -> threshold -> merge -> adjust, sorted in total order.
std::vector<Detection> fuse_detections(std::vector<Detection> raw, const FusionConfig &config,
                                       std::span<const ScoreRange> viewRanges,
                                       std::span<const AdjustmentParams> adjustments,
                                       std::vector<std::string> *events = nullptr);

} // namespace acf

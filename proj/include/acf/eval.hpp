#pragma once

#include "acf/geometry.hpp"
#include "acf/postprocess.hpp"

#include <json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace acf {

struct GroundTruth
{
  Box box;
  bool ignore = false;
  int yaw = -1; ///< yaw level, -1 when unlabeled
  bool operator==(const GroundTruth &) const = default;
};

struct AnnotationSet
{
  std::string style = "tight-rect";
  std::map<std::string, std::vector<GroundTruth>> images; ///< imageId -> boxes (possibly none)

  std::size_t box_count() const;
  std::size_t positive_count() const; ///< boxes without the ignore flag
  void validate() const;
  bool operator==(const AnnotationSet &) const = default;
};

struct EvalConfig
{
  double jaccardThreshold = 0.5;
  std::vector<double> fppiPoints{1.0};

  void validate() const;
  bool operator==(const EvalConfig &) const = default;
};

enum class MatchLabel { TP, FP, Ignored };

struct MatchResult
{
  std::vector<MatchLabel> labels; ///< per detection, in input order
  std::vector<double> overlaps;   ///< Jaccard with the matched annotation (0 for FP)
  std::vector<int> matchedTo;     ///< annotation index or -1
  std::vector<bool> gtMatched;    ///< per annotation
};

/// Greedy one-to-one matching in input order (detections must be sorted by
/// score). Each detection takes the unmatched, non-ignored annotation of
/// highest Jaccard if it reaches the threshold; otherwise a detection that
/// reaches the threshold on an ignored annotation is labeled Ignored.
MatchResult match_detections(std::span<const Detection> detections, std::span<const GroundTruth> annotations,
                             double threshold);

struct LabeledDetection
{
  double score = 0.0;
  MatchLabel label = MatchLabel::FP;
  double overlap = 0.0;
};

/// Area under the all-points interpolated precision/recall curve. Ignored
/// detections are skipped; ties in score keep input order.
double average_precision(std::span<const LabeledDetection> detections, std::size_t totalPositives);

enum class RocMode { Discrete, Continuous };

struct RocPoint
{
  double threshold = 0.0;
  std::size_t falsePositives = 0;
  double fppi = 0.0;
  double tpr = 0.0;
};

struct RocCurve
{
  RocMode mode = RocMode::Discrete;
  std::vector<RocPoint> points; ///< one per distinct score, after the origin
  std::vector<std::pair<double, double>> readouts; ///< (fppi, tpr)
};

/// Threshold sweep over distinct scores. TPR counts matches (discrete) or
/// sums matched Jaccard values (continuous), divided by totalPositives.
/// Readouts interpolate linearly between the best TPR at consecutive FP counts.
RocCurve roc_curve(std::span<const LabeledDetection> detections, std::size_t totalPositives, std::size_t imageCount,
                   RocMode mode, std::span<const double> fppiPoints);

using DetectionSet = std::map<std::string, std::vector<Detection>>;

struct EvalReport
{
  double ap = 0.0;
  std::size_t detections = 0, truePositives = 0, falsePositives = 0, ignored = 0;
  std::size_t totalPositives = 0, images = 0;
  RocCurve discrete, continuous;
};

/// Per-image matching, then AP and both ROC curves over the pooled labels.
/// Images present only in `detections` count as images without annotations.
EvalReport evaluate(const DetectionSet &detections, const AnnotationSet &annotations, const EvalConfig &config);

/// Pooled labels in score order (used by evaluate; exposed for tests).
std::vector<LabeledDetection> label_detections(const DetectionSet &detections, const AnnotationSet &annotations,
                                               double threshold);

/// Axis-aligned bounding rectangle of an ellipse with semi-axes (major, minor),
/// rotation angle in radians and the given center.
Box ellipse_bounding_box(double majorRadius, double minorRadius, double angle, double cx, double cy);

/// Line-delimited JSON. Box records: {"image","x","y","w","h"[,"ignore"][,"yaw"]};
/// ellipse records: {"image","ellipse":[major,minor,angle,cx,cy]} (converted when
/// convertEllipses is set, rejected otherwise); {"image"} alone registers an
/// image without boxes; {"style"} sets the annotation style.
AnnotationSet read_annotations(const std::string &path, bool convertEllipses = true);
void write_annotations(const std::string &path, const AnnotationSet &annotations);

/// Records {"image","x","y","w","h","score","view"}.
DetectionSet read_detections(const std::string &path);
void write_detections(const std::string &path, const DetectionSet &detections);

nlohmann::json to_json(const RocCurve &curve);
nlohmann::json to_json(const EvalReport &report);

} // namespace acf

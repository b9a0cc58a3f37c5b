#include "acf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace acf {

using nlohmann::json;

std::size_t AnnotationSet::box_count() const
{
  std::size_t n = 0;
  for (const auto &[id, boxes] : images)
    n += boxes.size();
  return n;
}

std::size_t AnnotationSet::positive_count() const
{
  std::size_t n = 0;
  for (const auto &[id, boxes] : images)
    for (const auto &g : boxes)
      n += g.ignore ? 0 : 1;
  return n;
}

void AnnotationSet::validate() const
{
  for (const auto &[id, boxes] : images)
    for (const auto &g : boxes)
      if (!(g.box.w > 0 && g.box.h > 0) || !std::isfinite(g.box.x) || !std::isfinite(g.box.y))
        throw ValidationError("annotation in image '" + id + "' has a non-positive or non-finite box");
}

void EvalConfig::validate() const
{
  if (!(jaccardThreshold > 0.0 && jaccardThreshold <= 1.0))
    throw ConfigError("jaccard threshold must be in (0,1]");
  for (double f : fppiPoints)
    if (!(f >= 0.0) || !std::isfinite(f))
      throw ConfigError("FPPI points must be finite and non-negative");
}

MatchResult match_detections(std::span<const Detection> detections, std::span<const GroundTruth> annotations,
                             double threshold)
{
  MatchResult r;
  r.labels.assign(detections.size(), MatchLabel::FP);
  r.overlaps.assign(detections.size(), 0.0);
  r.matchedTo.assign(detections.size(), -1);
  r.gtMatched.assign(annotations.size(), false);

  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Box b = detections[i].box();
    int best = -1;
    double bestOverlap = -1.0, bestIgnored = 0.0;
    for (std::size_t g = 0; g < annotations.size(); ++g) {
      const double o = jaccard(b, annotations[g].box);
      if (annotations[g].ignore) {
        bestIgnored = std::max(bestIgnored, o);
      } else if (!r.gtMatched[g] && o > bestOverlap) {
        bestOverlap = o;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && bestOverlap >= threshold) {
      r.labels[i] = MatchLabel::TP;
      r.overlaps[i] = bestOverlap;
      r.matchedTo[i] = best;
      r.gtMatched[static_cast<std::size_t>(best)] = true;
    } else if (bestIgnored >= threshold) {
      r.labels[i] = MatchLabel::Ignored;
    }
  }
  return r;
}

namespace {

std::vector<LabeledDetection> sorted_counted(std::span<const LabeledDetection> detections)
{
  std::vector<LabeledDetection> v;
  for (const auto &d : detections)
    if (d.label != MatchLabel::Ignored)
      v.push_back(d);
  std::stable_sort(v.begin(), v.end(), [](const auto &a, const auto &b) { return a.score > b.score; });
  return v;
}

} // namespace

double average_precision(std::span<const LabeledDetection> detections, std::size_t totalPositives)
{
  if (totalPositives == 0)
    throw ValidationError("average precision needs at least one positive");
  const auto v = sorted_counted(detections);
  const std::size_t n = v.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += v[i].label == MatchLabel::TP ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(totalPositives);
  }
  for (std::size_t i = n; i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prevRecall = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i].label == MatchLabel::TP) {
      ap += (recall[i] - prevRecall) * precision[i];
      prevRecall = recall[i];
    }
  return ap;
}

RocCurve roc_curve(std::span<const LabeledDetection> detections, std::size_t totalPositives, std::size_t imageCount,
                   RocMode mode, std::span<const double> fppiPoints)
{
  if (totalPositives == 0)
    throw ValidationError("ROC needs at least one positive");
  const double images = static_cast<double>(std::max<std::size_t>(imageCount, 1));
  const auto v = sorted_counted(detections);

  RocCurve c;
  c.mode = mode;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0, 0.0, 0.0});
  std::size_t fp = 0;
  double hits = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    const double s = v[i].score;
    for (; i < v.size() && v[i].score == s; ++i) {
      if (v[i].label == MatchLabel::TP)
        hits += mode == RocMode::Discrete ? 1.0 : v[i].overlap;
      else
        ++fp;
    }
    c.points.push_back({s, fp, static_cast<double>(fp) / images, hits / static_cast<double>(totalPositives)});
  }

  // Upper envelope: best TPR per FP count (TPR grows along the sweep).
  std::vector<std::pair<double, double>> env;
  for (const auto &p : c.points) {
    if (!env.empty() && env.back().first == static_cast<double>(p.falsePositives))
      env.back().second = std::max(env.back().second, p.tpr);
    else
      env.emplace_back(static_cast<double>(p.falsePositives), p.tpr);
  }
  for (double f : fppiPoints) {
    const double x = f * images;
    double tpr = env.back().second;
    for (std::size_t j = 0; j + 1 < env.size(); ++j)
      if (env[j].first <= x && x < env[j + 1].first) {
        const double t = (x - env[j].first) / (env[j + 1].first - env[j].first);
        tpr = env[j].second + t * (env[j + 1].second - env[j].second);
        break;
      }
    c.readouts.emplace_back(f, tpr);
  }
  return c;
}

std::vector<LabeledDetection> label_detections(const DetectionSet &detections, const AnnotationSet &annotations,
                                               double threshold)
{
  static const std::vector<GroundTruth> none;
  std::vector<LabeledDetection> out;
  for (const auto &[id, dets] : detections) {
    auto sorted = dets;
    sort_detections(sorted);
    const auto it = annotations.images.find(id);
    const auto &gts = it == annotations.images.end() ? none : it->second;
    const auto m = match_detections(sorted, gts, threshold);
    for (std::size_t i = 0; i < sorted.size(); ++i)
      out.push_back({sorted[i].score, m.labels[i], m.overlaps[i]});
  }
  return out;
}

EvalReport evaluate(const DetectionSet &detections, const AnnotationSet &annotations, const EvalConfig &config)
{
  config.validate();
  annotations.validate();
  std::set<std::string> ids;
  for (const auto &[id, b] : annotations.images)
    ids.insert(id);
  for (const auto &[id, d] : detections)
    ids.insert(id);

  EvalReport r;
  r.images = ids.size();
  r.totalPositives = annotations.positive_count();
  const auto labels = label_detections(detections, annotations, config.jaccardThreshold);
  r.detections = labels.size();
  for (const auto &l : labels) {
    r.truePositives += l.label == MatchLabel::TP ? 1 : 0;
    r.falsePositives += l.label == MatchLabel::FP ? 1 : 0;
    r.ignored += l.label == MatchLabel::Ignored ? 1 : 0;
  }
  if (r.totalPositives == 0)
    throw ValidationError("annotations contain no positive boxes");
  r.ap = average_precision(labels, r.totalPositives);
  r.discrete = roc_curve(labels, r.totalPositives, r.images, RocMode::Discrete, config.fppiPoints);
  r.continuous = roc_curve(labels, r.totalPositives, r.images, RocMode::Continuous, config.fppiPoints);
  return r;
}

Box ellipse_bounding_box(double majorRadius, double minorRadius, double angle, double cx, double cy)
{
  const double c = std::cos(angle), s = std::sin(angle);
  const double hw = std::sqrt(majorRadius * majorRadius * c * c + minorRadius * minorRadius * s * s);
  const double hh = std::sqrt(majorRadius * majorRadius * s * s + minorRadius * minorRadius * c * c);
  return {cx - hw, cy - hh, 2 * hw, 2 * hh};
}

namespace {

template <typename Fn>
void for_each_record(const std::string &path, Fn &&fn)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ValidationError(path + ":" + std::to_string(lineNo) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const json::exception &e) {
      throw ValidationError(path + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::string &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path);
  return out;
}

} // namespace

AnnotationSet read_annotations(const std::string &path, bool convertEllipses)
{
  AnnotationSet a;
  for_each_record(path, [&](const json &j) {
    if (j.contains("style") && !j.contains("image")) {
      a.style = j.at("style").get<std::string>();
      return;
    }
    auto &boxes = a.images[j.at("image").get<std::string>()];
    GroundTruth g;
    if (j.contains("ellipse")) {
      if (!convertEllipses)
        throw ValidationError("ellipse annotation found but ellipse conversion is disabled");
      const auto e = j.at("ellipse").get<std::vector<double>>();
      if (e.size() != 5)
        throw ValidationError("ellipse needs 5 parameters");
      g.box = ellipse_bounding_box(e[0], e[1], e[2], e[3], e[4]);
    } else if (j.contains("x")) {
      g.box = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
    } else {
      return;
    }
    g.ignore = j.value("ignore", false);
    g.yaw = j.value("yaw", -1);
    boxes.push_back(g);
  });
  a.validate();
  return a;
}

void write_annotations(const std::string &path, const AnnotationSet &annotations)
{
  auto out = open_out(path);
  out << json{{"style", annotations.style}}.dump() << '\n';
  for (const auto &[id, boxes] : annotations.images) {
    if (boxes.empty())
      out << json{{"image", id}}.dump() << '\n';
    for (const auto &g : boxes) {
      json j{{"image", id}, {"x", g.box.x}, {"y", g.box.y}, {"w", g.box.w}, {"h", g.box.h}};
      if (g.ignore)
        j["ignore"] = true;
      if (g.yaw >= 0)
        j["yaw"] = g.yaw;
      out << j.dump() << '\n';
    }
  }
  if (!out)
    throw IoError("write failed: " + path);
}

DetectionSet read_detections(const std::string &path)
{
  DetectionSet set;
  for_each_record(path, [&](const json &j) {
    auto &dets = set[j.at("image").get<std::string>()];
    if (!j.contains("x"))
      return;
    Detection d;
    d.x = j.at("x").get<double>();
    d.y = j.at("y").get<double>();
    d.w = j.at("w").get<double>();
    d.h = j.at("h").get<double>();
    d.score = j.at("score").get<double>();
    d.viewId = j.value("view", 0);
    d.scale = j.value("scale", 1.0);
    if (!(d.w > 0 && d.h > 0) || !std::isfinite(d.score))
      throw ValidationError("detection with non-positive size or non-finite score");
    dets.push_back(d);
  });
  return set;
}

void write_detections(const std::string &path, const DetectionSet &detections)
{
  auto out = open_out(path);
  for (const auto &[id, dets] : detections) {
    if (dets.empty())
      out << json{{"image", id}}.dump() << '\n';
    for (const auto &d : dets)
      out << json{{"image", id}, {"x", d.x},         {"y", d.y},        {"w", d.w},
                  {"h", d.h},    {"score", d.score}, {"view", d.viewId}, {"scale", d.scale}}
               .dump()
          << '\n';
  }
  if (!out)
    throw IoError("write failed: " + path);
}

json to_json(const RocCurve &curve)
{
  json pts = json::array();
  for (const auto &p : curve.points)
    pts.push_back({{"falsePositives", p.falsePositives}, {"fppi", p.fppi}, {"tpr", p.tpr}});
  json readouts = json::array();
  for (const auto &[f, t] : curve.readouts)
    readouts.push_back({{"fppi", f}, {"tpr", t}});
  return {{"mode", curve.mode == RocMode::Discrete ? "discrete" : "continuous"},
          {"points", pts},
          {"readouts", readouts}};
}

json to_json(const EvalReport &r)
{
  return {{"ap", r.ap},
          {"detections", r.detections},
          {"truePositives", r.truePositives},
          {"falsePositives", r.falsePositives},
          {"ignored", r.ignored},
          {"totalPositives", r.totalPositives},
          {"images", r.images},
          {"discreteRoc", to_json(r.discrete)},
          {"continuousRoc", to_json(r.continuous)}};
}

} // namespace acf

#include "acf/eval.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace acf;

namespace {

Detection det(double x, double y, double w, double h, double score)
{
  Detection d;
  d.x = x;
  d.y = y;
  d.w = w;
  d.h = h;
  d.score = score;
  return d;
}

/// Interpolated precision at each true positive: the best precision at any
/// cutoff reaching at least that recall.
double ap_oracle(const std::vector<MatchLabel> &ranked, std::size_t positives)
{
  std::vector<double> prec, rec;
  std::size_t tp = 0, seen = 0;
  for (auto l : ranked) {
    if (l == MatchLabel::Ignored)
      continue;
    ++seen;
    tp += l == MatchLabel::TP;
    prec.push_back(static_cast<double>(tp) / seen);
    rec.push_back(static_cast<double>(tp) / positives);
  }
  double ap = 0, last = 0;
  std::size_t k = 0;
  for (auto l : ranked) {
    if (l == MatchLabel::Ignored)
      continue;
    if (l == MatchLabel::TP) {
      double best = 0;
      for (std::size_t j = 0; j < prec.size(); ++j)
        if (rec[j] >= rec[k])
          best = std::max(best, prec[j]);
      ap += (rec[k] - last) * best;
      last = rec[k];
    }
    ++k;
  }
  return ap;
}

std::vector<LabeledDetection> ranked(const std::vector<MatchLabel> &labels)
{
  std::vector<LabeledDetection> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.push_back({1.0 - 0.01 * static_cast<double>(i), labels[i], labels[i] == MatchLabel::TP ? 0.8 : 0.0});
  return out;
}

} // namespace

TEST_CASE("matching pipeline reproduces the TP FP TP case")
{
  AnnotationSet gt;
  gt.images["a"] = {{Box{0, 0, 10, 10}}, {Box{100, 100, 10, 10}}};
  DetectionSet dets;
  dets["a"] = {det(0, 0, 10, 10, 0.9), det(50, 50, 10, 10, 0.8), det(100, 100, 10, 10, 0.7)};
  const auto r = evaluate(dets, gt, EvalConfig{});
  CHECK(r.truePositives == 2);
  CHECK(r.falsePositives == 1);
  CHECK(r.ap == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(r.ap == doctest::Approx(ap_oracle({MatchLabel::TP, MatchLabel::FP, MatchLabel::TP}, 2)));
}

TEST_CASE("average precision endpoints")
{
  CHECK(average_precision(ranked({MatchLabel::TP, MatchLabel::TP, MatchLabel::TP}), 3) == doctest::Approx(1.0));
  CHECK(average_precision(std::vector<LabeledDetection>{}, 3) == 0.0);
  CHECK(average_precision(ranked({MatchLabel::FP, MatchLabel::FP}), 3) == 0.0);
  CHECK(average_precision(ranked({MatchLabel::TP}), 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(average_precision(ranked({MatchLabel::TP}), 0), ValidationError);

  AnnotationSet gt;
  gt.images["a"] = {{Box{0, 0, 10, 10}}};
  CHECK(evaluate(DetectionSet{}, gt, EvalConfig{}).ap == 0.0);
}

TEST_CASE("average precision matches the interpolation oracle")
{
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MatchLabel> labels;
    std::size_t tps = 0;
    for (int i = 0; i < 25; ++i) {
      const int p = pick(rng);
      labels.push_back(p < 5 ? MatchLabel::TP : (p < 9 ? MatchLabel::FP : MatchLabel::Ignored));
      tps += labels.back() == MatchLabel::TP;
    }
    const std::size_t positives = tps + static_cast<std::size_t>(pick(rng));
    if (positives == 0)
      continue;
    CHECK(average_precision(ranked(labels), positives) == doctest::Approx(ap_oracle(labels, positives)).epsilon(1e-12));
  }
}

TEST_CASE("matching is greedy and one-to-one")
{
  const std::vector<GroundTruth> gt{{Box{0, 0, 10, 10}}, {Box{3, 0, 10, 10}}, {Box{50, 50, 10, 10}, true}};
  const std::vector<Detection> dets{det(2, 0, 10, 10, 0.9), det(1, 0, 10, 10, 0.8), det(0, 0, 10, 10, 0.7),
                                    det(50, 50, 10, 10, 0.6), det(200, 0, 10, 10, 0.5)};
  const auto m = match_detections(dets, gt, 0.5);
  CHECK(m.labels[0] == MatchLabel::TP);
  CHECK(m.matchedTo[0] == 1);
  CHECK(m.labels[1] == MatchLabel::TP);
  CHECK(m.matchedTo[1] == 0);
  CHECK(m.labels[2] == MatchLabel::FP);
  CHECK(m.labels[3] == MatchLabel::Ignored);
  CHECK(m.labels[4] == MatchLabel::FP);
  CHECK(m.overlaps[0] == doctest::Approx(jaccard(dets[0].box(), gt[1].box)));
  CHECK(m.gtMatched == std::vector<bool>{true, true, false});
}

TEST_CASE("ignored boxes do not count as positives")
{
  AnnotationSet gt;
  gt.images["a"] = {{Box{0, 0, 10, 10}}, {Box{40, 40, 10, 10}, true}};
  gt.images["b"] = {};
  DetectionSet dets;
  dets["a"] = {det(40, 40, 10, 10, 0.9), det(0, 0, 10, 10, 0.5)};
  const auto r = evaluate(dets, gt, EvalConfig{});
  CHECK(r.totalPositives == 1);
  CHECK(r.ignored == 1);
  CHECK(r.ap == doctest::Approx(1.0));
  CHECK(r.images == 2);
}

TEST_CASE("roc readouts interpolate between false-positive counts")
{
  // Scores descend: TP, FP, TP, FP, TP over 2 images and 4 positives.
  const std::vector<MatchLabel> labels{MatchLabel::TP, MatchLabel::FP, MatchLabel::TP, MatchLabel::FP, MatchLabel::TP};
  const auto v = ranked(labels);
  const std::vector<double> fppi{0.25, 0.5, 1.0, 5.0};
  const auto c = roc_curve(v, 4, 2, RocMode::Discrete, fppi);
  REQUIRE(c.points.size() == 6);
  CHECK(c.points[0].tpr == 0.0);
  CHECK(c.points.back().falsePositives == 2);
  // Envelope: (0 FP, .25), (1 FP, .5), (2 FP, .75); fppi 0.25 -> 0.5 FP.
  CHECK(c.readouts[0].second == doctest::Approx(0.375));
  CHECK(c.readouts[1].second == doctest::Approx(0.5));
  CHECK(c.readouts[2].second == doctest::Approx(0.75));
  CHECK(c.readouts[3].second == doctest::Approx(0.75));

  const auto cc = roc_curve(v, 4, 2, RocMode::Continuous, fppi);
  CHECK(cc.points.back().tpr == doctest::Approx(3 * 0.8 / 4));
}

TEST_CASE("ellipse bounding boxes")
{
  const auto a = ellipse_bounding_box(20, 10, 0.0, 50, 60);
  CHECK(a.x == doctest::Approx(30));
  CHECK(a.w == doctest::Approx(40));
  CHECK(a.h == doctest::Approx(20));
  const auto b = ellipse_bounding_box(20, 10, std::numbers::pi / 2, 50, 60);
  CHECK(b.w == doctest::Approx(20));
  CHECK(b.h == doctest::Approx(40));
  const auto c = ellipse_bounding_box(10, 10, 0.7, 0, 0);
  CHECK(c.w == doctest::Approx(20));
}

TEST_CASE("annotation and detection files round-trip")
{
  const auto dir = std::filesystem::temp_directory_path() / "acf_eval_io";
  std::filesystem::create_directories(dir);
  AnnotationSet gt;
  gt.style = "square-target";
  gt.images["img1"] = {{Box{1, 2, 3, 4}, false, 2}, {Box{5, 6, 7, 8}, true, -1}};
  gt.images["img2"] = {};
  write_annotations((dir / "a.jsonl").string(), gt);
  CHECK(read_annotations((dir / "a.jsonl").string()) == gt);

  DetectionSet ds;
  ds["img1"] = {det(1.5, 2.25, 30, 30, 0.75)};
  ds["img1"][0].viewId = 4;
  ds["img1"][0].scale = 0.5;
  write_detections((dir / "d.jsonl").string(), ds);
  const auto back = read_detections((dir / "d.jsonl").string());
  REQUIRE(back.at("img1").size() == 1);
  CHECK(back.at("img1")[0].x == 1.5);
  CHECK(back.at("img1")[0].viewId == 4);
  CHECK(back.at("img1")[0].score == 0.75);

  {
    std::ofstream e(dir / "e.jsonl");
    e << R"({"image":"x","ellipse":[20,10,0,50,60]})" << "\n";
  }
  const auto el = read_annotations((dir / "e.jsonl").string());
  CHECK(el.images.at("x")[0].box.w == doctest::Approx(40));
  CHECK_THROWS_AS(read_annotations((dir / "e.jsonl").string(), false), ValidationError);

  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << "{not json\n";
  }
  CHECK_THROWS_AS(read_detections((dir / "bad.jsonl").string()), ValidationError);
  CHECK_THROWS_AS(read_detections((dir / "missing.jsonl").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("eval config validation")
{
  EvalConfig c;
  c.jaccardThreshold = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.fppiPoints = {-1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

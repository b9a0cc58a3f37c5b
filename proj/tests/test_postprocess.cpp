#include "oracles.hpp"

#include "acf/postprocess.hpp"

#include <doctest.h>

using namespace acf;

namespace {

Detection det(double x, double y, double w, double h, double score, int view = 0)
{
  Detection d;
  d.x = x;
  d.y = y;
  d.w = w;
  d.h = h;
  d.score = score;
  d.viewId = view;
  return d;
}

std::vector<Detection> random_instance(std::mt19937_64 &rng, int n)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> centers;
  for (int i = 0; i < 5; ++i)
    centers.emplace_back(50 + 300 * u(rng), 50 + 200 * u(rng));
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    const auto [cx, cy] = centers[static_cast<std::size_t>(i) % centers.size()];
    const double s = 40 + 60 * u(rng);
    out.push_back(det(cx + 30 * (u(rng) - 0.5) - s / 2, cy + 30 * (u(rng) - 0.5) - s / 2, s, s * (0.8 + 0.4 * u(rng)),
                      u(rng), static_cast<int>(u(rng) * 6)));
  }
  return out;
}

} // namespace

TEST_CASE("overlap re-ranking of the three-detection example")
{
  const std::vector<Detection> dets{det(0, 0, 10, 10, 10), det(50, 0, 10, 10, 9), det(100, 0, 10, 10, 5)};
  const std::vector<int> counts{10, 20, 5};
  const auto r = rerank_by_overlap_counts(dets, counts);
  CHECK(r[0].score == doctest::Approx(10.0 * 2 / 3).epsilon(1e-12));
  CHECK(r[1].score == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(r[2].score == doctest::Approx(5.0 / 3).epsilon(1e-12));
  CHECK_THROWS_AS(rerank_by_overlap_counts(dets, std::vector<int>{1}), ValidationError);
}

TEST_CASE("overlap re-ranking ties favor the earlier detection")
{
  const std::vector<Detection> dets{det(0, 0, 10, 10, 4), det(50, 0, 10, 10, 8)};
  const auto r = rerank_by_overlap_counts(dets, std::vector<int>{3, 3});
  CHECK(r[1].score == doctest::Approx(8.0));
  CHECK(r[0].score == doctest::Approx(2.0));
}

TEST_CASE("overlap counts match pairwise enumeration")
{
  std::mt19937_64 rng(2);
  const auto dets = random_instance(rng, 30);
  const auto counts = overlap_counts(dets, 0.5);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    int c = 0;
    for (std::size_t j = 0; j < dets.size(); ++j)
      if (j != i && jaccard(dets[i].box(), dets[j].box()) >= 0.5)
        ++c;
    CHECK(counts[i] == c);
  }
}

TEST_CASE("greedy suppression matches the quadratic reference")
{
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dets = random_instance(rng, 50);
    for (double t : {0.3, 0.5, 0.65}) {
      const auto got = nms_greedy(dets, t);
      const auto ref = oracle::nms_reference(dets, t);
      CHECK(got == ref);
    }
  }
}

TEST_CASE("suppression uses the smaller box area")
{
  const std::vector<Detection> dets{det(0, 0, 100, 100, 2), det(10, 10, 20, 20, 1)};
  CHECK(nms_greedy(dets, 0.65).size() == 1);
  CHECK(jaccard(dets[0].box(), dets[1].box()) < 0.65);
}

TEST_CASE("normalization uses each view's range")
{
  const std::vector<ScoreRange> ranges{{1.0, 3.0}, {0.0, 10.0}, {2.0, 2.0}};
  std::vector<Detection> dets{det(0, 0, 1, 1, 2.0, 0), det(0, 0, 1, 1, 12.0, 1), det(0, 0, 1, 1, -1.0, 1),
                              det(0, 0, 1, 1, 7.0, 2)};
  std::vector<std::string> events;
  const auto r = rerank_normalization(dets, ranges, &events);
  CHECK(r[0].score == doctest::Approx(0.5));
  CHECK(r[1].score == 1.0);
  CHECK(r[2].score == 0.0);
  CHECK(r[3].score == 1.0);
  CHECK(events.size() == 1);
  dets[0].viewId = 7;
  CHECK_THROWS_AS(rerank_normalization(dets, ranges), ValidationError);
}

TEST_CASE("new score counts positive votes")
{
  auto d = det(0, 0, 1, 1, 3.5);
  d.votes = 17;
  CHECK(rerank_new_score({d})[0].score == 17.0);
}

TEST_CASE("sum of overlap adds neighbor scores")
{
  const std::vector<Detection> dets{det(0, 0, 10, 10, 1), det(1, 0, 10, 10, 2), det(50, 50, 10, 10, 4)};
  const auto r = rerank_sum_overlap(dets, 0.65);
  CHECK(r[0].score == doctest::Approx(3.0));
  CHECK(r[1].score == doctest::Approx(3.0));
  CHECK(r[2].score == doctest::Approx(4.0));
}

TEST_CASE("combination averages cluster boxes")
{
  const std::vector<Detection> dets{det(0, 0, 10, 10, 3, 1), det(2, 0, 10, 10, 1, 2), det(100, 100, 10, 10, 0.5)};
  const auto w = merge_combination(dets, 0.5);
  REQUIRE(w.size() == 2);
  CHECK(w[0].x == doctest::Approx(0.5));
  CHECK(w[0].score == 3.0);
  CHECK(w[0].viewId == 1);
  const auto u = merge_combination(dets, 0.5, CombinationWeighting::Uniform);
  CHECK(u[0].x == doctest::Approx(1.0));
}

TEST_CASE("adjustment and its inverse")
{
  const AdjustmentParams p{0.1, -0.05, 1.2, 0.9};
  const auto d = det(10, 20, 50, 40, 1);
  const auto a = adjust_detection(d, p);
  CHECK(a.w == doctest::Approx(60));
  CHECK(a.x + a.w / 2 == doctest::Approx(35 + 5));
  const auto back = adjust_detection(a, p.inverse());
  CHECK(back.x == doctest::Approx(d.x));
  CHECK(back.y == doctest::Approx(d.y));
  CHECK(back.w == doctest::Approx(d.w));
  CHECK(back.h == doctest::Approx(d.h));
  CHECK_THROWS_AS((AdjustmentParams{0, 0, 0, 1}.validate()), ConfigError);
}

TEST_CASE("fusion thresholds after re-ranking and before merging")
{
  const std::vector<ScoreRange> ranges{{0.0, 10.0}};
  const std::vector<AdjustmentParams> adj{identity_adjustment()};
  const std::vector<Detection> raw{det(0, 0, 10, 10, 8), det(1, 1, 10, 10, 9), det(200, 0, 10, 10, 2)};
  FusionConfig cfg;
  cfg.scoreThreshold = 0.5;
  const auto out = fuse_detections(raw, cfg, ranges, adj);
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == doctest::Approx(0.9));
  cfg.scoreThreshold = std::nullopt;
  CHECK(fuse_detections(raw, cfg, ranges, adj).size() == 2);
  cfg.mergeOverlapThreshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("total order breaks score ties deterministically")
{
  std::vector<Detection> a{det(5, 0, 1, 1, 1, 1), det(1, 0, 1, 1, 1, 1), det(0, 0, 1, 1, 1, 0), det(9, 0, 1, 1, 2, 3)};
  auto b = a;
  std::reverse(b.begin(), b.end());
  sort_detections(a);
  sort_detections(b);
  CHECK(a == b);
  CHECK(a[0].score == 2);
  CHECK(a[1].viewId == 0);
  CHECK(a[2].x == 1);
}

TEST_CASE("mode names round-trip")
{
  for (auto m : {RerankMode::None, RerankMode::Normalization, RerankMode::NewScore, RerankMode::OverlapRerank,
                 RerankMode::SumOfOverlap})
    CHECK(rerank_from_string(to_string(m)) == m);
  CHECK(merge_from_string("Combination") == MergeMode::Combination);
  CHECK_THROWS_AS(rerank_from_string("bogus"), ConfigError);
}

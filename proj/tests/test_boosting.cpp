#include "oracles.hpp"

#include "acf/boosting.hpp"

#include <doctest.h>

using namespace acf;

namespace {

struct Problem
{
  FeatureMatrix x;
  std::vector<std::int8_t> labels;
  std::vector<double> weights;
};

Problem random_problem(std::mt19937_64 &rng, std::size_t n, std::size_t f)
{
  Problem p{FeatureMatrix(n, f), {}, {}};
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, f - 1);
  const std::size_t a = pick(rng), b = pick(rng);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = p.x.row(i);
    for (auto &v : row)
      v = g(rng);
    const bool pos = (row[a] > 0.2f) != (row[b] < -0.3f) || g(rng) > 1.8f;
    p.labels.push_back(pos ? 1 : -1);
    p.weights.push_back(w(rng));
  }
  double s = 0;
  for (double v : p.weights)
    s += v;
  for (double &v : p.weights)
    v /= s;
  return p;
}

} // namespace

TEST_CASE("quantization edges split bins exactly")
{
  std::mt19937_64 rng(1);
  const auto p = random_problem(rng, 120, 5);
  const auto q = quantize_features(p.x, 32);
  CHECK(q.bins == 32);
  for (std::size_t f = 0; f < q.features; ++f)
    for (std::size_t i = 0; i < q.samples; ++i) {
      const int c = q.code(f, i);
      CHECK(c == quantize_value(q, f, p.x(i, f)));
      for (int t = 1; t < q.bins; ++t)
        CHECK((p.x(i, f) < q.edge(f, t)) == (c < t));
    }
}

TEST_CASE("constant features never split")
{
  FeatureMatrix x(10, 1);
  for (auto &v : x.data)
    v = 0.5f;
  const auto q = quantize_features(x, 16);
  for (int t = 1; t < 16; ++t)
    CHECK(std::isinf(q.edge(0, t)));
}

TEST_CASE("greedy tree matches brute-force node searches")
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_problem(rng, 60 + 14 * trial, 3 + trial);
    const auto q = quantize_features(p.x, 64);
    const auto tt = train_depth2_tree(q, p.labels, p.weights, SplitSearch::Greedy);
    const auto [rf, rt] = oracle::best_root_stump(q, p.labels, p.weights);
    CHECK(tt.tree.nodes[0].feature == rf);
    CHECK(tt.binThresholds[0] == rt);
    std::vector<bool> left(q.samples), right(q.samples);
    for (std::size_t i = 0; i < q.samples; ++i) {
      left[i] = q.code(rf, i) < rt;
      right[i] = !left[i];
    }
    const double expected = oracle::best_stump_error(q, p.labels, p.weights, left) +
                            oracle::best_stump_error(q, p.labels, p.weights, right);
    CHECK(tt.weightedError == doctest::Approx(expected).epsilon(1e-12));
    CHECK(oracle::tree_error(tt.tree, p.x, p.labels, p.weights) == doctest::Approx(tt.weightedError).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive tree reaches the depth-two optimum")
{
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_problem(rng, 40 + 20 * trial, 4);
    const auto q = quantize_features(p.x, 12);
    const auto tt = train_depth2_tree(q, p.labels, p.weights, SplitSearch::Exhaustive);
    CHECK(tt.weightedError == doctest::Approx(oracle::best_depth2_error(q, p.labels, p.weights)).epsilon(1e-12));
    CHECK(oracle::tree_error(tt.tree, p.x, p.labels, p.weights) == doctest::Approx(tt.weightedError).epsilon(1e-12));
    const auto greedy = train_depth2_tree(q, p.labels, p.weights, SplitSearch::Greedy);
    CHECK(tt.weightedError <= greedy.weightedError + 1e-15);
  }
}

TEST_CASE("tree learner rejects bad weights")
{
  std::mt19937_64 rng(2);
  auto p = random_problem(rng, 20, 2);
  const auto q = quantize_features(p.x, 8);
  auto w = p.weights;
  w[3] = -1.0;
  CHECK_THROWS_AS(train_depth2_tree(q, p.labels, w, SplitSearch::Greedy), ValidationError);
  std::vector<double> zero(p.weights.size(), 0.0);
  CHECK_THROWS_AS(train_depth2_tree(q, p.labels, zero, SplitSearch::Greedy), ValidationError);
}

TEST_CASE("pure subsets become constant leaves")
{
  FeatureMatrix x(6, 1);
  const float vals[] = {0, 1, 2, 3, 4, 5};
  for (int i = 0; i < 6; ++i)
    x.row(i)[0] = vals[i];
  std::vector<std::int8_t> labels{-1, -1, -1, 1, 1, 1};
  std::vector<double> w(6, 1.0 / 6);
  const auto q = quantize_features(x, 16);
  const auto tt = train_depth2_tree(q, labels, w);
  CHECK(tt.weightedError == 0.0);
  CHECK(oracle::tree_error(tt.tree, x, labels, w) == 0.0);
}

TEST_CASE("alpha is clamped")
{
  CHECK(adaboost_alpha(0.25) == doctest::Approx(0.5 * std::log(3.0)));
  CHECK(std::isfinite(adaboost_alpha(0.0)));
  CHECK(adaboost_alpha(0.0) == doctest::Approx(0.5 * std::log((1 - 1e-6) / 1e-6)));
  CHECK(adaboost_alpha(0.6) > 0.0);
}

TEST_CASE("boosting lowers the loss on a separable problem")
{
  std::mt19937_64 rng(3);
  const int window = 16;
  ChannelConfig cc;
  SoftCascadeModel proto;
  proto.windowSize = window;
  proto.channelConfig = cc;
  const std::size_t nf = proto.feature_count();
  std::normal_distribution<float> g(0.0f, 1.0f);
  FeatureMatrix pos(150, nf), neg(300, nf);
  for (auto &v : pos.data)
    v = g(rng);
  for (auto &v : neg.data)
    v = g(rng);
  for (std::size_t i = 0; i < pos.rows; ++i) {
    pos.row(i)[5] += 2.0f;
    pos.row(i)[40] -= 1.5f;
  }
  TrainConfig tc;
  tc.numTrees = 40;
  tc.bootstrapSchedule.clear();
  TrainingLog log;
  const auto m = adaboost_train_features(pos, neg, tc, cc, window, nullptr, {}, &log);
  REQUIRE(log.rounds.size() == 40);
  for (std::size_t t = 0; t < log.rounds.size(); ++t) {
    CHECK(log.rounds[t].weightedError < 0.5);
    if (t > 0)
      CHECK(log.rounds[t].logLoss < log.rounds[t - 1].logLoss);
  }
  CHECK(m.size() == 40);
  CHECK_NOTHROW(m.validate());
  for (std::size_t i = 0; i < pos.rows; ++i)
    CHECK(evaluate_cascade(m, std::span<const float>(pos.row(i))).passed);
}

TEST_CASE("q = 0 calibration keeps every positive")
{
  std::mt19937_64 rng(5);
  ChannelConfig cc;
  const int window = 16;
  std::vector<std::vector<float>> samples;
  FeatureMatrix pos(50, 160);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto &v : pos.data)
    v = u(rng);
  for (std::size_t i = 0; i < pos.rows; ++i)
    samples.emplace_back(pos.row(i).begin(), pos.row(i).end());
  auto m = oracle::random_cascade(cc, window, 30, samples, rng);
  m.stageThresholds = calibrate_soft_cascade(m, pos, 0.0);
  for (std::size_t i = 0; i < pos.rows; ++i) {
    const auto cum = cumulative_scores(m, pos.row(i));
    for (std::size_t t = 0; t < cum.size(); ++t)
      CHECK(cum[t] >= m.stageThresholds[t]);
    CHECK(evaluate_cascade(m, std::span<const float>(pos.row(i))).passed);
  }
  // The minimum positive trajectory sits 1e-6 above each threshold.
  for (std::size_t t = 0; t < m.size(); ++t) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pos.rows; ++i)
      lo = std::min(lo, cumulative_scores(m, pos.row(i))[t]);
    CHECK(m.stageThresholds[t] == doctest::Approx(lo - 1e-6).epsilon(1e-12));
  }
}

TEST_CASE("cascade modes agree on the first violation")
{
  std::mt19937_64 rng(6);
  ChannelConfig cc;
  FeatureMatrix x(80, 160);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto &v : x.data)
    v = u(rng);
  std::vector<std::vector<float>> samples;
  for (std::size_t i = 0; i < x.rows; ++i)
    samples.emplace_back(x.row(i).begin(), x.row(i).end());
  auto m = oracle::random_cascade(cc, 16, 25, samples, rng);
  FeatureMatrix half(40, 160);
  std::copy(x.data.begin(), x.data.begin() + 40 * 160, half.data.begin());
  m.stageThresholds = calibrate_soft_cascade(m, half, 0.3);
  int rejected = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto early = evaluate_cascade(m, std::span<const float>(x.row(i)), CascadeMode::EarlyExit);
    const auto full = evaluate_cascade(m, std::span<const float>(x.row(i)), CascadeMode::FullTrajectory);
    const auto off = evaluate_cascade(m, std::span<const float>(x.row(i)), CascadeMode::Disabled);
    CHECK(early.passed == full.passed);
    CHECK(early.rejectedAtStage == full.rejectedAtStage);
    CHECK(full.treesEvaluated == 25);
    CHECK(off.passed);
    CHECK(full.score == off.score);
    if (!early.passed) {
      ++rejected;
      CHECK(early.treesEvaluated == early.rejectedAtStage + 1);
    } else {
      CHECK(early.score == off.score);
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("in-context window features equal a crop with margin")
{
  std::mt19937_64 rng(12);
  const Image img = oracle::textured_image(160, 140, rng);
  ChannelConfig cc;
  const auto direct = window_features_in_context(img, Box{40, 32, 80, 80}, cc, 80, 2);
  const auto ref = oracle::window_features_by_crop(img, 10, 8, 20, cc, 2);
  REQUIRE(direct.size() == ref.size());
  REQUIRE(direct.size() == 4000);
  double worst = 0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    worst = std::max(worst, static_cast<double>(std::abs(direct[i] - ref[i])));
  CHECK(worst <= 1e-6);

  const auto stack = window_stack_in_context(img, Box{0, 0, 40, 40}, cc, 80, 2);
  CHECK(stack.width == 20);
  CHECK(stack.height == 20);
  CHECK(stack.sourceWidth == 80);
}

TEST_CASE("window features resize to the model window")
{
  std::mt19937_64 rng(14);
  const Image img = oracle::textured_image(40, 40, rng);
  CHECK(window_features(img, ChannelConfig{}, 80).size() == 4000);
}

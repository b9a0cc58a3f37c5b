#include "acf/boosting.hpp"
#include "acf/detector.hpp"
#include "acf/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace acf {

void SoftCascadeModel::validate() const
{
  channelConfig.validate(windowSize);
  if (weights.size() != trees.size() || stageThresholds.size() != trees.size())
    throw ConfigError("model: trees, weights and thresholds differ in length");
  for (double a : weights)
    if (!(a > 0.0))
      throw ConfigError("model: tree weights must be positive");
  const auto nf = feature_count();
  for (const auto &t : trees)
    for (const auto &n : t.nodes)
      if (n.feature >= nf)
        throw ConfigError("model: feature index outside the feature pool");
}

void TrainConfig::validate() const
{
  if (numTrees < 1)
    throw ConfigError("numTrees must be positive");
  if (thresholdQuantization < 2 || thresholdQuantization > 256)
    throw ConfigError("thresholdQuantization must be in [2, 256]");
  for (std::size_t i = 0; i < bootstrapSchedule.size(); ++i) {
    if (bootstrapSchedule[i] < 1 || bootstrapSchedule[i] >= numTrees)
      throw ConfigError("bootstrapSchedule entries must lie in [1, numTrees)");
    if (i > 0 && bootstrapSchedule[i] <= bootstrapSchedule[i - 1])
      throw ConfigError("bootstrapSchedule must be strictly increasing");
  }
  if (negativesPerRound < 0 || initialNegatives < 0 || maxNegativesPerImage < 1)
    throw ConfigError("negative sample counts must be non-negative");
  if (!(rejectionQuantile >= 0.0 && rejectionQuantile < 1.0))
    throw ConfigError("rejectionQuantile must be in [0,1)");
  if (threads < 1)
    throw ConfigError("threads must be >= 1");
}

void FeatureMatrix::append(std::span<const float> sample)
{
  if (rows == 0 && cols == 0)
    cols = sample.size();
  if (sample.size() != cols)
    throw ValidationError("feature vector length mismatch");
  data.insert(data.end(), sample.begin(), sample.end());
  ++rows;
}

// ---------------------------------------------------------------------------
// Quantization

float QuantizedFeatures::edge(std::size_t f, int t) const
{
  if (t >= bins)
    return std::numeric_limits<float>::infinity();
  if (t <= 0)
    return -std::numeric_limits<float>::infinity();
  return edges[f * static_cast<std::size_t>(bins - 1) + static_cast<std::size_t>(t - 1)];
}

int quantize_value(const QuantizedFeatures &q, std::size_t f, float v)
{
  const float *e = q.edges.data() + f * static_cast<std::size_t>(q.bins - 1);
  // Edges are non-decreasing; the bin is the count of edges <= v.
  return static_cast<int>(std::upper_bound(e, e + (q.bins - 1), v) - e);
}

QuantizedFeatures quantize_features(const FeatureMatrix &samples, int bins)
{
  if (bins < 2 || bins > 256)
    throw ConfigError("quantization needs between 2 and 256 bins");
  QuantizedFeatures q;
  q.bins = bins;
  q.samples = samples.rows;
  q.features = samples.cols;
  q.codes.resize(q.samples * q.features);
  q.edges.resize(q.features * static_cast<std::size_t>(bins - 1));

  const std::size_t ne = static_cast<std::size_t>(bins - 1);
  for (std::size_t f = 0; f < q.features; ++f) {
    float lo = std::numeric_limits<float>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < q.samples; ++i) {
      const float v = samples(i, f);
      if (!std::isfinite(v))
        throw ValidationError("quantize_features: non-finite feature value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    float *e = q.edges.data() + f * ne;
    if (!(hi > lo)) {
      std::fill(e, e + ne, std::numeric_limits<float>::infinity());
    } else {
      const double width = (static_cast<double>(hi) - lo) / bins;
      for (std::size_t t = 1; t <= ne; ++t)
        e[t - 1] = static_cast<float>(lo + width * static_cast<double>(t));
    }
    std::uint8_t *codes = q.codes.data() + f * q.samples;
    for (std::size_t i = 0; i < q.samples; ++i)
      codes[i] = static_cast<std::uint8_t>(quantize_value(q, f, samples(i, f)));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Depth-2 trees

namespace {

constexpr std::uint8_t kNoSide = 255;

struct Stump
{
  double error = std::numeric_limits<double>::infinity();
  std::uint32_t feature = 0;
  int threshold = 0;
  float left = -1.0f, right = -1.0f;
  bool degenerate = false;
};

struct SideTotals
{
  double pos = 0.0, neg = 0.0;
};

template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn &&fn)
{
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (chunks == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t step = (n + chunks - 1) / chunks;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t b = c * step, e = std::min(n, b + step);
    pool.emplace_back([&, b, e, c] { fn(b, e, c); });
  }
  for (auto &t : pool)
    t.join();
}

/// Best stump per side (side[i] in [0, numSides) or kNoSide) over all
/// features and thresholds t in [1, bins). Ties keep the lowest feature, then
/// the lowest threshold.
std::vector<Stump> search_stumps(const QuantizedFeatures &q, std::span<const std::int8_t> labels,
                                 std::span<const double> weights, std::span<const std::uint8_t> side, int numSides,
                                 int threads)
{
  const std::size_t n = q.samples;
  const int bins = q.bins;
  std::vector<std::vector<Stump>> partial(static_cast<std::size_t>(std::max(1, threads)),
                                          std::vector<Stump>(static_cast<std::size_t>(numSides)));
  std::vector<SideTotals> totals(static_cast<std::size_t>(numSides));
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = side.empty() ? std::uint8_t{0} : side[i];
    if (s == kNoSide)
      continue;
    (labels[i] > 0 ? totals[s].pos : totals[s].neg) += weights[i];
  }

  parallel_chunks(q.features, threads, [&](std::size_t fb, std::size_t fe, std::size_t chunk) {
    auto &best = partial[chunk];
    std::vector<double> hist(static_cast<std::size_t>(numSides * bins * 2));
    for (std::size_t f = fb; f < fe; ++f) {
      std::fill(hist.begin(), hist.end(), 0.0);
      const std::uint8_t *codes = q.codes.data() + f * n;
      for (std::size_t i = 0; i < n; ++i) {
        const auto s = side.empty() ? std::uint8_t{0} : side[i];
        if (s == kNoSide)
          continue;
        hist[(static_cast<std::size_t>(s) * bins + codes[i]) * 2 + (labels[i] > 0 ? 1 : 0)] += weights[i];
      }
      for (int s = 0; s < numSides; ++s) {
        const double *h = hist.data() + static_cast<std::size_t>(s) * bins * 2;
        const auto &tot = totals[static_cast<std::size_t>(s)];
        auto &b = best[static_cast<std::size_t>(s)];
        double lp = 0.0, ln = 0.0;
        for (int t = 1; t < bins; ++t) {
          ln += h[2 * (t - 1)];
          lp += h[2 * (t - 1) + 1];
          const double rp = tot.pos - lp, rn = tot.neg - ln;
          const double err = std::min(lp, ln) + std::min(rp, rn);
          if (err < b.error) {
            b.error = err;
            b.feature = static_cast<std::uint32_t>(f);
            b.threshold = t;
            b.left = lp > ln ? 1.0f : -1.0f;
            b.right = rp > rn ? 1.0f : -1.0f;
          }
        }
      }
    }
  });

  std::vector<Stump> best(static_cast<std::size_t>(numSides));
  for (const auto &p : partial)
    for (int s = 0; s < numSides; ++s)
      if (p[static_cast<std::size_t>(s)].error < best[static_cast<std::size_t>(s)].error)
        best[static_cast<std::size_t>(s)] = p[static_cast<std::size_t>(s)];

  for (int s = 0; s < numSides; ++s) {
    const auto &tot = totals[static_cast<std::size_t>(s)];
    if (tot.pos <= 0.0 || tot.neg <= 0.0) {
      // Pure or empty subset: constant output, split kept at the extreme.
      Stump d;
      d.degenerate = true;
      d.error = 0.0;
      d.feature = 0;
      d.threshold = bins;
      const float label = tot.pos > tot.neg ? 1.0f : -1.0f;
      d.left = d.right = label;
      best[static_cast<std::size_t>(s)] = d;
    }
  }
  return best;
}

TrainedTree assemble(const QuantizedFeatures &q, const Stump &root, const Stump &left, const Stump &right)
{
  TrainedTree out;
  out.tree.nodes[0] = {root.feature, q.edge(root.feature, root.threshold)};
  out.tree.nodes[1] = {left.feature, q.edge(left.feature, left.threshold)};
  out.tree.nodes[2] = {right.feature, q.edge(right.feature, right.threshold)};
  out.tree.leaves = {left.left, left.right, right.left, right.right};
  out.binThresholds = {root.threshold, left.threshold, right.threshold};
  out.weightedError = left.error + right.error;
  return out;
}

void fill_empty_side(Stump &child, const Stump &root, bool isLeft, const SideTotals &tot)
{
  if (tot.pos <= 0.0 && tot.neg <= 0.0) {
    const float label = isLeft ? root.left : root.right;
    child.left = child.right = label;
  }
}

} // namespace

TrainedTree train_depth2_tree(const QuantizedFeatures &q, std::span<const std::int8_t> labels,
                              std::span<const double> weights, SplitSearch search, int threads)
{
  if (labels.size() != q.samples || weights.size() != q.samples)
    throw ValidationError("train_depth2_tree: label/weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw ValidationError("train_depth2_tree: negative weight");
    total += w;
  }
  if (!(total > 0.0))
    throw ValidationError("train_depth2_tree: weights sum to zero");

  std::vector<std::uint8_t> side(q.samples);
  auto split_sides = [&](const Stump &root) {
    const std::uint8_t *codes = q.codes.data() + static_cast<std::size_t>(root.feature) * q.samples;
    for (std::size_t i = 0; i < q.samples; ++i)
      side[i] = codes[i] < root.threshold ? 0 : 1;
  };
  auto side_totals = [&](int s) {
    SideTotals t;
    for (std::size_t i = 0; i < q.samples; ++i)
      if (side[i] == s)
        (labels[i] > 0 ? t.pos : t.neg) += weights[i];
    return t;
  };

  if (search == SplitSearch::Greedy) {
    const Stump root = search_stumps(q, labels, weights, {}, 1, threads)[0];
    split_sides(root);
    auto children = search_stumps(q, labels, weights, side, 2, threads);
    fill_empty_side(children[0], root, true, side_totals(0));
    fill_empty_side(children[1], root, false, side_totals(1));
    return assemble(q, root, children[0], children[1]);
  }

  // Exhaustive: every root split, children optimized independently.
  Stump bestRoot;
  std::vector<Stump> bestChildren;
  double bestErr = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < q.features; ++f)
    for (int t = 1; t < q.bins; ++t) {
      Stump root;
      root.feature = static_cast<std::uint32_t>(f);
      root.threshold = t;
      split_sides(root);
      auto children = search_stumps(q, labels, weights, side, 2, threads);
      const double err = children[0].error + children[1].error;
      if (err < bestErr) {
        bestErr = err;
        bestRoot = root;
        bestChildren = std::move(children);
      }
    }
  // Root leaf labels only matter for empty children.
  split_sides(bestRoot);
  const auto lt = side_totals(0), rt = side_totals(1);
  bestRoot.left = lt.pos > lt.neg ? 1.0f : -1.0f;
  bestRoot.right = rt.pos > rt.neg ? 1.0f : -1.0f;
  fill_empty_side(bestChildren[0], bestRoot, true, lt);
  fill_empty_side(bestChildren[1], bestRoot, false, rt);
  return assemble(q, bestRoot, bestChildren[0], bestChildren[1]);
}

double adaboost_alpha(double weightedError)
{
  const double e = std::clamp(weightedError, 1e-6, 0.5 - 1e-6);
  return 0.5 * std::log((1.0 - e) / e);
}

std::vector<double> cumulative_scores(const SoftCascadeModel &model, std::span<const float> features)
{
  std::vector<double> out(model.trees.size());
  double s = 0.0;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    s += model.weights[t] * (model.trees[t].evaluate([&](std::uint32_t f) { return features[f]; }) > 0 ? 1.0 : -1.0);
    out[t] = s;
  }
  return out;
}

std::vector<double> calibrate_soft_cascade(const SoftCascadeModel &model, const FeatureMatrix &positives, double q)
{
  if (positives.rows == 0)
    throw ValidationError("calibrate_soft_cascade: no calibration positives");
  if (!(q >= 0.0 && q < 1.0))
    throw ConfigError("calibrate_soft_cascade: quantile must be in [0,1)");
  const std::size_t n = positives.rows, nt = model.trees.size();
  std::vector<double> scores(n * nt);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = cumulative_scores(model, positives.row(i));
    std::copy(c.begin(), c.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * nt));
  }
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(n - 1)));
  std::vector<double> thresholds(nt), col(n);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < n; ++i)
      col[i] = scores[i * nt + t];
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(k), col.end());
    thresholds[t] = col[k] - 1e-6;
  }
  return thresholds;
}

std::vector<float> window_features(const Image &window, const ChannelConfig &config, int windowSize)
{
  const Image sized = resample_bilinear(window, windowSize, windowSize);
  return compute_channels(sized, config).flatten();
}

ChannelStack window_stack_in_context(const Image &image, const Box &box, const ChannelConfig &config,
                                     int windowSize, int marginCells)
{
  config.validate(windowSize);
  validate_image(image);
  if (!(box.w > 0 && box.h > 0) || marginCells < 0)
    throw ValidationError("window box must have positive size and a non-negative margin");
  const int m = marginCells * config.shrink;
  const int n = windowSize + 2 * m;
  const double sx = windowSize / box.w, sy = windowSize / box.h;

  // Source coordinate of each output column/row, as resampling the whole
  // image by (sx, sy) would place it.
  auto axis = [](double origin, double scale, int count, int limit) {
    std::vector<std::pair<int, float>> taps(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
      const double s = std::clamp(origin + (j + 0.5) / scale - 0.5, 0.0, static_cast<double>(limit - 1));
      const int i0 = std::min(static_cast<int>(s), limit - 1);
      taps[static_cast<std::size_t>(j)] = {i0, static_cast<float>(s - i0)};
    }
    return taps;
  };
  const auto tx = axis(box.x - m / sx, sx, n, image.width());
  const auto ty = axis(box.y - m / sy, sy, n, image.height());

  Image ctx(n, n);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y) {
      const auto [y0, fy] = ty[static_cast<std::size_t>(y)];
      const int y1 = std::min(y0 + 1, image.height() - 1);
      for (int x = 0; x < n; ++x) {
        const auto [x0, fx] = tx[static_cast<std::size_t>(x)];
        const int x1 = std::min(x0 + 1, image.width() - 1);
        const auto &p = image.planes[c];
        const float top = p(y0, x0) + fx * (p(y0, x1) - p(y0, x0));
        const float bot = p(y1, x0) + fx * (p(y1, x1) - p(y1, x0));
        ctx.planes[c](y, x) = std::clamp(top + fy * (bot - top), 0.0f, 1.0f);
      }
    }

  ChannelStack full = compute_channels(ctx, config);
  const int g = windowSize / config.shrink;
  ChannelStack out = full;
  out.width = out.height = g;
  out.sourceWidth = out.sourceHeight = windowSize;
  for (std::size_t c = 0; c < full.channels.size(); ++c)
    out.channels[c] = full.channels[c].block(marginCells, marginCells, g, g);
  return out;
}

std::vector<float> window_features_in_context(const Image &image, const Box &box, const ChannelConfig &config,
                                              int windowSize, int marginCells)
{
  return window_stack_in_context(image, box, config, windowSize, marginCells).flatten();
}

// ---------------------------------------------------------------------------
// AdaBoost

namespace {

double log_sum_exp(std::span<const double> v)
{
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - m);
  return m + std::log(s);
}

} // namespace

SoftCascadeModel adaboost_train_features(const FeatureMatrix &positives, FeatureMatrix negatives,
                                         const TrainConfig &cfg, const ChannelConfig &channelConfig, int windowSize,
                                         const NegativeSource *negativeSource, const MiningScanner &scanner,
                                         TrainingLog *log)
{
  cfg.validate();
  channelConfig.validate(windowSize);
  if (positives.rows == 0 || negatives.rows == 0)
    throw ValidationError("adaboost: need at least one positive and one negative");
  if (positives.cols != negatives.cols)
    throw ValidationError("adaboost: positive and negative feature lengths differ");

  SoftCascadeModel model;
  model.windowSize = windowSize;
  model.channelConfig = channelConfig;
  if (positives.cols != model.feature_count())
    throw ValidationError("adaboost: feature length does not match the channel configuration");

  std::vector<double> margin(positives.rows + negatives.rows, 0.0);
  std::vector<std::int8_t> labels(margin.size());
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives.rows), std::int8_t{1});
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(positives.rows), labels.end(), std::int8_t{-1});

  FeatureMatrix all(0, positives.cols);
  all.data = positives.data;
  all.data.insert(all.data.end(), negatives.data.begin(), negatives.data.end());
  all.rows = positives.rows + negatives.rows;

  QuantizedFeatures q = quantize_features(all, cfg.thresholdQuantization);
  std::vector<double> logw(margin.size()), weights(margin.size());
  std::vector<std::int8_t> h(margin.size());
  std::mt19937_64 rng(cfg.rngSeed);
  std::size_t nextMining = 0;

  for (int t = 0; t < cfg.numTrees; ++t) {
    if (nextMining < cfg.bootstrapSchedule.size() && t == cfg.bootstrapSchedule[nextMining]) {
      ++nextMining;
      if (negativeSource && scanner && negativeSource->count > 0 && cfg.negativesPerRound > 0) {
        model.stageThresholds = calibrate_soft_cascade(model, positives, cfg.rejectionQuantile);
        std::vector<std::size_t> order(negativeSource->count);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t mined = 0;
        for (std::size_t idx : order) {
          if (mined >= static_cast<std::size_t>(cfg.negativesPerRound))
            break;
          const auto want = std::min<std::size_t>(static_cast<std::size_t>(cfg.maxNegativesPerImage),
                                                  static_cast<std::size_t>(cfg.negativesPerRound) - mined);
          for (auto &fv : scanner(model, idx, want, rng())) {
            const auto r = evaluate_cascade(model, std::span<const float>(fv), CascadeMode::Disabled);
            all.append(fv);
            margin.push_back(r.score);
            labels.push_back(-1);
            ++mined;
          }
        }
        if (log)
          log->events.push_back("round " + std::to_string(t) + ": mined " + std::to_string(mined) +
                                " hard negatives");
        if (mined == 0) {
          if (log)
            log->events.push_back("round " + std::to_string(t) + ": no false positives found, continuing");
        } else {
          logw.resize(margin.size());
          weights.resize(margin.size());
          h.resize(margin.size());
          q = quantize_features(all, cfg.thresholdQuantization);
        }
      }
    }

    const std::size_t n = margin.size();
    const auto np = static_cast<double>(positives.rows), nn = static_cast<double>(n - positives.rows);
    const double logPos = -std::log(2.0 * np), logNeg = -std::log(2.0 * nn);
    for (std::size_t i = 0; i < n; ++i)
      logw[i] = (labels[i] > 0 ? logPos : logNeg) - labels[i] * margin[i];
    const double lz = log_sum_exp(logw);
    for (std::size_t i = 0; i < n; ++i)
      weights[i] = std::exp(logw[i] - lz);

    const TrainedTree tt = train_depth2_tree(q, labels, weights, cfg.splitSearch, cfg.threads);
    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int child = q.code(tt.tree.nodes[0].feature, i) < tt.binThresholds[0] ? 1 : 2;
      const int bin = q.code(tt.tree.nodes[static_cast<std::size_t>(child)].feature, i);
      const int leaf = 2 * (child - 1) + (bin < tt.binThresholds[static_cast<std::size_t>(child)] ? 0 : 1);
      h[i] = tt.tree.leaves[static_cast<std::size_t>(leaf)] > 0 ? 1 : -1;
      if (h[i] != labels[i])
        eps += weights[i];
    }
    const double alpha = adaboost_alpha(eps);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += alpha * h[i];
      logw[i] = (labels[i] > 0 ? logPos : logNeg) - labels[i] * margin[i];
      if ((margin[i] > 0 ? 1 : -1) != labels[i])
        ++wrong;
    }
    model.trees.push_back(tt.tree);
    model.weights.push_back(alpha);
    if (log)
      log->rounds.push_back({eps, alpha, log_sum_exp(logw), static_cast<double>(wrong) / static_cast<double>(n)});
  }

  model.stageThresholds = calibrate_soft_cascade(model, positives, cfg.rejectionQuantile);
  model.scoreRange = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < positives.rows; ++i) {
    model.scoreRange.min = std::min(model.scoreRange.min, margin[i]);
    model.scoreRange.max = std::max(model.scoreRange.max, margin[i]);
  }
  if (log) {
    log->positives = positives.rows;
    log->negatives = margin.size() - positives.rows;
  }
  return model;
}

SoftCascadeModel adaboost_train(const std::vector<Image> &positiveWindows, const NegativeSource &negativeSource,
                                const TrainConfig &cfg, const ChannelConfig &channelConfig, int windowSize,
                                TrainingLog *log)
{
  cfg.validate();
  channelConfig.validate(windowSize);
  if (positiveWindows.empty())
    throw ValidationError("adaboost_train: no positive windows");
  if (negativeSource.count == 0)
    throw ValidationError("adaboost_train: no negative images");

  FeatureMatrix pos;
  for (const auto &w : positiveWindows)
    pos.append(window_features(w, channelConfig, windowSize));

  // Random crops of at least the window size as the initial negative pool.
  FeatureMatrix neg;
  std::mt19937_64 rng(cfg.rngSeed ^ 0x5bd1e995ULL);
  const std::size_t perImage =
    std::max<std::size_t>(1, (static_cast<std::size_t>(cfg.initialNegatives) + negativeSource.count - 1) /
                               negativeSource.count);
  for (std::size_t i = 0; i < negativeSource.count && neg.rows < static_cast<std::size_t>(cfg.initialNegatives); ++i) {
    const Image img = negativeSource.load(i);
    const int maxSide = std::min(img.width(), img.height());
    if (maxSide < windowSize)
      continue;
    for (std::size_t k = 0; k < perImage && neg.rows < static_cast<std::size_t>(cfg.initialNegatives); ++k) {
      const int side = std::uniform_int_distribution<int>(windowSize, maxSide)(rng);
      const int x = std::uniform_int_distribution<int>(0, img.width() - side)(rng);
      const int y = std::uniform_int_distribution<int>(0, img.height() - side)(rng);
      neg.append(window_features(crop(img, x, y, side, side), channelConfig, windowSize));
    }
  }
  if (neg.rows == 0)
    throw ValidationError("adaboost_train: negative images smaller than the window");

  PyramidConfig pyramid;
  MiningScanner scanner = [&](const SoftCascadeModel &m, std::size_t index, std::size_t maxWindows,
                              std::uint64_t seed) {
    return mine_false_positives(negativeSource.load(index), m, pyramid, maxWindows, seed);
  };
  return adaboost_train_features(pos, std::move(neg), cfg, channelConfig, windowSize, &negativeSource, scanner, log);
}

} // namespace acf

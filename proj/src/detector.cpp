#include "acf/detector.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace acf {

SoftCascadeModel mirror_model(const SoftCascadeModel &model)
{
  model.validate();
  const auto desc = channel_descriptors(model.channelConfig);
  const int nb = model.channelConfig.numOrientationBins;
  const std::uint32_t g = static_cast<std::uint32_t>(model.grid());
  const std::uint32_t cells = g * g;

  std::vector<std::uint32_t> channelMap(desc.size());
  for (std::size_t c = 0; c < desc.size(); ++c) {
    channelMap[c] = static_cast<std::uint32_t>(c);
    if (desc[c].kind == ChannelKind::Orientation)
      channelMap[c] = static_cast<std::uint32_t>(c - static_cast<std::size_t>(desc[c].index) +
                                                 static_cast<std::size_t>((nb - desc[c].index) % nb));
  }

  SoftCascadeModel out = model;
  for (auto &tree : out.trees)
    for (auto &node : tree.nodes) {
      const std::uint32_t c = node.feature / cells, rem = node.feature % cells;
      const std::uint32_t y = rem / g, x = rem % g;
      node.feature = channelMap[c] * cells + y * g + (g - 1 - x);
    }
  return out;
}

void DetectStats::merge(const DetectStats &o)
{
  windows += o.windows;
  treesEvaluated += o.treesEvaluated;
  rejectedWindows += o.rejectedWindows;
  treesInRejected += o.treesInRejected;
  passedWindows += o.passedWindows;
  if (rejectionsPerStage.size() < o.rejectionsPerStage.size())
    rejectionsPerStage.resize(o.rejectionsPerStage.size(), 0);
  for (std::size_t i = 0; i < o.rejectionsPerStage.size(); ++i)
    rejectionsPerStage[i] += o.rejectionsPerStage[i];
}

std::vector<float> window_features_at(const ChannelStack &stack, int x0, int y0, int grid)
{
  if (x0 < 0 || y0 < 0 || x0 + grid > stack.width || y0 + grid > stack.height)
    throw ValidationError("window outside the channel stack");
  std::vector<float> out;
  out.reserve(stack.channels.size() * static_cast<std::size_t>(grid * grid));
  for (const auto &p : stack.channels)
    for (int y = 0; y < grid; ++y)
      for (int x = 0; x < grid; ++x)
        out.push_back(p(y0 + y, x0 + x));
  return out;
}

namespace {

/// Calls fn(levelIndex, x0, y0, result) for every scanned window.
template <typename Fn>
void scan_level(const PyramidLevel &level, const SoftCascadeModel &model, const ScanOptions &options,
                DetectStats *stats, Fn &&fn)
{
  const int g = model.grid();
  const auto &stack = level.stack;
  if (stack.width < g || stack.height < g || model.trees.empty())
    return;
  if (stack.channel_count() != model.channelConfig.channel_count())
    throw ValidationError("pyramid channels do not match the model configuration");

  const std::size_t nf = model.feature_count();
  const std::size_t cells = static_cast<std::size_t>(g * g);
  std::vector<const float *> table(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t c = f / cells, rem = f % cells;
    const int y = static_cast<int>(rem / static_cast<std::size_t>(g)), x = static_cast<int>(rem % static_cast<std::size_t>(g));
    table[f] = stack.channels[c].data() + static_cast<std::ptrdiff_t>(y) * stack.width + x;
  }

  if (stats && stats->rejectionsPerStage.size() < model.trees.size())
    stats->rejectionsPerStage.resize(model.trees.size(), 0);

  const int stride = std::max(1, options.stride);
  for (int y0 = 0; y0 + g <= stack.height; y0 += stride)
    for (int x0 = 0; x0 + g <= stack.width; x0 += stride) {
      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(y0) * stack.width + x0;
      const auto r = evaluate_cascade(model, [&](std::uint32_t f) { return table[f][offset]; }, options.mode);
      if (stats) {
        ++stats->windows;
        stats->treesEvaluated += static_cast<std::uint64_t>(r.treesEvaluated);
        if (r.passed) {
          ++stats->passedWindows;
        } else {
          ++stats->rejectedWindows;
          stats->treesInRejected += static_cast<std::uint64_t>(r.treesEvaluated);
          ++stats->rejectionsPerStage[static_cast<std::size_t>(r.rejectedAtStage)];
        }
      }
      fn(x0, y0, r);
    }
}

} // namespace

std::vector<Detection> detect_single_view(const std::vector<PyramidLevel> &pyramid, const SoftCascadeModel &model,
                                          const ScanOptions &options, DetectStats *stats)
{
  std::vector<Detection> out;
  const int shrink = model.channelConfig.shrink;
  for (const auto &level : pyramid)
    scan_level(level, model, options, stats, [&](int x0, int y0, const CascadeResult &r) {
      if (!r.passed || r.score < options.scoreThreshold)
        return;
      Detection d;
      d.x = x0 * shrink / level.scaleX;
      d.y = y0 * shrink / level.scaleY;
      d.w = model.windowSize / level.scaleX;
      d.h = model.windowSize / level.scaleY;
      d.score = r.score;
      d.viewId = model.viewId;
      d.scale = level.scale;
      d.votes = r.positiveVotes;
      out.push_back(d);
    });
  return out;
}

std::vector<std::vector<float>> mine_false_positives(const Image &image, const SoftCascadeModel &model,
                                                     const PyramidConfig &pyramid, std::size_t maxWindows,
                                                     std::uint64_t seed)
{
  return mine_false_positives(build_pyramid(image, model.channelConfig, pyramid, model.windowSize), model,
                              maxWindows, seed);
}

std::vector<std::vector<float>> mine_false_positives(const std::vector<PyramidLevel> &levels,
                                                     const SoftCascadeModel &model, std::size_t maxWindows,
                                                     std::uint64_t seed)
{
  struct Hit
  {
    std::size_t level;
    int x, y;
  };
  std::vector<Hit> hits;
  for (std::size_t l = 0; l < levels.size(); ++l)
    scan_level(levels[l], model, ScanOptions{}, nullptr, [&](int x0, int y0, const CascadeResult &r) {
      if (r.passed)
        hits.push_back({l, x0, y0});
    });
  std::mt19937_64 rng(seed);
  std::shuffle(hits.begin(), hits.end(), rng);
  if (hits.size() > maxWindows)
    hits.resize(maxWindows);
  std::vector<std::vector<float>> out;
  out.reserve(hits.size());
  for (const auto &h : hits)
    out.push_back(window_features_at(levels[h.level].stack, h.x, h.y, model.grid()));
  return out;
}

MultiViewModel MultiViewModel::from_trained(std::vector<SoftCascadeModel> trained, int totalViews)
{
  const int needed = (totalViews + 1) / 2;
  if (totalViews < 1 || static_cast<int>(trained.size()) != needed)
    throw ConfigError("multi-view model needs ceil(views/2) trained views");
  MultiViewModel m;
  for (int i = 0; i < totalViews; ++i) {
    ViewEntry e;
    if (i < needed) {
      e.model = std::move(trained[static_cast<std::size_t>(i)]);
    } else {
      e.mirrorOf = totalViews - 1 - i;
    }
    m.views.push_back(std::move(e));
  }
  m.adjustments.assign(static_cast<std::size_t>(totalViews), identity_adjustment());
  m.finalize();
  return m;
}

std::vector<ScoreRange> MultiViewModel::score_ranges() const
{
  std::vector<ScoreRange> r;
  for (const auto &v : views)
    r.push_back(v.model.scoreRange);
  return r;
}

void MultiViewModel::finalize()
{
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto &v = views[i];
    if (v.mirrorOf >= 0) {
      if (static_cast<std::size_t>(v.mirrorOf) >= views.size() || views[static_cast<std::size_t>(v.mirrorOf)].mirrorOf >= 0)
        throw ConfigError("mirrored view must reference a trained view");
      v.model = mirror_model(views[static_cast<std::size_t>(v.mirrorOf)].model);
    }
    v.model.viewId = static_cast<int>(i);
  }
  if (adjustments.size() < views.size())
    adjustments.resize(views.size(), identity_adjustment());
  validate();
}

void MultiViewModel::validate() const
{
  if (views.empty())
    throw ConfigError("multi-view model has no views");
  for (const auto &v : views) {
    v.model.validate();
    if (v.model.windowSize != views.front().model.windowSize ||
        !(v.model.channelConfig == views.front().model.channelConfig))
      throw ConfigError("all views must share window size and channel configuration");
  }
  if (adjustments.size() != views.size())
    throw ConfigError("one adjustment per view required");
  for (const auto &a : adjustments)
    a.validate();
  fusion.validate();
  pyramid.validate();
  if (stride < 1)
    throw ConfigError("stride must be >= 1");
}

std::vector<Detection> detect_raw(const Image &image, const MultiViewModel &model, CascadeMode mode,
                                  DetectStats *stats)
{
  validate_image(image);
  const auto levels = build_pyramid(image, model.channel_config(), model.pyramid, model.window());
  std::vector<Detection> all;
  ScanOptions opts;
  opts.stride = model.stride;
  opts.mode = mode;
  for (const auto &v : model.views) {
    auto d = detect_single_view(levels, v.model, opts, stats);
    all.insert(all.end(), d.begin(), d.end());
  }
  return all;
}

std::vector<Detection> detect_multiview(const Image &image, const MultiViewModel &model,
                                        std::vector<std::string> *events)
{
  const auto ranges = model.score_ranges();
  return fuse_detections(detect_raw(image, model), model.fusion, ranges, model.adjustments, events);
}

} // namespace acf

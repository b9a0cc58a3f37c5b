#include "acf/postprocess.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace acf {

bool detection_before(const Detection &a, const Detection &b)
{
  if (a.score != b.score)
    return a.score > b.score;
  return std::tie(a.viewId, a.scale, a.x, a.y, a.w, a.h) < std::tie(b.viewId, b.scale, b.x, b.y, b.w, b.h);
}

void sort_detections(std::vector<Detection> &dets)
{
  std::sort(dets.begin(), dets.end(), detection_before);
}

std::string to_string(RerankMode m)
{
  switch (m) {
  case RerankMode::None: return "None";
  case RerankMode::Normalization: return "Normalization";
  case RerankMode::NewScore: return "NewScore";
  case RerankMode::OverlapRerank: return "OverlapRerank";
  case RerankMode::SumOfOverlap: return "SumOfOverlap";
  }
  return "?";
}

std::string to_string(MergeMode m)
{
  return m == MergeMode::GreedyNMS ? "GreedyNMS" : "Combination";
}

RerankMode rerank_from_string(const std::string &s)
{
  for (auto m : {RerankMode::None, RerankMode::Normalization, RerankMode::NewScore, RerankMode::OverlapRerank,
                 RerankMode::SumOfOverlap})
    if (to_string(m) == s)
      return m;
  throw ConfigError("unknown re-ranking mode: " + s);
}

MergeMode merge_from_string(const std::string &s)
{
  if (s == "GreedyNMS")
    return MergeMode::GreedyNMS;
  if (s == "Combination")
    return MergeMode::Combination;
  throw ConfigError("unknown merging mode: " + s);
}

void FusionConfig::validate() const
{
  auto ok = [](double t) { return t > 0.0 && t <= 1.0; };
  if (!ok(rerankOverlapThreshold) || !ok(mergeOverlapThreshold))
    throw ConfigError("fusion overlap thresholds must be in (0,1]");
}

void AdjustmentParams::validate() const
{
  if (!(sw > 0.0 && sh > 0.0))
    throw ConfigError("adjustment scale factors must be positive");
}

AdjustmentParams AdjustmentParams::inverse() const
{
  return {-dx / sw, -dy / sh, 1.0 / sw, 1.0 / sh};
}

AdjustmentParams identity_adjustment()
{
  return {};
}

std::vector<Detection> rerank_normalization(std::vector<Detection> dets, std::span<const ScoreRange> viewRanges,
                                            std::vector<std::string> *events)
{
  std::vector<bool> reported(viewRanges.size(), false);
  for (auto &d : dets) {
    if (d.viewId < 0 || static_cast<std::size_t>(d.viewId) >= viewRanges.size())
      throw ValidationError("detection view has no recorded score range");
    const auto &r = viewRanges[static_cast<std::size_t>(d.viewId)];
    if (!(r.max > r.min)) {
      d.score = 1.0;
      if (events && !reported[static_cast<std::size_t>(d.viewId)]) {
        events->push_back("view " + std::to_string(d.viewId) + ": degenerate score range, scores set to 1");
        reported[static_cast<std::size_t>(d.viewId)] = true;
      }
      continue;
    }
    d.score = std::clamp((d.score - r.min) / (r.max - r.min), 0.0, 1.0);
  }
  return dets;
}

std::vector<Detection> rerank_new_score(std::vector<Detection> dets)
{
  for (auto &d : dets)
    d.score = d.votes;
  return dets;
}

std::vector<int> overlap_counts(std::span<const Detection> dets, double threshold)
{
  std::vector<int> counts(dets.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i)
    for (std::size_t j = i + 1; j < dets.size(); ++j)
      if (jaccard(dets[i].box(), dets[j].box()) >= threshold) {
        ++counts[i];
        ++counts[j];
      }
  return counts;
}

std::vector<Detection> rerank_by_overlap_counts(std::vector<Detection> dets, std::span<const int> counts)
{
  if (counts.size() != dets.size())
    throw ValidationError("overlap count per detection required");
  const std::size_t n = dets.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b])
      return counts[a] < counts[b];
    return detection_before(dets[b], dets[a]);
  });
  std::vector<double> factor(n);
  for (std::size_t r = 0; r < n; ++r)
    factor[order[r]] = static_cast<double>(r + 1) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    dets[i].score *= factor[i];
  return dets;
}

std::vector<Detection> rerank_overlap(std::vector<Detection> dets, double threshold)
{
  const auto counts = overlap_counts(dets, threshold);
  return rerank_by_overlap_counts(std::move(dets), counts);
}

std::vector<Detection> rerank_sum_overlap(std::vector<Detection> dets, double threshold)
{
  std::vector<double> sums(dets.size(), 0.0);
  for (std::size_t i = 0; i < dets.size(); ++i)
    for (std::size_t j = 0; j < dets.size(); ++j)
      if (i == j || jaccard(dets[i].box(), dets[j].box()) >= threshold)
        sums[i] += dets[j].score;
  for (std::size_t i = 0; i < dets.size(); ++i)
    dets[i].score = sums[i];
  return dets;
}

std::vector<Detection> nms_greedy(std::vector<Detection> dets, double threshold)
{
  sort_detections(dets);
  std::vector<Detection> kept;
  for (const auto &d : dets) {
    bool suppressed = false;
    for (const auto &k : kept)
      if (min_area_overlap(d.box(), k.box()) >= threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed)
      kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> merge_combination(std::vector<Detection> dets, double threshold,
                                         CombinationWeighting weighting)
{
  sort_detections(dets);
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    bool joined = false;
    for (std::size_t c = 0; c < seeds.size(); ++c)
      if (min_area_overlap(dets[i].box(), dets[seeds[c]].box()) >= threshold) {
        clusters[c].push_back(i);
        joined = true;
        break;
      }
    if (!joined) {
      seeds.push_back(i);
      clusters.push_back({i});
    }
  }

  std::vector<Detection> out;
  out.reserve(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto &members = clusters[c];
    bool weighted = weighting == CombinationWeighting::ScoreWeighted;
    for (auto m : members)
      weighted = weighted && dets[m].score > 0.0;
    double sw = 0.0, x = 0.0, y = 0.0, w = 0.0, h = 0.0;
    for (auto m : members) {
      const double wt = weighted ? dets[m].score : 1.0;
      sw += wt;
      x += wt * dets[m].x;
      y += wt * dets[m].y;
      w += wt * dets[m].w;
      h += wt * dets[m].h;
    }
    Detection d = dets[seeds[c]];
    d.x = x / sw;
    d.y = y / sw;
    d.w = w / sw;
    d.h = h / sw;
    out.push_back(d);
  }
  return out;
}

Detection adjust_detection(const Detection &d, const AdjustmentParams &p)
{
  Detection o = d;
  const double cx = d.x + d.w / 2 + p.dx * d.w;
  const double cy = d.y + d.h / 2 + p.dy * d.h;
  o.w = p.sw * d.w;
  o.h = p.sh * d.h;
  o.x = cx - o.w / 2;
  o.y = cy - o.h / 2;
  return o;
}

std::vector<Detection> adjust_detections(std::vector<Detection> dets, std::span<const AdjustmentParams> perView)
{
  for (auto &d : dets) {
    if (d.viewId < 0 || static_cast<std::size_t>(d.viewId) >= perView.size())
      continue;
    d = adjust_detection(d, perView[static_cast<std::size_t>(d.viewId)]);
  }
  return dets;
}

std::vector<Detection> apply_rerank(std::vector<Detection> dets, const FusionConfig &config,
                                    std::span<const ScoreRange> viewRanges, std::vector<std::string> *events)
{
  switch (config.rerank) {
  case RerankMode::None: return dets;
  case RerankMode::Normalization: return rerank_normalization(std::move(dets), viewRanges, events);
  case RerankMode::NewScore: return rerank_new_score(std::move(dets));
  case RerankMode::OverlapRerank: return rerank_overlap(std::move(dets), config.rerankOverlapThreshold);
  case RerankMode::SumOfOverlap: return rerank_sum_overlap(std::move(dets), config.rerankOverlapThreshold);
  }
  return dets;
}

std::vector<Detection> apply_merge(std::vector<Detection> dets, const FusionConfig &config)
{
  if (config.merging == MergeMode::GreedyNMS)
    return nms_greedy(std::move(dets), config.mergeOverlapThreshold);
  return merge_combination(std::move(dets), config.mergeOverlapThreshold, config.combinationWeighting);
}

std::vector<Detection> fuse_detections(std::vector<Detection> raw, const FusionConfig &config,
                                       std::span<const ScoreRange> viewRanges,
                                       std::span<const AdjustmentParams> adjustments, std::vector<std::string> *events)
{
  config.validate();
  auto dets = apply_rerank(std::move(raw), config, viewRanges, events);
  if (config.scoreThreshold)
    std::erase_if(dets, [&](const Detection &d) { return d.score < *config.scoreThreshold; });
  dets = apply_merge(std::move(dets), config);
  dets = adjust_detections(std::move(dets), adjustments);
  sort_detections(dets);
  return dets;
}

} // namespace acf

#include "acf/config.hpp"
#include "acf/geometry.hpp"
#include "acf/harness.hpp"
#include "acf/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace acf;

namespace {

SynthConfig small_set(std::uint64_t seed, int images)
{
  SynthConfig c;
  c.rngSeed = seed;
  c.imageCount = images;
  c.imageWidth = 200;
  c.imageHeight = 160;
  c.minSize = 60;
  c.maxSize = 80;
  c.minTargets = 1;
  c.maxTargets = 2;
  return c;
}

} // namespace

TEST_CASE("synthetic images are deterministic")
{
  const auto c = small_set(5, 3);
  std::vector<GroundTruth> a, b;
  const Image x = synth_image(c, 2, &a);
  const Image y = synth_image(c, 2, &b);
  for (int ch = 0; ch < 3; ++ch)
    CHECK((x[ch] == y[ch]).all());
  CHECK(a == b);
  auto other = c;
  other.rngSeed = 6;
  CHECK(!(synth_image(other, 2)[0] == x[0]).all());
}

TEST_CASE("targets are placed inside the image without overlap")
{
  const auto c = small_set(9, 12);
  for (int i = 0; i < c.imageCount; ++i) {
    std::vector<GroundTruth> boxes;
    const Image img = synth_image(c, static_cast<std::size_t>(i), &boxes);
    CHECK(img.width() == 200);
    CHECK(static_cast<int>(boxes.size()) >= c.minTargets);
    CHECK(static_cast<int>(boxes.size()) <= c.maxTargets);
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      const auto &g = boxes[k].box;
      CHECK(g.x >= 0);
      CHECK(g.right() <= 200);
      CHECK(g.bottom() <= 160);
      CHECK(g.w == g.h);
      CHECK(boxes[k].yaw >= 0);
      CHECK(boxes[k].yaw < c.yawLevels);
      for (std::size_t j = k + 1; j < boxes.size(); ++j)
        CHECK(intersection_area(g, boxes[j].box) == 0.0);
    }
    CHECK(img[0].minCoeff() >= 0.0f);
    CHECK(img[0].maxCoeff() <= 1.0f);
  }
}

TEST_CASE("mirrored yaw levels render as exact mirrors")
{
  SynthRng rng(3);
  const auto p = random_target_params(rng);
  for (int levels : {6, 5}) {
    for (int v = 0; v < levels; ++v) {
      if (v == levels - 1 - v)
        continue;
      Plane aa, ab;
      const Image a = render_target(64, v, levels, p, &aa);
      const Image b = render_target(64, levels - 1 - v, levels, p, &ab);
      const Image fb = flip_horizontal(b);
      for (int c = 0; c < 3; ++c)
        CHECK((a[c] == fb[c]).all());
      CHECK((aa == flip_horizontal(ab)).all());
    }
  }
  const Image l0 = render_target(64, 0, 6, p);
  const Image l2 = render_target(64, 2, 6, p);
  CHECK(!(l0[0] == l2[0]).all());
  CHECK(!(l0[0] == flip_horizontal(l0[0])).all());
}

TEST_CASE("rng draws stay in range")
{
  SynthRng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = r.integer(-2, 3);
    CHECK(k >= -2);
    CHECK(k <= 3);
  }
}

TEST_CASE("target-free sets have no boxes")
{
  auto c = small_set(1, 4);
  c.minTargets = c.maxTargets = 0;
  const auto d = synth_render(c);
  CHECK(d.annotations.box_count() == 0);
  CHECK(d.annotations.images.size() == 4);
  const auto src = synth_negative_source(c);
  CHECK(src.count == 4);
  CHECK((src.load(1)[0] == d.images[1][0]).all());
  CHECK_THROWS_AS(synth_negative_source(small_set(1, 4)), ConfigError);
}

TEST_CASE("generated datasets load back")
{
  const auto dir = std::filesystem::temp_directory_path() / "acf_synth_io";
  std::filesystem::remove_all(dir);
  const auto c = small_set(4, 3);
  const auto d = synth_generate(c, dir.string());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const auto back = load_dataset(dir.string());
  CHECK(back.ids == d.ids);
  CHECK(back.annotations == d.annotations);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK((back.images[i][1] == d.images[i][1]).all());
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_dataset((dir / "nothing").string()), IoError);
}

TEST_CASE("synth config validation")
{
  auto c = small_set(0, 1);
  c.maxTargets = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_set(0, 1);
  c.maxSize = 500;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_set(0, 1);
  c.yawLevels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("run config round-trips through json")
{
  auto c = RunConfig::desk_defaults();
  c.channels.preSmoothRadii = {1, 2};
  c.channels.pooling = PoolingMethod::Stochastic;
  c.channels.stochasticSeed = 99;
  c.fusion.scoreThreshold = std::nullopt;
  c.fusion.merging = MergeMode::Combination;
  c.eval.fppiPoints = {0.1, 1.0};
  c.train.splitSearch = SplitSearch::Exhaustive;
  c.positives.jitterCopies = 5;
  c.paths.model = "m.acf";
  CHECK(run_config_from_json(to_json(c)) == c);
  CHECK(run_config_from_json(nlohmann::json::object()) == RunConfig::desk_defaults());

  const auto path = (std::filesystem::temp_directory_path() / "acf_run_config.json").string();
  save_run_config(c, path);
  CHECK(load_run_config(path) == c);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_run_config(path), IoError);
}

TEST_CASE("run config rejects unknown keys and bad values")
{
  auto j = to_json(RunConfig::desk_defaults());
  j["channels"]["shrinkk"] = 4;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(RunConfig::desk_defaults());
  j["fusion"]["rerank"] = "Sideways";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(RunConfig::desk_defaults());
  j["views"] = 4;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j = to_json(RunConfig::desk_defaults());
  j["train"]["numTrees"] = "many";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
}

TEST_CASE("desk defaults describe the standard run")
{
  const auto c = RunConfig::desk_defaults();
  CHECK_NOTHROW(c.validate());
  CHECK(c.views == 6);
  CHECK(c.train.numTrees == 512);
  CHECK(c.negativeSet.imageCount == 500);
  CHECK(c.testSet.imageCount == 200);
  CHECK(c.trainSet.rngSeed == 0);
  CHECK(c.fusion.rerank == RerankMode::Normalization);
  CHECK(c.fusion.merging == MergeMode::GreedyNMS);
}

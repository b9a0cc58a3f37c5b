#include "acf/harness.hpp"

#include <doctest.h>

using namespace acf;

namespace {

RunConfig tiny_config()
{
  auto c = RunConfig::desk_defaults();
  c.views = 2;
  c.train.numTrees = 24;
  c.train.bootstrapSchedule = {8};
  c.train.initialNegatives = 300;
  c.train.negativesPerRound = 200;
  for (auto *s : {&c.trainSet, &c.testSet, &c.negativeSet}) {
    s->imageWidth = 192;
    s->imageHeight = 160;
    s->maxSize = 96;
    s->yawLevels = 2;
  }
  c.trainSet.imageCount = 20;
  c.trainSet.minTargets = 1;
  c.trainSet.maxTargets = 2;
  c.testSet.imageCount = 6;
  c.testSet.maxTargets = 2;
  c.negativeSet.imageCount = 6;
  return c;
}

} // namespace

TEST_CASE("view positives pool mirror yaws")
{
  const auto c = tiny_config();
  const auto d = synth_render(c.trainSet);
  std::size_t total = 0, yaw0 = 0;
  for (const auto &[id, boxes] : d.annotations.images)
    for (const auto &b : boxes) {
      ++total;
      yaw0 += b.yaw == 0;
    }
  CHECK(view_positives(d, 0, 2).size() == total);
  CHECK(view_positives(d, 0, 1).size() == total);
  const auto f = view_positive_features(d, 0, 2, c.channels, 80, c.positives, 1);
  CHECK(f.rows == total * (1 + static_cast<std::size_t>(c.positives.jitterCopies)));
  CHECK(f.cols == 4000);
  CHECK(yaw0 > 0);
}

TEST_CASE("negative windows come from cached pyramids")
{
  const auto c = tiny_config();
  const auto src = synth_negative_source(c.negativeSet);
  const auto pyr = negative_pyramids(src, c.channels, c.pyramid, 80, 2);
  CHECK(pyr.size() == 6);
  const auto w = random_negative_windows(pyr, 50, 20, 3);
  CHECK(w.rows == 50);
  CHECK(w.cols == 4000);
  const auto again = random_negative_windows(pyr, 50, 20, 3);
  CHECK(w.data == again.data);
}

TEST_CASE("tiny multi-view training runs end to end")
{
  const auto c = tiny_config();
  const auto train = synth_render(c.trainSet);
  const auto test = synth_render(c.testSet);
  std::vector<TrainingLog> logs;
  const auto model = train_multiview(train, synth_negative_source(c.negativeSet), c, &logs);
  REQUIRE(model.views.size() == 2);
  CHECK(model.views[1].mirrorOf == 0);
  CHECK(logs.size() == 1);
  CHECK(model.views[0].model.size() == 24);

  const auto raw1 = detect_dataset_raw(model, test, CascadeMode::EarlyExit, 1);
  const auto raw2 = detect_dataset_raw(model, test, CascadeMode::EarlyExit, 2);
  CHECK(raw1 == raw2);
  const auto report = evaluate_model(model, test, c.eval);
  CHECK(report.images == 6);
  CHECK(report.ap >= 0.0);
  CHECK(report.ap <= 1.0);

  const auto row = bench(model, test, 1);
  CHECK(row.images == 6);
  CHECK(row.stats.windows > 0);
  const auto j = to_json(row, 24);
  CHECK(j.contains("meanTreesPerRejectedWindow"));
}

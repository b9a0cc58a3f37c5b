// acf: command-line front end for training, detection, evaluation and reports.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 I/O error, 4 invalid input data or model.

#include "acf/config.hpp"
#include "acf/harness.hpp"
#include "acf/image_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kValidation = 4 };

acf::RunConfig load_config_or_defaults(const std::string &path)
{
  return path.empty() ? acf::RunConfig::desk_defaults() : acf::load_run_config(path);
}

acf::Dataset train_dataset(const acf::RunConfig &c)
{
  return c.paths.trainDir.empty() ? acf::synth_render(c.trainSet) : acf::load_dataset(c.paths.trainDir);
}

acf::Dataset test_dataset(const acf::RunConfig &c)
{
  return c.paths.testDir.empty() ? acf::synth_render(c.testSet) : acf::load_dataset(c.paths.testDir);
}

acf::NegativeSource negative_source(const acf::RunConfig &c)
{
  return c.paths.negativeDir.empty() ? acf::synth_negative_source(c.negativeSet)
                                     : acf::directory_negative_source(c.paths.negativeDir);
}

/// Images named on the command line; directories contribute their .ppm files.
acf::Dataset image_inputs(const std::vector<std::string> &inputs)
{
  std::vector<fs::path> files;
  for (const auto &in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> dir;
      for (const auto &e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".ppm")
          dir.push_back(e.path());
      std::sort(dir.begin(), dir.end());
      files.insert(files.end(), dir.begin(), dir.end());
    } else {
      files.emplace_back(in);
    }
  }
  acf::Dataset d;
  for (const auto &f : files) {
    d.ids.push_back(f.stem().string());
    d.images.push_back(acf::read_ppm(f.string()));
    d.annotations.images[d.ids.back()];
  }
  return d;
}

void write_json(const std::string &path, const json &j)
{
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw acf::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Aggregate channel features multi-view detector"};
  app.require_subcommand(1);

  std::string configPath, outPath, modelPath;
  int threads = 1;

  // synth
  auto *synth = app.add_subcommand("synth", "Render a synthetic dataset");
  std::string synthSet = "train";
  std::optional<std::uint64_t> synthSeed;
  std::optional<int> synthCount;
  synth->add_option("--config", configPath, "Run configuration (JSON)");
  synth->add_option("--set", synthSet, "Which configured set to render")
    ->check(CLI::IsMember({"train", "test", "negative"}));
  synth->add_option("--seed", synthSeed, "Override the RNG seed");
  synth->add_option("--count", synthCount, "Override the image count");
  synth->add_option("--out", outPath, "Output directory")->required();

  // train
  auto *train = app.add_subcommand("train", "Train a multi-view model");
  std::string trainDir, negativeDir, trainLog;
  std::optional<int> trees;
  train->add_option("--config", configPath, "Run configuration (JSON)");
  train->add_option("--train-dir", trainDir, "Annotated training dataset directory");
  train->add_option("--negative-dir", negativeDir, "Directory of target-free .ppm images");
  train->add_option("--trees", trees, "Override the number of trees");
  train->add_option("--threads", threads, "Split-search threads");
  train->add_option("--log", trainLog, "Write the per-round training log (JSON)");
  train->add_option("--out", outPath, "Model output path")->required();

  // detect
  auto *detect = app.add_subcommand("detect", "Detect objects in images");
  std::vector<std::string> images;
  std::optional<std::string> rerank, merge, threshold;
  std::optional<double> rerankOverlap, mergeOverlap;
  std::string renderDir;
  detect->add_option("--model", modelPath, "Model file")->required();
  detect->add_option("--images", images, "Image files (.ppm) or directories")->required();
  detect->add_option("--rerank", rerank, "None|Normalization|NewScore|OverlapRerank|SumOfOverlap");
  detect->add_option("--merge", merge, "GreedyNMS|Combination");
  detect->add_option("--rerank-overlap", rerankOverlap, "Re-ranking Jaccard threshold");
  detect->add_option("--merge-overlap", mergeOverlap, "Merging overlap threshold");
  detect->add_option("--threshold", threshold, "Score threshold after re-ranking, or 'none'");
  detect->add_option("--threads", threads, "Worker threads");
  detect->add_option("--render", renderDir, "Write images with drawn detections here");
  detect->add_option("--out", outPath, "Detections output (JSON lines)")->required();

  // eval
  auto *evalCmd = app.add_subcommand("eval", "Evaluate detections against annotations");
  std::string detectionsPath, annotationsPath;
  double jaccard = 0.5;
  std::vector<double> fppi{1.0};
  bool noEllipse = false;
  evalCmd->add_option("--detections", detectionsPath, "Detections (JSON lines)")->required();
  evalCmd->add_option("--annotations", annotationsPath, "Annotations (JSON lines)")->required();
  evalCmd->add_option("--jaccard", jaccard, "Matching threshold");
  evalCmd->add_option("--fppi", fppi, "FPPI readout points");
  evalCmd->add_flag("--no-ellipse", noEllipse, "Reject ellipse annotations instead of converting them");
  evalCmd->add_option("--out", outPath, "Report output (JSON); '-' for stdout");

  // channels
  auto *channels = app.add_subcommand("channels", "Dump the channel planes of an image");
  std::string imagePath;
  std::vector<int> radii;
  channels->add_option("--config", configPath, "Run configuration (JSON)");
  channels->add_option("--image", imagePath, "Input image (.ppm)")->required();
  channels->add_option("--radii", radii, "Override the pre-smoothing radii");
  channels->add_option("--out", outPath, "Output directory")->required();

  // bench
  auto *benchCmd = app.add_subcommand("bench", "Measure detection throughput");
  std::vector<int> threadCounts{1};
  benchCmd->add_option("--model", modelPath, "Model file")->required();
  benchCmd->add_option("--config", configPath, "Run configuration; its test set is used when --images is absent");
  benchCmd->add_option("--images", images, "Image files (.ppm) or directories");
  benchCmd->add_option("--threads", threadCounts, "Thread counts to report");
  benchCmd->add_option("--out", outPath, "Report output (JSON); '-' for stdout");

  // ablate
  auto *ablate = app.add_subcommand("ablate", "Re-ranking/merging and feature-design ablation report");
  int featureTrees = 0;
  bool extended = false;
  ablate->add_option("--config", configPath, "Run configuration (JSON)");
  ablate->add_option("--model", modelPath, "Use this model for the fusion rows instead of training one");
  ablate->add_option("--feature-trees", featureTrees, "Trees for the feature-variant models (0 = configured)");
  ablate->add_flag("--extended", extended, "Add channel-type and pooling variants");
  ablate->add_option("--out", outPath, "Report output (JSON); '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) {
      auto cfg = load_config_or_defaults(configPath);
      acf::SynthConfig s = synthSet == "train" ? cfg.trainSet : synthSet == "test" ? cfg.testSet : cfg.negativeSet;
      if (synthSeed)
        s.rngSeed = *synthSeed;
      if (synthCount)
        s.imageCount = *synthCount;
      const auto d = acf::synth_generate(s, outPath);
      std::cout << "wrote " << d.size() << " images, " << d.annotations.box_count() << " annotations to " << outPath
                << '\n';
    } else if (*train) {
      auto cfg = load_config_or_defaults(configPath);
      if (!trainDir.empty())
        cfg.paths.trainDir = trainDir;
      if (!negativeDir.empty())
        cfg.paths.negativeDir = negativeDir;
      if (trees) {
        cfg.train.numTrees = *trees;
        std::erase_if(cfg.train.bootstrapSchedule, [&](int b) { return b >= *trees; });
      }
      cfg.train.threads = threads;
      std::vector<acf::TrainingLog> logs;
      const auto model = acf::train_multiview(train_dataset(cfg), negative_source(cfg), cfg, &logs, &std::cerr);
      acf::save_model(model, outPath);
      if (!trainLog.empty()) {
        json j = json::array();
        for (const auto &l : logs)
          j.push_back(acf::to_json(l));
        write_json(trainLog, j);
      }
      std::cout << "saved " << model.views.size() << "-view model to " << outPath << '\n';
    } else if (*detect) {
      auto model = acf::load_model(modelPath);
      if (rerank)
        model.fusion.rerank = acf::rerank_from_string(*rerank);
      if (merge)
        model.fusion.merging = acf::merge_from_string(*merge);
      if (rerankOverlap)
        model.fusion.rerankOverlapThreshold = *rerankOverlap;
      if (mergeOverlap)
        model.fusion.mergeOverlapThreshold = *mergeOverlap;
      if (threshold) {
        if (*threshold == "none") {
          model.fusion.scoreThreshold = std::nullopt;
        } else {
          try {
            model.fusion.scoreThreshold = std::stod(*threshold);
          } catch (const std::exception &) {
            throw acf::ConfigError("--threshold expects a number or 'none'");
          }
        }
      }
      model.validate();
      const auto inputs = image_inputs(images);
      std::vector<std::string> events;
      const auto dets = acf::fuse_dataset(acf::detect_dataset_raw(model, inputs, acf::CascadeMode::EarlyExit, threads),
                                          model, model.fusion, &events);
      for (const auto &e : events)
        std::cerr << "note: " << e << '\n';
      acf::write_detections(outPath, dets);
      if (!renderDir.empty()) {
        fs::create_directories(renderDir);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          acf::Image img = inputs.images[i];
          for (const auto &d : dets.at(inputs.ids[i]))
            acf::draw_box(img, d.box(), 0.0f, 1.0f, 0.0f, 2);
          acf::write_ppm((fs::path(renderDir) / (inputs.ids[i] + ".ppm")).string(), img);
        }
      }
      std::size_t n = 0;
      for (const auto &[id, d] : dets)
        n += d.size();
      std::cout << n << " detections in " << inputs.size() << " images\n";
    } else if (*evalCmd) {
      acf::EvalConfig ec;
      ec.jaccardThreshold = jaccard;
      ec.fppiPoints = fppi;
      const auto report = acf::evaluate(acf::read_detections(detectionsPath),
                                        acf::read_annotations(annotationsPath, !noEllipse), ec);
      write_json(outPath, acf::to_json(report));
      std::cerr << "AP " << report.ap << '\n';
    } else if (*channels) {
      auto cfg = load_config_or_defaults(configPath);
      if (!radii.empty())
        cfg.channels.preSmoothRadii = radii;
      cfg.channels.validate();
      fs::create_directories(outPath);
      const auto stack = acf::compute_channels(acf::read_ppm(imagePath), cfg.channels);
      const auto files = acf::dump_channels(stack, outPath, fs::path(imagePath).stem().string());
      std::cout << "wrote " << files.size() << " channel images (" << stack.width << "x" << stack.height << ")\n";
    } else if (*benchCmd) {
      const auto model = acf::load_model(modelPath);
      const auto data = images.empty() ? test_dataset(load_config_or_defaults(configPath)) : image_inputs(images);
      json rows = json::array();
      for (int t : threadCounts)
        rows.push_back(acf::to_json(acf::bench(model, data, t), model.views.front().model.size()));
      rows.push_back(acf::to_json(acf::bench(model, data, 1, acf::CascadeMode::FullTrajectory),
                                  model.views.front().model.size()));
      write_json(outPath, {{"rows", rows}});
    } else if (*ablate) {
      auto cfg = load_config_or_defaults(configPath);
      acf::AblationOptions opts;
      opts.featureTrees = featureTrees;
      if (extended)
        opts.featureVariants = acf::AblationOptions::extended_feature_variants();
      std::optional<acf::MultiViewModel> model;
      if (!modelPath.empty())
        model = acf::load_model(modelPath);
      const auto report = acf::run_ablation(cfg, opts, train_dataset(cfg), negative_source(cfg), test_dataset(cfg),
                                            model ? &*model : nullptr, &std::cerr);
      write_json(outPath, report);
    }
  } catch (const acf::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const acf::IoError &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const acf::ValidationError &e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

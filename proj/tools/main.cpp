#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "commands.hpp"

using namespace foveate::cli;

int main(int argc, char** argv) {
  CLI::App app{"foveate: event-driven motion segmentation, proto-object saliency and gaze control"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--set", global.overrides, "override one key (key=value); repeatable");
  app.add_option("--seed", global.seed, "seed for every random stream of the run");
  app.add_option("--out", global.out_dir, "output directory")->capture_default_str();

  CharacterizeOptions characterize;
  auto* c = app.add_subcommand("characterize", "grating experiments with OMS activity statistics");
  c->add_option("--sweep", characterize.sweep, "extra kernel sweep on experiment 1: none, sigma, size")
      ->capture_default_str();

  SegmentOptions segment;
  auto* s = app.add_subcommand("segment", "OMS masks and suppression statistics of an event file");
  s->add_option("input", segment.input, "event file (.bin canonical or .csv)")->required();
  s->add_option("--csv-width", segment.csv_width, "sensor width for CSV input");
  s->add_option("--csv-height", segment.csv_height, "sensor height for CSV input");

  SaliencyOptions saliency;
  auto* sal = app.add_subcommand("saliency", "proto-object saliency maps and salient points");
  sal->add_option("input", saliency.input, "event file (.bin canonical or .csv)");
  sal->add_option("--fixture", saliency.fixture, "generated input instead of a file: circles");
  sal->add_option("--source", saliency.source, "raw events or OMS-filtered events: raw, oms");
  sal->add_option("--csv-width", saliency.csv_width, "sensor width for CSV input");
  sal->add_option("--csv-height", saliency.csv_height, "sensor height for CSV input");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "IoU, SSIM and detection accuracy over masked sequences");
  b->add_option("dataset", bench.dataset_root, "root of the converted dataset");
  b->add_flag("--self-check", bench.self_check, "score a synthetic self-annotated sequence");
  b->add_option("--csv-width", bench.csv_width, "sensor width for CSV streams");
  b->add_option("--csv-height", bench.csv_height, "sensor height for CSV streams");

  DemoOptions demo;
  auto* d = app.add_subcommand("demo", "closed-loop saccades on a simulated pan-tilt unit");
  d->add_option("--scene", demo.scene, "scene file (scene.* keys)")->check(CLI::ExistingFile);
  d->add_option("--iterations", demo.iterations, "loop iterations; 0 only echoes the configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests report success; every other parse failure is a usage error.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  int status = kExitFailure;
  try {
    RunContext ctx(name, global);
    if (name == "characterize") {
      status = cmd_characterize(ctx, characterize);
    } else if (name == "segment") {
      status = cmd_segment(ctx, segment);
    } else if (name == "saliency") {
      status = cmd_saliency(ctx, saliency);
    } else if (name == "bench") {
      status = cmd_bench(ctx, bench);
    } else {
      status = cmd_demo(ctx, demo);
    }
    if (status == kExitOk) ctx.write_manifest(status);
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kExitFailure;
  }
  return status;
}

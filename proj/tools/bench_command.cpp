#include <filesystem>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "foveate/bench.hpp"
#include "foveate/stimgen.hpp"

namespace foveate::cli {

namespace {

// Half a second of the eye+object grating annotated with the OMS stage's own output.
MaskedSequence self_check_sequence(const OmsConfig& oms, const SensorModel& sensor) {
  GratingScenario sc = make_characterization_suite().front().scenario;
  sc.duration = 0.5;
  return self_consistent_sequence(simulate_scenario(sc, sensor), oms, "self-check", "grating");
}

void write_windows_csv(std::ostream& os, std::span<const WindowScore> windows) {
  os << "dataset,sequence,t_us,iou,ssim,iou_closed,ssim_closed,P_x,P_y,hit\n";
  for (const WindowScore& w : windows) {
    os << w.dataset << ',' << w.sequence << ',' << w.t_us << ',' << format_number(w.iou) << ','
       << format_number(w.ssim) << ',' << format_number(w.iou_closed) << ','
       << format_number(w.ssim_closed) << ',' << w.saliency.x << ',' << w.saliency.y << ','
       << (w.hit ? 1 : 0) << '\n';
  }
}

}  // namespace

int cmd_bench(RunContext& ctx, const BenchOptions& opt) {
  const BenchConfig config = BenchConfig::from_config(ctx.config());
  const SensorModel sensor = SensorModel::from_config(ctx.config());
  ctx.reject_unknown();

  std::vector<MaskedSequence> sequences;
  std::vector<LoadFailure> failures;
  if (opt.self_check) {
    sequences.push_back(self_check_sequence(config.oms, sensor));
  }
  if (!opt.dataset_root.empty()) {
    if (!std::filesystem::is_directory(opt.dataset_root)) {
      std::cerr << "bench: dataset root '" << opt.dataset_root << "' not found.\n"
                << "Convert the recordings to the canonical layout first: one directory per\n"
                << "sequence under <root>/<sub-dataset>/, each holding events.bin (or\n"
                << "events.csv) and masks.txt with one 't_us mask.pgm' line per annotation.\n"
                << "Use --self-check to exercise the harness without a dataset.\n";
      return kExitUsage;
    }
    DatasetScan scan = scan_dataset(opt.dataset_root, {opt.csv_width, opt.csv_height});
    for (auto& s : scan.sequences) sequences.push_back(std::move(s));
    failures = std::move(scan.failures);
  }
  if (sequences.empty() && failures.empty()) {
    std::cerr << "bench: nothing to score; give a dataset root or --self-check\n";
    return kExitUsage;
  }

  KeyValueConfig resolved;
  config.to_config(resolved);
  resolved.set("bench.dataset_root", opt.dataset_root);
  resolved.set("bench.self_check", opt.self_check ? "on" : "off");
  if (opt.self_check) sensor.to_config(resolved);
  ctx.record(resolved);

  BenchReport report = run_benchmark(sequences, config);
  report.failures.insert(report.failures.begin(), failures.begin(), failures.end());
  for (const LoadFailure& f : report.failures) {
    std::cerr << "bench: skipped " << f.path << ": " << f.message << '\n';
  }
  {
    std::ofstream os(ctx.output("bench.csv"));
    write_bench_csv(os, report);
  }
  {
    std::ofstream os(ctx.output("bench.txt"));
    write_bench_table(os, report);
  }
  {
    std::ofstream os(ctx.output("windows.csv"));
    write_windows_csv(os, report.windows);
  }
  write_bench_table(std::cout, report);
  return kExitOk;
}

}  // namespace foveate::cli

// Acceptance checks, one line per criterion. Usage: acceptance [criterion] [dataset root]
// With no criterion every check runs. Exit status is 1 if any selected check fails, and
// kExitAllSkipped if every selected check was skipped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "foveate/bench.hpp"
#include "foveate/closed_loop.hpp"
#include "foveate/control.hpp"
#include "foveate/oms.hpp"
#include "foveate/proto.hpp"
#include "foveate/snn.hpp"
#include "foveate/stimgen.hpp"
#include "oracles.hpp"

using namespace foveate;

namespace {

// Seed shared by every stochastic stage so a run is reproducible end to end.
constexpr std::uint64_t kSeed = 7;

// Criterion tolerances and budgets.
constexpr double kCharacterizationBudgetS = 120.0;
constexpr double kSuppressionFloor = 0.70;
constexpr int kSuppressionMinSlices = 50;
constexpr double kSuppressionBudgetS = 30.0;
constexpr int kMetricInstances = 200;
constexpr double kSsimTolerance = 1e-9;
constexpr double kMetricBudgetS = 10.0;
constexpr int kConvInstances = 50;
constexpr double kConvTolerance = 1e-12;
constexpr double kConvBudgetS = 10.0;
constexpr double kControlFraction = 0.05;
constexpr double kControlBudgetS = 10.0;
constexpr double kConvergeRadiusPx = 8.0;
constexpr int kConvergeMaxSaccades = 3;
constexpr double kConvergeBudgetS = 60.0;
constexpr int kCirclesRequired = 4;
constexpr double kCirclesBudgetS = 60.0;
// Square-outline over line peak saliency, frozen from the first oracle-checked run.
constexpr double kFrozenSquareLineRatio = 8.7763;
constexpr double kFrozenRatioTolerance = 1e-3;
constexpr double kDatasetTolerancePp = 5.0;
constexpr double kPerceptionBudgetMs = 50.0;

// Matches SKIP_RETURN_CODE on the ctest registration.
constexpr int kExitAllSkipped = 77;

enum class Status { Pass, Fail, Skipped };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

SensorModel default_sensor() {
  SensorModel s;
  s.seed = kSeed;
  return s;
}

// 1. Eye-only has the highest MFR; density ratios split into the object-enhanced
// and failure bands.
Outcome characterization_ordering() {
  const auto t0 = Clock::now();
  const auto suite = make_characterization_suite();
  const auto rows = run_characterization(suite, OmsConfig{}, default_sensor());
  const double elapsed = seconds_since(t0);
  const CharacterizationFindings f = check_characterization(rows);

  std::ostringstream d;
  d << "MFR exp1/2/3 = " << fmt(rows[0].activity.mfr_mean) << "/" << fmt(rows[1].activity.mfr_mean)
    << "/" << fmt(rows[2].activity.mfr_mean) << " Hz; ratios";
  for (const auto& r : rows) {
    if (r.id == 2 || r.id == 3) continue;
    d << " " << r.id << ":" << fmt(r.density_ratio, 3);
  }
  d << "; eye-only highest " << (f.eye_only_highest_mfr ? "yes" : "no") << ", exps 1,4-9 >= "
    << kObjectEnhancedRatio << " " << (f.object_enhanced ? "yes" : "no") << ", exps 10-16 < "
    << kFailureRegimeRatio << " " << (f.failure_regime ? "yes" : "no");
  if (!f.ratio_violations.empty()) {
    d << ", out of band:";
    for (int id : f.ratio_violations) d << " " << id;
  }
  d << "; " << fmt(elapsed, 3) << " s";
  const bool ok = f.all() && f.missing.empty() && elapsed < kCharacterizationBudgetS;
  return {ok ? Status::Pass : Status::Fail, d.str()};
}

// 2. The OMS stage suppresses most events of pure egomotion.
Outcome eye_only_suppression() {
  const auto t0 = Clock::now();
  const NamedScenario eye = make_characterization_suite()[1];
  const CharacterizationRow row = characterize_scenario(eye, OmsConfig{}, default_sensor());
  const double elapsed = seconds_since(t0);
  const bool ok = row.suppression >= kSuppressionFloor && row.slices >= kSuppressionMinSlices &&
                  elapsed < kSuppressionBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          "mean suppression " + fmt(row.suppression) + " over " + std::to_string(row.slices) +
              " slices (need >= " + fmt(kSuppressionFloor) + " over >= " +
              std::to_string(kSuppressionMinSlices) + "); " + fmt(elapsed, 3) + " s"};
}

// 3. IoU, SSIM and detection accuracy against the pixel-loop oracles.
Outcome metric_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> density(0.0, 0.6);
  std::uniform_int_distribution<int> coord(0, 15);
  std::uniform_int_distribution<int> box(1, 12);
  const Geometry g{16, 16};
  int iou_bad = 0;
  int acc_bad = 0;
  double ssim_err = 0.0;
  for (int n = 0; n < kMetricInstances; ++n) {
    // Every tenth instance uses empty masks to cover the degenerate cases.
    const double p = n % 10 == 0 ? 0.0 : density(rng);
    const Mask a = oracle::random_mask(g, rng, p);
    const Mask b = oracle::random_mask(g, rng, density(rng));
    if (iou(a, b) != oracle::iou(a, b)) ++iou_bad;
    ssim_err = std::max(ssim_err, std::abs(ssim(a, b) - oracle::ssim(to_double(a), to_double(b))));

    const int box_size = box(rng);
    std::vector<PixelPoint> pts;
    std::vector<Mask> masks;
    int hits = 0;
    for (int k = 0; k < 5; ++k) {
      pts.push_back({coord(rng), coord(rng)});
      masks.push_back(oracle::random_mask(g, rng, p * 0.1));
      hits += oracle::box_hit(pts.back().x, pts.back().y, masks.back(), box_size) ? 1 : 0;
    }
    const auto acc = detection_accuracy(pts, masks, box_size);
    if (!acc || *acc != 100.0 * hits / 5.0) ++acc_bad;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = iou_bad == 0 && acc_bad == 0 && ssim_err <= kSsimTolerance &&
                  elapsed < kMetricBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(kMetricInstances) + " instances: IoU mismatches " +
              std::to_string(iou_bad) + ", accuracy mismatches " + std::to_string(acc_bad) +
              ", max SSIM error " + fmt(ssim_err, 3) + "; " + fmt(elapsed, 3) + " s"};
}

// 4. Pipeline convolutions against the brute-force loop.
Outcome convolution_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> gsize(1, 8);
  std::uniform_real_distribution<double> sigma(0.5, 4.0);
  std::uniform_real_distribution<double> radius(1.5, 8.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> extra(0, 24);
  double worst = 0.0;
  for (int n = 0; n < kConvInstances; ++n) {
    const GridD k = n % 2 == 0 ? gaussian_kernel({gsize(rng), sigma(rng)})
                               : von_mises_kernel({radius(rng), 0.2, angle(rng), 0});
    const Geometry g{k.width() + extra(rng), k.height() + extra(rng)};
    GridD in = oracle::random_grid(g, rng);
    // Event-like sparsity for half the inputs.
    if (n % 4 < 2) {
      for (double& v : in.values()) v = v < 0.85 ? 0.0 : 1.0;
    }
    const GridD ref = oracle::correlate(in, k);
    const GridD dense = conv2d_same(in, k);
    const GridD sparse = conv2d_same_sparse(in, k);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max({worst, std::abs(dense.values()[i] - ref.values()[i]),
                        std::abs(sparse.values()[i] - ref.values()[i])});
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst <= kConvTolerance && elapsed < kConvBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(kConvInstances) + " instances, max abs error " + fmt(worst, 3) + "; " +
              fmt(elapsed, 3) + " s"};
}

// 5. Decoder residual and the spiking controller's proportional envelope.
Outcome controller_fit() {
  const auto t0 = Clock::now();
  ControllerConfig c;
  c.seed = kSeed;
  const DecodedController d = solve_decoders(c);
  const double range = 2.0 * c.error_range;
  const double tol = kControlFraction * range;
  SpikingController ctl(d);
  double worst_spiking = 0.0;
  double worst_rate = 0.0;
  for (int k = 0; k <= 16; ++k) {
    const double e = -c.error_range + k * range / 16.0;
    const ControllerCommand cmd = ctl.step(c.center_x + e, c.center_y + e);
    worst_spiking = std::max({worst_spiking, std::abs(cmd.cmd_pan - c.gain_pan * e),
                              std::abs(cmd.cmd_tilt - c.gain_tilt * e)});
    worst_rate = std::max({worst_rate, std::abs(decode_rate(d.pan, c, e) - c.gain_pan * e),
                           std::abs(decode_rate(d.tilt, c, e) - c.gain_tilt * e)});
  }
  const double elapsed = seconds_since(t0);
  const double rmse = std::max(d.pan.rmse, d.tilt.rmse);
  const bool ok = rmse <= tol && worst_spiking <= tol && worst_rate <= tol &&
                  elapsed < kControlBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          "decoder RMSE " + fmt(rmse) + " px, worst rate-model error " + fmt(worst_rate) +
              " px, worst spiking error " + fmt(worst_spiking) + " px over 17 targets (limit " +
              fmt(tol) + " px); " + fmt(elapsed, 3) + " s"};
}

WorldScene square_scene(double dx, double dy) {
  WorldScene w;
  w.squares.push_back({w.width / 2.0 + dx, w.height / 2.0 + dy, 16.0, 0.2, 0.8, 10.0});
  return w;
}

struct Convergence {
  std::vector<double> distances;  // before the first iteration, then after each one
  int saccades_to_converge = -1;
  bool monotone = true;
};

Convergence converge(const WorldScene& scene, int iterations) {
  ClosedLoopConfig c;
  c.seed = kSeed;
  c.sensor.seed = kSeed;
  c.controller.seed = kSeed;
  c.iterations = iterations;
  const ClosedLoopResult r = run_closed_loop(scene, c);
  const double mid_x = (c.view.width - 1) / 2.0;
  const double mid_y = (c.view.height - 1) / 2.0;
  // Initial image position of the square: the view starts centred on the world.
  const double x0 = scene.squares.front().cx - 0.5 - (scene.width / 2.0 - c.view.width / 2.0);
  const double y0 = scene.squares.front().cy - 0.5 - (scene.height / 2.0 - c.view.height / 2.0);
  Convergence out;
  out.distances.push_back(std::hypot(x0 - mid_x, y0 - mid_y));
  int saccades = 0;
  for (const TrajectoryRow& row : r.rows) {
    const double before = out.distances.back();
    const double after = std::hypot(row.target_x - mid_x, row.target_y - mid_y);
    out.distances.push_back(after);
    if (row.saccade) ++saccades;
    if (before > kConvergeRadiusPx && after >= before) out.monotone = false;
    if (out.saccades_to_converge < 0 && after <= kConvergeRadiusPx) {
      out.saccades_to_converge = saccades;
    }
  }
  return out;
}

std::string describe(const Convergence& c) {
  std::string s;
  for (std::size_t i = 0; i < c.distances.size(); ++i) s += (i ? " -> " : "") + fmt(c.distances[i], 3);
  return s + " px";
}

// 6. A blinking square 36 px off-centre is foveated within three saccades.
Outcome closed_loop_convergence() {
  const auto t0 = Clock::now();
  const Convergence main = converge(square_scene(36.0, 0.0), kConvergeMaxSaccades);
  const double elapsed = seconds_since(t0);
  const bool ok = main.saccades_to_converge >= 0 &&
                  main.saccades_to_converge <= kConvergeMaxSaccades && main.monotone &&
                  elapsed < kConvergeBudgetS;
  std::string d = "square at (+36, 0): " + describe(main) + ", within " + fmt(kConvergeRadiusPx) +
                  " px after " +
                  (main.saccades_to_converge < 0 ? std::string("no") : std::to_string(main.saccades_to_converge)) +
                  " saccade(s), monotone " + (main.monotone ? "yes" : "no") + "; " + fmt(elapsed, 3) + " s";
  // Other placements are reported for context only.
  const std::pair<double, double> others[] = {{-36.0, 0.0}, {0.0, -36.0}, {0.0, 36.0}, {30.0, -25.0}};
  for (const auto& [dx, dy] : others) {
    const Convergence c = converge(square_scene(dx, dy), kConvergeMaxSaccades + 1);
    d += "\n    info: square at (" + fmt(dx) + ", " + fmt(dy) + "): " + describe(c);
  }
  return {ok ? Status::Pass : Status::Fail, d};
}

EventSlice whole_stream(const EventStream& stream) {
  EventSlice slice(stream.geometry, stream.events.front().t, stream.events.back().t + 1);
  for (const Event& e : stream.events) slice.add(e);
  return slice;
}

// 7. Saliency maxima sit on most of the calibration circles.
Outcome calibration_circles() {
  const auto t0 = Clock::now();
  const CirclePattern pattern = make_calibration_circles();
  const EventStream stream = simulate_circles(pattern, default_sensor());
  const ProtoConfig proto;
  const SaliencyMap map = saliency_from_events(proto, proto_input(whole_stream(stream)));
  int found = 0;
  std::string per_disk;
  for (const Disk& disk : pattern.disks) {
    const bool hit = has_local_maximum_near(map.values, disk.cx, disk.cy, proto.radius);
    found += hit ? 1 : 0;
    per_disk += hit ? '+' : '-';
  }
  // Control: equally sized probes on a 10 px grid that stay clear of every disk.
  int probes = 0;
  int false_hits = 0;
  for (double y = proto.radius; y <= pattern.geometry.height - proto.radius; y += 10.0) {
    for (double x = proto.radius; x <= pattern.geometry.width - proto.radius; x += 10.0) {
      const bool clear = std::all_of(pattern.disks.begin(), pattern.disks.end(), [&](const Disk& d) {
        return std::hypot(x - d.cx, y - d.cy) > d.radius + 2.0 * proto.radius;
      });
      if (!clear) continue;
      ++probes;
      false_hits += has_local_maximum_near(map.values, x, y, proto.radius) ? 1 : 0;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = found >= kCirclesRequired && elapsed < kCirclesBudgetS;
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(found) + " of 6 circles detected [" + per_disk + "] (need " +
              std::to_string(kCirclesRequired) + "); background control " +
              std::to_string(false_hits) + " of " + std::to_string(probes) + " probes; " +
              fmt(elapsed, 3) + " s"};
}

ProtoInput active_only(const Mask& on) {
  return {on, on, Mask(on.geometry(), 0)};
}

// 8. A closed contour beats an open line of the same pixel count.
Outcome proto_object_preference() {
  const Geometry g{128, 128};
  const int side = 16;
  const int x0 = 56;
  Mask square(g, 0);
  for (int i = 0; i < side; ++i) {
    square(x0 + i, x0) = 1;
    square(x0 + i, x0 + side - 1) = 1;
    square(x0, x0 + i) = 1;
    square(x0 + side - 1, x0 + i) = 1;
  }
  const auto mass = static_cast<int>(count_nonzero(square));
  Mask line(g, 0);
  for (int y = 0; y < mass; ++y) line(64, 64 - mass / 2 + y) = 1;
  const SaliencyMap s = saliency_from_events(ProtoConfig{}, active_only(square));
  const SaliencyMap l = saliency_from_events(ProtoConfig{}, active_only(line));
  const double ratio = l.max_value > 0.0 ? s.max_value / l.max_value : INFINITY;
  const bool frozen = std::abs(ratio / kFrozenSquareLineRatio - 1.0) <= kFrozenRatioTolerance;
  const bool ok = s.max_value > l.max_value && frozen;
  return {ok ? Status::Pass : Status::Fail,
          "peak square " + fmt(s.max_value, 6) + " vs line " + fmt(l.max_value, 6) + " (" +
              std::to_string(mass) + " px each), ratio " + fmt(ratio, 6) + ", frozen " +
              fmt(kFrozenSquareLineRatio, 6)};
}

struct Reference {
  double iou;
  double ssim;
  double accuracy;
};

// Published per-sub-dataset scores, in percent.
const std::map<std::string, Reference>& references() {
  static const std::map<std::string, Reference> refs{
      {"box", {64.79, 89.0, 73.4}},      {"fast", {69.85, 90.0, 70.9}},
      {"floor", {63.21, 94.0, 81.0}},    {"table", {73.59, 89.0, 68.1}},
      {"tabletop", {82.24, 96.0, 87.9}}, {"wall", {64.49, 84.0, 88.8}},
  };
  return refs;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// 9. Dataset reproduction, only when a converted copy is available.
Outcome dataset_reproduction(const std::string& root) {
  if (root.empty() || !std::filesystem::is_directory(root)) {
    return {Status::Skipped, "converted dataset not present (pass a root or set FOVEATE_EVIMO_ROOT)"};
  }
  const DatasetScan scan = scan_dataset(root);
  BenchReport report = run_benchmark(scan.sequences, BenchConfig{});
  bool ok = !report.datasets.empty();
  std::string d;
  for (const DatasetSummary& s : report.datasets) {
    const auto it = references().find(lower(s.dataset));
    d += "\n    " + s.dataset + ": IoU " + fmt(s.iou.mean) + " SSIM " + fmt(s.ssim.mean) +
         " accuracy " + fmt(s.accuracy.mean);
    if (it == references().end()) {
      d += " (no reference)";
      continue;
    }
    const Reference& r = it->second;
    const bool row_ok = std::abs(s.iou.mean - r.iou) <= kDatasetTolerancePp &&
                        std::abs(s.ssim.mean - r.ssim) <= kDatasetTolerancePp &&
                        std::abs(s.accuracy.mean - r.accuracy) <= kDatasetTolerancePp;
    d += " vs " + fmt(r.iou) + "/" + fmt(r.ssim) + "/" + fmt(r.accuracy) + (row_ok ? " ok" : " off");
    ok = ok && row_ok;
  }
  d = std::to_string(report.datasets.size()) + " sub-dataset(s), " +
      std::to_string(scan.failures.size() + report.failures.size()) + " load failure(s)" + d;
  return {ok ? Status::Pass : Status::Fail, d};
}

// 10. Perception latency of the closed loop, as logged by the demo.
Outcome perception_budget() {
  ClosedLoopConfig c;
  c.seed = kSeed;
  c.sensor.seed = kSeed;
  c.controller.seed = kSeed;
  const ClosedLoopResult r = run_closed_loop(square_scene(36.0, 0.0), c);
  const LatencySummary s = summarize_latency(r.rows);
  const double max_ms = s.perception.max_us / 1000.0;
  const bool ok = s.samples > 0 && max_ms <= kPerceptionBudgetMs;
  return {ok ? Status::Pass : Status::Fail,
          "OMS + saliency + argmax per 128x128 slice: mean " + fmt(s.perception.mean_us / 1000.0) +
              " ms, max " + fmt(max_ms) + " ms over " + std::to_string(s.samples) +
              " slices (budget " + fmt(kPerceptionBudgetMs) + " ms)"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  std::string dataset_root;
  if (argc > 2) {
    dataset_root = argv[2];
  } else if (const char* env = std::getenv("FOVEATE_EVIMO_ROOT")) {
    dataset_root = env;
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"characterization ordering", characterization_ordering},
      {"eye-only suppression", eye_only_suppression},
      {"metric oracles", metric_oracles},
      {"convolution oracle", convolution_oracle},
      {"controller fit", controller_fit},
      {"closed-loop convergence", closed_loop_convergence},
      {"calibration circles", calibration_circles},
      {"proto-object preference", proto_object_preference},
      {"dataset reproduction", [&] { return dataset_reproduction(dataset_root); }},
      {"perception latency", perception_budget},
  };
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "usage: acceptance [1-" << criteria.size() << "] [dataset root]\n";
    return 2;
  }

  bool failed = false;
  bool all_skipped = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIPPED";
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << tag << " - "
              << o.detail << std::endl;
    failed = failed || o.status == Status::Fail;
    all_skipped = all_skipped && o.status == Status::Skipped;
  }
  if (failed) return 1;
  return all_skipped ? kExitAllSkipped : 0;
}

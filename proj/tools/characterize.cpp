#include <cstdio>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "foveate/image_io.hpp"
#include "foveate/oms.hpp"

namespace foveate::cli {

namespace {

struct SweepPoint {
  std::string label;
  GaussianKernelSpec center;
  GaussianKernelSpec surround;
};

// Centre/surround sigma pairs at the configured kernel size.
std::vector<SweepPoint> sigma_sweep(int size) {
  const double pairs[][2] = {{1, 4}, {2, 4}, {3, 4}, {4, 4}, {2, 8}, {4, 8}};
  std::vector<SweepPoint> out;
  for (const auto& p : pairs) {
    char label[64];
    std::snprintf(label, sizeof label, "sigma_c=%g sigma_s=%g", p[0], p[1]);
    out.push_back({label, {size, p[0]}, {size, p[1]}});
  }
  return out;
}

// Kernel sizes at the configured sigmas.
std::vector<SweepPoint> size_sweep(double sigma_c, double sigma_s) {
  std::vector<SweepPoint> out;
  for (int size : {4, 8, 12, 16, 24}) {
    out.push_back({"size=" + std::to_string(size), {size, sigma_c}, {size, sigma_s}});
  }
  return out;
}

void write_summary(std::ostream& os, std::span<const CharacterizationRow> rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-22s %10s %10s %10s %10s %10s %12s\n", "exp", "name",
                "MFR (Hz)", "ISI (s)", "excluded", "ratio", "suppr.", "out/in ev");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-4d %-22s %10.4f %10.4f %10.3f %10.3f %10.3f %5llu/%-6llu\n",
                  r.id, r.name.c_str(), r.activity.mfr_mean, r.activity.isi_mean,
                  r.activity.excluded_fraction, r.density_ratio, r.suppression,
                  static_cast<unsigned long long>(r.output_events),
                  static_cast<unsigned long long>(r.input_events));
    os << buf;
  }
}

}  // namespace

int cmd_characterize(RunContext& ctx, const CharacterizeOptions& opt) {
  KeyValueConfig& cfg = ctx.config();
  const OmsConfig oms = OmsConfig::from_config(cfg);
  const SensorModel sensor = SensorModel::from_config(cfg);
  ctx.reject_unknown();
  if (opt.sweep != "none" && opt.sweep != "sigma" && opt.sweep != "size") {
    std::cerr << "characterize: --sweep must be none, sigma or size\n";
    return kExitUsage;
  }
  KeyValueConfig resolved;
  oms.to_config(resolved);
  sensor.to_config(resolved);
  resolved.set("characterize.sweep", opt.sweep);
  ctx.record(resolved);

  const auto suite = make_characterization_suite();
  std::vector<CharacterizationRow> rows;
  for (const NamedScenario& s : suite) {
    std::cerr << "experiment " << s.id << " (" << s.name << ")\n";
    rows.push_back(characterize_scenario(s, oms, sensor));
    char name[32];
    std::snprintf(name, sizeof name, "maps/exp%02d.pgm", s.id);
    save_mask_pgm(ctx.output(name), rows.back().last_mask);
  }
  {
    std::ofstream os(ctx.output("characterization.csv"));
    write_characterization_csv(os, rows);
  }

  const CharacterizationFindings f = check_characterization(rows);
  {
    std::ofstream os(ctx.output("summary.txt"));
    write_summary(os, rows);
    os << "\neye-only MFR above eye+object and object-only: "
       << (f.eye_only_highest_mfr ? "yes" : "no") << '\n'
       << "experiments 1, 4-9 density ratio >= " << kObjectEnhancedRatio << ": "
       << (f.object_enhanced ? "yes" : "no") << '\n'
       << "experiments 10-16 density ratio < " << kFailureRegimeRatio << ": "
       << (f.failure_regime ? "yes" : "no") << '\n';
    if (!f.ratio_violations.empty()) {
      os << "experiments outside their ratio band:";
      for (int id : f.ratio_violations) os << ' ' << id;
      os << '\n';
    }
  }
  write_summary(std::cout, rows);

  if (opt.sweep != "none") {
    const auto points = opt.sweep == "sigma" ? sigma_sweep(oms.center.size)
                                             : size_sweep(oms.center.sigma, oms.surround.sigma);
    const NamedScenario& base = suite.front();  // eye+object
    std::vector<CharacterizationRow> sweep_rows;
    for (const SweepPoint& p : points) {
      OmsConfig c = oms;
      c.center = p.center;
      c.surround = p.surround;
      c.validate();
      NamedScenario named = base;
      named.name = p.label;
      std::cerr << "sweep " << p.label << '\n';
      sweep_rows.push_back(characterize_scenario(named, c, sensor));
      sweep_rows.back().id = static_cast<int>(sweep_rows.size());
    }
    std::ofstream os(ctx.output("sweep_" + opt.sweep + ".csv"));
    write_characterization_csv(os, sweep_rows);
  }
  return kExitOk;
}

}  // namespace foveate::cli

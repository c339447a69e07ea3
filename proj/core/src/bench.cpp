#include "foveate/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#include "foveate/event_io.hpp"
#include "foveate/image_io.hpp"

namespace foveate {

double iou(const Mask& a, const Mask& b) {
  require_same_geometry(a.geometry(), b.geometry(), "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const bool x = av[i] != 0;
    const bool y = bv[i] != 0;
    inter += static_cast<std::size_t>(x && y);
    uni += static_cast<std::size_t>(x || y);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

const std::vector<double>& ssim_weights() {
  static const std::vector<double> w = [] {
    std::vector<double> k(static_cast<std::size_t>(kSsimWindow * kSsimWindow));
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int j = 0; j < kSsimWindow; ++j) {
      for (int i = 0; i < kSsimWindow; ++i) {
        const double dx = i - half;
        const double dy = j - half;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
        k[static_cast<std::size_t>(j * kSsimWindow + i)] = v;
        sum += v;
      }
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return w;
}

}  // namespace

double ssim(const GridD& a, const GridD& b) {
  require_same_geometry(a.geometry(), b.geometry(), "ssim");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw Error("ssim: grid " + to_string(a.geometry()) + " is smaller than the 7x7 window");
  }
  const auto& w = ssim_weights();
  double total = 0.0;
  std::size_t windows = 0;
  for (int y0 = 0; y0 + kSsimWindow <= a.height(); ++y0) {
    for (int x0 = 0; x0 + kSsimWindow <= a.width(); ++x0) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int j = 0; j < kSsimWindow; ++j) {
        for (int i = 0; i < kSsimWindow; ++i) {
          const double k = w[static_cast<std::size_t>(j * kSsimWindow + i)];
          const double va = a(x0 + i, y0 + j);
          const double vb = b(x0 + i, y0 + j);
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
               ((ma * ma + mb * mb + kSsimC1) * (var_a + var_b + kSsimC2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double ssim(const Mask& a, const Mask& b) {
  GridD da(a.geometry());
  GridD db(b.geometry());
  auto av = a.values();
  auto bv = b.values();
  auto dav = da.values();
  auto dbv = db.values();
  for (std::size_t i = 0; i < av.size(); ++i) dav[i] = av[i] != 0 ? 1.0 : 0.0;
  for (std::size_t i = 0; i < bv.size(); ++i) dbv[i] = bv[i] != 0 ? 1.0 : 0.0;
  return ssim(da, db);
}

bool box_hits_mask(PixelPoint p, const Mask& mask, int box_size) {
  if (box_size <= 0) throw Error("detection: box size must be positive");
  const int x0 = std::max(0, p.x - box_size / 2);
  const int y0 = std::max(0, p.y - box_size / 2);
  const int x1 = std::min(mask.width() - 1, p.x - box_size / 2 + box_size - 1);
  const int y1 = std::min(mask.height() - 1, p.y - box_size / 2 + box_size - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (mask(x, y) != 0) return true;
    }
  }
  return false;
}

std::optional<double> detection_accuracy(std::span<const PixelPoint> points,
                                         std::span<const Mask> masks, int box_size) {
  if (points.size() != masks.size()) {
    throw Error("detection: " + std::to_string(points.size()) + " points but " +
                std::to_string(masks.size()) + " masks");
  }
  if (points.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    hits += static_cast<std::size_t>(box_hits_mask(points[i], masks[i], box_size));
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(points.size());
}

namespace {

Mask dilate(const Mask& m, int r) {
  Mask out(m.geometry(), 0);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m(x, y) == 0) continue;
      for (int j = std::max(0, y - r); j <= std::min(m.height() - 1, y + r); ++j) {
        for (int i = std::max(0, x - r); i <= std::min(m.width() - 1, x + r); ++i) out(i, j) = 1;
      }
    }
  }
  return out;
}

Mask erode(const Mask& m, int r) {
  Mask out(m.geometry(), 0);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int j = std::max(0, y - r); all && j <= std::min(m.height() - 1, y + r); ++j) {
        for (int i = std::max(0, x - r); i <= std::min(m.width() - 1, x + r); ++i) {
          if (m(i, j) == 0) {
            all = false;
            break;
          }
        }
      }
      out(x, y) = all ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

Mask morphological_closing(const Mask& m, int radius) {
  if (radius < 0) throw Error("closing: radius must be >= 0");
  if (radius == 0) return m;
  return erode(dilate(m, radius), radius);
}

void MaskedSequence::validate() const {
  for (std::size_t i = 0; i < masks.size(); ++i) {
    require_same_geometry(stream.geometry, masks[i].mask.geometry(), "masked sequence");
    if (i > 0 && masks[i].t_us <= masks[i - 1].t_us) {
      throw Error("masked sequence '" + name + "': mask timestamps must strictly increase (" +
                  std::to_string(masks[i - 1].t_us) + " then " + std::to_string(masks[i].t_us) +
                  ")");
    }
  }
}

std::optional<std::size_t> MaskedSequence::nearest_mask(std::uint64_t t_us,
                                                         std::uint64_t tolerance_us) const {
  auto it = std::lower_bound(masks.begin(), masks.end(), t_us,
                             [](const TimedMask& m, std::uint64_t t) { return m.t_us < t; });
  std::optional<std::size_t> best;
  std::uint64_t best_d = 0;
  auto consider = [&](decltype(it) c) {
    const std::uint64_t d = c->t_us > t_us ? c->t_us - t_us : t_us - c->t_us;
    if (d <= tolerance_us && (!best || d < best_d)) {
      best = static_cast<std::size_t>(c - masks.begin());
      best_d = d;
    }
  };
  if (it != masks.begin()) consider(std::prev(it));
  if (it != masks.end()) consider(it);
  return best;
}

MaskedSequence load_masked_sequence(const std::filesystem::path& dir, const std::string& dataset,
                                    Geometry csv_geometry) {
  namespace fs = std::filesystem;
  MaskedSequence seq;
  seq.dataset = dataset;
  seq.name = dir.filename().string();

  const fs::path bin = dir / "events.bin";
  const fs::path csv = dir / "events.csv";
  if (fs::exists(bin)) {
    seq.stream = load_events(bin);
  } else if (fs::exists(csv)) {
    seq.stream = load_events(csv, csv_geometry);
  } else {
    throw Error(dir.string() + ": no events.bin or events.csv");
  }

  const fs::path index = dir / "masks.txt";
  std::ifstream is(index);
  if (!is) throw Error(index.string() + ": cannot open");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::uint64_t t = 0;
    std::string file;
    if (!(ls >> t)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(index.string() + ":" + std::to_string(lineno) + ": expected 't_us filename'");
    }
    if (!(ls >> file)) {
      throw Error(index.string() + ":" + std::to_string(lineno) + ": missing mask filename");
    }
    seq.masks.push_back({t, read_mask_pgm(dir / file)});
  }
  seq.validate();
  return seq;
}

DatasetScan scan_dataset(const std::filesystem::path& root, Geometry csv_geometry) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(root.string() + ": dataset root is not a directory");
  std::vector<fs::path> dirs;
  if (fs::exists(root / "masks.txt")) dirs.push_back(root);
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "masks.txt")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  DatasetScan scan;
  for (const fs::path& dir : dirs) {
    const fs::path rel = fs::relative(dir, root);
    const std::string dataset =
        rel.empty() || rel == "." ? root.filename().string() : rel.begin()->string();
    try {
      scan.sequences.push_back(load_masked_sequence(dir, dataset, csv_geometry));
    } catch (const std::exception& e) {
      scan.failures.push_back({dir.string(), e.what()});
    }
  }
  return scan;
}

void BenchConfig::validate() const {
  oms.validate();
  proto.validate();
  if (box_size <= 0) throw Error("bench.box_size must be positive");
  if (closing_radius < 0) throw Error("bench.closing_radius must be >= 0");
}

BenchConfig BenchConfig::from_config(const KeyValueConfig& cfg) {
  BenchConfig c;
  c.oms = OmsConfig::from_config(cfg, c.oms);
  c.proto = ProtoConfig::from_config(cfg, c.proto);
  c.box_size = static_cast<int>(cfg.get_int("bench.box_size", c.box_size));
  c.closing_radius = static_cast<int>(cfg.get_int("bench.closing_radius", c.closing_radius));
  c.validate();
  return c;
}

void BenchConfig::to_config(KeyValueConfig& cfg) const {
  oms.to_config(cfg);
  proto.to_config(cfg);
  cfg.set("bench.box_size", std::to_string(box_size));
  cfg.set("bench.closing_radius", std::to_string(closing_radius));
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (const double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

namespace {

std::uint64_t window_us(const OmsConfig& oms) {
  return static_cast<std::uint64_t>(std::llround(oms.update_interval * 1e6));
}

}  // namespace

std::vector<WindowScore> score_sequence(const MaskedSequence& seq, const BenchConfig& config) {
  config.validate();
  seq.validate();
  const Geometry g = seq.stream.geometry;
  const std::uint64_t window = window_us(config.oms);
  const AccumulateResult acc = accumulate(seq.stream.events, window, g);

  OmsStage oms(config.oms, g);
  ProtoStage proto(config.proto, g);
  std::vector<WindowScore> scores;
  for (const EventSlice& slice : acc.slices) {
    const OmsStepResult r = oms.step(slice);
    const SaliencyMap sal = proto.step(proto_input(r.map, slice), config.oms.update_interval);
    const auto idx = seq.nearest_mask(slice.window_end(), window / 2);
    if (!idx) continue;
    const Mask& truth = seq.masks[*idx].mask;

    WindowScore s;
    s.dataset = seq.dataset;
    s.sequence = seq.name;
    s.t_us = slice.window_end();
    s.iou = iou(r.map.mask, truth);
    s.ssim = ssim(r.map.mask, truth);
    if (config.closing_radius > 0) {
      const Mask closed = morphological_closing(r.map.mask, config.closing_radius);
      s.iou_closed = iou(closed, truth);
      s.ssim_closed = ssim(closed, truth);
    } else {
      s.iou_closed = s.iou;
      s.ssim_closed = s.ssim;
    }
    s.saliency = {sal.x, sal.y};
    s.hit = box_hits_mask(s.saliency, truth, config.box_size);
    scores.push_back(std::move(s));
  }
  return scores;
}

std::vector<DatasetSummary> summarize(std::span<const WindowScore> windows) {
  // dataset -> sequence -> window indices
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    groups[windows[i].dataset][windows[i].sequence].push_back(i);
  }
  std::vector<DatasetSummary> out;
  for (const auto& [dataset, sequences] : groups) {
    DatasetSummary d;
    d.dataset = dataset;
    d.sequences = sequences.size();
    std::vector<double> iou_v, ssim_v, iouc_v, ssimc_v, acc_v;
    for (const auto& [name, idx] : sequences) {
      std::size_t hits = 0;
      for (const std::size_t i : idx) {
        const WindowScore& w = windows[i];
        iou_v.push_back(100.0 * w.iou);
        ssim_v.push_back(100.0 * std::clamp(w.ssim, 0.0, 1.0));
        iouc_v.push_back(100.0 * w.iou_closed);
        ssimc_v.push_back(100.0 * std::clamp(w.ssim_closed, 0.0, 1.0));
        hits += static_cast<std::size_t>(w.hit);
      }
      acc_v.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(idx.size()));
    }
    d.frames = iou_v.size();
    d.iou = mean_std(iou_v);
    d.ssim = mean_std(ssim_v);
    d.iou_closed = mean_std(iouc_v);
    d.ssim_closed = mean_std(ssimc_v);
    d.accuracy = mean_std(acc_v);
    out.push_back(std::move(d));
  }
  return out;
}

BenchReport run_benchmark(std::span<const MaskedSequence> sequences, const BenchConfig& config) {
  config.validate();
  std::vector<std::future<std::vector<WindowScore>>> jobs;
  jobs.reserve(sequences.size());
  for (const MaskedSequence& seq : sequences) {
    jobs.push_back(std::async(std::launch::async, [&seq, &config] {
      return score_sequence(seq, config);
    }));
  }
  BenchReport report;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      auto scores = jobs[i].get();
      report.windows.insert(report.windows.end(), std::make_move_iterator(scores.begin()),
                            std::make_move_iterator(scores.end()));
    } catch (const std::exception& e) {
      report.failures.push_back({sequences[i].dataset + "/" + sequences[i].name, e.what()});
    }
  }
  report.datasets = summarize(report.windows);
  return report;
}

void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "dataset,sequences,frames,iou_mean,iou_std,ssim_mean,ssim_std,iou_closed_mean,"
        "iou_closed_std,ssim_closed_mean,ssim_closed_std,accuracy_mean,accuracy_std\n";
  for (const DatasetSummary& d : report.datasets) {
    os << d.dataset << ',' << d.sequences << ',' << d.frames << ',' << format_number(d.iou.mean)
       << ',' << format_number(d.iou.std) << ',' << format_number(d.ssim.mean) << ','
       << format_number(d.ssim.std) << ',' << format_number(d.iou_closed.mean) << ','
       << format_number(d.iou_closed.std) << ',' << format_number(d.ssim_closed.mean) << ','
       << format_number(d.ssim_closed.std) << ',' << format_number(d.accuracy.mean) << ','
       << format_number(d.accuracy.std) << '\n';
  }
}

void write_bench_table(std::ostream& os, const BenchReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %7s %18s %18s %18s %18s %18s\n", "dataset", "frames",
                "IoU %", "SSIM %", "IoU % (closed)", "SSIM % (closed)", "accuracy %");
  os << buf;
  auto cell = [](MeanStd m) {
    char c[32];
    std::snprintf(c, sizeof c, "%6.2f +- %-6.2f", m.mean, m.std);
    return std::string(c);
  };
  for (const DatasetSummary& d : report.datasets) {
    std::snprintf(buf, sizeof buf, "%-16s %7zu %18s %18s %18s %18s %18s\n", d.dataset.c_str(),
                  d.frames, cell(d.iou).c_str(), cell(d.ssim).c_str(), cell(d.iou_closed).c_str(),
                  cell(d.ssim_closed).c_str(), cell(d.accuracy).c_str());
    os << buf;
  }
  for (const LoadFailure& f : report.failures) os << "failed: " << f.path << ": " << f.message << '\n';
}

MaskedSequence self_consistent_sequence(const EventStream& stream, const OmsConfig& oms,
                                        const std::string& dataset, const std::string& name) {
  oms.validate();
  MaskedSequence seq;
  seq.dataset = dataset;
  seq.name = name;
  seq.stream = stream;
  const AccumulateResult acc = accumulate(stream.events, window_us(oms), stream.geometry);
  OmsStage stage(oms, stream.geometry);
  for (const EventSlice& slice : acc.slices) {
    seq.masks.push_back({slice.window_end(), stage.step(slice).map.mask});
  }
  return seq;
}

}  // namespace foveate

#include "foveate/oms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace foveate {

namespace {

// Contrast below this is treated as no contrast rather than normalised up.
constexpr double kMinContrast = 1e-9;

GridD slice_input(const EventSlice& slice, OmsInput mode) {
  GridD v(slice.geometry(), 0.0);
  auto pos = slice.pos().values();
  auto neg = slice.neg().values();
  auto out = v.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t c = pos[i] + neg[i];
    out[i] = mode == OmsInput::Binary ? (c > 0 ? 1.0 : 0.0) : static_cast<double>(c);
  }
  return v;
}

GridD normalized_response(const GridD& input, const GridD& kernel, const GridD& mass) {
  GridD r = conv2d_same_sparse(input, kernel);
  auto rv = r.values();
  auto mv = mass.values();
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] /= mv[i];
  return r;
}

}  // namespace

void OmsConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("oms: alpha must lie in (0, 1]");
  if (!(tau > 0.0)) throw Error("oms: tau must be > 0");
  if (!(update_interval > 0.0)) throw Error("oms: update_interval must be > 0");
  if (center.size != surround.size) throw Error("oms: centre and surround sizes must match");
  if (!(center.sigma > 0.0) || !(surround.sigma > 0.0)) throw Error("oms: sigma must be > 0");
}

OmsConfig OmsConfig::from_config(const KeyValueConfig& cfg, OmsConfig defaults) {
  OmsConfig c = defaults;
  c.center.size = static_cast<int>(cfg.get_int("oms.center_size", c.center.size));
  c.center.sigma = cfg.get_double("oms.center_sigma", c.center.sigma);
  c.surround.size = static_cast<int>(cfg.get_int("oms.surround_size", c.surround.size));
  c.surround.sigma = cfg.get_double("oms.surround_sigma", c.surround.sigma);
  c.alpha = cfg.get_double("oms.alpha", c.alpha);
  c.tau = cfg.get_double("oms.tau", c.tau);
  c.update_interval = cfg.get_double("oms.update_interval", c.update_interval);
  const std::string input = cfg.get_string("oms.input", c.input == OmsInput::Binary ? "binary" : "counts");
  if (input == "binary") {
    c.input = OmsInput::Binary;
  } else if (input == "counts") {
    c.input = OmsInput::Counts;
  } else {
    throw Error("oms.input: expected binary or counts, got '" + input + "'");
  }
  c.validate();
  return c;
}

void OmsConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("oms.center_size", std::to_string(center.size));
  cfg.set("oms.center_sigma", format_number(center.sigma));
  cfg.set("oms.surround_size", std::to_string(surround.size));
  cfg.set("oms.surround_sigma", format_number(surround.sigma));
  cfg.set("oms.alpha", format_number(alpha));
  cfg.set("oms.tau", format_number(tau));
  cfg.set("oms.update_interval", format_number(update_interval));
  cfg.set("oms.input", input == OmsInput::Binary ? "binary" : "counts");
}

int OmsConfig::warmup_steps() const {
  return static_cast<int>(std::ceil(3.0 * tau / update_interval - 1e-12));
}

Mask OmsMap::masked_pos(const EventSlice& slice) const {
  Mask out(mask.geometry(), 0);
  auto m = mask.values();
  auto p = slice.pos().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (m[i] && p[i] > 0) ? 1 : 0;
  return out;
}

Mask OmsMap::masked_neg(const EventSlice& slice) const {
  Mask out(mask.geometry(), 0);
  auto m = mask.values();
  auto n = slice.neg().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (m[i] && n[i] > 0) ? 1 : 0;
  return out;
}

OmsStage::OmsStage(const OmsConfig& config, Geometry g)
    : config_(config),
      geom_(g),
      center_kernel_(gaussian_kernel(config.center)),
      surround_kernel_(gaussian_kernel(config.surround)) {
  config_.validate();
  if (g.width < config.center.size || g.height < config.center.size) {
    throw Error("oms: image " + to_string(g) + " smaller than kernel");
  }
  center_mass_ = kernel_support_mass(g, center_kernel_);
  surround_mass_ = kernel_support_mass(g, surround_kernel_);
  reset();
}

void OmsStage::reset() {
  center_ = LifGrid(geom_, config_.tau);
  surround_ = LifGrid(geom_, config_.tau);
}

OmsStepResult OmsStage::step(const EventSlice& slice) {
  require_same_geometry(geom_, slice.geometry(), "oms_step");
  const GridD input = slice_input(slice, config_.input);
  const GridD c_in = normalized_response(input, center_kernel_, center_mass_);
  const GridD s_in = normalized_response(input, surround_kernel_, surround_mass_);

  LifStepResult c = lif_step(center_, c_in, config_.update_interval);
  LifStepResult s = lif_step(surround_, s_in, config_.update_interval);

  OmsStepResult r;
  r.contrast = GridD(geom_, 0.0);
  auto d = r.contrast.values();
  auto cv = c.drive.values();
  auto sv = s.drive.values();
  double dmax = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = cv[i] - sv[i];
    dmax = std::max(dmax, d[i]);
  }

  r.map.mask = Mask(geom_, 0);
  r.map.window_start = slice.window_start();
  r.map.window_end = slice.window_end();
  if (dmax > kMinContrast) {
    const double cut = config_.alpha * dmax;
    auto m = r.map.mask.values();
    auto pos = slice.pos().values();
    auto neg = slice.neg().values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (pos[i] + neg[i] == 0 || !(d[i] > cut)) continue;
      m[i] = 1;
      r.map.pos_events += pos[i];
      r.map.neg_events += neg[i];
    }
  }
  r.center_spikes = std::move(c.spikes);
  r.surround_spikes = std::move(s.spikes);
  return r;
}

SuppressionStats suppression_stats(const EventSlice& input, const OmsMap& output) {
  return suppression_stats(input, output.mask);
}

ActivityRecorder::ActivityRecorder(Geometry g)
    : counts_(g.area(), 0),
      first_(g.area(), std::numeric_limits<double>::quiet_NaN()),
      last_(g.area(), std::numeric_limits<double>::quiet_NaN()) {}

void ActivityRecorder::record(const Mask& spikes, double t_seconds) {
  auto s = spikes.values();
  if (s.size() != counts_.size()) throw Error("activity recorder: geometry mismatch");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i]) continue;
    if (counts_[i] == 0) first_[i] = t_seconds;
    last_[i] = t_seconds;
    ++counts_[i];
  }
}

std::uint64_t ActivityRecorder::total_spikes() const {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

ActivityRecorder::Stats ActivityRecorder::stats() const {
  Stats st;
  const auto n = static_cast<double>(counts_.size());
  if (counts_.empty()) return st;
  if (duration_ > 0.0) {
    double sum = 0.0;
    double sq = 0.0;
    for (auto c : counts_) {
      const double rate = c / duration_;
      sum += rate;
      sq += rate * rate;
    }
    st.mfr_mean = sum / n;
    st.mfr_std = std::sqrt(std::max(0.0, sq / n - st.mfr_mean * st.mfr_mean));
  }
  // A unit's mean interval is (last - first) / (count - 1).
  double isum = 0.0;
  double isq = 0.0;
  std::size_t multi = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 2) continue;
    const double isi = (last_[i] - first_[i]) / (counts_[i] - 1);
    isum += isi;
    isq += isi * isi;
    ++multi;
  }
  st.multi_spike_fraction = static_cast<double>(multi) / n;
  st.excluded_fraction = 1.0 - st.multi_spike_fraction;
  if (multi > 0) {
    const auto m = static_cast<double>(multi);
    st.isi_mean = isum / m;
    st.isi_std = std::sqrt(std::max(0.0, isq / m - st.isi_mean * st.isi_mean));
  }
  return st;
}

CharacterizationRow characterize_scenario(const NamedScenario& named, const OmsConfig& config,
                                          const SensorModel& sensor) {
  const GratingScenario& sc = named.scenario;
  const EventStream stream = simulate_scenario(sc, sensor);
  const auto window = static_cast<std::uint64_t>(std::llround(config.update_interval * 1e6));
  const AccumulateResult acc = accumulate(stream.events, window, sc.geometry);

  OmsStage oms(config, sc.geometry);
  ActivityRecorder recorder(sc.geometry);
  const int warmup = config.warmup_steps();

  std::size_t disk_pixels = 0;
  Mask disk(sc.geometry, 0);
  for (int y = 0; y < sc.geometry.height; ++y)
    for (int x = 0; x < sc.geometry.width; ++x)
      if (sc.in_disk(x, y)) {
        disk(x, y) = 1;
        ++disk_pixels;
      }
  const std::size_t outside_pixels = sc.geometry.area() - disk_pixels;

  CharacterizationRow row;
  row.id = named.id;
  row.name = named.name;
  row.scenario = sc;
  double inside_hits = 0.0;
  double outside_hits = 0.0;
  double suppression_sum = 0.0;
  for (std::size_t k = 0; k < acc.slices.size(); ++k) {
    const EventSlice& slice = acc.slices[k];
    const OmsStepResult r = oms.step(slice);
    row.last_mask = r.map.mask;
    if (static_cast<int>(k) < warmup) continue;
    ++row.slices;
    recorder.record(r.map.mask, static_cast<double>(k) * config.update_interval);
    auto m = r.map.mask.values();
    auto dv = disk.values();
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      (dv[i] ? inside_hits : outside_hits) += 1.0;
    }
    const SuppressionStats s = suppression_stats(slice, r.map);
    suppression_sum += s.suppression_fraction;
    row.input_events += s.input_events;
    row.output_events += s.output_events;
  }
  recorder.set_duration(row.slices * config.update_interval);
  row.activity = recorder.stats();
  if (row.slices > 0) {
    row.mask_density_inside = inside_hits / (static_cast<double>(disk_pixels) * row.slices);
    row.mask_density_outside = outside_hits / (static_cast<double>(outside_pixels) * row.slices);
    row.suppression = suppression_sum / row.slices;
  }
  if (row.mask_density_outside > 0.0) {
    row.density_ratio = row.mask_density_inside / row.mask_density_outside;
  } else {
    row.density_ratio = row.mask_density_inside > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return row;
}

std::vector<CharacterizationRow> run_characterization(std::span<const NamedScenario> suite,
                                                      const OmsConfig& config,
                                                      const SensorModel& sensor) {
  std::vector<CharacterizationRow> rows;
  rows.reserve(suite.size());
  for (const NamedScenario& s : suite) rows.push_back(characterize_scenario(s, config, sensor));
  return rows;
}

CharacterizationFindings check_characterization(std::span<const CharacterizationRow> rows) {
  CharacterizationFindings f;
  auto find = [&](int id) -> const CharacterizationRow* {
    for (const auto& r : rows)
      if (r.id == id) return &r;
    f.missing.push_back(id);
    return nullptr;
  };
  const auto* e1 = find(1);
  const auto* e2 = find(2);
  const auto* e3 = find(3);
  f.eye_only_highest_mfr = e1 && e2 && e3 && e2->activity.mfr_mean > e1->activity.mfr_mean &&
                           e2->activity.mfr_mean > e3->activity.mfr_mean;
  f.object_enhanced = true;
  for (int id : {1, 4, 5, 6, 7, 8, 9}) {
    const auto* r = find(id);
    if (!r || !(r->density_ratio >= kObjectEnhancedRatio)) {
      f.object_enhanced = false;
      if (r) f.ratio_violations.push_back(id);
    }
  }
  f.failure_regime = true;
  for (int id = 10; id <= 16; ++id) {
    const auto* r = find(id);
    if (!r || !(r->density_ratio < kFailureRegimeRatio)) {
      f.failure_regime = false;
      if (r) f.ratio_violations.push_back(id);
    }
  }
  return f;
}

void write_characterization_csv(std::ostream& os, std::span<const CharacterizationRow> rows) {
  os << "experiment,name,mode,background_sf,background_speed,foreground_sf,foreground_speed,"
        "slices,mfr_mean,mfr_std,isi_mean,isi_std,isi_excluded_fraction,mask_density_inside,"
        "mask_density_outside,density_ratio,suppression_fraction,input_events,output_events\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& s = r.scenario;
    std::snprintf(buf, sizeof buf,
                  "%d,%s,%s,%.6g,%.6g,%.6g,%.6g,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%llu,%llu\n",
                  r.id, r.name.c_str(), to_string(s.mode).c_str(), s.background_sf,
                  s.effective_background_speed(), s.foreground_sf, s.effective_foreground_speed(),
                  r.slices, r.activity.mfr_mean, r.activity.mfr_std, r.activity.isi_mean,
                  r.activity.isi_std, r.activity.excluded_fraction, r.mask_density_inside,
                  r.mask_density_outside, r.density_ratio, r.suppression,
                  static_cast<unsigned long long>(r.input_events),
                  static_cast<unsigned long long>(r.output_events));
    os << buf;
  }
}

}  // namespace foveate

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "foveate/events.hpp"
#include "foveate/snn.hpp"
#include "foveate/stimgen.hpp"

namespace foveate {

/// What the centre/surround layers integrate from a slice.
enum class OmsInput { Binary, Counts };

struct OmsConfig {
  GaussianKernelSpec center{8, 1.0};
  GaussianKernelSpec surround{8, 4.0};
  double alpha = 0.80;            // threshold on the max-normalised centre-surround difference
  double tau = 0.02;              // seconds
  double update_interval = 0.02;  // seconds of events per step
  OmsInput input = OmsInput::Binary;

  void validate() const;
  /// Reads keys `oms.*`; absent keys keep the values of `defaults`.
  static OmsConfig from_config(const KeyValueConfig& cfg, OmsConfig defaults);
  static OmsConfig from_config(const KeyValueConfig& cfg) { return from_config(cfg, OmsConfig{}); }
  void to_config(KeyValueConfig& cfg) const;
  /// Slices excluded from statistics while the membranes settle: ceil(3 tau / update_interval).
  [[nodiscard]] int warmup_steps() const;
};

/// Motion-salient events of one slice.
struct OmsMap {
  Mask mask;
  std::uint64_t pos_events = 0;  // ON events on masked pixels
  std::uint64_t neg_events = 0;  // OFF events on masked pixels
  std::uint64_t window_start = 0;
  std::uint64_t window_end = 0;

  /// The masked pixels split by which polarities occurred there.
  [[nodiscard]] Mask masked_pos(const EventSlice& slice) const;
  [[nodiscard]] Mask masked_neg(const EventSlice& slice) const;
};

struct OmsStepResult {
  OmsMap map;
  Mask center_spikes;
  Mask surround_spikes;
  GridD contrast;  // centre minus surround membrane drive, before normalisation
};

/// Spiking centre-surround stage. One instance per stream; steps are sequential.
///
/// Both Gaussian kernels are applied as normalised convolutions (divided by the
/// kernel mass inside the image), so a uniform event field drives centre and
/// surround identically everywhere, including at the borders.
class OmsStage {
 public:
  OmsStage(const OmsConfig& config, Geometry g);

  OmsStepResult step(const EventSlice& slice);
  void reset();

  [[nodiscard]] const OmsConfig& config() const { return config_; }
  [[nodiscard]] Geometry geometry() const { return geom_; }
  [[nodiscard]] const GridD& center_kernel() const { return center_kernel_; }
  [[nodiscard]] const GridD& surround_kernel() const { return surround_kernel_; }

 private:
  OmsConfig config_;
  Geometry geom_;
  GridD center_kernel_;
  GridD surround_kernel_;
  GridD center_mass_;
  GridD surround_mass_;
  LifGrid center_;
  LifGrid surround_;
};

SuppressionStats suppression_stats(const EventSlice& input, const OmsMap& output);

/// Per-unit spike bookkeeping for firing-rate and inter-spike-interval statistics.
class ActivityRecorder {
 public:
  explicit ActivityRecorder(Geometry g);

  void record(const Mask& spikes, double t_seconds);
  /// Observation span used for firing rates.
  void set_duration(double seconds) { duration_ = seconds; }

  [[nodiscard]] std::size_t units() const { return counts_.size(); }
  [[nodiscard]] std::uint64_t total_spikes() const;

  struct Stats {
    double mfr_mean = 0.0;  // spikes per unit per second
    double mfr_std = 0.0;
    double isi_mean = 0.0;  // seconds, over units with >= 2 spikes
    double isi_std = 0.0;
    double multi_spike_fraction = 0.0;  // units with >= 2 spikes
    double excluded_fraction = 1.0;     // units left out of the ISI statistic
  };
  [[nodiscard]] Stats stats() const;

 private:
  std::vector<std::uint32_t> counts_;
  std::vector<double> first_;
  std::vector<double> last_;
  double duration_ = 0.0;
};

using ActivityStats = ActivityRecorder::Stats;

struct CharacterizationRow {
  int id = 0;
  std::string name;
  GratingScenario scenario;
  int slices = 0;  // slices after warm-up
  ActivityStats activity;
  double mask_density_inside = 0.0;   // masked fraction of disk pixels per slice
  double mask_density_outside = 0.0;  // same outside the disk
  double density_ratio = 0.0;         // inside / outside (infinite if outside is 0)
  double suppression = 0.0;           // mean suppression fraction
  std::uint64_t input_events = 0;
  std::uint64_t output_events = 0;
  Mask last_mask;  // OMS map of the final slice
};

/// Runs one scenario through sensor, slicing and the OMS stage.
CharacterizationRow characterize_scenario(const NamedScenario& scenario, const OmsConfig& config,
                                          const SensorModel& sensor);

std::vector<CharacterizationRow> run_characterization(std::span<const NamedScenario> suite,
                                                      const OmsConfig& config,
                                                      const SensorModel& sensor);

/// Density-ratio bands of the qualitative characterization findings.
inline constexpr double kObjectEnhancedRatio = 5.0;  // experiments 1 and 4-9 reach at least this
inline constexpr double kFailureRegimeRatio = 2.0;   // experiments 10-16 stay below this

struct CharacterizationFindings {
  bool eye_only_highest_mfr = false;  // experiment 2 MFR above experiments 1 and 3
  bool object_enhanced = false;       // every ratio of experiments 1, 4-9 >= kObjectEnhancedRatio
  bool failure_regime = false;        // every ratio of experiments 10-16 < kFailureRegimeRatio
  std::vector<int> ratio_violations;  // experiment ids outside their band
  std::vector<int> missing;           // experiment ids absent from the rows

  [[nodiscard]] bool all() const { return eye_only_highest_mfr && object_enhanced && failure_regime; }
};

/// Evaluates the orderings over the rows of the standard suite (matched by experiment id).
CharacterizationFindings check_characterization(std::span<const CharacterizationRow> rows);

void write_characterization_csv(std::ostream& os, std::span<const CharacterizationRow> rows);

}  // namespace foveate

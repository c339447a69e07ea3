#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foveate/events.hpp"
#include "foveate/oms.hpp"
#include "foveate/proto.hpp"

namespace foveate {

/// |A and B| / |A or B|. Two empty masks agree perfectly and score 1.
double iou(const Mask& a, const Mask& b);

inline constexpr int kSsimWindow = 7;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over every 7x7 window that fits inside the grid, each window
/// weighted by a normalised Gaussian (sigma 1.5). Dynamic range is 1.
double ssim(const GridD& a, const GridD& b);
double ssim(const Mask& a, const Mask& b);

struct PixelPoint {
  int x = 0;
  int y = 0;
};

/// Rows y - box/2 .. y - box/2 + box - 1 (same for columns), clipped to the image.
bool box_hits_mask(PixelPoint p, const Mask& mask, int box_size = 8);

/// Percentage of pairs whose box around the point touches the mask.
/// Absent when there are no pairs.
std::optional<double> detection_accuracy(std::span<const PixelPoint> points,
                                         std::span<const Mask> masks, int box_size = 8);

/// Square structuring element of side 2 radius + 1; pixels outside the image
/// count as unset for the dilation and set for the erosion, so closing never removes pixels.
Mask morphological_closing(const Mask& m, int radius);

struct TimedMask {
  std::uint64_t t_us = 0;  // end of the window the mask annotates
  Mask mask;
};

struct MaskedSequence {
  std::string dataset;  // sub-dataset the sequence belongs to
  std::string name;
  EventStream stream;
  std::vector<TimedMask> masks;

  /// Every mask matches the stream geometry and timestamps strictly increase.
  void validate() const;
  /// Index of the mask nearest to `t_us` within `tolerance_us`.
  [[nodiscard]] std::optional<std::size_t> nearest_mask(std::uint64_t t_us,
                                                        std::uint64_t tolerance_us) const;
};

/// Directory layout of one sequence:
///
///   events.bin | events.csv   canonical event stream (CSV needs `csv_geometry`)
///   masks.txt                 one `t_us filename` pair per line, `#` comments allowed
///   <filename>                binary PGM masks, any nonzero pixel is set
MaskedSequence load_masked_sequence(const std::filesystem::path& dir, const std::string& dataset,
                                    Geometry csv_geometry = {128, 128});

struct LoadFailure {
  std::string path;
  std::string message;
};

struct DatasetScan {
  std::vector<MaskedSequence> sequences;
  std::vector<LoadFailure> failures;
};

/// Every directory under `root` holding a masks.txt is a sequence; its sub-dataset is the
/// first path component below `root`. A sequence that fails to load is recorded and skipped.
DatasetScan scan_dataset(const std::filesystem::path& root, Geometry csv_geometry = {128, 128});

struct BenchConfig {
  OmsConfig oms;
  ProtoConfig proto;
  int box_size = 8;
  int closing_radius = 1;  // 0 disables the closed-mask scores

  void validate() const;
  /// Reads `bench.*` plus the oms and proto groups.
  static BenchConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

struct WindowScore {
  std::string dataset;
  std::string sequence;
  std::uint64_t t_us = 0;
  double iou = 0.0;
  double ssim = 0.0;
  double iou_closed = 0.0;
  double ssim_closed = 0.0;
  PixelPoint saliency;
  bool hit = false;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

/// Percentages in [0, 100]. IoU and SSIM aggregate over windows; accuracy is
/// computed per sequence and aggregated over the sequences of the sub-dataset.
struct DatasetSummary {
  std::string dataset;
  std::size_t sequences = 0;
  std::size_t frames = 0;
  MeanStd iou;
  MeanStd ssim;
  MeanStd iou_closed;
  MeanStd ssim_closed;
  MeanStd accuracy;
};

struct BenchReport {
  std::vector<DatasetSummary> datasets;
  std::vector<WindowScore> windows;
  std::vector<LoadFailure> failures;
};

/// Scores one sequence: OMS map against the mask (IoU, SSIM) and the saliency
/// maximum of the OMS-filtered events against the mask (box hit).
std::vector<WindowScore> score_sequence(const MaskedSequence& seq, const BenchConfig& config);

/// Sequences are scored concurrently; the report is ordered by sub-dataset name.
BenchReport run_benchmark(std::span<const MaskedSequence> sequences, const BenchConfig& config);

/// Groups window scores by sub-dataset into summaries.
std::vector<DatasetSummary> summarize(std::span<const WindowScore> windows);

void write_bench_csv(std::ostream& os, const BenchReport& report);
void write_bench_table(std::ostream& os, const BenchReport& report);

/// Annotates a stream with the OMS stage's own output, one mask per window end.
/// Scoring it with the same OMS settings yields IoU 1.
MaskedSequence self_consistent_sequence(const EventStream& stream, const OmsConfig& oms,
                                        const std::string& dataset, const std::string& name);

}  // namespace foveate

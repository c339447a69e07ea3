#pragma once

#include <span>
#include <vector>

#include "foveate/config.hpp"
#include "foveate/events.hpp"
#include "foveate/oms.hpp"
#include "foveate/snn.hpp"

namespace foveate {

struct ProtoConfig {
  double radius = 8.0;      // ring radius of the von Mises kernels, pixels
  double rho = 0.2;         // angular concentration
  double inhibition = 3.0;  // weight of the opposite-orientation term
  std::vector<double> orientations_deg{0.0, 45.0, 90.0, 135.0};
  int levels = 3;     // pyramid levels, finest first
  double tau = 0.1;   // seconds, membrane constant of the border-ownership units
  bool polarity_split = true;

  void validate() const;

  /// Reads keys `proto.*`; absent keys keep the values of `defaults`.
  static ProtoConfig from_config(const KeyValueConfig& cfg, ProtoConfig defaults);
  static ProtoConfig from_config(const KeyValueConfig& cfg) { return from_config(cfg, ProtoConfig{}); }
  void to_config(KeyValueConfig& cfg) const;
};

/// Binary activity with its polarity-resolved views. `active` gates the responses.
struct ProtoInput {
  Mask active;
  Mask on;
  Mask off;

  [[nodiscard]] Geometry geometry() const { return active.geometry(); }
};

/// Raw events of a slice.
ProtoInput proto_input(const EventSlice& slice);
/// Events of a slice that survive an OMS mask.
ProtoInput proto_input(const OmsMap& map, const EventSlice& slice);

/// 2x2 max-pooling; odd trailing rows/columns pool what is available.
Mask max_pool2(const Mask& m);

/// Level 0 is the input; each further level halves both dimensions.
/// Throws if the image is smaller than 2^(levels-1) in either dimension.
std::vector<ProtoInput> pyramid(const ProtoInput& input, int levels);

/// The oriented kernels VM_theta ("toward") and VM_{theta+pi} ("away") for each orientation.
class VonMisesBank {
 public:
  explicit VonMisesBank(const ProtoConfig& config);

  [[nodiscard]] std::size_t size() const { return toward_.size(); }
  [[nodiscard]] int kernel_size() const { return toward_.front().width(); }
  [[nodiscard]] double theta(std::size_t k) const { return thetas_[k]; }
  [[nodiscard]] const GridD& toward(std::size_t k) const { return toward_[k]; }
  [[nodiscard]] const GridD& away(std::size_t k) const { return away_[k]; }
  /// away - toward: the single kernel the grouping pools reduce to.
  [[nodiscard]] const GridD& contrast(std::size_t k) const { return contrast_[k]; }

 private:
  std::vector<double> thetas_;
  std::vector<GridD> toward_;
  std::vector<GridD> away_;
  std::vector<GridD> contrast_;
};

/// Rectified border-ownership responses, one pair per orientation.
///
///   U    = on + off   (polarity split)   or   active   (no split)
///   B1_k = max(0, active * (U (x) VM_k - w U (x) VM_k+pi))
///   B2_k = max(0, active * (U (x) VM_k+pi - w U (x) VM_k))
///
/// with (x) the same-size correlation. B1_k is positive on an edge whose
/// enclosed side lies in direction theta_k.
struct BorderOwnershipResponse {
  std::vector<GridD> b1;
  std::vector<GridD> b2;
};

BorderOwnershipResponse border_ownership(const ProtoConfig& config, const VonMisesBank& bank,
                                         const ProtoInput& input);

/// The four grouping pools of one level. Edges vote for the point R0 away on
/// their enclosed side, so the pools correlate B1_k with VM_k+pi and B2_k with VM_k:
///
///   g1 = sum_k B1_k (x) VM_k+pi    g1_star = sum_k B1_k (x) VM_k
///   g2 = sum_k B2_k (x) VM_k       g2_star = sum_k B2_k (x) VM_k+pi
struct GroupingTerms {
  GridD g1;
  GridD g1_star;
  GridD g2;
  GridD g2_star;

  /// (g1 - g1_star) + (g2 - g2_star), unrectified.
  [[nodiscard]] GridD combined() const;
};

GroupingTerms grouping_terms(const VonMisesBank& bank, const BorderOwnershipResponse& bo);

/// Rectified combined grouping response of one level, via sum_k (B1_k - B2_k) (x) contrast_k.
GridD level_saliency(const VonMisesBank& bank, const BorderOwnershipResponse& bo);

struct SaliencyMap {
  GridD values;      // non-negative, input resolution
  int x = 0;         // column of the maximum
  int y = 0;         // row of the maximum
  double max_value = 0.0;
  bool degenerate = true;  // no positive value; (x, y) is then the image centre
};

/// Argmax with ties broken by lowest row, then lowest column.
SaliencyMap make_saliency_map(GridD values);

/// Nearest-neighbour upsampling of every level to `g`, summed.
GridD combine_levels(std::span<const GridD> levels, Geometry g);

/// Pools per-level responses into the saliency map.
SaliencyMap grouping(const VonMisesBank& bank, std::span<const BorderOwnershipResponse> levels,
                     Geometry g);

/// Stateful proto-object stage: pyramid, border ownership with LIF units, grouping.
/// The grouping integrates the units' membrane potential before reset.
class ProtoStage {
 public:
  ProtoStage(const ProtoConfig& config, Geometry g);

  SaliencyMap step(const ProtoInput& input, double dt);
  void reset();

  [[nodiscard]] const ProtoConfig& config() const { return config_; }
  [[nodiscard]] const VonMisesBank& bank() const { return bank_; }
  [[nodiscard]] Geometry geometry() const { return geom_; }
  /// Spikes emitted by the border-ownership units in the last step.
  [[nodiscard]] std::uint64_t last_spikes() const { return last_spikes_; }

 private:
  ProtoConfig config_;
  Geometry geom_;
  VonMisesBank bank_;
  // [level][orientation]
  std::vector<std::vector<LifGrid>> b1_;
  std::vector<std::vector<LifGrid>> b2_;
  std::uint64_t last_spikes_ = 0;
};

/// Positive plateaus (8-connected, equal value) whose every neighbour is strictly lower.
Mask regional_maxima(const GridD& values);

/// True when a regional maximum has a pixel within `radius` of (cx, cy).
/// (cx, cy) are continuous coordinates; pixel (x, y) has its centre at (x + 0.5, y + 0.5).
bool has_local_maximum_near(const GridD& values, double cx, double cy, double radius);

/// Stateless saliency of a single input (fresh membranes, one step).
SaliencyMap saliency_from_events(const ProtoConfig& config, const ProtoInput& input);

}  // namespace foveate

#pragma once

// The inner time series: computing it and comparing it across sensors.

#include <optional>
#include <vector>

#include "innerseries/model.hpp"

namespace innerseries {

/// Bin whose frame applies at `point`: its own bin when occupied, otherwise
/// the occupied bin within one grid step whose centre is closest in
/// bin-width units (ties to the lower flat index). `fallback` reports which.
std::optional<std::size_t> resolve_bin(const FrameField& field, std::span<const double> point,
                                       bool* fallback = nullptr);

/// w = M_bin * xdot for every valid sample. When `assignment` is given it
/// fixes each sample's bin (flat index, -1 = none) instead of a position
/// lookup; this is how two pointwise-related trajectories share one binning.
WeightSeries compute_weights(const Trajectory& traj, const VelocitySeries& vel,
                             const FrameField& field,
                             const std::vector<std::int64_t>* assignment = nullptr);

/// Pearson correlation over samples valid in both series.
double masked_correlation(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b, const Mask& valid);

struct WeightAlignment {
  /// Maps wprime onto w: apply_signed_permutation(p, wprime) ~ w.
  SignedPermutation p;
  /// corr(w_i, (P w')_i), all non-negative by construction of the signs.
  Eigen::VectorXd correlations;
  /// corr(w_i, w'_j) before alignment.
  Eigen::MatrixXd cross;
  std::size_t overlap = 0;
};

/// Signed permutation maximising the summed per-channel correlation
/// (exhaustive for N <= 4, optimal assignment on |corr| beyond).
WeightAlignment align_weight_series(const WeightSeries& w, const WeightSeries& wprime,
                                    std::size_t min_overlap = 100);

/// N x N Pearson matrix over jointly valid samples; diagonal exactly 1.
Eigen::MatrixXd cross_channel_correlation(const WeightSeries& w);

/// Channels of all inputs side by side; a sample is valid only if valid in all.
WeightSeries concatenate_channels(const std::vector<WeightSeries>& parts);

struct SeparabilityThresholds {
  double min_match = 0.9;
  double max_cross = 0.05;
};

struct SeparabilityReport {
  WeightAlignment alignment;
  Eigen::MatrixXd mixture_cross;
  double min_match = 0.0;
  double max_cross = 0.0;
  bool match_pass = false;
  bool cross_pass = false;
  bool pass() const { return match_pass && cross_pass; }
};

/// Matches each mixture weight channel to one concatenated source channel.
SeparabilityReport separability_report(const WeightSeries& mixture,
                                       const std::vector<WeightSeries>& sources,
                                       const SeparabilityThresholds& thresholds = {});

/// Column assignment maximising sum_i score(i, perm[i]) (Hungarian method).
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& score);

}  // namespace innerseries

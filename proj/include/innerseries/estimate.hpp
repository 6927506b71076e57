#pragma once

// Velocities, the state-space bin grid and per-bin velocity moments.

#include <span>

#include "innerseries/model.hpp"

namespace innerseries {

enum class VelocityScheme { kForward, kCentral };

VelocityScheme velocity_scheme_from_string(const std::string& s);
std::string to_string(VelocityScheme scheme);

/// central: v[k] = (x[k+1] - x[k-1]) / 2dt, both endpoints invalid.
/// forward: v[k] = (x[k+1] - x[k]) / dt, last sample invalid.
VelocitySeries estimate_velocity(const Trajectory& traj,
                                 VelocityScheme scheme = VelocityScheme::kCentral);

/// 50 N^2 samples per bin.
inline std::size_t default_min_count(int dims) {
  return 50u * static_cast<std::size_t>(dims * dims);
}

/// Equal-width edges over the observed [min, max] of every axis. Samples
/// flagged invalid in `valid` (when given) are left out of the membership.
BinGrid build_grid(const Trajectory& traj, std::span<const int> bins_per_axis,
                   std::size_t min_count, const Mask* valid = nullptr);

/// Rebuilds membership for `traj` on an existing geometry (samples outside
/// the geometry are excluded).
BinGrid assign_to_grid(const GridGeometry& geometry, const Trajectory& traj,
                       std::size_t min_count, const Mask* valid = nullptr);

/// Mean, centred second moment and centred fourth moment of a set of
/// velocity rows, with 1/count normalisation and compensated sums.
LocalMoments moments_from_rows(const SampleMatrix& velocities,
                               std::span<const Eigen::Index> rows);

/// Moments of every occupied bin. Membership comes from the grid, so a grid
/// built on one trajectory can be reused for a pointwise-transformed copy.
MomentMap accumulate_moments(const Trajectory& traj, const VelocitySeries& vel,
                             const BinGrid& grid);

}  // namespace innerseries

#pragma once

#include "innerseries/model.hpp"

namespace innerseries {

struct Reconstruction {
  /// steps_taken + 1 rows, starting with x0.
  SampleMatrix samples;
  double dt = 1.0;
  Eigen::Index steps_taken = 0;
  /// The state left the occupied region before `steps` were done.
  bool truncated = false;
  /// Steps whose weight sample was invalid (integrated as zero increments).
  Eigen::Index skipped_weights = 0;

  /// Throws when fewer than 3 samples were produced.
  Trajectory trajectory(std::vector<std::string> names = {}) const;
};

/// Forward Euler through the frame field:
///   x[k+1] = x[k] + dt * sum_i w_i[start + k] V_i(bin(x[k])).
/// Bins are resolved as for compute_weights (nearest occupied bin within one
/// grid step); integration stops with `truncated` set once none is found.
Reconstruction integrate_weights(const WeightSeries& w, const FrameField& field,
                                 const Eigen::VectorXd& x0, Eigen::Index steps,
                                 Eigen::Index start = 0);

}  // namespace innerseries

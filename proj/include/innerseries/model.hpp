#pragma once

// Domain types shared across the pipeline. Everything here is a value type;
// once built, instances are not mutated by library code and can be shared
// read-only between threads.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "innerseries/error.hpp"

namespace innerseries {

/// n x N sample matrix, one row per time step.
using SampleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-sample flag; 1 = usable.
using Mask = std::vector<std::uint8_t>;

/// Largest state-space dimension supported by the moment/frame code.
inline constexpr int kMaxDims = 6;

/// Uniformly sampled multichannel measurement x(t).
class Trajectory {
 public:
  Trajectory(SampleMatrix samples, double dt,
             std::vector<std::string> channel_names = {});

  Eigen::Index size() const { return samples_.rows(); }
  int dims() const { return static_cast<int>(samples_.cols()); }
  double dt() const { return dt_; }
  const SampleMatrix& samples() const { return samples_; }
  auto sample(Eigen::Index k) const { return samples_.row(k); }
  double time(Eigen::Index k) const { return static_cast<double>(k) * dt_; }
  const std::vector<std::string>& channel_names() const { return names_; }

 private:
  SampleMatrix samples_;
  double dt_;
  std::vector<std::string> names_;
};

/// Default channel labels x1..xN (or a prefix of choice).
std::vector<std::string> default_channel_names(int dims,
                                               const std::string& prefix = "x");

/// Time derivative estimate aligned index-for-index with a Trajectory.
struct VelocitySeries {
  SampleMatrix values;
  double dt = 1.0;
  Mask valid;

  Eigen::Index size() const { return values.rows(); }
  int dims() const { return static_cast<int>(values.cols()); }
  std::size_t valid_count() const;
};

/// The inner time series w(t). Weights are dimensionless: rows of M carry
/// inverse velocity units, so M * xdot has none.
struct WeightSeries {
  SampleMatrix values;
  double dt = 1.0;
  Mask valid;
  /// Set where the sample's own bin was unoccupied and a neighbouring bin's
  /// frame was used instead.
  Mask fallback;
  std::vector<std::string> channel_names;

  Eigen::Index size() const { return values.rows(); }
  int dims() const { return static_cast<int>(values.cols()); }
  std::size_t valid_count() const;
};

/// Multi-index into a BinGrid, one entry per axis.
using BinIndex = std::vector<int>;

/// Axis-aligned equal-width partition of measurement space (geometry only).
class GridGeometry {
 public:
  GridGeometry() = default;
  explicit GridGeometry(std::vector<std::vector<double>> edges);

  int dims() const { return static_cast<int>(edges_.size()); }
  int bins_on_axis(int axis) const {
    return static_cast<int>(edges_[axis].size()) - 1;
  }
  std::size_t bin_count() const { return bin_count_; }
  const std::vector<std::vector<double>>& edges() const { return edges_; }

  std::size_t flat(const BinIndex& index) const;
  BinIndex unflat(std::size_t flat) const;
  bool in_range(const BinIndex& index) const;

  /// Per-axis bin index of a point. Values below the lower edge map to -1,
  /// above the upper edge to bins_on_axis; the upper edge itself belongs to
  /// the last bin.
  BinIndex raw_index(std::span<const double> point) const;
  std::optional<std::size_t> locate(std::span<const double> point) const;

  Eigen::VectorXd center(std::size_t flat) const;
  Eigen::VectorXd widths() const;

  /// Flat indices of the face neighbours of a bin.
  std::vector<std::size_t> face_neighbors(std::size_t flat) const;

 private:
  std::vector<std::vector<double>> edges_;
  std::vector<std::size_t> strides_;
  std::size_t bin_count_ = 0;
};

/// Grid geometry plus the sample membership it was built with.
struct BinGrid {
  GridGeometry geometry;
  std::size_t min_count = 0;
  /// Flat bin of each sample; -1 for samples excluded as invalid.
  std::vector<std::int64_t> sample_bin;
  /// Member sample indices per flat bin, ascending.
  std::vector<std::vector<Eigen::Index>> members;

  std::size_t count(std::size_t flat) const { return members[flat].size(); }
  bool occupied(std::size_t flat) const {
    return members[flat].size() >= min_count && !members[flat].empty();
  }
  std::vector<std::size_t> occupied_bins() const;
};

/// Fully symmetric N^4 tensor stored densely.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int dims)
      : dims_(dims), data_(static_cast<std::size_t>(dims * dims * dims * dims)) {}

  int dims() const { return dims_; }
  double& operator()(int k, int l, int m, int n) { return data_[offset(k, l, m, n)]; }
  double operator()(int k, int l, int m, int n) const {
    return data_[offset(k, l, m, n)];
  }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t offset(int k, int l, int m, int n) const {
    return static_cast<std::size_t>(((k * dims_ + l) * dims_ + m) * dims_ + n);
  }
  int dims_ = 0;
  std::vector<double> data_;
};

/// Per-bin second- and fourth-order centred velocity correlations.
struct LocalMoments {
  std::size_t count = 0;
  Eigen::VectorXd mean_vel;
  Eigen::MatrixXd c2;
  Tensor4 c4;

  int dims() const { return static_cast<int>(c2.rows()); }
};

using MomentMap = std::map<std::size_t, LocalMoments>;

/// Per-bin frame: m whitens c2 and diagonalises the contracted fourth-order
/// correlation. v holds the columns of m^-1 (the local vectors); d[i] is the
/// diagonal entry belonging to row i of m.
struct LocalFrame {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  Eigen::VectorXd d;
  bool degenerate = false;

  int dims() const { return static_cast<int>(m.rows()); }
};

/// Frames on the occupied bins of a grid, made mutually consistent.
struct FrameField {
  GridGeometry grid;
  std::map<std::size_t, LocalFrame> frames;
  std::map<std::size_t, std::size_t> counts;
  /// Connected component each frame was aligned in (0 = the main one).
  std::map<std::size_t, int> component;
  /// Occupied bins dropped because their c2 was singular or non-finite.
  std::vector<std::size_t> skipped;
  int component_count = 0;

  int dims() const { return grid.dims(); }
  const LocalFrame* find(std::size_t flat) const;
};

/// Product of a permutation and per-channel reflections. Applied to a
/// vector u: (P u)[j] = signs[j] * u[perm[j]]. Indices are 0-based.
class SignedPermutation {
 public:
  SignedPermutation() = default;
  SignedPermutation(std::vector<int> perm, std::vector<int> signs);

  static SignedPermutation identity(int dims);

  int dims() const { return static_cast<int>(perm_.size()); }
  const std::vector<int>& perm() const { return perm_; }
  const std::vector<int>& signs() const { return signs_; }

  SignedPermutation inverse() const;
  Eigen::MatrixXd matrix() const;
  bool is_identity() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// Rows of the result are signed, permuted rows of m (P * m).
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& m) const;

  friend bool operator==(const SignedPermutation&, const SignedPermutation&) = default;

 private:
  std::vector<int> perm_;
  std::vector<int> signs_;
};

/// Output channel j = signs[j] * input channel perm[j]; mask kept.
WeightSeries apply_signed_permutation(const SignedPermutation& p,
                                      const WeightSeries& w);

/// compose(a, b) applied to w equals a applied to (b applied to w).
SignedPermutation compose_signed_permutations(const SignedPermutation& a,
                                              const SignedPermutation& b);

/// Every signed permutation of the given dimension (2^N * N! elements).
std::vector<SignedPermutation> all_signed_permutations(int dims);

/// Signed permutation P minimising ||r - P||_F. Exhaustive for N <= 4,
/// greedy largest-|entry| assignment beyond.
SignedPermutation nearest_signed_permutation(const Eigen::MatrixXd& r);

}  // namespace innerseries

#pragma once

// Loading, synthesising and transforming measurement time series.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "innerseries/model.hpp"

namespace innerseries {

// ---- files ----------------------------------------------------------------

/// A CSV file as read from disk. A column named "t" or "time" is the time
/// axis; a column named "valid" is a 0/1 mask; every other column is a channel.
struct CsvTable {
  SampleMatrix values;
  double dt = 0.0;
  std::vector<std::string> channel_names;
  Mask valid;
};

/// fixed_dt overrides (and ignores) any time column. Without it the time
/// column must be present and uniform within 1e-9 relative.
CsvTable read_csv_table(const std::string& path, std::optional<double> fixed_dt = {});
Trajectory read_csv_trajectory(const std::string& path,
                               std::optional<double> fixed_dt = {});
WeightSeries read_csv_weights(const std::string& path,
                              std::optional<double> fixed_dt = {});

/// Writes "t,<channels>[,valid]" with 17 significant digits.
void write_csv(const std::string& path, const SampleMatrix& values, double dt,
               const std::vector<std::string>& channel_names,
               const Mask* valid = nullptr);
void write_csv_trajectory(const std::string& path, const Trajectory& traj);
void write_csv_weights(const std::string& path, const WeightSeries& w);

/// PCM 16-bit WAV, any channel count. Samples keep their raw integer values.
Trajectory read_wav_trajectory(const std::string& path);
/// Values are multiplied by scale, rounded and clamped to int16.
void write_wav(const std::string& path, const SampleMatrix& values, double dt,
               double scale = 1.0);

// ---- generators -------------------------------------------------------------

/// x[k] = a sin(k dt).
Trajectory gen_sine(double amplitude, double dt, Eigen::Index n);

/// Speech-like 1-D signal: a sum of sinusoids with log-spaced random
/// frequencies under a slow amplitude envelope, peak |x| <= 1.
Trajectory gen_broadband(Eigen::Index n, double dt, std::uint64_t seed);

enum class VelocityShape {
  kSuperGaussian,  // v ~ u|u|, heavy tailed
  kSubGaussian,    // v ~ tanh(2u), nearly binary
};

/// 1-D walk reflected inside [-half_width, half_width]. The velocity is a
/// memoryless nonlinearity of a unit AR(1) Gaussian process (correlation
/// time `correlation_steps` samples), scaled by `speed` and by a position
/// profile 1 + profile * (z / half_width)^2.
struct WalkParams {
  double half_width = 1.0;
  double speed = 1.0;
  double correlation_steps = 50.0;
  double profile = 0.5;
  VelocityShape shape = VelocityShape::kSuperGaussian;
};

/// One-channel trajectory of the reflected walk.
Trajectory gen_walk(Eigen::Index n, double dt, const WalkParams& params,
                    std::uint64_t seed);

/// Two independent non-Gaussian sources within +-2^14 sampled at 16 kHz
/// (channel 1 heavy tailed, channel 2 nearly binary velocity). The mixing
/// map folds over near the corners of its full domain; on +-2^14 its
/// Jacobian determinant stays above 0.012.
Trajectory gen_two_sources(Eigen::Index n, std::uint64_t seed);

struct LiftedLatent {
  Trajectory latent;  // 2 channels in [-1, 1]^2
  Trajectory lifted;  // 6 channels
};

/// Smooth reflected 2-D latent walk (independent coordinates with distinct
/// velocity statistics) and its image under lift_primary.
LiftedLatent gen_lifted_latent(Eigen::Index n, std::uint64_t seed);

/// Fixed near-planar injective map R^2 -> R^6.
Eigen::VectorXd lift_primary(double z1, double z2);
/// A second, distinct lift composed with an invertible inverting/stretching
/// distortion of the latent square.
Eigen::VectorXd lift_distorted(double z1, double z2);
/// The latent distortion used inside lift_distorted.
Eigen::Vector2d goggles(double z1, double z2);

/// Applies a point map row by row.
template <class F>
Trajectory map_rows(const Trajectory& traj, int out_dims, F&& f,
                    const std::string& prefix = "y") {
  SampleMatrix out(traj.size(), out_dims);
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    Eigen::VectorXd y = f(traj.samples()(k, 0), traj.samples()(k, 1));
    out.row(k) = y.transpose();
  }
  return Trajectory(std::move(out), traj.dt(), default_channel_names(out_dims, prefix));
}

// ---- transforms -------------------------------------------------------------

/// Instantaneous invertible sensor model.
struct TransformSpec {
  enum class Kind { kAffine, kMonotonePolynomial, kAudioMixing, kCustomTable };
  Kind kind = Kind::kAffine;

  // affine: x' = A x + offset when `matrix` is non-empty, otherwise
  // x'_i = scale_i x_i + offset_i (length-1 vectors broadcast).
  Eigen::MatrixXd matrix;
  std::vector<double> scale;
  std::vector<double> offset;

  // monotone-polynomial: per channel, sum_j coefficients[j] x^j on
  // [domain_lo, domain_hi].
  std::vector<double> coefficients;
  double domain_lo = 0.0;
  double domain_hi = 0.0;

  // custom-table: piecewise linear through (table_x, table_y).
  std::vector<double> table_x;
  std::vector<double> table_y;

  static TransformSpec identity();
  static TransformSpec affine(std::vector<double> scale, std::vector<double> offset);
  static TransformSpec linear(Eigen::MatrixXd matrix, std::vector<double> offset = {});
  static TransformSpec polynomial(std::vector<double> coefficients, double lo, double hi);
  static TransformSpec audio_mixing();
  static TransformSpec table(std::vector<double> x, std::vector<double> y);

  /// Throws if the spec is malformed or not strictly monotone on its domain.
  void validate() const;
};

std::string to_string(TransformSpec::Kind kind);
TransformSpec::Kind transform_kind_from_string(const std::string& s);

Trajectory apply_transform(const Trajectory& traj, const TransformSpec& spec);

/// Evaluates a polynomial (ascending coefficients) and its derivative.
double eval_polynomial(const std::vector<double>& coefficients, double x);
double eval_polynomial_derivative(const std::vector<double>& coefficients, double x);

/// Half-width of the declared mixing domain, 2^15.
inline constexpr double kMixingDomain = 32768.0;
/// Half-width of the square on which the mixing map is injective with
/// margin, 2^14.
inline constexpr double kSourceDomain = 16384.0;

/// The two-source nonlinear mixing map
///   mu1 = 0.763 x1 + (958 - 0.0225 x2)^1.5
///   mu2 = 0.153 x2 + (3.75e7 - 763 x1 - 229 x2)^0.5
/// on |x1|, |x2| <= 2^15.
Eigen::Vector2d mixing_map(double x1, double x2);
Trajectory mix_two_sources(const Trajectory& traj2);

// ---- dimensionality reduction -----------------------------------------------

struct PcaResult {
  Trajectory embedded;
  /// Variance fraction of every principal component, descending.
  Eigen::VectorXd explained;
  /// k x D projection rows (unit length, sign fixed so the largest-|entry|
  /// loading is positive).
  Eigen::MatrixXd components;
  Eigen::VectorXd mean;
  /// Standard deviation of each retained component before normalisation.
  Eigen::VectorXd stddev;

  double explained_top() const { return explained.head(components.rows()).sum(); }
};

/// Top-k principal components, each rescaled to unit (population) variance.
PcaResult pca_embed(const Trajectory& series, int k);

}  // namespace innerseries

#pragma once

// Desk-scale experiment harness: builds both "sensor" arms, aligns their
// inner time series and scores them against fixed thresholds.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "innerseries/estimate.hpp"
#include "innerseries/frames.hpp"
#include "innerseries/ingest.hpp"
#include "innerseries/weights.hpp"

namespace innerseries {

struct ExperimentConfig {
  std::uint64_t seed = 7;
  /// 0 selects the experiment's default size.
  Eigen::Index samples = 0;
  /// Empty selects the experiment's default; mixture-2d takes one count
  /// (used per source and per mixture axis) or two.
  std::vector<int> bins;
  /// 0 selects 50 N^2.
  std::size_t min_count = 0;
  VelocityScheme scheme = VelocityScheme::kCentral;
  /// Where intermediates, plots and report.json go; empty writes nothing.
  std::string out_dir;
  /// "csv" or "wav" for series artefacts.
  std::string format = "csv";
  /// Second-sensor transform for sine and monotone-1d.
  std::optional<TransformSpec> transform;
  double amplitude = 1.0;
  FrameOptions frame_options;
  /// Samples shown in plots; 0 selects a default.
  Eigen::Index plot_window = 0;
};

struct ExperimentReport {
  std::string id;
  nlohmann::json json;
  bool passed = false;
};

std::vector<std::string> experiment_names();

/// name is one of sine, monotone-1d, lifted-2d, mixture-2d. Pipeline errors
/// are rethrown with the failing stage in the message.
ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config);

/// sgn(a cos t); points where |cos t| <= 1e-12 give 0 and are excluded from
/// sign scoring.
WeightSeries analytic_sine_weights(double amplitude, std::span<const double> times,
                                   double dt = 1.0);

/// Everything one sensor arm produces.
struct ArmResult {
  VelocitySeries velocity;
  BinGrid grid;
  MomentMap moments;
  FrameField field;
  WeightSeries weights;
  FrameResiduals worst;
};

ArmResult run_arm(const Trajectory& traj, std::span<const int> bins, std::size_t min_count,
                  VelocityScheme scheme, const FrameOptions& options);

/// Largest residuals over every bin of a field.
FrameResiduals worst_residuals(const FrameField& field, const MomentMap& moments);

}  // namespace innerseries

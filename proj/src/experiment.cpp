#include "innerseries/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "innerseries/reconstruct.hpp"
#include "innerseries/serialize.hpp"
#include "innerseries/svg.hpp"

namespace innerseries {

using nlohmann::json;

namespace {

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), name + ": " + e.what());
  }
}

class Criteria {
 public:
  void at_least(const std::string& name, double value, double threshold) {
    add(name, value, threshold, ">=", value >= threshold);
  }
  void below(const std::string& name, double value, double threshold) {
    add(name, value, threshold, "<", value < threshold);
  }
  void at_most(const std::string& name, double value, double threshold) {
    add(name, value, threshold, "<=", value <= threshold);
  }
  void frames(const FrameResiduals& worst) {
    below("frame_whitening_residual", worst.whitening, 1e-10);
    below("frame_offdiag_residual", worst.offdiag, 1e-8);
  }

  json list = json::array();
  bool all = true;

 private:
  void add(const std::string& name, double value, double threshold, const char* op, bool pass) {
    list.push_back({{"name", name},
                    {"value", value},
                    {"threshold", threshold},
                    {"comparison", op},
                    {"pass", pass}});
    all = all && pass;
  }
};

/// Writes artefacts into the output directory (when there is one) and
/// records their file names.
class Artifacts {
 public:
  Artifacts(const ExperimentConfig& config, std::string prefix)
      : dir_(config.out_dir), wav_(config.format == "wav"), prefix_(std::move(prefix)) {
    require(config.format == "csv" || config.format == "wav" || config.format == "json",
            ErrorCode::kInvalidArgument, "format must be csv, wav or json");
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  bool enabled() const { return !dir_.empty(); }

  // Series always go out as CSV so metrics can be recomputed exactly; with
  // the wav format a peak-normalised 16-bit copy is written alongside.
  void trajectory(const std::string& key, const Trajectory& traj) {
    series(key, traj.samples(), traj.dt(), traj.channel_names(), nullptr);
  }

  void weights(const std::string& key, const WeightSeries& w) {
    series(key, w.values, w.dt, w.channel_names, &w.valid);
  }

  void field(const std::string& key, const FrameField& f) {
    const std::string name = prefix_ + key + ".json";
    if (enabled()) write_frame_field(path(name), f);
    index[key] = name;
  }

  void plot(const std::string& key, const std::vector<PlotSeries>& series, Eigen::Index begin,
            Eigen::Index end, const std::string& title) {
    const std::string name = prefix_ + key + ".svg";
    if (enabled()) plot_svg(series, begin, end, path(name), title);
    index[key] = name;
  }

  void report(const json& j) {
    if (enabled()) write_text_file(path(prefix_ + "report.json"), j.dump(2) + "\n");
  }

  json index = json::object();

 private:
  void series(const std::string& key, const SampleMatrix& values, double dt,
              const std::vector<std::string>& names, const Mask* valid) {
    const std::string name = prefix_ + key + ".csv";
    if (enabled()) {
      write_csv(path(name), values, dt, names, valid);
      if (wav_) {
        const double peak = values.cwiseAbs().maxCoeff();
        write_wav(path(prefix_ + key + ".wav"), values, dt,
                  peak > 0.0 ? 0.9 * 32767.0 / peak : 1.0);
      }
    }
    index[key] = name;
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(dir_) / name).string();
  }
  std::string dir_;
  bool wav_;
  std::string prefix_;
};

std::size_t min_count_for(const ExperimentConfig& c, int dims) {
  return c.min_count > 0 ? c.min_count : default_min_count(dims);
}

json config_echo(const ExperimentConfig& c, Eigen::Index samples, const std::vector<int>& bins) {
  json j{{"seed", c.seed},
         {"samples", samples},
         {"bins", bins},
         {"min_count", c.min_count},
         {"scheme", to_string(c.scheme)},
         {"format", c.format},
         {"gap_tol", c.frame_options.gap_tol},
         {"cond_tol", c.frame_options.cond_tol}};
  if (c.transform) j["transform"] = to_json(*c.transform);
  return j;
}

json residuals_json(const FrameResiduals& r) {
  return {{"whitening", r.whitening}, {"offdiag", r.offdiag}};
}

FrameResiduals combine(const FrameResiduals& a, const FrameResiduals& b) {
  return {std::max(a.whitening, b.whitening), std::max(a.offdiag, b.offdiag)};
}

json field_summary(const ArmResult& arm) {
  std::size_t degenerate = 0, fallback = 0;
  for (const auto& [f, frame] : arm.field.frames) degenerate += frame.degenerate ? 1 : 0;
  for (auto flag : arm.weights.fallback) fallback += flag;
  return {{"occupied_bins", arm.field.frames.size()},
          {"skipped_bins", arm.field.skipped.size()},
          {"degenerate_bins", degenerate},
          {"components", arm.field.component_count},
          {"valid_weights", arm.weights.valid_count()},
          {"fallback_weights", fallback},
          {"residuals", residuals_json(arm.worst)}};
}

json finish(const std::string& id, json config, json metrics, Criteria& criteria,
            Artifacts& artifacts, bool& passed) {
  json report{{"schema", kReportSchema},
              {"experiment", id},
              {"config", std::move(config)},
              {"metrics", std::move(metrics)},
              {"criteria", criteria.list},
              {"artifacts", artifacts.index},
              {"passed", criteria.all}};
  artifacts.report(report);
  passed = criteria.all;
  return report;
}

// Fraction of scored samples whose sign agrees with the oracle, after the
// better of the two global reflections.
double sign_match_fraction(const WeightSeries& w, const WeightSeries& oracle,
                           const Trajectory& x, double amplitude) {
  std::size_t agree = 0, scored = 0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (!w.valid[k] || oracle.values(k, 0) == 0.0) continue;
    if (std::abs(x.samples()(k, 0)) >= 0.95 * std::abs(amplitude)) continue;
    ++scored;
    const double s = w.values(k, 0);
    if ((s > 0.0 && oracle.values(k, 0) > 0.0) || (s < 0.0 && oracle.values(k, 0) < 0.0)) ++agree;
  }
  require(scored > 0, ErrorCode::kEmpty, "no samples to score");
  const double f = static_cast<double>(agree) / static_cast<double>(scored);
  return std::max(f, 1.0 - f);
}

Eigen::Index window_end(const ExperimentConfig& c, Eigen::Index begin, Eigen::Index fallback,
                        Eigen::Index n) {
  const Eigen::Index len = c.plot_window > 0 ? c.plot_window : fallback;
  return std::min(n, begin + len);
}

// ---------------------------------------------------------------------------

ExperimentReport run_sine(const ExperimentConfig& c) {
  const double a = c.amplitude;
  const double dt = 0.01;
  const Eigen::Index n = c.samples > 0 ? c.samples : 100000;
  const std::vector<int> bins = c.bins.empty() ? std::vector<int>{128} : c.bins;
  const TransformSpec transform =
      c.transform ? *c.transform
                  : TransformSpec::polynomial({0.0, 1.0, 0.0, 0.5 / (a * a)}, -std::abs(a),
                                              std::abs(a));
  Artifacts files(c, "sine_");

  const Trajectory x = stage("synth", [&] { return gen_sine(a, dt, n); });
  const Trajectory xp = stage("transform", [&] { return apply_transform(x, transform); });
  const std::size_t min_count = min_count_for(c, 1);
  const ArmResult raw =
      stage("raw arm", [&] { return run_arm(x, bins, min_count, c.scheme, c.frame_options); });
  const ArmResult warped = stage(
      "transformed arm", [&] { return run_arm(xp, bins, min_count, c.scheme, c.frame_options); });

  std::vector<double> times(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) times[k] = x.time(k);
  const WeightSeries oracle = analytic_sine_weights(a, times, dt);

  const double match = stage("score", [&] { return sign_match_fraction(raw.weights, oracle, x, a); });
  const double match_prime =
      stage("score", [&] { return sign_match_fraction(warped.weights, oracle, x, a); });
  const WeightAlignment align =
      stage("align", [&] { return align_weight_series(raw.weights, warped.weights); });

  double c2_err = 0.0;
  json c2_bins = json::array();
  for (const auto& [f, m] : raw.moments) {
    const double center = raw.grid.geometry.center(f)[0];
    const double expected = a * a - center * center;
    c2_err = std::max(c2_err, std::abs(m.c2(0, 0) - expected));
  }

  // Reconstruction from the first valid sample.
  const Eigen::Index start = 1;
  const Eigen::Index steps = std::min<Eigen::Index>(1000, n - start - 1);
  Eigen::VectorXd x0(1);
  x0[0] = x.samples()(start, 0);
  const Reconstruction rec = stage(
      "reconstruct", [&] { return integrate_weights(raw.weights, raw.field, x0, steps, start); });
  double sq_err = 0.0, sq_ref = 0.0;
  for (Eigen::Index k = 0; k <= rec.steps_taken; ++k) {
    const double truth = x.samples()(start + k, 0);
    const double diff = rec.samples(k, 0) - truth;
    sq_err += diff * diff;
    sq_ref += truth * truth;
  }
  const double rel_rmse = rec.truncated ? std::numeric_limits<double>::infinity()
                                        : std::sqrt(sq_err / sq_ref);

  const FrameResiduals worst = combine(raw.worst, warped.worst);
  Criteria criteria;
  criteria.at_least("sign_match_fraction", match, 0.95);
  criteria.at_least("transformed_sign_match_fraction", match_prime, 0.95);
  criteria.at_most("c2_max_abs_error", c2_err, 0.05);
  criteria.frames(worst);
  criteria.below("reconstruction_relative_rmse", rel_rmse, 0.05);

  json metrics{{"sign_match_fraction", match},
               {"transformed_sign_match_fraction", match_prime},
               {"aligned_correlation", align.correlations[0]},
               {"alignment", to_json(align)},
               {"c2_max_abs_error", c2_err},
               {"reconstruction",
                {{"start", start},
                 {"steps", steps},
                 {"steps_taken", rec.steps_taken},
                 {"truncated", rec.truncated},
                 {"relative_rmse", rel_rmse}}},
               {"raw_field", field_summary(raw)},
               {"transformed_field", field_summary(warped)},
               {"frame_residuals", residuals_json(worst)}};

  files.trajectory("x", x);
  files.trajectory("xprime", xp);
  files.field("frames", raw.field);
  files.field("frames_prime", warped.field);
  files.weights("w", raw.weights);
  files.weights("wprime", warped.weights);
  files.weights("w_analytic", oracle);
  if (rec.steps_taken >= 2) files.trajectory("reconstruction", rec.trajectory({"x"}));
  const Eigen::Index end = window_end(c, 1, 629, n - 1);
  files.plot("x_plot", {plot_series(x, "x(t)"), plot_series(xp, "x'(t)")}, 1, end,
             "sine: measurements");
  files.plot("w_plot",
             {plot_series(raw.weights, "w(t)"),
              plot_series(apply_signed_permutation(align.p, warped.weights), "P w'(t)")},
             1, end, "sine: inner time series");

  ExperimentReport out{"sine", {}, false};
  out.json = finish("sine", config_echo(c, n, bins), std::move(metrics), criteria, files,
                    out.passed);
  return out;
}

ExperimentReport run_monotone(const ExperimentConfig& c) {
  const double dt = 1.0 / 16000.0;
  const Eigen::Index n = c.samples > 0 ? c.samples : 500000;
  const std::vector<int> bins = c.bins.empty() ? std::vector<int>{128} : c.bins;
  const TransformSpec transform =
      c.transform ? *c.transform : TransformSpec::polynomial({0.0, 1.0, 0.0, 0.8}, -1.0, 1.0);
  Artifacts files(c, "monotone_");

  const Trajectory x = stage("synth", [&] { return gen_broadband(n, dt, c.seed); });
  const Trajectory xp = stage("transform", [&] { return apply_transform(x, transform); });
  const std::size_t min_count = min_count_for(c, 1);
  const ArmResult raw =
      stage("raw arm", [&] { return run_arm(x, bins, min_count, c.scheme, c.frame_options); });
  const ArmResult warped = stage(
      "transformed arm", [&] { return run_arm(xp, bins, min_count, c.scheme, c.frame_options); });
  const WeightAlignment align =
      stage("align", [&] { return align_weight_series(raw.weights, warped.weights); });

  const FrameResiduals worst = combine(raw.worst, warped.worst);
  Criteria criteria;
  criteria.at_least("aligned_correlation", align.correlations[0], 0.95);
  criteria.frames(worst);

  json metrics{{"aligned_correlation", align.correlations[0]},
               {"alignment", to_json(align)},
               {"raw_field", field_summary(raw)},
               {"transformed_field", field_summary(warped)},
               {"frame_residuals", residuals_json(worst)}};

  files.trajectory("x", x);
  files.trajectory("xprime", xp);
  files.field("frames", raw.field);
  files.field("frames_prime", warped.field);
  files.weights("w", raw.weights);
  files.weights("wprime", warped.weights);
  const Eigen::Index end = window_end(c, 1, 500, n - 1);
  files.plot("x_plot", {plot_series(x, "x(t)"), plot_series(xp, "x'(t)")}, 1, end,
             "monotone-1d: measurements");
  files.plot("w_plot",
             {plot_series(raw.weights, "w(t)"),
              plot_series(apply_signed_permutation(align.p, warped.weights), "P w'(t)")},
             1, end, "monotone-1d: inner time series");

  ExperimentReport out{"monotone-1d", {}, false};
  out.json = finish("monotone-1d", config_echo(c, n, bins), std::move(metrics), criteria, files,
                    out.passed);
  return out;
}

ExperimentReport run_lifted(const ExperimentConfig& c) {
  const Eigen::Index n = c.samples > 0 ? c.samples : 200000;
  const std::vector<int> bins = c.bins.empty() ? std::vector<int>{4, 4} : c.bins;
  Artifacts files(c, "lifted_");

  const LiftedLatent gen = stage("synth", [&] { return gen_lifted_latent(n, c.seed); });
  const Trajectory lifted2 =
      stage("synth", [&] { return map_rows(gen.latent, 6, lift_distorted, "y"); });
  const PcaResult pca = stage("pca", [&] { return pca_embed(gen.lifted, 2); });
  const PcaResult pca2 = stage("pca", [&] { return pca_embed(lifted2, 2); });
  const std::size_t min_count = min_count_for(c, 2);
  const ArmResult raw = stage(
      "raw arm", [&] { return run_arm(pca.embedded, bins, min_count, c.scheme, c.frame_options); });
  const ArmResult warped = stage("distorted arm", [&] {
    return run_arm(pca2.embedded, bins, min_count, c.scheme, c.frame_options);
  });
  const WeightAlignment align =
      stage("align", [&] { return align_weight_series(raw.weights, warped.weights); });

  const FrameResiduals worst = combine(raw.worst, warped.worst);
  Criteria criteria;
  criteria.at_least("pca_explained_top2", pca.explained_top(), 0.99);
  criteria.at_least("pca_explained_top2_distorted", pca2.explained_top(), 0.99);
  criteria.at_least("min_aligned_correlation", align.correlations.minCoeff(), 0.9);
  criteria.frames(worst);

  json metrics{{"pca_explained", vector_to_json(pca.explained)},
               {"pca_explained_distorted", vector_to_json(pca2.explained)},
               {"aligned_correlations", vector_to_json(align.correlations)},
               {"alignment", to_json(align)},
               {"raw_field", field_summary(raw)},
               {"distorted_field", field_summary(warped)},
               {"frame_residuals", residuals_json(worst)}};

  files.trajectory("latent", gen.latent);
  files.trajectory("lifted", gen.lifted);
  files.trajectory("lifted_distorted", lifted2);
  files.trajectory("x", pca.embedded);
  files.trajectory("xprime", pca2.embedded);
  files.field("frames", raw.field);
  files.field("frames_prime", warped.field);
  files.weights("w", raw.weights);
  files.weights("wprime", warped.weights);
  const Eigen::Index end = window_end(c, 1, 510, n - 1);
  files.plot("x_plot", {plot_series(pca.embedded, "x(t)"), plot_series(pca2.embedded, "x'(t)")},
             1, end, "lifted-2d: measurements");
  files.plot("w_plot",
             {plot_series(raw.weights, "w(t)"),
              plot_series(apply_signed_permutation(align.p, warped.weights), "P w'(t)")},
             1, end, "lifted-2d: inner time series");

  ExperimentReport out{"lifted-2d", {}, false};
  out.json = finish("lifted-2d", config_echo(c, n, bins), std::move(metrics), criteria, files,
                    out.passed);
  return out;
}

ExperimentReport run_mixture(const ExperimentConfig& c) {
  const Eigen::Index n = c.samples > 0 ? c.samples : 500000;
  std::vector<int> bins = c.bins.empty() ? std::vector<int>{16} : c.bins;
  require(bins.size() == 1 || bins.size() == 2, ErrorCode::kInvalidArgument,
          "mixture-2d takes one or two bin counts");
  if (bins.size() == 1) bins.push_back(bins[0]);
  Artifacts files(c, "mixture_");

  const Trajectory sources = stage("synth", [&] { return gen_two_sources(n, c.seed); });
  const Trajectory s1(sources.samples().col(0), sources.dt(), {"s1"});
  const Trajectory s2(sources.samples().col(1), sources.dt(), {"s2"});
  const Trajectory mixed = stage("mix", [&] { return mix_two_sources(sources); });
  const PcaResult pca = stage("pca", [&] { return pca_embed(mixed, 2); });

  const std::size_t mc1 = min_count_for(c, 1), mc2 = min_count_for(c, 2);
  const std::array<int, 1> b1{bins[0]}, b2{bins[1]};
  const ArmResult arm1 =
      stage("source 1", [&] { return run_arm(s1, b1, mc1, c.scheme, c.frame_options); });
  const ArmResult arm2 =
      stage("source 2", [&] { return run_arm(s2, b2, mc1, c.scheme, c.frame_options); });
  const ArmResult mix = stage(
      "mixture", [&] { return run_arm(pca.embedded, bins, mc2, c.scheme, c.frame_options); });

  const SeparabilityReport sep = stage("separability", [&] {
    return separability_report(mix.weights, {arm1.weights, arm2.weights});
  });

  const FrameResiduals worst = combine(combine(arm1.worst, arm2.worst), mix.worst);
  Criteria criteria;
  criteria.at_least("min_matched_correlation", sep.min_match, 0.9);
  criteria.below("max_mixture_cross_correlation", sep.max_cross, 0.05);
  criteria.frames(worst);

  json metrics{{"separability", to_json(sep)},
               {"pca_explained", vector_to_json(pca.explained)},
               {"source1_field", field_summary(arm1)},
               {"source2_field", field_summary(arm2)},
               {"mixture_field", field_summary(mix)},
               {"frame_residuals", residuals_json(worst)}};

  files.trajectory("sources", sources);
  files.trajectory("mixed", mixed);
  files.trajectory("xprime", pca.embedded);
  files.field("frames_source1", arm1.field);
  files.field("frames_source2", arm2.field);
  files.field("frames_mixture", mix.field);
  files.weights("w_source1", arm1.weights);
  files.weights("w_source2", arm2.weights);
  files.weights("w_mixture", mix.weights);
  const WeightSeries joined = concatenate_channels({arm1.weights, arm2.weights});
  const Eigen::Index end = window_end(c, 1, 500, n - 1);
  files.plot("x_plot", {plot_series(sources, "x(t)"), plot_series(pca.embedded, "x'(t)")}, 1,
             end, "mixture-2d: unmixed and mixed measurements");
  files.plot("w_plot",
             {plot_series(joined, "w(t)"),
              plot_series(apply_signed_permutation(sep.alignment.p, mix.weights), "P w'(t)")},
             1, end, "mixture-2d: inner time series");

  std::vector<int> echo_bins = bins;
  ExperimentReport out{"mixture-2d", {}, false};
  out.json = finish("mixture-2d", config_echo(c, n, echo_bins), std::move(metrics), criteria,
                    files, out.passed);
  return out;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"sine", "monotone-1d", "lifted-2d", "mixture-2d"};
}

WeightSeries analytic_sine_weights(double amplitude, std::span<const double> times, double dt) {
  require(amplitude != 0.0, ErrorCode::kInvalidArgument, "amplitude must be non-zero");
  WeightSeries w;
  const auto n = static_cast<Eigen::Index>(times.size());
  w.dt = dt;
  w.values.resize(n, 1);
  w.valid.assign(times.size(), 1);
  w.fallback.assign(times.size(), 0);
  w.channel_names = {"w1"};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double c = std::cos(times[k]);
    w.values(k, 0) = std::abs(c) <= 1e-12 ? 0.0 : (amplitude * c > 0.0 ? 1.0 : -1.0);
  }
  return w;
}

FrameResiduals worst_residuals(const FrameField& field, const MomentMap& moments) {
  FrameResiduals worst;
  for (const auto& [f, frame] : field.frames) {
    const FrameResiduals r = frame_residuals(frame, moments.at(f));
    worst.whitening = std::max(worst.whitening, r.whitening);
    worst.offdiag = std::max(worst.offdiag, r.offdiag);
  }
  return worst;
}

ArmResult run_arm(const Trajectory& traj, std::span<const int> bins, std::size_t min_count,
                  VelocityScheme scheme, const FrameOptions& options) {
  ArmResult arm;
  arm.velocity = stage("velocity", [&] { return estimate_velocity(traj, scheme); });
  arm.grid = stage("grid", [&] { return build_grid(traj, bins, min_count, &arm.velocity.valid); });
  arm.moments = stage("moments", [&] { return accumulate_moments(traj, arm.velocity, arm.grid); });
  arm.field =
      stage("frames", [&] { return build_frame_field(arm.grid.geometry, arm.moments, options); });
  arm.weights = stage("weights", [&] { return compute_weights(traj, arm.velocity, arm.field); });
  arm.worst = worst_residuals(arm.field, arm.moments);
  return arm;
}

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config) {
  if (name == "sine") return run_sine(config);
  if (name == "monotone-1d") return run_monotone(config);
  if (name == "lifted-2d") return run_lifted(config);
  if (name == "mixture-2d") return run_mixture(config);
  fail(ErrorCode::kInvalidArgument, "unknown experiment '" + name + "'");
}

}  // namespace innerseries

#include "innerseries/innerseries.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include <json.hpp>

#include "innerseries/estimate.hpp"
#include "innerseries/experiment.hpp"
#include "innerseries/frames.hpp"
#include "innerseries/ingest.hpp"
#include "innerseries/reconstruct.hpp"
#include "innerseries/serialize.hpp"
#include "innerseries/svg.hpp"
#include "innerseries/weights.hpp"

using nlohmann::json;
using namespace innerseries;

struct ins_series {
  SampleMatrix values;
  double dt = 1.0;
  Mask valid;
  Mask fallback;
  std::vector<std::string> names;
};

struct ins_field {
  FrameField field;
};

namespace {

constexpr const char* kVersion = "1.0.0";

thread_local std::string last_error;

template <class F>
ins_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return INS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<ins_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    last_error = e.what();
    return INS_FORMAT;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return INS_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return INS_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return INS_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put_json(char** out, const json& j) {
  if (out) *out = dup_string(j.dump(2));
}

json parse_config(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  require(j.is_object(), ErrorCode::kFormat, "configuration must be a JSON object");
  return j;
}

ins_series* make(SampleMatrix values, double dt, Mask valid, std::vector<std::string> names,
                 Mask fallback = {}) {
  auto* s = new ins_series;
  s->values = std::move(values);
  s->dt = dt;
  s->valid = valid.empty() ? Mask(static_cast<std::size_t>(s->values.rows()), 1) : std::move(valid);
  s->fallback = std::move(fallback);
  s->names = names.empty() ? default_channel_names(static_cast<int>(s->values.cols()))
                           : std::move(names);
  return s;
}

ins_series* make(const Trajectory& t) {
  return make(t.samples(), t.dt(), {}, t.channel_names());
}

ins_series* make(const WeightSeries& w) {
  return make(w.values, w.dt, w.valid, w.channel_names, w.fallback);
}

Trajectory to_trajectory(const ins_series* s) {
  need(s, "series");
  return Trajectory(s->values, s->dt, s->names);
}

WeightSeries to_weights(const ins_series* s) {
  need(s, "series");
  WeightSeries w;
  w.values = s->values;
  w.dt = s->dt;
  w.valid = s->valid;
  w.fallback = s->fallback.empty() ? Mask(s->valid.size(), 0) : s->fallback;
  w.channel_names = s->names;
  return w;
}

// Velocity from the given series, or central differences of the trajectory.
// Samples the trajectory marks invalid never contribute.
VelocitySeries velocity_for(const Trajectory& traj, const ins_series* traj_series,
                            const ins_series* velocity) {
  VelocitySeries v;
  if (velocity) {
    require(velocity->values.rows() == traj.size() && velocity->values.cols() == traj.dims(),
            ErrorCode::kDimensionMismatch, "velocity series not aligned with trajectory");
    v.values = velocity->values;
    v.dt = velocity->dt;
    v.valid = velocity->valid;
  } else {
    v = estimate_velocity(traj, VelocityScheme::kCentral);
  }
  for (std::size_t k = 0; k < v.valid.size(); ++k) v.valid[k] = v.valid[k] && traj_series->valid[k];
  return v;
}

std::vector<int> bin_list(const int* bins, std::size_t axes) {
  need(bins, "bins");
  require(axes > 0, ErrorCode::kInvalidArgument, "at least one bin count is required");
  return std::vector<int>(bins, bins + axes);
}

std::size_t min_count_or_default(std::size_t min_count, int dims) {
  return min_count > 0 ? min_count : default_min_count(dims);
}

struct Stage {
  Trajectory traj;
  VelocitySeries vel;
  BinGrid grid;
};

Stage prepare(const ins_series* traj, const ins_series* velocity, const int* bins,
              std::size_t bin_axes, std::size_t min_count) {
  Trajectory t = to_trajectory(traj);
  VelocitySeries v = velocity_for(t, traj, velocity);
  const auto b = bin_list(bins, bin_axes);
  BinGrid g = build_grid(t, b, min_count_or_default(min_count, t.dims()), &v.valid);
  return {std::move(t), std::move(v), std::move(g)};
}

std::string extension(const char* path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

extern "C" {

const char* ins_version(void) { return kVersion; }

const char* ins_last_error(void) { return last_error.c_str(); }

const char* ins_status_name(ins_status status) {
  switch (status) {
    case INS_OK: return "ok";
    case INS_INVALID_ARGUMENT: return "invalid argument";
    case INS_DIMENSION_MISMATCH: return "dimension mismatch";
    case INS_DOMAIN: return "domain error";
    case INS_IO: return "i/o error";
    case INS_FORMAT: return "format error";
    case INS_NUMERICAL: return "numerical error";
    case INS_EMPTY: return "empty";
    case INS_INTERNAL: return "internal error";
  }
  return "unknown";
}

void ins_string_free(char* s) { std::free(s); }

ins_status ins_series_create(const double* values, size_t n, size_t channels, double dt,
                             const uint8_t* valid, ins_series** out) {
  return guard([&] {
    need(values, "values");
    need(out, "out");
    require(n > 0 && channels > 0, ErrorCode::kInvalidArgument, "series must be non-empty");
    require(dt > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
    SampleMatrix m = Eigen::Map<const SampleMatrix>(values, static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(channels));
    Mask mask = valid ? Mask(valid, valid + n) : Mask{};
    for (auto& b : mask) b = b ? 1 : 0;
    *out = make(std::move(m), dt, std::move(mask), {});
  });
}

void ins_series_free(ins_series* s) { delete s; }

size_t ins_series_length(const ins_series* s) {
  return s ? static_cast<size_t>(s->values.rows()) : 0;
}

size_t ins_series_channels(const ins_series* s) {
  return s ? static_cast<size_t>(s->values.cols()) : 0;
}

double ins_series_dt(const ins_series* s) { return s ? s->dt : 0.0; }

size_t ins_series_valid_count(const ins_series* s) {
  if (!s) return 0;
  size_t n = 0;
  for (auto b : s->valid) n += b;
  return n;
}

ins_status ins_series_value(const ins_series* s, size_t k, size_t channel, double* out) {
  return guard([&] {
    need(s, "series");
    need(out, "out");
    require(k < ins_series_length(s) && channel < ins_series_channels(s),
            ErrorCode::kInvalidArgument, "index out of range");
    *out = s->values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(channel));
  });
}

int ins_series_valid(const ins_series* s, size_t k) {
  return s && k < s->valid.size() ? s->valid[k] : 0;
}

ins_status ins_series_copy(const ins_series* s, double* buffer, size_t capacity) {
  return guard([&] {
    need(s, "series");
    need(buffer, "buffer");
    const auto size = static_cast<size_t>(s->values.size());
    require(capacity >= size, ErrorCode::kInvalidArgument, "buffer too small");
    std::memcpy(buffer, s->values.data(), size * sizeof(double));
  });
}

ins_status ins_series_read(const char* path, double fixed_dt, ins_series** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const std::string ext = extension(path);
    if (ext == ".wav") {
      *out = make(read_wav_trajectory(path));
      return;
    }
    require(ext == ".csv", ErrorCode::kFormat, std::string("unsupported file type: ") + path);
    CsvTable t = read_csv_table(path, fixed_dt > 0.0 ? std::optional<double>(fixed_dt)
                                                     : std::nullopt);
    *out = make(std::move(t.values), t.dt, std::move(t.valid), std::move(t.channel_names));
  });
}

ins_status ins_series_write(const ins_series* s, const char* path, double wav_scale) {
  return guard([&] {
    need(s, "series");
    need(path, "path");
    const std::string ext = extension(path);
    if (ext == ".wav") {
      double scale = wav_scale;
      if (scale == 0.0) {
        const double peak = s->values.cwiseAbs().maxCoeff();
        scale = peak > 0.0 ? 0.9 * 32767.0 / peak : 1.0;
      }
      write_wav(path, s->values, s->dt, scale);
      return;
    }
    require(ext == ".csv", ErrorCode::kFormat, std::string("unsupported file type: ") + path);
    const bool all_valid = ins_series_valid_count(s) == s->valid.size();
    write_csv(path, s->values, s->dt, s->names, all_valid ? nullptr : &s->valid);
  });
}

ins_status ins_synth(const char* kind, const char* config_json, ins_series** out) {
  return guard([&] {
    need(kind, "kind");
    need(out, "out");
    const json c = parse_config(config_json);
    const std::string k = kind;
    const auto seed = c.value("seed", std::uint64_t{7});
    auto samples = [&](Eigen::Index fallback) {
      const auto n = c.value("samples", std::int64_t{0});
      require(n >= 0, ErrorCode::kInvalidArgument, "samples must be non-negative");
      return n > 0 ? static_cast<Eigen::Index>(n) : fallback;
    };
    if (k == "sine") {
      *out = make(gen_sine(c.value("amplitude", 1.0), c.value("dt", 0.01), samples(100000)));
    } else if (k == "broadband") {
      *out = make(gen_broadband(samples(500000), c.value("dt", 1.0 / 16000.0), seed));
    } else if (k == "sources") {
      *out = make(gen_two_sources(samples(500000), seed));
    } else if (k == "mixture") {
      *out = make(mix_two_sources(gen_two_sources(samples(500000), seed)));
    } else if (k == "latent" || k == "lifted" || k == "lifted-distorted") {
      const LiftedLatent g = gen_lifted_latent(samples(200000), seed);
      if (k == "latent") {
        *out = make(g.latent);
      } else if (k == "lifted") {
        *out = make(g.lifted);
      } else {
        *out = make(map_rows(g.latent, 6, lift_distorted, "y"));
      }
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown synth kind '" + k + "'");
    }
  });
}

ins_status ins_transform(const ins_series* in, const char* spec_json, ins_series** out) {
  return guard([&] {
    need(spec_json, "spec");
    need(out, "out");
    const TransformSpec spec = transform_from_json(json::parse(spec_json));
    const Trajectory t = apply_transform(to_trajectory(in), spec);
    *out = make(t.samples(), t.dt(), in->valid, t.channel_names());
  });
}

ins_status ins_pca(const ins_series* in, int k, ins_series** out, char** info_json) {
  return guard([&] {
    need(out, "out");
    const PcaResult r = pca_embed(to_trajectory(in), k);
    put_json(info_json, {{"explained", vector_to_json(r.explained)},
                         {"explained_top", r.explained_top()},
                         {"components", matrix_to_json(r.components)},
                         {"mean", vector_to_json(r.mean)},
                         {"stddev", vector_to_json(r.stddev)}});
    *out = make(r.embedded.samples(), r.embedded.dt(), in->valid, r.embedded.channel_names());
  });
}

ins_status ins_velocity(const ins_series* traj, const char* scheme, ins_series** out) {
  return guard([&] {
    need(out, "out");
    const VelocityScheme sc =
        velocity_scheme_from_string(scheme && *scheme ? scheme : "central");
    const Trajectory t = to_trajectory(traj);
    VelocitySeries v = estimate_velocity(t, sc);
    for (std::size_t k = 0; k < v.valid.size(); ++k) v.valid[k] = v.valid[k] && traj->valid[k];
    *out = make(std::move(v.values), v.dt, std::move(v.valid),
                default_channel_names(t.dims(), "v"));
  });
}

ins_status ins_grid_json(const ins_series* traj, const ins_series* velocity, const int* bins,
                         size_t bin_axes, size_t min_count, char** out) {
  return guard([&] {
    need(out, "out");
    const Stage s = prepare(traj, velocity, bins, bin_axes, min_count);
    put_json(out, grid_to_json(s.grid));
  });
}

ins_status ins_moments_json(const ins_series* traj, const ins_series* velocity, const int* bins,
                            size_t bin_axes, size_t min_count, char** out) {
  return guard([&] {
    need(out, "out");
    const Stage s = prepare(traj, velocity, bins, bin_axes, min_count);
    const MomentMap m = accumulate_moments(s.traj, s.vel, s.grid);
    json j = moments_to_json(s.grid.geometry, m);
    j["min_count"] = s.grid.min_count;
    put_json(out, j);
  });
}

ins_status ins_field_build(const ins_series* traj, const ins_series* velocity, const int* bins,
                           size_t bin_axes, size_t min_count, const char* options_json,
                           ins_field** out, char** summary_json) {
  return guard([&] {
    need(out, "out");
    const json o = parse_config(options_json);
    FrameOptions options;
    options.gap_tol = o.value("gap_tol", options.gap_tol);
    options.cond_tol = o.value("cond_tol", options.cond_tol);
    const Stage s = prepare(traj, velocity, bins, bin_axes, min_count);
    const MomentMap m = accumulate_moments(s.traj, s.vel, s.grid);
    auto f = std::make_unique<ins_field>();
    f->field = build_frame_field(s.grid.geometry, m, options);
    if (summary_json) {
      const FrameResiduals worst = worst_residuals(f->field, m);
      std::size_t degenerate = 0;
      for (const auto& [flat, frame] : f->field.frames) degenerate += frame.degenerate ? 1 : 0;
      put_json(summary_json, {{"occupied_bins", f->field.frames.size()},
                              {"skipped_bins", f->field.skipped.size()},
                              {"degenerate_bins", degenerate},
                              {"components", f->field.component_count},
                              {"min_count", s.grid.min_count},
                              {"residuals",
                               {{"whitening", worst.whitening}, {"offdiag", worst.offdiag}}}});
    }
    *out = f.release();
  });
}

void ins_field_free(ins_field* f) { delete f; }

size_t ins_field_dims(const ins_field* f) {
  return f ? static_cast<size_t>(f->field.dims()) : 0;
}

size_t ins_field_bin_count(const ins_field* f) { return f ? f->field.frames.size() : 0; }

ins_status ins_field_read(const char* path, ins_field** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto f = std::make_unique<ins_field>();
    f->field = read_frame_field(path);
    *out = f.release();
  });
}

ins_status ins_field_write(const ins_field* f, const char* path) {
  return guard([&] {
    need(f, "field");
    need(path, "path");
    write_frame_field(path, f->field);
  });
}

ins_status ins_field_json(const ins_field* f, char** out) {
  return guard([&] {
    need(f, "field");
    need(out, "out");
    *out = dup_string(frame_field_to_json(f->field));
  });
}

ins_status ins_weights(const ins_series* traj, const ins_series* velocity, const ins_field* field,
                       ins_series** out) {
  return guard([&] {
    need(field, "field");
    need(out, "out");
    const Trajectory t = to_trajectory(traj);
    const VelocitySeries v = velocity_for(t, traj, velocity);
    *out = make(compute_weights(t, v, field->field));
  });
}

ins_status ins_align(const ins_series* w, const ins_series* wprime, char** out) {
  return guard([&] {
    need(out, "out");
    put_json(out, to_json(align_weight_series(to_weights(w), to_weights(wprime))));
  });
}

ins_status ins_series_permute(const ins_series* in, const char* permutation_json,
                              ins_series** out) {
  return guard([&] {
    need(permutation_json, "permutation");
    need(out, "out");
    json j = json::parse(permutation_json);
    if (j.contains("permutation")) j = j.at("permutation");
    const SignedPermutation p = signed_permutation_from_json(j);
    *out = make(apply_signed_permutation(p, to_weights(in)));
  });
}

ins_status ins_separability(const ins_series* mixture, const ins_series* const* sources,
                            size_t source_count, char** out, int* passed) {
  return guard([&] {
    need(sources, "sources");
    require(source_count > 0, ErrorCode::kInvalidArgument, "at least one source is required");
    std::vector<WeightSeries> parts;
    for (size_t i = 0; i < source_count; ++i) parts.push_back(to_weights(sources[i]));
    const SeparabilityReport r = separability_report(to_weights(mixture), parts);
    put_json(out, to_json(r));
    if (passed) *passed = r.pass() ? 1 : 0;
  });
}

ins_status ins_reconstruct(const ins_series* weights, const ins_field* field, const double* x0,
                           size_t dims, size_t steps, size_t start, ins_series** out,
                           char** info_json) {
  return guard([&] {
    need(field, "field");
    need(x0, "x0");
    need(out, "out");
    const Eigen::VectorXd origin =
        Eigen::Map<const Eigen::VectorXd>(x0, static_cast<Eigen::Index>(dims));
    const Reconstruction r =
        integrate_weights(to_weights(weights), field->field, origin,
                          static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(start));
    put_json(info_json, {{"steps_taken", r.steps_taken},
                         {"truncated", r.truncated},
                         {"skipped_weights", r.skipped_weights}});
    *out = make(r.samples, r.dt, {}, {});
  });
}

ins_status ins_experiment_run(const char* name, const char* config_json, char** report_json,
                              int* passed) {
  return guard([&] {
    need(name, "name");
    const json c = parse_config(config_json);
    ExperimentConfig config;
    config.seed = c.value("seed", config.seed);
    config.samples = c.value("samples", config.samples);
    config.bins = c.value("bins", config.bins);
    config.min_count = c.value("min_count", config.min_count);
    if (c.contains("scheme")) config.scheme = velocity_scheme_from_string(c.at("scheme").get<std::string>());
    config.out_dir = c.value("out_dir", config.out_dir);
    config.format = c.value("format", config.format);
    if (c.contains("transform")) config.transform = transform_from_json(c.at("transform"));
    config.amplitude = c.value("amplitude", config.amplitude);
    config.frame_options.gap_tol = c.value("gap_tol", config.frame_options.gap_tol);
    config.frame_options.cond_tol = c.value("cond_tol", config.frame_options.cond_tol);
    config.plot_window = c.value("plot_window", config.plot_window);
    require(config.samples >= 0, ErrorCode::kInvalidArgument, "samples must be non-negative");
    const ExperimentReport r = run_experiment(name, config);
    put_json(report_json, r.json);
    if (passed) *passed = r.passed ? 1 : 0;
  });
}

const char* ins_experiment_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : experiment_names()) s += n + "\n";
    return s;
  }();
  return names.c_str();
}

ins_status ins_plot_svg(const ins_series* const* series, const char* const* labels, size_t count,
                        size_t begin, size_t end, const char* title, const char* path) {
  return guard([&] {
    need(series, "series");
    need(path, "path");
    std::vector<PlotSeries> plots;
    for (size_t i = 0; i < count; ++i) {
      const std::string label = labels && labels[i] ? labels[i] : "series " + std::to_string(i + 1);
      plots.push_back(plot_series(to_weights(series[i]), label));
    }
    plot_svg(plots, static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end), path,
             title ? title : "");
  });
}

}  // extern "C"

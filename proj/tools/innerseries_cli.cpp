// Command-line front end. Every stage reads and writes files so a pipeline
// can be run one step at a time; `experiment` runs a whole configuration.
//
// Exit status: 0 on success (and, for experiment and separability, only when
// every threshold passes), 1 when a threshold fails, 2 on errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "innerseries/innerseries.h"

namespace {

using nlohmann::json;

constexpr int kExitThreshold = 1;
constexpr int kExitError = 2;

struct Failure {
  std::string message;
};

void check(ins_status s, const std::string& what) {
  if (s != INS_OK) {
    throw Failure{what + ": " + ins_status_name(s) + ": " + ins_last_error()};
  }
}

struct SeriesDeleter {
  void operator()(ins_series* s) const { ins_series_free(s); }
};
struct FieldDeleter {
  void operator()(ins_field* f) const { ins_field_free(f); }
};
using Series = std::unique_ptr<ins_series, SeriesDeleter>;
using Field = std::unique_ptr<ins_field, FieldDeleter>;

// Owns a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  ins_string_free(s);
  return out;
}

Series read_series(const std::string& path, double dt = 0.0) {
  ins_series* s = nullptr;
  check(ins_series_read(path.c_str(), dt, &s), "reading " + path);
  return Series(s);
}

Field read_field(const std::string& path) {
  ins_field* f = nullptr;
  check(ins_field_read(path.c_str(), &f), "reading " + path);
  return Field(f);
}

std::vector<int> parse_bins(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Failure{"--bins: '" + item + "' is not a positive integer"};
    }
  }
  if (out.empty()) throw Failure{"--bins needs at least one count"};
  return out;
}

std::vector<double> parse_reals(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{flag + ": '" + item + "' is not a number"};
    }
  }
  return out;
}

// Inline JSON or the path of a JSON file.
std::string json_argument(const std::string& text) {
  if (!text.empty() && (text.front() == '{' || text.front() == '[')) return text;
  std::ifstream in(text);
  if (!in) throw Failure{"cannot open " + text};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw Failure{"cannot write " + path};
  out << text << "\n";
}

struct Common {
  std::uint64_t seed = 7;
  long long samples = 0;
  std::string bins;
  std::size_t min_count = 0;
  std::string scheme = "central";
  std::string out_dir;
  std::string format = "csv";
};

// Resolves an output path: explicit --out wins, otherwise <out-dir>/<stem>.<ext>.
std::string output_path(const Common& c, const std::string& out, const std::string& stem,
                        const std::string& ext) {
  if (!out.empty()) return out;
  if (c.out_dir.empty()) return "";
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / (stem + "." + ext)).string();
}

std::string series_path(const Common& c, const std::string& out, const std::string& stem) {
  if (out.empty() && c.format == "json") {
    throw Failure{"series are written as csv or wav; --format json applies to reports"};
  }
  const std::string path = output_path(c, out, stem, c.format);
  if (path.empty()) throw Failure{"no output: give --out or --out-dir"};
  return path;
}

void write_series(const ins_series* s, const std::string& path) {
  check(ins_series_write(s, path.c_str(), 0.0), "writing " + path);
  std::cerr << "wrote " << path << "\n";
}

std::vector<int> bins_or(const Common& c, std::vector<int> fallback) {
  return c.bins.empty() ? fallback : parse_bins(c.bins);
}

// Optional velocity file, otherwise the --scheme estimate of the trajectory.
Series velocity_for(const Common& c, const ins_series* traj, const std::string& path) {
  ins_series* v = nullptr;
  if (!path.empty()) return read_series(path);
  check(ins_velocity(traj, c.scheme.c_str(), &v), "velocity");
  return Series(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inner time series: sensor-independent weights from local velocity moments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ins_version()));

  Common common;
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--samples", common.samples, "number of samples (0 = default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--bins", common.bins, "bins per axis, comma separated");
  app.add_option("--min-count", common.min_count, "bin occupancy threshold (0 = 50 N^2)");
  app.add_option("--scheme", common.scheme, "velocity scheme")
      ->check(CLI::IsMember({"forward", "central"}));
  app.add_option("--out-dir", common.out_dir, "directory for outputs");
  app.add_option("--format", common.format, "series or report format")
      ->check(CLI::IsMember({"csv", "wav", "json"}));

  std::function<int()> action;
  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  // synth
  std::string synth_kind = "sine", synth_out, transform_spec;
  double synth_dt = 0.0, amplitude = 1.0;
  int pca_k = 0;
  {
    auto* s = sub("synth", "generate a synthetic trajectory");
    s->add_option("kind", synth_kind,
                  "sine, broadband, sources, mixture, latent, lifted, lifted-distorted")
        ->check(CLI::IsMember(
            {"sine", "broadband", "sources", "mixture", "latent", "lifted", "lifted-distorted"}));
    s->add_option("--dt", synth_dt, "sample interval");
    s->add_option("--amplitude", amplitude, "sine amplitude");
    s->add_option("--transform", transform_spec, "sensor transform (JSON or file)");
    s->add_option("--pca", pca_k, "reduce to this many principal components");
    s->add_option("-o,--out", synth_out, "output file");
    s->callback([&] {
      action = [&] {
        json cfg{{"seed", common.seed}, {"samples", common.samples}, {"amplitude", amplitude}};
        if (synth_dt > 0.0) cfg["dt"] = synth_dt;
        ins_series* raw = nullptr;
        check(ins_synth(synth_kind.c_str(), cfg.dump().c_str(), &raw), "synth");
        Series out(raw);
        if (!transform_spec.empty()) {
          ins_series* t = nullptr;
          check(ins_transform(out.get(), json_argument(transform_spec).c_str(), &t), "transform");
          out.reset(t);
        }
        if (pca_k > 0) {
          ins_series* p = nullptr;
          char* info = nullptr;
          check(ins_pca(out.get(), pca_k, &p, &info), "pca");
          out.reset(p);
          std::cerr << take(info) << "\n";
        }
        write_series(out.get(), series_path(common, synth_out, synth_kind));
        return 0;
      };
    });
  }

  // velocity
  std::string input, output, velocity_path;
  {
    auto* s = sub("velocity", "estimate the velocity of a trajectory");
    s->add_option("input", input, "trajectory file")->required();
    s->add_option("-o,--out", output, "output file");
    s->callback([&] {
      action = [&] {
        Series traj = read_series(input);
        Series v = velocity_for(common, traj.get(), "");
        write_series(v.get(), series_path(common, output, "velocity"));
        return 0;
      };
    });
  }

  auto stage_options = [&](CLI::App* s) {
    s->add_option("input", input, "trajectory file")->required();
    s->add_option("--velocity", velocity_path, "velocity file (default: --scheme estimate)");
    s->add_option("-o,--out", output, "output file (default stdout)");
  };
  auto bins_for = [&](const ins_series* traj) {
    return bins_or(common, std::vector<int>(1, ins_series_channels(traj) == 1 ? 128 : 16));
  };

  // grid, moments
  {
    auto* s = sub("grid", "bin a trajectory");
    stage_options(s);
    s->callback([&] {
      action = [&] {
        Series traj = read_series(input);
        Series v = velocity_for(common, traj.get(), velocity_path);
        const auto bins = bins_for(traj.get());
        char* out = nullptr;
        check(ins_grid_json(traj.get(), v.get(), bins.data(), bins.size(), common.min_count, &out),
              "grid");
        write_text(output_path(common, output, "grid", "json"), take(out));
        return 0;
      };
    });
  }
  {
    auto* s = sub("moments", "per-bin velocity moments");
    stage_options(s);
    s->callback([&] {
      action = [&] {
        Series traj = read_series(input);
        Series v = velocity_for(common, traj.get(), velocity_path);
        const auto bins = bins_for(traj.get());
        char* out = nullptr;
        check(ins_moments_json(traj.get(), v.get(), bins.data(), bins.size(), common.min_count,
                               &out),
              "moments");
        write_text(output_path(common, output, "moments", "json"), take(out));
        return 0;
      };
    });
  }

  // frames
  double gap_tol = 1e-3, cond_tol = 1e-10;
  {
    auto* s = sub("frames", "solve and align the local frame field");
    stage_options(s);
    s->add_option("--gap-tol", gap_tol, "relative eigenvalue gap for degeneracy");
    s->add_option("--cond-tol", cond_tol, "smallest accepted c2 eigenvalue ratio");
    s->callback([&] {
      action = [&] {
        Series traj = read_series(input);
        Series v = velocity_for(common, traj.get(), velocity_path);
        const auto bins = bins_for(traj.get());
        const json options{{"gap_tol", gap_tol}, {"cond_tol", cond_tol}};
        ins_field* f = nullptr;
        char* summary = nullptr;
        check(ins_field_build(traj.get(), v.get(), bins.data(), bins.size(), common.min_count,
                              options.dump().c_str(), &f, &summary),
              "frames");
        Field field(f);
        std::cerr << take(summary) << "\n";
        const std::string path = output_path(common, output, "frames", "json");
        if (path.empty() || path == "-") {
          char* text = nullptr;
          check(ins_field_json(field.get(), &text), "frames");
          std::cout << take(text);
        } else {
          check(ins_field_write(field.get(), path.c_str()), "writing " + path);
          std::cerr << "wrote " << path << "\n";
        }
        return 0;
      };
    });
  }

  // weights
  std::string field_path;
  {
    auto* s = sub("weights", "compute the inner time series");
    s->add_option("input", input, "trajectory file")->required();
    s->add_option("--field", field_path, "frame field JSON")->required();
    s->add_option("--velocity", velocity_path, "velocity file (default: --scheme estimate)");
    s->add_option("-o,--out", output, "output file");
    s->callback([&] {
      action = [&] {
        Series traj = read_series(input);
        Series v = velocity_for(common, traj.get(), velocity_path);
        Field field = read_field(field_path);
        ins_series* w = nullptr;
        check(ins_weights(traj.get(), v.get(), field.get(), &w), "weights");
        Series ws(w);
        std::cerr << ins_series_valid_count(w) << " of " << ins_series_length(w)
                  << " weights valid\n";
        write_series(ws.get(), series_path(common, output, "weights"));
        return 0;
      };
    });
  }

  // align
  std::string other, aligned_out;
  {
    auto* s = sub("align", "find the signed permutation matching two weight series");
    s->add_option("w", input, "reference weights")->required();
    s->add_option("wprime", other, "weights to align")->required();
    s->add_option("-o,--out", output, "alignment JSON (default stdout)");
    s->add_option("--aligned-out", aligned_out, "write P w' to this file");
    s->callback([&] {
      action = [&] {
        Series w = read_series(input);
        Series wp = read_series(other);
        char* text = nullptr;
        check(ins_align(w.get(), wp.get(), &text), "align");
        const std::string result = take(text);
        write_text(output_path(common, output, "alignment", "json"), result);
        if (!aligned_out.empty()) {
          ins_series* p = nullptr;
          check(ins_series_permute(wp.get(), result.c_str(), &p), "align");
          Series permuted(p);
          write_series(permuted.get(), aligned_out);
        }
        return 0;
      };
    });
  }

  // separability
  std::vector<std::string> sources;
  {
    auto* s = sub("separability", "match mixture weights to source weights");
    s->add_option("mixture", input, "mixture weights")->required();
    s->add_option("--source", sources, "source weights, in order (repeat)")->required();
    s->add_option("-o,--out", output, "report JSON (default stdout)");
    s->callback([&] {
      action = [&] {
        Series mix = read_series(input);
        std::vector<Series> owned;
        std::vector<const ins_series*> ptrs;
        for (const auto& p : sources) {
          owned.push_back(read_series(p));
          ptrs.push_back(owned.back().get());
        }
        char* text = nullptr;
        int passed = 0;
        check(ins_separability(mix.get(), ptrs.data(), ptrs.size(), &text, &passed),
              "separability");
        write_text(output_path(common, output, "separability", "json"), take(text));
        std::cerr << (passed ? "PASS" : "FAIL") << " separability\n";
        return passed ? 0 : kExitThreshold;
      };
    });
  }

  // reconstruct
  std::string x0_text;
  long long steps = 1000, start = 0;
  {
    auto* s = sub("reconstruct", "integrate weights back into state space");
    s->add_option("weights", input, "weights file")->required();
    s->add_option("--field", field_path, "frame field JSON")->required();
    s->add_option("--x0", x0_text, "starting point, comma separated")->required();
    s->add_option("--steps", steps, "number of Euler steps")->check(CLI::NonNegativeNumber);
    s->add_option("--start", start, "index of the first weight")->check(CLI::NonNegativeNumber);
    s->add_option("-o,--out", output, "output file");
    s->callback([&] {
      action = [&] {
        Series w = read_series(input);
        Field field = read_field(field_path);
        const auto x0 = parse_reals(x0_text, "--x0");
        ins_series* r = nullptr;
        char* info = nullptr;
        check(ins_reconstruct(w.get(), field.get(), x0.data(), x0.size(),
                              static_cast<size_t>(steps), static_cast<size_t>(start), &r, &info),
              "reconstruct");
        Series rec(r);
        std::cerr << take(info) << "\n";
        write_series(rec.get(), series_path(common, output, "reconstruction"));
        return 0;
      };
    });
  }

  // experiment
  std::string experiment = "all", exp_transform;
  double exp_amplitude = 0.0;
  long long plot_window = 0;
  {
    auto* s = sub("experiment", "run an experiment and score it");
    s->add_option("name", experiment, "sine, monotone-1d, lifted-2d, mixture-2d or all")
        ->check(CLI::IsMember({"all", "sine", "monotone-1d", "lifted-2d", "mixture-2d"}));
    s->add_option("--transform", exp_transform, "second-sensor transform (JSON or file)");
    s->add_option("--amplitude", exp_amplitude, "sine amplitude");
    s->add_option("--gap-tol", gap_tol, "relative eigenvalue gap for degeneracy");
    s->add_option("--cond-tol", cond_tol, "smallest accepted c2 eigenvalue ratio");
    s->add_option("--plot-window", plot_window, "samples shown in plots");
    s->callback([&] {
      action = [&] {
        std::vector<std::string> names;
        if (experiment == "all") {
          std::stringstream ss(ins_experiment_names());
          for (std::string n; std::getline(ss, n);) names.push_back(n);
        } else {
          names.push_back(experiment);
        }
        bool all = true;
        for (const auto& name : names) {
          json cfg{{"seed", common.seed},
                   {"samples", common.samples},
                   {"scheme", common.scheme},
                   {"format", common.format == "wav" ? "wav" : "csv"},
                   {"gap_tol", gap_tol},
                   {"cond_tol", cond_tol},
                   {"plot_window", plot_window},
                   {"min_count", common.min_count}};
          if (!common.bins.empty()) cfg["bins"] = parse_bins(common.bins);
          if (!common.out_dir.empty()) {
            cfg["out_dir"] = names.size() > 1
                                 ? (std::filesystem::path(common.out_dir) / name).string()
                                 : common.out_dir;
          }
          if (!exp_transform.empty()) cfg["transform"] = json::parse(json_argument(exp_transform));
          if (exp_amplitude != 0.0) cfg["amplitude"] = exp_amplitude;
          char* text = nullptr;
          int passed = 0;
          check(ins_experiment_run(name.c_str(), cfg.dump().c_str(), &text, &passed), name);
          const json report = json::parse(take(text));
          if (common.format == "json") {
            std::cout << report.dump(2) << "\n";
          } else {
            for (const auto& c : report.at("criteria")) {
              std::printf("%s %s %s: %.6g (%s %g)\n", c.at("pass").get<bool>() ? "PASS" : "FAIL",
                          name.c_str(), c.at("name").get<std::string>().c_str(),
                          c.at("value").get<double>(), c.at("comparison").get<std::string>().c_str(),
                          c.at("threshold").get<double>());
            }
          }
          all = all && passed;
        }
        return all ? 0 : kExitThreshold;
      };
    });
  }

  // plot
  std::string overlay, title;
  long long begin = 0, end = 0;
  {
    auto* s = sub("plot", "render one or two series as SVG");
    s->add_option("input", input, "series file")->required();
    s->add_option("--overlay", overlay, "second series drawn underneath");
    s->add_option("--begin", begin, "first sample")->check(CLI::NonNegativeNumber);
    s->add_option("--end", end, "one past the last sample (0 = begin + 1000)")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--title", title, "plot title");
    s->add_option("-o,--out", output, "SVG file");
    s->callback([&] {
      action = [&] {
        std::vector<Series> owned;
        owned.push_back(read_series(input));
        if (!overlay.empty()) owned.push_back(read_series(overlay));
        std::vector<const ins_series*> ptrs;
        std::vector<std::string> labels{std::filesystem::path(input).stem().string()};
        if (!overlay.empty()) labels.push_back(std::filesystem::path(overlay).stem().string());
        std::vector<const char*> label_ptrs;
        for (std::size_t i = 0; i < owned.size(); ++i) {
          ptrs.push_back(owned[i].get());
          label_ptrs.push_back(labels[i].c_str());
        }
        const auto n = static_cast<long long>(ins_series_length(ptrs[0]));
        const long long stop = std::min(n, end > 0 ? end : begin + 1000);
        const std::string path = output_path(common, output, "plot", "svg");
        if (path.empty()) throw Failure{"no output: give --out or --out-dir"};
        check(ins_plot_svg(ptrs.data(), label_ptrs.data(), ptrs.size(),
                           static_cast<size_t>(begin), static_cast<size_t>(stop), title.c_str(),
                           path.c_str()),
              "plot");
        std::cerr << "wrote " << path << "\n";
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }
  try {
    return action ? action() : kExitError;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}

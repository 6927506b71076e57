#include <doctest.h>

#include <fstream>
#include <sstream>

#include "innerseries/experiment.hpp"
#include "innerseries/serialize.hpp"
#include "innerseries/svg.hpp"
#include "support.hpp"

using namespace innerseries;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("frame field json round trip is exact") {
  const Trajectory t = gen_lifted_latent(20000, 2).latent;
  const ArmResult arm = run_arm(t, std::vector<int>{4, 4}, 200, VelocityScheme::kCentral, {});
  const auto dir = test_support::scratch_dir("field");
  const std::string path = (dir / "f.json").string();
  write_frame_field(path, arm.field);
  const FrameField back = read_frame_field(path);
  CHECK(back.component_count == arm.field.component_count);
  CHECK(back.grid.edges() == arm.field.grid.edges());
  REQUIRE(back.frames.size() == arm.field.frames.size());
  for (const auto& [f, frame] : arm.field.frames) {
    const LocalFrame& b = back.frames.at(f);
    CHECK(test_support::max_abs(b.m - frame.m) == 0.0);
    CHECK(test_support::max_abs(b.v - frame.v) == 0.0);
    CHECK(test_support::max_abs(b.d - frame.d) == 0.0);
    CHECK(b.degenerate == frame.degenerate);
    CHECK(back.counts.at(f) == arm.field.counts.at(f));
  }
  CHECK(frame_field_to_json(back) == frame_field_to_json(arm.field));
  CHECK_THROWS_AS(frame_field_from_json("{\"schema\":\"other/1\"}"), Error);
  CHECK_THROWS_AS(frame_field_from_json("not json"), Error);
}

TEST_CASE("signed permutations are written one-based") {
  const SignedPermutation p({1, 0}, {1, -1});
  const auto j = to_json(p);
  CHECK(j["perm"] == nlohmann::json::array({2, 1}));
  CHECK(j["signs"] == nlohmann::json::array({1, -1}));
  CHECK(signed_permutation_from_json(j) == p);
}

TEST_CASE("transform specs round trip through json") {
  const std::vector<TransformSpec> specs{
      TransformSpec::affine({2.0}, {1.0}),
      TransformSpec::linear(Eigen::Matrix2d{{1.0, 0.5}, {-0.3, 1.0}}),
      TransformSpec::polynomial({0.0, 1.0, 0.0, 0.8}, -1.0, 1.0),
      TransformSpec::audio_mixing(),
      TransformSpec::table({0.0, 1.0, 2.0}, {0.0, 3.0, 4.0})};
  for (const auto& s : specs) {
    const TransformSpec back = transform_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
  }
  CHECK_THROWS_AS(transform_from_json(nlohmann::json{{"kind", "nope"}}), Error);
  CHECK_THROWS_AS(transform_from_json(nlohmann::json{{"kind", "custom-table"}, {"x", {0, 1, 2}}, {"y", {1, 0, 2}}}),
                  Error);
}

TEST_CASE("svg of a constant series") {
  PlotSeries s{"flat", SampleMatrix::Constant(50, 1, 2.0), 0.1, Mask(50, 1)};
  const std::string svg = render_svg({s}, 0, 50, "constant");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<svg") == count(svg, "</svg>"));
  CHECK(count(svg, "<g") == count(svg, "</g>"));
  CHECK(count(svg, "<polyline") >= 1);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK_THROWS_AS(render_svg({s}, 10, 10, ""), Error);
  CHECK_THROWS_AS(render_svg({}, 0, 10, ""), Error);
}

TEST_CASE("svg output is byte identical across runs") {
  const Trajectory t = gen_sine(1.0, 0.01, 700);
  const auto dir = test_support::scratch_dir("svg");
  plot_svg({plot_series(t, "x"), plot_series(t, "x'")}, 1, 629, (dir / "a.svg").string(), "t");
  plot_svg({plot_series(t, "x"), plot_series(t, "x'")}, 1, 629, (dir / "b.svg").string(), "t");
  const std::string a = slurp(dir / "a.svg");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b.svg"));
}

TEST_CASE("identity transform gives identical arms") {
  ExperimentConfig c;
  c.samples = 100000;
  c.transform = TransformSpec::identity();
  const ExperimentReport r = run_experiment("monotone-1d", c);
  CHECK(std::abs(r.json["metrics"]["aligned_correlation"].get<double>() - 1.0) < 1e-9);
}

TEST_CASE("experiment reports are deterministic and versioned") {
  ExperimentConfig c;
  c.samples = 20000;
  const auto dir = test_support::scratch_dir("report");
  c.out_dir = dir.string();
  const ExperimentReport a = run_experiment("sine", c);
  const std::string first = slurp(dir / "sine_report.json");
  const ExperimentReport b = run_experiment("sine", c);
  CHECK(a.json.dump() == b.json.dump());
  CHECK(slurp(dir / "sine_report.json") == first);
  CHECK(a.json["schema"] == kReportSchema);
  CHECK(a.json["experiment"] == "sine");
  for (const auto& [key, name] : a.json["artifacts"].items()) {
    CHECK(std::filesystem::exists(dir / name.get<std::string>()));
  }
  CHECK_THROWS_AS(run_experiment("nope", c), Error);
}

TEST_CASE("pipeline errors name the failing stage") {
  ExperimentConfig c;
  c.samples = 2000;
  c.min_count = 1000000;
  try {
    run_experiment("sine", c);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("moments") != std::string::npos);
    CHECK(e.code() == ErrorCode::kEmpty);
  }
}

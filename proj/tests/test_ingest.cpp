#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <random>

#include "innerseries/ingest.hpp"
#include "support.hpp"

using namespace innerseries;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

// Inverse of a strictly increasing scalar map on [lo, hi] by bisection.
double bisect_inverse(const std::function<double(double)>& f, double y, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("three-row csv") {
  const auto dir = test_support::scratch_dir("csv_small");
  write_file(dir / "a.csv", "t,x\n0,0\n0.5,1\n1.0,2\n");
  const Trajectory t = read_csv_trajectory((dir / "a.csv").string());
  CHECK(t.dims() == 1);
  CHECK(t.size() == 3);
  CHECK(t.dt() == 0.5);
  CHECK(t.samples()(0, 0) == 0.0);
  CHECK(t.samples()(1, 0) == 1.0);
  CHECK(t.samples()(2, 0) == 2.0);
  CHECK(t.channel_names() == std::vector<std::string>{"x"});
}

TEST_CASE("csv errors name the offending cell") {
  const auto dir = test_support::scratch_dir("csv_bad");
  write_file(dir / "nan.csv", "t,x,y\n0,0,1\n1,nan,2\n2,3,4\n");
  const std::string msg = error_message([&] { read_csv_trajectory((dir / "nan.csv").string()); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("'x'") != std::string::npos);

  write_file(dir / "ragged.csv", "t,x\n0,1\n1\n");
  CHECK_THROWS_AS(read_csv_trajectory((dir / "ragged.csv").string()), Error);
  write_file(dir / "uneven.csv", "t,x\n0,1\n1,2\n3,3\n");
  CHECK_THROWS_AS(read_csv_trajectory((dir / "uneven.csv").string()), Error);
  CHECK_THROWS_AS(read_csv_trajectory((dir / "missing.csv").string()), Error);
}

TEST_CASE("csv round trip is bit exact") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1e3);
  SampleMatrix m(257, 3);
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (int c = 0; c < 3; ++c) m(k, c) = g(rng) * std::pow(10.0, c * 7 - 7);
  const Trajectory t(m, 1.0 / 16000.0, {"a", "b", "c"});
  const auto dir = test_support::scratch_dir("csv_round");
  write_csv_trajectory((dir / "r.csv").string(), t);
  const Trajectory back = read_csv_trajectory((dir / "r.csv").string());
  CHECK(back.channel_names() == t.channel_names());
  CHECK(back.dt() == doctest::Approx(t.dt()).epsilon(1e-12));
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (int c = 0; c < 3; ++c) CHECK(back.samples()(k, c) == m(k, c));
}

TEST_CASE("weights csv keeps the validity mask") {
  WeightSeries w;
  w.values = SampleMatrix::Zero(4, 2);
  w.values(1, 0) = 0.25;
  w.dt = 0.1;
  w.valid = {0, 1, 1, 0};
  w.fallback = {0, 0, 0, 0};
  w.channel_names = {"w1", "w2"};
  const auto dir = test_support::scratch_dir("csv_weights");
  write_csv_weights((dir / "w.csv").string(), w);
  const WeightSeries back = read_csv_weights((dir / "w.csv").string());
  CHECK(back.valid == w.valid);
  CHECK(back.values(1, 0) == 0.25);
}

TEST_CASE("16 kHz mono wav") {
  const auto dir = test_support::scratch_dir("wav");
  const Eigen::Index n = 1600;
  SampleMatrix ints(n, 1);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(-32768, 32767);
  for (Eigen::Index k = 0; k < n; ++k) ints(k, 0) = u(rng);
  write_wav((dir / "a.wav").string(), ints, 1.0 / 16000.0);
  const Trajectory t = read_wav_trajectory((dir / "a.wav").string());
  CHECK(t.dims() == 1);
  CHECK(t.size() == n);
  CHECK(t.dt() == 1.0 / 16000.0);
  for (Eigen::Index k = 0; k < n; ++k) CHECK(t.samples()(k, 0) == ints(k, 0));

  write_wav((dir / "zero.wav").string(), SampleMatrix::Zero(10, 2), 1.0 / 8000.0);
  const Trajectory z = read_wav_trajectory((dir / "zero.wav").string());
  CHECK(z.dims() == 2);
  CHECK(z.samples().cwiseAbs().maxCoeff() == 0.0);

  write_file(dir / "junk.wav", "RIFF....WAVEjunk");
  CHECK_THROWS_AS(read_wav_trajectory((dir / "junk.wav").string()), Error);
}

TEST_CASE("sine generator") {
  CHECK(gen_sine(2.0, 0.01, 10).samples()(0, 0) == 0.0);
  CHECK(gen_sine(1.0, 0.01, 10).samples()(1, 0) == doctest::Approx(std::sin(0.01)).epsilon(1e-15));
  CHECK(gen_sine(1.0, 0.01, 10).samples()(1, 0) == doctest::Approx(0.00999983).epsilon(1e-6));
}

TEST_CASE("affine and identity transforms") {
  SampleMatrix m(3, 1);
  m << 0, 1, 2;
  const Trajectory t(m, 1.0);
  const Trajectory a = apply_transform(t, TransformSpec::affine({2.0}, {1.0}));
  CHECK(a.samples()(0, 0) == 1.0);
  CHECK(a.samples()(1, 0) == 3.0);
  CHECK(a.samples()(2, 0) == 5.0);
  const Trajectory i = apply_transform(t, TransformSpec::identity());
  CHECK((i.samples() - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(apply_transform(t, TransformSpec::affine({0.0}, {1.0})), Error);
}

TEST_CASE("monotone cubic is recovered by bisection") {
  const std::vector<double> coeffs{0.0, 1.0, 0.0, 0.1};
  const TransformSpec spec = TransformSpec::polynomial(coeffs, -3.0, 3.0);
  SampleMatrix grid(601, 1);
  for (Eigen::Index k = 0; k < grid.rows(); ++k) grid(k, 0) = -3.0 + 0.01 * static_cast<double>(k);
  const Trajectory out = apply_transform(Trajectory(grid, 1.0), spec);
  auto f = [&](double x) { return x + 0.1 * x * x * x; };
  for (Eigen::Index k = 0; k < grid.rows(); ++k) {
    CHECK(std::abs(bisect_inverse(f, out.samples()(k, 0), -3.0, 3.0) - grid(k, 0)) < 1e-9);
  }
  CHECK_THROWS_AS(TransformSpec::polynomial({0.0, 1.0, 0.0, -1.0}, -1.0, 1.0).validate(), Error);
}

TEST_CASE("mixing functions at the origin") {
  const Eigen::Vector2d mu = mixing_map(0.0, 0.0);
  CHECK(mu[0] == doctest::Approx(std::pow(958.0, 1.5)).epsilon(1e-14));
  CHECK(mu[0] == doctest::Approx(29651.6).epsilon(1e-5));
  CHECK(mu[1] == doctest::Approx(6123.72).epsilon(1e-5));
  CHECK_THROWS_AS(mixing_map(40000.0, 0.0), Error);
}

namespace {

// Mapped n x n grid over the square of the given half-width.
std::vector<Eigen::Vector2d> mapped_grid(double half_width, int n) {
  std::vector<Eigen::Vector2d> pts;
  const double step = 2.0 * half_width / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      pts.push_back(mixing_map(-half_width + i * step, -half_width + j * step));
  return pts;
}

// Grid cells whose mapped image has flipped or zero orientation.
int flipped_cells(const std::vector<Eigen::Vector2d>& pts, int n) {
  int flipped = 0;
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      const Eigen::Vector2d a = pts[(i + 1) * n + j] - pts[i * n + j];
      const Eigen::Vector2d b = pts[i * n + j + 1] - pts[i * n + j];
      if (a.x() * b.y() - a.y() * b.x() <= 0.0) ++flipped;
    }
  return flipped;
}

}  // namespace

TEST_CASE("mixing map does not fold over on the source square") {
  const int n = 161;
  const auto pts = mapped_grid(kSourceDomain, n);
  CHECK(flipped_cells(pts, n) == 0);
  // No two grid nodes land on the same point.
  auto sorted = pts;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.x() < b.x(); });
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < sorted.size(); ++a)
    for (std::size_t b = a + 1; b < sorted.size() && sorted[b].x() - sorted[a].x() < closest; ++b)
      closest = std::min(closest, (sorted[a] - sorted[b]).norm());
  CHECK(closest > 1e-3);
}

TEST_CASE("mixing map folds over near the corners of its full domain") {
  const int n = 161;
  const int flipped = flipped_cells(mapped_grid(kMixingDomain, n), n);
  CHECK(flipped > 0);
  CHECK(flipped < (n - 1) * (n - 1) / 5);
}

TEST_CASE("pca of data on one axis") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  SampleMatrix m = SampleMatrix::Zero(1000, 2);
  for (Eigen::Index k = 0; k < m.rows(); ++k) m(k, 0) = g(rng);
  const PcaResult r = pca_embed(Trajectory(m, 1.0), 1);
  CHECK(r.explained[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::VectorXd col = r.embedded.samples().col(0);
  const double mean = m.col(0).mean();
  const double sd = std::sqrt((m.col(0).array() - mean).square().mean());
  for (Eigen::Index k = 0; k < 10; ++k) CHECK(std::abs(col[k]) == doctest::Approx(std::abs((m(k, 0) - mean) / sd)));
}

TEST_CASE("pca of an isotropic cloud splits the variance") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  SampleMatrix m(10000, 2);
  for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) << g(rng), g(rng);
  const PcaResult r = pca_embed(Trajectory(m, 1.0), 2);
  CHECK(std::abs(r.explained[0] - 0.5) < 0.05);
  CHECK(std::abs(r.explained[1] - 0.5) < 0.05);
  CHECK_THROWS_AS(pca_embed(Trajectory(m, 1.0), 3), Error);
}

TEST_CASE("six-dimensional lifts are nearly planar") {
  const LiftedLatent g = gen_lifted_latent(50000, 4);
  CHECK(pca_embed(g.lifted, 2).explained_top() >= 0.99);
  const Trajectory second = map_rows(g.latent, 6, lift_distorted, "y");
  CHECK(pca_embed(second, 2).explained_top() >= 0.99);
}

TEST_CASE("lifts are injective on a latent grid") {
  for (auto lift : {lift_primary, lift_distorted}) {
    const int n = 50;
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pts.push_back(lift(-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1)));
    double adjacent = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i)
      for (int j = 0; j + 1 < n; ++j) {
        adjacent = std::min(adjacent, (pts[i * n + j] - pts[(i + 1) * n + j]).norm());
        adjacent = std::min(adjacent, (pts[i * n + j] - pts[i * n + j + 1]).norm());
      }
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        closest = std::min(closest, (pts[a] - pts[b]).norm());
    CHECK(closest >= 0.5 * adjacent);
  }
}

TEST_CASE("generators are deterministic per seed") {
  const Trajectory a = gen_broadband(2000, 1.0 / 16000.0, 5);
  const Trajectory b = gen_broadband(2000, 1.0 / 16000.0, 5);
  const Trajectory c = gen_broadband(2000, 1.0 / 16000.0, 6);
  CHECK((a.samples() - b.samples()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.samples() - c.samples()).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.samples().cwiseAbs().maxCoeff() <= 1.0);

  const Trajectory s = gen_two_sources(20000, 1);
  CHECK(s.samples().cwiseAbs().maxCoeff() <= kSourceDomain);
}

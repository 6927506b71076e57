#include <doctest.h>

#include <cmath>
#include <random>

#include "innerseries/estimate.hpp"
#include "innerseries/frames.hpp"
#include "support.hpp"

using namespace innerseries;
using test_support::max_abs;

namespace {

// Unit covariance with a fourth-order tensor whose pure entries are `pure`
// and whose paired entries (iijj and permutations) are 1.
LocalMoments diagonal_moments(const std::vector<double>& pure) {
  const int n = static_cast<int>(pure.size());
  LocalMoments m;
  m.count = 1000;
  m.mean_vel = Eigen::VectorXd::Zero(n);
  m.c2 = Eigen::MatrixXd::Identity(n, n);
  m.c4 = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        m.c4(i, i, i, i) = pure[i];
        continue;
      }
      m.c4(i, i, j, j) = m.c4(i, j, i, j) = m.c4(i, j, j, i) = 1.0;
    }
  return m;
}

LocalMoments sample_moments(const SampleMatrix& v) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index k = 0; k < v.rows(); ++k) rows[k] = k;
  return moments_from_rows(v, rows);
}

// Covariance and contracted fourth moment of y = M v computed from the
// transformed samples themselves.
void recheck_in_frame(const SampleMatrix& v, const Eigen::MatrixXd& m, double* whitening,
                      double* offdiag) {
  const SampleMatrix y = v * m.transpose();
  const Eigen::RowVectorXd mean = y.colwise().mean();
  const SampleMatrix c = y.rowwise() - mean;
  const auto n = static_cast<double>(y.rows());
  const int dims = static_cast<int>(m.rows());
  const Eigen::MatrixXd cov = (c.transpose() * c) / n;
  *whitening = max_abs(cov - Eigen::MatrixXd::Identity(dims, dims));
  const Eigen::VectorXd sq = c.rowwise().squaredNorm();
  const Eigen::MatrixXd k = (c.transpose() * (c.array().colwise() * sq.array()).matrix()) / n;
  double off = 0.0;
  for (int a = 0; a < dims; ++a)
    for (int b = 0; b < dims; ++b)
      if (a != b) off = std::max(off, std::abs(k(a, b)));
  *offdiag = off / k.diagonal().cwiseAbs().maxCoeff();
}

LocalFrame random_frame(std::mt19937_64& rng, int dims) {
  SampleMatrix v = test_support::independent_channels(rng, 4000, dims);
  v = v * test_support::random_invertible(rng, dims).transpose();
  return solve_frame(sample_moments(v));
}

}  // namespace

TEST_CASE("identity covariance with a diagonal fourth-order contraction") {
  const LocalFrame f = solve_frame(diagonal_moments({2.0, 5.0, 3.5}));
  // Pure entries plus N - 1 from the paired terms, descending.
  CHECK(f.d[0] == doctest::Approx(7.0));
  CHECK(f.d[1] == doctest::Approx(5.5));
  CHECK(f.d[2] == doctest::Approx(4.0));
  const SignedPermutation p = nearest_signed_permutation(f.m);
  CHECK(max_abs(f.m - p.matrix()) < 1e-12);
  CHECK(p.perm() == std::vector<int>{1, 2, 0});
  CHECK_FALSE(f.degenerate);
}

TEST_CASE("equal fourth-order entries are flagged degenerate") {
  CHECK(solve_frame(diagonal_moments({3.0, 3.0})).degenerate);
  CHECK_FALSE(solve_frame(diagonal_moments({3.0, 4.0})).degenerate);
}

TEST_CASE("one-dimensional frame is the inverse standard deviation") {
  for (double x : {0.0, 0.3, -0.8}) {
    LocalMoments m = diagonal_moments({1.5});
    m.c2(0, 0) = 1.0 - x * x;
    const LocalFrame f = solve_frame(m);
    CHECK(std::abs(f.m(0, 0)) == doctest::Approx(1.0 / std::sqrt(1.0 - x * x)).epsilon(1e-14));
    CHECK(std::abs(f.v(0, 0)) == doctest::Approx(std::sqrt(1.0 - x * x)).epsilon(1e-14));
    CHECK(f.m(0, 0) * f.v(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("scaled independent channels") {
  std::mt19937_64 rng(17);
  const Eigen::Index n = 200000;
  SampleMatrix v = test_support::independent_channels(rng, n, 2);
  const double s1 = 3.0, s2 = 0.5;
  v.col(0) *= s1;
  v.col(1) *= s2;
  const LocalFrame f = solve_frame(sample_moments(v));
  const SignedPermutation p = nearest_signed_permutation(f.m * Eigen::Vector2d(s1, s2).asDiagonal());
  const Eigen::MatrixXd expected = p.matrix() * Eigen::Vector2d(1.0 / s1, 1.0 / s2).asDiagonal();
  CHECK(max_abs(f.m - expected) < 0.03 * max_abs(expected));

  double whitening = 0.0, offdiag = 0.0;
  recheck_in_frame(v, f.m, &whitening, &offdiag);
  CHECK(whitening < 1e-10);
  CHECK(offdiag < 1e-8);
}

TEST_CASE("defining conditions hold on mixed random data") {
  std::mt19937_64 rng(23);
  for (int dims = 1; dims <= 4; ++dims) {
    SampleMatrix v = test_support::independent_channels(rng, 20000, dims);
    v = v * test_support::random_invertible(rng, dims).transpose();
    const LocalMoments mom = sample_moments(v);
    const LocalFrame f = solve_frame(mom);
    const FrameResiduals r = frame_residuals(f, mom);
    CHECK(r.whitening < 1e-10);
    CHECK(r.offdiag < 1e-8);
    CHECK(max_abs(f.m * f.v - Eigen::MatrixXd::Identity(dims, dims)) < 1e-12);
    double whitening = 0.0, offdiag = 0.0;
    recheck_in_frame(v, f.m, &whitening, &offdiag);
    CHECK(whitening < 1e-10);
    CHECK(offdiag < 1e-8);
  }
}

TEST_CASE("contraction identities") {
  std::mt19937_64 rng(29);
  SampleMatrix v = test_support::independent_channels(rng, 3000, 3);
  v = v * test_support::random_invertible(rng, 3).transpose();
  const LocalMoments mom = sample_moments(v);
  const LocalFrame f = solve_frame(mom);
  const Eigen::MatrixXd k = contracted_fourth_order(f.m, mom.c4);
  CHECK(max_abs(k - Eigen::MatrixXd(f.d.asDiagonal())) < 1e-9 * f.d.cwiseAbs().maxCoeff());
  // sum_m I_klmm equals M T M^T with T contracted against c2^-1.
  const Eigen::MatrixXd t = contract_with_inverse(mom.c2, mom.c4);
  CHECK(max_abs(k - f.m * t * f.m.transpose()) < 1e-9 * max_abs(k));
}

TEST_CASE("singular covariance is rejected") {
  LocalMoments m = diagonal_moments({2.0, 4.0});
  m.c2(1, 1) = 0.0;
  try {
    solve_frame(m);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumerical);
  }
}

TEST_CASE("negating a row does not change the canonical form") {
  std::mt19937_64 rng(31);
  const LocalFrame f = canonicalize_frame(random_frame(rng, 3));
  const LocalFrame flipped = permute_frame(f, SignedPermutation({0, 1, 2}, {1, -1, 1}));
  CHECK(max_abs(flipped.m - f.m) > 0.0);
  const LocalFrame back = canonicalize_frame(flipped);
  CHECK(max_abs(back.m - f.m) == 0.0);
  CHECK(max_abs(back.v - f.v) == 0.0);
}

TEST_CASE("canonical form collapses every signed permutation orbit") {
  std::mt19937_64 rng(37);
  for (int dims = 1; dims <= 3; ++dims) {
    for (int trial = 0; trial < 5; ++trial) {
      const LocalFrame f = random_frame(rng, dims);
      const LocalFrame ref = canonicalize_frame(f);
      for (const auto& p : all_signed_permutations(dims)) {
        const LocalFrame c = canonicalize_frame(permute_frame(f, p));
        CHECK(max_abs(c.m - ref.m) == 0.0);
        CHECK(max_abs(c.v - ref.v) == 0.0);
        CHECK(max_abs(c.d - ref.d) == 0.0);
      }
    }
  }
}

namespace {

// A smoothly rotating 2-D frame field on a 6 x 5 grid.
std::map<std::size_t, LocalFrame> smooth_field(const GridGeometry& g) {
  std::map<std::size_t, LocalFrame> frames;
  for (std::size_t f = 0; f < g.bin_count(); ++f) {
    const Eigen::VectorXd c = g.center(f);
    const double th = 0.15 * c[0] - 0.1 * c[1];
    Eigen::MatrixXd r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    LocalFrame frame;
    frame.m = Eigen::Vector2d(1.0 + 0.1 * c[0], 2.0).asDiagonal() * r;
    frame.v = frame.m.inverse();
    frame.d = Eigen::Vector2d(4.0, 1.5);
    frames[f] = frame;
  }
  return frames;
}

std::map<std::size_t, std::size_t> unit_counts(const GridGeometry& g) {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t f = 0; f < g.bin_count(); ++f) counts[f] = 100 + f;
  return counts;
}

}  // namespace

TEST_CASE("a uniform field needs no correction") {
  const GridGeometry g({{0, 1, 2, 3}, {0, 1, 2}});
  std::map<std::size_t, LocalFrame> frames;
  LocalFrame one;
  one.m = Eigen::Matrix2d{{2.0, 0.5}, {0.1, 1.0}};
  one.v = one.m.inverse();
  one.d = Eigen::Vector2d(3.0, 1.0);
  for (std::size_t f = 0; f < g.bin_count(); ++f) frames[f] = one;
  const FrameField field = align_frame_field(g, frames, unit_counts(g));
  for (const auto& [f, frame] : field.frames) CHECK(max_abs(frame.m - one.m) == 0.0);
}

TEST_CASE("a row-swapped neighbour is swapped back") {
  const GridGeometry g({{0, 1, 2}});
  LocalFrame a;
  a.m = Eigen::Matrix2d{{2.0, 0.3}, {0.2, 1.0}};
  a.v = a.m.inverse();
  a.d = Eigen::Vector2d(3.0, 1.0);
  const LocalFrame b = permute_frame(a, SignedPermutation({1, 0}, {1, 1}));
  std::map<std::size_t, LocalFrame> frames{{0, a}, {1, b}};
  const FrameField field = align_frame_field(g, frames, {{0, 10}, {1, 5}});
  CHECK(max_abs(field.frames.at(1).m - a.m) == 0.0);
  CHECK(max_abs(field.frames.at(0).m - a.m) == 0.0);
}

TEST_CASE("injected signed permutations are removed up to one global one") {
  const GridGeometry g({{0, 1, 2, 3, 4, 5, 6}, {0, 1, 2, 3, 4, 5}});
  const auto truth = smooth_field(g);
  std::mt19937_64 rng(41);
  const auto group = all_signed_permutations(2);
  std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::size_t, LocalFrame> scrambled;
    for (const auto& [f, frame] : truth) scrambled[f] = permute_frame(frame, group[pick(rng)]);
    const FrameField field = align_frame_field(g, scrambled, unit_counts(g));
    CHECK(field.component_count == 1);
    const std::size_t seed = field.frames.begin()->first;
    const SignedPermutation global =
        nearest_signed_permutation(field.frames.at(seed).m * truth.at(seed).v);
    for (const auto& [f, frame] : field.frames) {
      CHECK(max_abs(frame.m - global.apply_rows(truth.at(f).m)) < 1e-12);
    }
  }
}

TEST_CASE("disconnected pieces become separate components") {
  const GridGeometry g({{0, 1, 2, 3, 4}});
  LocalFrame a;
  a.m = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 1.0}};
  a.v = a.m.inverse();
  a.d = Eigen::Vector2d(3.0, 1.0);
  const FrameField field = align_frame_field(g, {{0, a}, {1, a}, {3, a}}, {{0, 9}, {1, 9}, {3, 9}});
  CHECK(field.component_count == 2);
  CHECK(field.component.at(0) == field.component.at(1));
  CHECK(field.component.at(3) != field.component.at(0));
}

TEST_CASE("transformation law with exact frames") {
  std::mt19937_64 rng(43);
  const LocalFrame f = random_frame(rng, 2);
  const Eigen::MatrixXd j = test_support::random_invertible(rng, 2);
  const TransformLawCheck same = check_transform_law(f.m, f.m * j, j);
  CHECK(same.p.is_identity());
  CHECK(same.residual < 1e-14);

  const SignedPermutation swap_reflect({1, 0}, {-1, 1});
  const TransformLawCheck swapped =
      check_transform_law(f.m, swap_reflect.apply_rows(f.m * j), j);
  CHECK(swapped.p == swap_reflect);
  CHECK(swapped.residual < 1e-14);
}

TEST_CASE("frames from linearly transformed data obey the transformation law") {
  std::mt19937_64 rng(47);
  const Eigen::Index n = 50000;
  SampleMatrix v = test_support::independent_channels(rng, n, 2);
  v = v * test_support::random_invertible(rng, 2).transpose();
  const Eigen::MatrixXd a = test_support::random_invertible(rng, 2);
  const SampleMatrix vprime = v * a.transpose();  // x' = A x
  const LocalFrame f = solve_frame(sample_moments(v));
  const LocalFrame fp = solve_frame(sample_moments(vprime));
  const TransformLawCheck c = check_transform_law(f.m, fp.m, a.inverse());
  CHECK(c.residual < 1e-6);
  CHECK(max_abs(fp.m - c.p.apply_rows(f.m * a.inverse())) < 1e-9);
}

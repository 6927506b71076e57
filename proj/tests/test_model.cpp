#include <doctest.h>

#include <random>

#include "innerseries/model.hpp"
#include "support.hpp"

using namespace innerseries;

namespace {

WeightSeries two_channel_series() {
  WeightSeries w;
  w.values.resize(3, 2);
  w.values << 1, 2, 3, 4, 5, 6;
  w.valid = {1, 0, 1};
  w.fallback = {0, 0, 0};
  w.channel_names = {"a", "b"};
  return w;
}

SignedPermutation random_signed_permutation(std::mt19937_64& rng, int dims) {
  auto all = all_signed_permutations(dims);
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  return all[pick(rng)];
}

}  // namespace

TEST_CASE("swap with reflection on a two-channel series") {
  const SignedPermutation p({1, 0}, {1, -1});
  const WeightSeries w = two_channel_series();
  const WeightSeries out = apply_signed_permutation(p, w);
  CHECK(out.values(0, 0) == 2);
  CHECK(out.values(0, 1) == -1);
  CHECK(out.values(2, 0) == 6);
  CHECK(out.values(2, 1) == -5);
  CHECK(out.valid == w.valid);

  // Undoing with the inverse gives back the input exactly.
  const WeightSeries back = apply_signed_permutation(p.inverse(), out);
  CHECK((back.values - w.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("composition identities") {
  const SignedPermutation p({2, 0, 1}, {-1, 1, -1});
  CHECK(compose_signed_permutations(p, p.inverse()).is_identity());
  CHECK(compose_signed_permutations(p.inverse(), p).is_identity());
  CHECK(compose_signed_permutations(SignedPermutation::identity(3), p) == p);
  CHECK(compose_signed_permutations(p, SignedPermutation::identity(3)) == p);
}

TEST_CASE("composition agrees with applying one after the other") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_signed_permutation(rng, 3);
    const auto b = random_signed_permutation(rng, 3);
    const Eigen::VectorXd u = test_support::random_matrix(rng, 3, 1);
    const Eigen::VectorXd direct = a.apply(b.apply(u));
    const Eigen::VectorXd composed = compose_signed_permutations(a, b).apply(u);
    for (int i = 0; i < 3; ++i) CHECK(direct[i] == composed[i]);
    CHECK((compose_signed_permutations(a, b).matrix() - a.matrix() * b.matrix())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("matrix form and row application") {
  const SignedPermutation p({1, 2, 0}, {1, -1, 1});
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 3);
  CHECK((p.apply_rows(m) - p.matrix() * m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p.matrix() * p.inverse().matrix() - Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("group enumeration") {
  CHECK(all_signed_permutations(1).size() == 2);
  CHECK(all_signed_permutations(2).size() == 8);
  CHECK(all_signed_permutations(3).size() == 48);
  const auto all = all_signed_permutations(3);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) CHECK_FALSE(all[i] == all[j]);
}

TEST_CASE("nearest signed permutation") {
  std::mt19937_64 rng(5);
  for (int dims : {1, 2, 3, 4, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = dims <= 3 ? random_signed_permutation(rng, dims)
                               : SignedPermutation::identity(dims);
      const Eigen::MatrixXd noisy = p.matrix() + 0.2 * test_support::random_matrix(rng, dims, dims);
      CHECK(nearest_signed_permutation(noisy) == p);
    }
  }
}

TEST_CASE("invalid signed permutations are rejected") {
  CHECK_THROWS_AS(SignedPermutation({0, 0}, {1, 1}), Error);
  CHECK_THROWS_AS(SignedPermutation({0, 1}, {1, 2}), Error);
  CHECK_THROWS_AS(SignedPermutation({0, 1}, {1}), Error);
}

TEST_CASE("grid geometry indexing") {
  const GridGeometry g({{0.0, 0.25, 0.5, 0.75, 1.0}});
  CHECK(g.bin_count() == 4);
  const double half = 0.5, top = 1.0, below = -0.1, above = 1.1;
  CHECK(g.locate({&half, 1}) == std::optional<std::size_t>(2));
  CHECK(g.locate({&top, 1}) == std::optional<std::size_t>(3));
  CHECK_FALSE(g.locate({&below, 1}).has_value());
  CHECK_FALSE(g.locate({&above, 1}).has_value());
  CHECK(g.raw_index({&below, 1})[0] == -1);
  CHECK(g.raw_index({&above, 1})[0] == 4);

  const GridGeometry g2({{0, 1, 2, 3}, {0, 1, 2}});
  CHECK(g2.bin_count() == 6);
  for (std::size_t f = 0; f < g2.bin_count(); ++f) CHECK(g2.flat(g2.unflat(f)) == f);
  const auto c = g2.center(g2.flat({2, 1}));
  CHECK(c[0] == doctest::Approx(2.5));
  CHECK(c[1] == doctest::Approx(1.5));
  CHECK(g2.face_neighbors(g2.flat({0, 0})).size() == 2);
  CHECK(g2.face_neighbors(g2.flat({1, 0})).size() == 3);

  CHECK_THROWS_AS(GridGeometry({{0.0, 0.0, 1.0}}), Error);
  CHECK_THROWS_AS(GridGeometry(std::vector<std::vector<double>>{{0.0}}), Error);
}

TEST_CASE("trajectory validation") {
  SampleMatrix ok(3, 1);
  ok << 0, 1, 2;
  CHECK_NOTHROW(Trajectory(ok, 0.5));
  CHECK_THROWS_AS(Trajectory(ok, 0.0), Error);
  SampleMatrix bad = ok;
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(Trajectory(bad, 1.0), Error);
  CHECK_THROWS_AS(Trajectory(SampleMatrix(2, 1), 1.0), Error);
}

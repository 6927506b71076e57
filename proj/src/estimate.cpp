#include "innerseries/estimate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace innerseries {

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

VelocityScheme velocity_scheme_from_string(const std::string& s) {
  if (s == "central") return VelocityScheme::kCentral;
  if (s == "forward") return VelocityScheme::kForward;
  fail(ErrorCode::kInvalidArgument, "unknown velocity scheme '" + s + "'");
}

std::string to_string(VelocityScheme scheme) {
  return scheme == VelocityScheme::kCentral ? "central" : "forward";
}

VelocitySeries estimate_velocity(const Trajectory& traj, VelocityScheme scheme) {
  const Eigen::Index n = traj.size();
  require(n >= 3, ErrorCode::kInvalidArgument, "velocity needs at least 3 samples");
  const SampleMatrix& x = traj.samples();
  VelocitySeries v;
  v.dt = traj.dt();
  v.values = SampleMatrix::Zero(n, traj.dims());
  v.valid.assign(static_cast<std::size_t>(n), 1);
  if (scheme == VelocityScheme::kCentral) {
    const double inv = 1.0 / (2.0 * traj.dt());
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      v.values.row(k) = (x.row(k + 1) - x.row(k - 1)) * inv;
    }
    v.valid.front() = 0;
    v.valid.back() = 0;
  } else {
    const double inv = 1.0 / traj.dt();
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      v.values.row(k) = (x.row(k + 1) - x.row(k)) * inv;
    }
    v.valid.back() = 0;
  }
  return v;
}

BinGrid assign_to_grid(const GridGeometry& geometry, const Trajectory& traj,
                       std::size_t min_count, const Mask* valid) {
  require(geometry.dims() == traj.dims(), ErrorCode::kDimensionMismatch,
          "grid and trajectory dimensions differ");
  require(valid == nullptr || static_cast<Eigen::Index>(valid->size()) == traj.size(),
          ErrorCode::kDimensionMismatch, "mask length differs from trajectory");
  BinGrid grid;
  grid.geometry = geometry;
  grid.min_count = min_count;
  grid.sample_bin.assign(static_cast<std::size_t>(traj.size()), -1);
  grid.members.assign(geometry.bin_count(), {});
  std::array<double, kMaxDims> point{};
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    if (valid && !(*valid)[k]) continue;
    for (int a = 0; a < traj.dims(); ++a) point[a] = traj.samples()(k, a);
    auto f = geometry.locate(std::span<const double>(point.data(), traj.dims()));
    if (!f) continue;
    grid.sample_bin[k] = static_cast<std::int64_t>(*f);
    grid.members[*f].push_back(k);
  }
  return grid;
}

BinGrid build_grid(const Trajectory& traj, std::span<const int> bins_per_axis,
                   std::size_t min_count, const Mask* valid) {
  const int dims = traj.dims();
  require(dims <= kMaxDims, ErrorCode::kInvalidArgument,
          "at most " + std::to_string(kMaxDims) + " dimensions are supported");
  require(static_cast<int>(bins_per_axis.size()) == dims ||
              bins_per_axis.size() == 1,
          ErrorCode::kDimensionMismatch, "need one bin count per axis");
  std::vector<std::vector<double>> edges(dims);
  for (int a = 0; a < dims; ++a) {
    const int count = bins_per_axis.size() == 1 ? bins_per_axis[0] : bins_per_axis[a];
    require(count >= 1, ErrorCode::kInvalidArgument, "bin count must be >= 1");
    const double lo = traj.samples().col(a).minCoeff();
    const double hi = traj.samples().col(a).maxCoeff();
    require(hi > lo, ErrorCode::kDomain,
            "axis " + std::to_string(a + 1) + " has zero range");
    const double width = (hi - lo) / count;
    edges[a].resize(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i < count; ++i) edges[a][i] = lo + i * width;
    edges[a][count] = hi;
  }
  return assign_to_grid(GridGeometry(std::move(edges)), traj, min_count, valid);
}

LocalMoments moments_from_rows(const SampleMatrix& vel, std::span<const Eigen::Index> rows) {
  const int dims = static_cast<int>(vel.cols());
  require(!rows.empty(), ErrorCode::kEmpty, "no samples for moment estimate");
  LocalMoments m;
  m.count = rows.size();
  const double inv = 1.0 / static_cast<double>(rows.size());

  // Everything is accumulated relative to the first member's velocity.
  std::array<double, kMaxDims> shift{}, offset{};
  for (int a = 0; a < dims; ++a) shift[a] = vel(rows.front(), a);
  std::array<CompensatedSum, kMaxDims> mean_acc{};
  for (Eigen::Index r : rows) {
    for (int a = 0; a < dims; ++a) mean_acc[a].add(vel(r, a) - shift[a]);
  }
  m.mean_vel.resize(dims);
  for (int a = 0; a < dims; ++a) {
    offset[a] = mean_acc[a].value() * inv;
    m.mean_vel[a] = shift[a] + offset[a];
  }

  // Unique index tuples k <= l and k <= l <= p <= q.
  std::vector<std::array<int, 2>> pairs;
  std::vector<std::array<int, 4>> quads;
  for (int k = 0; k < dims; ++k)
    for (int l = k; l < dims; ++l) {
      pairs.push_back({k, l});
      for (int p = l; p < dims; ++p)
        for (int q = p; q < dims; ++q) quads.push_back({k, l, p, q});
    }

  std::vector<CompensatedSum> s2(pairs.size()), s4(quads.size());
  std::array<double, kMaxDims> c{};
  for (Eigen::Index r : rows) {
    for (int a = 0; a < dims; ++a) c[a] = (vel(r, a) - shift[a]) - offset[a];
    for (std::size_t i = 0; i < pairs.size(); ++i) s2[i].add(c[pairs[i][0]] * c[pairs[i][1]]);
    for (std::size_t i = 0; i < quads.size(); ++i) {
      const auto& t = quads[i];
      s4[i].add(c[t[0]] * c[t[1]] * c[t[2]] * c[t[3]]);
    }
  }

  m.c2.resize(dims, dims);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double v = s2[i].value() * inv;
    m.c2(pairs[i][0], pairs[i][1]) = v;
    m.c2(pairs[i][1], pairs[i][0]) = v;
  }
  m.c4 = Tensor4(dims);
  for (std::size_t i = 0; i < quads.size(); ++i) {
    const double v = s4[i].value() * inv;
    std::array<int, 4> idx = quads[i];
    // idx is sorted, so next_permutation visits every distinct ordering.
    do {
      m.c4(idx[0], idx[1], idx[2], idx[3]) = v;
    } while (std::next_permutation(idx.begin(), idx.end()));
  }
  return m;
}

MomentMap accumulate_moments(const Trajectory& traj, const VelocitySeries& vel,
                             const BinGrid& grid) {
  require(vel.size() == traj.size() && vel.dims() == traj.dims(),
          ErrorCode::kDimensionMismatch, "velocity series not aligned with trajectory");
  require(static_cast<Eigen::Index>(grid.sample_bin.size()) == traj.size(),
          ErrorCode::kDimensionMismatch, "grid membership not built for this trajectory");
  MomentMap out;
  std::vector<Eigen::Index> rows;
  for (std::size_t f = 0; f < grid.members.size(); ++f) {
    rows.clear();
    for (Eigen::Index k : grid.members[f]) {
      if (vel.valid[k]) rows.push_back(k);
    }
    if (rows.empty() || rows.size() < grid.min_count) continue;
    out.emplace(f, moments_from_rows(vel.values, rows));
  }
  require(!out.empty(), ErrorCode::kEmpty, "no occupied bins");
  return out;
}

}  // namespace innerseries

#include "innerseries/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace innerseries {

std::optional<std::size_t> resolve_bin(const FrameField& field, std::span<const double> point,
                                       bool* fallback) {
  const GridGeometry& g = field.grid;
  const BinIndex own = g.raw_index(point);
  if (fallback) *fallback = false;
  if (g.in_range(own) && field.frames.count(g.flat(own))) return g.flat(own);

  const int dims = g.dims();
  const Eigen::VectorXd widths = g.widths();
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  int offsets = 1;
  for (int a = 0; a < dims; ++a) offsets *= 3;
  BinIndex cand(dims);
  for (int code = 0; code < offsets; ++code) {
    int c = code;
    bool zero = true;
    for (int a = 0; a < dims; ++a) {
      const int step = c % 3 - 1;
      c /= 3;
      cand[a] = own[a] + step;
      zero = zero && step == 0;
    }
    if (zero || !g.in_range(cand)) continue;
    const std::size_t f = g.flat(cand);
    if (!field.frames.count(f)) continue;
    const Eigen::VectorXd center = g.center(f);
    double dist = 0.0;
    for (int a = 0; a < dims; ++a) {
      const double u = (point[a] - center[a]) / widths[a];
      dist += u * u;
    }
    if (dist < best_dist || (dist == best_dist && best && f < *best)) {
      best_dist = dist;
      best = f;
    }
  }
  if (best && fallback) *fallback = true;
  return best;
}

WeightSeries compute_weights(const Trajectory& traj, const VelocitySeries& vel,
                             const FrameField& field,
                             const std::vector<std::int64_t>* assignment) {
  require(!field.frames.empty(), ErrorCode::kEmpty, "frame field is empty");
  require(field.dims() == traj.dims(), ErrorCode::kDimensionMismatch,
          "frame field and trajectory dimensions differ");
  require(vel.size() == traj.size() && vel.dims() == traj.dims(),
          ErrorCode::kDimensionMismatch, "velocity series not aligned with trajectory");
  require(assignment == nullptr ||
              static_cast<Eigen::Index>(assignment->size()) == traj.size(),
          ErrorCode::kDimensionMismatch, "bin assignment length differs from trajectory");

  const Eigen::Index n = traj.size();
  const int dims = traj.dims();
  WeightSeries w;
  w.dt = traj.dt();
  w.values = SampleMatrix::Zero(n, dims);
  w.valid.assign(static_cast<std::size_t>(n), 0);
  w.fallback.assign(static_cast<std::size_t>(n), 0);
  w.channel_names = default_channel_names(dims, "w");

  std::array<double, kMaxDims> point{};
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!vel.valid[k]) continue;
    const LocalFrame* frame = nullptr;
    bool fell_back = false;
    if (assignment) {
      const std::int64_t f = (*assignment)[k];
      if (f >= 0) frame = field.find(static_cast<std::size_t>(f));
    } else {
      for (int a = 0; a < dims; ++a) point[a] = traj.samples()(k, a);
      auto f = resolve_bin(field, std::span<const double>(point.data(), dims), &fell_back);
      if (f) frame = field.find(*f);
    }
    if (!frame) continue;
    w.values.row(k) = (frame->m * vel.values.row(k).transpose()).transpose();
    w.valid[k] = 1;
    w.fallback[k] = fell_back ? 1 : 0;
  }
  return w;
}

double masked_correlation(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b, const Mask& valid) {
  double sa = 0.0, sb = 0.0;
  std::size_t n = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!valid[k]) continue;
    sa += a[k];
    sb += b[k];
    ++n;
  }
  require(n >= 2, ErrorCode::kEmpty, "too few jointly valid samples for a correlation");
  const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!valid[k]) continue;
    const double da = a[k] - ma, db = b[k] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  require(saa > 0.0 && sbb > 0.0, ErrorCode::kDomain, "zero-variance channel");
  return sab / std::sqrt(saa * sbb);
}

namespace {

Mask joint_mask(const Mask& a, const Mask& b) {
  Mask m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = a[k] && b[k] ? 1 : 0;
  return m;
}

}  // namespace

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& score) {
  // Kuhn-Munkres with potentials on cost = -score, 1-based internals.
  const int n = static_cast<int>(score.rows());
  require(score.cols() == n, ErrorCode::kDimensionMismatch, "score matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

WeightAlignment align_weight_series(const WeightSeries& w, const WeightSeries& wprime,
                                    std::size_t min_overlap) {
  require(w.dims() == wprime.dims(), ErrorCode::kDimensionMismatch,
          "weight series have different channel counts");
  require(w.size() == wprime.size(), ErrorCode::kDimensionMismatch,
          "weight series have different lengths");
  const int n = w.dims();
  const Mask valid = joint_mask(w.valid, wprime.valid);
  WeightAlignment out;
  out.overlap = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
  require(out.overlap >= min_overlap, ErrorCode::kEmpty,
          "insufficient overlap: " + std::to_string(out.overlap) + " jointly valid samples");

  out.cross.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.cross(i, j) = masked_correlation(w.values.col(i), wprime.values.col(j), valid);

  if (n <= 4) {
    out.p = nearest_signed_permutation(out.cross);
  } else {
    std::vector<int> perm = max_weight_assignment(out.cross.cwiseAbs());
    std::vector<int> signs(n);
    for (int i = 0; i < n; ++i) signs[i] = out.cross(i, perm[i]) < 0.0 ? -1 : 1;
    out.p = SignedPermutation(std::move(perm), std::move(signs));
  }
  out.correlations.resize(n);
  for (int i = 0; i < n; ++i) {
    out.correlations[i] = out.p.signs()[i] * out.cross(i, out.p.perm()[i]);
  }
  return out;
}

Eigen::MatrixXd cross_channel_correlation(const WeightSeries& w) {
  const int n = w.dims();
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      c(i, j) = c(j, i) = masked_correlation(w.values.col(i), w.values.col(j), w.valid);
    }
  if (n == 1) masked_correlation(w.values.col(0), w.values.col(0), w.valid);
  return c;
}

WeightSeries concatenate_channels(const std::vector<WeightSeries>& parts) {
  require(!parts.empty(), ErrorCode::kEmpty, "nothing to concatenate");
  const Eigen::Index n = parts.front().size();
  int dims = 0;
  for (const auto& p : parts) {
    require(p.size() == n, ErrorCode::kDimensionMismatch, "series lengths differ");
    dims += p.dims();
  }
  WeightSeries out;
  out.dt = parts.front().dt;
  out.values.resize(n, dims);
  out.valid.assign(static_cast<std::size_t>(n), 1);
  out.fallback.assign(static_cast<std::size_t>(n), 0);
  int col = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto& p = parts[s];
    out.values.middleCols(col, p.dims()) = p.values;
    for (int c = 0; c < p.dims(); ++c) {
      out.channel_names.push_back("s" + std::to_string(s + 1) + "_" +
                                  (p.channel_names.empty() ? "w" + std::to_string(c + 1)
                                                           : p.channel_names[c]));
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      out.valid[k] = out.valid[k] && p.valid[k];
      if (!p.fallback.empty()) out.fallback[k] = out.fallback[k] || p.fallback[k];
    }
    col += p.dims();
  }
  return out;
}

SeparabilityReport separability_report(const WeightSeries& mixture,
                                       const std::vector<WeightSeries>& sources,
                                       const SeparabilityThresholds& thresholds) {
  int total = 0;
  for (const auto& s : sources) total += s.dims();
  require(total == mixture.dims(), ErrorCode::kDimensionMismatch,
          "source dimensions sum to " + std::to_string(total) + ", mixture has " +
              std::to_string(mixture.dims()));
  const WeightSeries joined = concatenate_channels(sources);

  SeparabilityReport r;
  r.alignment = align_weight_series(joined, mixture);
  r.mixture_cross = cross_channel_correlation(mixture);
  r.min_match = r.alignment.correlations.minCoeff();
  r.max_cross = 0.0;
  for (Eigen::Index i = 0; i < r.mixture_cross.rows(); ++i)
    for (Eigen::Index j = 0; j < r.mixture_cross.cols(); ++j)
      if (i != j) r.max_cross = std::max(r.max_cross, std::abs(r.mixture_cross(i, j)));
  r.match_pass = r.min_match >= thresholds.min_match;
  r.cross_pass = r.max_cross < thresholds.max_cross;
  return r;
}

}  // namespace innerseries

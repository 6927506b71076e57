#include "innerseries/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace innerseries {

Trajectory::Trajectory(SampleMatrix samples, double dt,
                       std::vector<std::string> channel_names)
    : samples_(std::move(samples)), dt_(dt), names_(std::move(channel_names)) {
  require(samples_.cols() >= 1, ErrorCode::kInvalidArgument,
          "trajectory needs at least one channel");
  require(samples_.rows() >= 3, ErrorCode::kInvalidArgument,
          "trajectory needs at least 3 samples, got " +
              std::to_string(samples_.rows()));
  require(std::isfinite(dt_) && dt_ > 0.0, ErrorCode::kInvalidArgument,
          "sample interval must be positive and finite");
  for (Eigen::Index k = 0; k < samples_.rows(); ++k) {
    for (Eigen::Index c = 0; c < samples_.cols(); ++c) {
      if (!std::isfinite(samples_(k, c))) {
        fail(ErrorCode::kDomain, "non-finite sample at row " + std::to_string(k) +
                                     ", channel " + std::to_string(c));
      }
    }
  }
  if (names_.empty()) names_ = default_channel_names(dims());
  require(static_cast<int>(names_.size()) == dims(), ErrorCode::kDimensionMismatch,
          "channel name count does not match sample width");
}

std::vector<std::string> default_channel_names(int dims, const std::string& prefix) {
  std::vector<std::string> names;
  for (int i = 0; i < dims; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

std::size_t VelocitySeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

std::size_t WeightSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

// ---------------------------------------------------------------------------

GridGeometry::GridGeometry(std::vector<std::vector<double>> edges)
    : edges_(std::move(edges)) {
  require(!edges_.empty(), ErrorCode::kInvalidArgument, "grid needs at least one axis");
  require(dims() <= kMaxDims, ErrorCode::kInvalidArgument,
          "grid dimension exceeds " + std::to_string(kMaxDims));
  strides_.assign(edges_.size(), 1);
  bin_count_ = 1;
  for (int a = dims() - 1; a >= 0; --a) {
    const auto& e = edges_[a];
    require(e.size() >= 2, ErrorCode::kInvalidArgument, "axis needs at least one bin");
    for (std::size_t i = 1; i < e.size(); ++i) {
      require(e[i] > e[i - 1], ErrorCode::kInvalidArgument,
              "bin edges must be strictly increasing");
    }
    strides_[a] = bin_count_;
    bin_count_ *= e.size() - 1;
  }
}

std::size_t GridGeometry::flat(const BinIndex& index) const {
  std::size_t f = 0;
  for (int a = 0; a < dims(); ++a) f += static_cast<std::size_t>(index[a]) * strides_[a];
  return f;
}

BinIndex GridGeometry::unflat(std::size_t f) const {
  BinIndex index(edges_.size());
  for (int a = 0; a < dims(); ++a) {
    index[a] = static_cast<int>(f / strides_[a]);
    f %= strides_[a];
  }
  return index;
}

bool GridGeometry::in_range(const BinIndex& index) const {
  for (int a = 0; a < dims(); ++a) {
    if (index[a] < 0 || index[a] >= bins_on_axis(a)) return false;
  }
  return true;
}

BinIndex GridGeometry::raw_index(std::span<const double> point) const {
  BinIndex index(edges_.size());
  for (int a = 0; a < dims(); ++a) {
    const auto& e = edges_[a];
    const double x = point[a];
    if (x < e.front()) {
      const double u = (e.front() - x) / (e[1] - e[0]);
      index[a] = u < 1.0 ? -1 : -2;
    } else if (x > e.back()) {
      const int n = bins_on_axis(a);
      const double u = (x - e.back()) / (e[n] - e[n - 1]);
      index[a] = u < 1.0 ? n : n + 1;
    } else {
      auto it = std::upper_bound(e.begin(), e.end(), x);
      int i = static_cast<int>(it - e.begin()) - 1;
      index[a] = std::min(i, bins_on_axis(a) - 1);
    }
  }
  return index;
}

std::optional<std::size_t> GridGeometry::locate(std::span<const double> point) const {
  BinIndex index = raw_index(point);
  if (!in_range(index)) return std::nullopt;
  return flat(index);
}

Eigen::VectorXd GridGeometry::center(std::size_t f) const {
  BinIndex index = unflat(f);
  Eigen::VectorXd c(dims());
  for (int a = 0; a < dims(); ++a) {
    c[a] = 0.5 * (edges_[a][index[a]] + edges_[a][index[a] + 1]);
  }
  return c;
}

Eigen::VectorXd GridGeometry::widths() const {
  Eigen::VectorXd w(dims());
  for (int a = 0; a < dims(); ++a) {
    w[a] = (edges_[a].back() - edges_[a].front()) / bins_on_axis(a);
  }
  return w;
}

std::vector<std::size_t> GridGeometry::face_neighbors(std::size_t f) const {
  std::vector<std::size_t> out;
  BinIndex index = unflat(f);
  for (int a = 0; a < dims(); ++a) {
    for (int step : {-1, 1}) {
      BinIndex n = index;
      n[a] += step;
      if (in_range(n)) out.push_back(flat(n));
    }
  }
  return out;
}

std::vector<std::size_t> BinGrid::occupied_bins() const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < members.size(); ++f) {
    if (occupied(f)) out.push_back(f);
  }
  return out;
}

const LocalFrame* FrameField::find(std::size_t flat) const {
  auto it = frames.find(flat);
  return it == frames.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

SignedPermutation::SignedPermutation(std::vector<int> perm, std::vector<int> signs)
    : perm_(std::move(perm)), signs_(std::move(signs)) {
  require(perm_.size() == signs_.size(), ErrorCode::kDimensionMismatch,
          "permutation and sign vectors differ in length");
  std::vector<int> seen(perm_.size(), 0);
  for (std::size_t j = 0; j < perm_.size(); ++j) {
    require(perm_[j] >= 0 && perm_[j] < static_cast<int>(perm_.size()) &&
                !seen[perm_[j]],
            ErrorCode::kInvalidArgument, "not a permutation");
    seen[perm_[j]] = 1;
    require(signs_[j] == 1 || signs_[j] == -1, ErrorCode::kInvalidArgument,
            "signs must be +1 or -1");
  }
}

SignedPermutation SignedPermutation::identity(int dims) {
  std::vector<int> perm(dims);
  std::iota(perm.begin(), perm.end(), 0);
  return SignedPermutation(std::move(perm), std::vector<int>(dims, 1));
}

SignedPermutation SignedPermutation::inverse() const {
  std::vector<int> perm(perm_.size());
  std::vector<int> signs(perm_.size());
  for (std::size_t j = 0; j < perm_.size(); ++j) {
    perm[perm_[j]] = static_cast<int>(j);
    signs[perm_[j]] = signs_[j];
  }
  return SignedPermutation(std::move(perm), std::move(signs));
}

Eigen::MatrixXd SignedPermutation::matrix() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dims(), dims());
  for (int j = 0; j < dims(); ++j) p(j, perm_[j]) = signs_[j];
  return p;
}

bool SignedPermutation::is_identity() const {
  for (int j = 0; j < dims(); ++j) {
    if (perm_[j] != j || signs_[j] != 1) return false;
  }
  return true;
}

Eigen::VectorXd SignedPermutation::apply(const Eigen::VectorXd& u) const {
  require(u.size() == dims(), ErrorCode::kDimensionMismatch,
          "signed permutation dimension mismatch");
  Eigen::VectorXd out(dims());
  for (int j = 0; j < dims(); ++j) out[j] = signs_[j] * u[perm_[j]];
  return out;
}

Eigen::MatrixXd SignedPermutation::apply_rows(const Eigen::MatrixXd& m) const {
  require(m.rows() == dims(), ErrorCode::kDimensionMismatch,
          "signed permutation dimension mismatch");
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int j = 0; j < dims(); ++j) out.row(j) = signs_[j] * m.row(perm_[j]);
  return out;
}

WeightSeries apply_signed_permutation(const SignedPermutation& p, const WeightSeries& w) {
  require(p.dims() == w.dims(), ErrorCode::kDimensionMismatch,
          "signed permutation has dimension " + std::to_string(p.dims()) +
              ", weight series has " + std::to_string(w.dims()));
  WeightSeries out = w;
  for (int j = 0; j < p.dims(); ++j) {
    out.values.col(j) = p.signs()[j] * w.values.col(p.perm()[j]);
    if (!w.channel_names.empty()) out.channel_names[j] = w.channel_names[p.perm()[j]];
  }
  return out;
}

SignedPermutation compose_signed_permutations(const SignedPermutation& a,
                                              const SignedPermutation& b) {
  require(a.dims() == b.dims(), ErrorCode::kDimensionMismatch,
          "cannot compose signed permutations of different dimension");
  std::vector<int> perm(a.dims());
  std::vector<int> signs(a.dims());
  for (int j = 0; j < a.dims(); ++j) {
    perm[j] = b.perm()[a.perm()[j]];
    signs[j] = a.signs()[j] * b.signs()[a.perm()[j]];
  }
  return SignedPermutation(std::move(perm), std::move(signs));
}

std::vector<SignedPermutation> all_signed_permutations(int dims) {
  std::vector<SignedPermutation> out;
  std::vector<int> perm(dims);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1u << dims); ++mask) {
      std::vector<int> signs(dims);
      for (int j = 0; j < dims; ++j) signs[j] = (mask >> j) & 1u ? -1 : 1;
      out.emplace_back(perm, std::move(signs));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

SignedPermutation nearest_signed_permutation(const Eigen::MatrixXd& r) {
  require(r.rows() == r.cols(), ErrorCode::kDimensionMismatch, "matrix must be square");
  const int n = static_cast<int>(r.rows());
  // ||r - P||_F^2 = ||r||^2 + n - 2 sum_j s_j r(j, perm[j]), so pick signs from
  // the entries and maximise the sum of magnitudes over permutations.
  std::vector<int> best(n);
  if (n <= 4) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best_score = -1.0;
    do {
      double score = 0.0;
      for (int j = 0; j < n; ++j) score += std::abs(r(j, perm[j]));
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<int> row_used(n, 0), col_used(n, 0);
    for (int step = 0; step < n; ++step) {
      int bi = -1, bj = -1;
      double bv = -1.0;
      for (int i = 0; i < n; ++i) {
        if (row_used[i]) continue;
        for (int j = 0; j < n; ++j) {
          if (!col_used[j] && std::abs(r(i, j)) > bv) {
            bv = std::abs(r(i, j));
            bi = i;
            bj = j;
          }
        }
      }
      row_used[bi] = col_used[bj] = 1;
      best[bi] = bj;
    }
  }
  std::vector<int> signs(n);
  for (int j = 0; j < n; ++j) signs[j] = r(j, best[j]) < 0.0 ? -1 : 1;
  return SignedPermutation(std::move(best), std::move(signs));
}

}  // namespace innerseries

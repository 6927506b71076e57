#include "innerseries/frames.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace innerseries {

Eigen::MatrixXd contracted_fourth_order(const Eigen::MatrixXd& m, const Tensor4& c4) {
  const int n = static_cast<int>(m.rows());
  require(c4.dims() == n && m.cols() == n, ErrorCode::kDimensionMismatch,
          "frame and tensor dimensions differ");
  // sum_m M_mm' M_mn' = (M^T M)_m'n'
  const Eigen::MatrixXd g = m.transpose() * m;
  // First contract the last two tensor slots with g, then transform the rest.
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) s += g(p, q) * c4(a, b, p, q);
      inner(a, b) = s;
    }
  return m * inner * m.transpose();
}

Eigen::MatrixXd contract_with_inverse(const Eigen::MatrixXd& c2, const Tensor4& c4) {
  const int n = static_cast<int>(c2.rows());
  const Eigen::MatrixXd inv = c2.inverse();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) s += inv(p, q) * c4(k, l, p, q);
      t(k, l) = s;
    }
  return t;
}

LocalFrame solve_frame(const LocalMoments& moments, const FrameOptions& options) {
  const int n = moments.dims();
  require(n >= 1 && moments.c4.dims() == n, ErrorCode::kDimensionMismatch,
          "inconsistent moment shapes");
  require(moments.c2.allFinite() &&
              std::all_of(moments.c4.data().begin(), moments.c4.data().end(),
                          [](double v) { return std::isfinite(v); }),
          ErrorCode::kNumerical, "non-finite moments");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> c2_eig(moments.c2);
  require(c2_eig.info() == Eigen::Success, ErrorCode::kNumerical,
          "eigendecomposition of c2 failed");
  const Eigen::VectorXd lambda = c2_eig.eigenvalues();
  const double largest = lambda.maxCoeff();
  require(largest > 0.0 && lambda.minCoeff() > options.cond_tol * largest,
          ErrorCode::kNumerical, "c2 is singular or ill-conditioned");
  const Eigen::MatrixXd& e = c2_eig.eigenvectors();

  const Eigen::VectorXd root = lambda.cwiseSqrt();
  const Eigen::MatrixXd w = root.cwiseInverse().asDiagonal() * e.transpose();
  const Eigen::MatrixXd c2_inv = e * lambda.cwiseInverse().asDiagonal() * e.transpose();

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) s += c2_inv(p, q) * moments.c4(k, l, p, q);
      t(k, l) = s;
    }
  Eigen::MatrixXd s = w * t * w.transpose();
  s = 0.5 * (s + s.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s_eig(s);
  require(s_eig.info() == Eigen::Success, ErrorCode::kNumerical,
          "eigendecomposition of the contracted moment failed");
  // Descending order.
  const Eigen::VectorXd d = s_eig.eigenvalues().reverse();
  const Eigen::MatrixXd o = s_eig.eigenvectors().rowwise().reverse();

  LocalFrame frame;
  frame.m = o.transpose() * w;
  frame.v = e * root.asDiagonal() * o;
  frame.d = d;
  const double scale = d.cwiseAbs().maxCoeff();
  for (int i = 0; i + 1 < n; ++i) {
    if (d[i] - d[i + 1] < options.gap_tol * scale) frame.degenerate = true;
  }
  return frame;
}

LocalFrame permute_frame(const LocalFrame& frame, const SignedPermutation& p) {
  require(p.dims() == frame.dims(), ErrorCode::kDimensionMismatch,
          "permutation does not match frame dimension");
  LocalFrame out = frame;
  for (int j = 0; j < p.dims(); ++j) {
    const int src = p.perm()[j];
    const double s = p.signs()[j];
    out.m.row(j) = s * frame.m.row(src);
    out.v.col(j) = s * frame.v.col(src);
    out.d[j] = frame.d[src];
  }
  return out;
}

LocalFrame canonicalize_frame(const LocalFrame& frame) {
  const int n = frame.dims();
  std::vector<int> signs(n, 1);
  Eigen::MatrixXd normalized = frame.m;
  for (int i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    normalized.row(i).cwiseAbs().maxCoeff(&arg);
    if (normalized(i, arg) < 0.0) {
      signs[i] = -1;
      normalized.row(i) *= -1.0;
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (frame.d[a] != frame.d[b]) return frame.d[a] > frame.d[b];
    for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
      if (normalized(a, c) != normalized(b, c)) return normalized(a, c) > normalized(b, c);
    }
    return false;
  });
  std::vector<int> out_signs(n);
  for (int j = 0; j < n; ++j) out_signs[j] = signs[order[j]];
  return permute_frame(frame, SignedPermutation(order, out_signs));
}

FrameResiduals frame_residuals(const LocalFrame& frame, const LocalMoments& moments) {
  FrameResiduals r;
  const int n = frame.dims();
  const Eigen::MatrixXd white =
      frame.m * moments.c2 * frame.m.transpose() - Eigen::MatrixXd::Identity(n, n);
  r.whitening = white.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd k = contracted_fourth_order(frame.m, moments.c4);
  const double scale = k.diagonal().cwiseAbs().maxCoeff();
  double off = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) off = std::max(off, std::abs(k(a, b)));
  r.offdiag = scale > 0.0 ? off / scale : off;
  return r;
}

FrameField align_frame_field(const GridGeometry& grid, std::map<std::size_t, LocalFrame> frames,
                             const std::map<std::size_t, std::size_t>& counts) {
  FrameField field;
  field.grid = grid;
  field.counts = counts;
  if (frames.empty()) {
    field.frames = std::move(frames);
    return field;
  }

  auto count_of = [&](std::size_t f) {
    auto it = counts.find(f);
    return it == counts.end() ? std::size_t{0} : it->second;
  };

  std::set<std::size_t> visited;
  int component = 0;
  while (visited.size() < frames.size()) {
    // Seed: most populated unvisited bin, non-degenerate ones first.
    std::size_t seed = 0;
    bool have_seed = false;
    for (int pass = 0; pass < 2 && !have_seed; ++pass) {
      std::size_t best = 0;
      for (const auto& [f, frame] : frames) {
        if (visited.count(f) || (pass == 0 && frame.degenerate)) continue;
        if (!have_seed || count_of(f) > best) {
          seed = f;
          best = count_of(f);
          have_seed = true;
        }
      }
    }
    const bool degenerate_seed = frames.at(seed).degenerate;
    visited.insert(seed);
    field.component[seed] = component;

    std::deque<std::size_t> queue{seed};
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const LocalFrame& ref = frames.at(cur);
      for (std::size_t nb : grid.face_neighbors(cur)) {
        auto it = frames.find(nb);
        if (it == frames.end() || visited.count(nb)) continue;
        LocalFrame& next = it->second;
        const Eigen::MatrixXd rel = next.m * ref.v;
        const SignedPermutation fix = nearest_signed_permutation(rel).inverse();
        if (!fix.is_identity()) next = permute_frame(next, fix);
        visited.insert(nb);
        field.component[nb] = component;
        if (!next.degenerate || degenerate_seed) queue.push_back(nb);
      }
    }
    ++component;
  }
  field.component_count = component;
  field.frames = std::move(frames);
  return field;
}

FrameField build_frame_field(const GridGeometry& grid, const MomentMap& moments,
                             const FrameOptions& options) {
  std::map<std::size_t, LocalFrame> frames;
  std::map<std::size_t, std::size_t> counts;
  std::vector<std::size_t> skipped;
  for (const auto& [f, mom] : moments) {
    try {
      frames.emplace(f, canonicalize_frame(solve_frame(mom, options)));
      counts.emplace(f, mom.count);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumerical) throw;
      skipped.push_back(f);
    }
  }
  require(!frames.empty(), ErrorCode::kEmpty, "no bin produced a valid frame");
  FrameField field = align_frame_field(grid, std::move(frames), counts);
  field.skipped = std::move(skipped);
  return field;
}

TransformLawCheck check_transform_law(const Eigen::MatrixXd& m_x,
                                      const Eigen::MatrixXd& m_xprime,
                                      const Eigen::MatrixXd& jacobian) {
  const auto n = m_x.rows();
  require(m_x.cols() == n && m_xprime.rows() == n && m_xprime.cols() == n &&
              jacobian.rows() == n && jacobian.cols() == n,
          ErrorCode::kDimensionMismatch, "transform law needs N x N matrices");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian);
  require(lu.isInvertible(), ErrorCode::kDomain, "jacobian is singular");
  const Eigen::MatrixXd mj = m_x * jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_mj(mj);
  require(lu_mj.isInvertible(), ErrorCode::kDomain, "M * J is singular");

  TransformLawCheck out;
  out.r = m_xprime * lu_mj.inverse();
  out.p = nearest_signed_permutation(out.r);
  out.residual = (out.r - out.p.matrix()).norm();
  return out;
}

}  // namespace innerseries

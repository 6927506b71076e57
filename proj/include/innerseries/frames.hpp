#pragma once

// Local frames M(x): per-bin solve, canonical form, global alignment, and
// the covariant transformation check.

#include "innerseries/model.hpp"

namespace innerseries {

struct FrameOptions {
  /// Adjacent diagonal entries closer than gap_tol * max|d| mark a bin degenerate.
  double gap_tol = 1e-3;
  /// c2 is rejected when its smallest eigenvalue is <= cond_tol * largest.
  double cond_tol = 1e-10;
};

/// Sum over m of the M-transformed fourth-order correlation,
///   K_kl = sum_m I_klmm,  I_klmn = M_kk' M_ll' M_mm' M_nn' C_k'l'm'n',
/// evaluated directly from the tensor.
Eigen::MatrixXd contracted_fourth_order(const Eigen::MatrixXd& m, const Tensor4& c4);

/// The contraction T_kl = sum_mn (c2^-1)_mn C_klmn.
Eigen::MatrixXd contract_with_inverse(const Eigen::MatrixXd& c2, const Tensor4& c4);

/// Closed-form frame: whiten c2 with W = L^-1/2 E^T, diagonalise
/// S = W T W^T = O D O^T and return M = O^T W with d descending. Any M = O W
/// with O orthogonal keeps M c2 M^T = I and maps the contraction to
/// O S O^T, so the eigenvectors of S give both conditions at once.
LocalFrame solve_frame(const LocalMoments& moments, const FrameOptions& options = {});

/// Rows sorted by descending d (ties: lexicographically larger row first),
/// each row signed so its largest-magnitude entry is positive.
LocalFrame canonicalize_frame(const LocalFrame& frame);

/// Applies P to the rows of m (and the matching columns of v and entries of d).
LocalFrame permute_frame(const LocalFrame& frame, const SignedPermutation& p);

struct FrameResiduals {
  /// max |(M c2 M^T - I)_kl|
  double whitening = 0.0;
  /// max off-diagonal |K_kl| / max|d|
  double offdiag = 0.0;
};

FrameResiduals frame_residuals(const LocalFrame& frame, const LocalMoments& moments);

/// Breadth-first alignment over face-adjacent frames, starting at the most
/// populated non-degenerate bin. Each newly reached frame is multiplied by
/// the signed permutation P minimising ||P M_new M_ref^-1 - I||_F.
/// Degenerate frames are aligned but never used as references while a
/// non-degenerate path exists. Disconnected pieces get their own component.
FrameField align_frame_field(const GridGeometry& grid,
                             std::map<std::size_t, LocalFrame> frames,
                             const std::map<std::size_t, std::size_t>& counts);

/// Solves, canonicalises and aligns the frames of every bin in `moments`.
/// Bins whose c2 is singular are skipped and listed in FrameField::skipped.
FrameField build_frame_field(const GridGeometry& grid, const MomentMap& moments,
                             const FrameOptions& options = {});

struct TransformLawCheck {
  SignedPermutation p;
  /// ||R - P||_F with R = M' (M J)^-1.
  double residual = 0.0;
  Eigen::MatrixXd r;
};

/// Checks M'(x') = P M(x) dx/dx' for a given Jacobian dx/dx'.
TransformLawCheck check_transform_law(const Eigen::MatrixXd& m_x,
                                      const Eigen::MatrixXd& m_xprime,
                                      const Eigen::MatrixXd& jacobian);

}  // namespace innerseries

#pragma once

#include <Eigen/QR>

#include "vfit/types.hpp"

namespace vfit {

/// Column-pivoted Householder QR, A(row_perm, :) * P = Q * R.
///
/// row_perm is the identity unless rows were presorted by decreasing
/// infinity norm. perm(j) is the column of A that sits in column j of R.
class PivotedQR {
 public:
  PivotedQR() = default;
  explicit PivotedQR(const CMatrix& a, bool presort_rows = false);

  Index rows() const { return qr_.rows(); }
  Index cols() const { return qr_.cols(); }

  /// min(rows, cols) x cols upper trapezoidal factor.
  CMatrix R() const;
  const Permutation& perm() const { return perm_; }
  const Permutation& row_perm() const { return row_perm_; }
  /// Thin (rows x min(rows, cols)) orthonormal factor in presorted row order.
  CMatrix thin_q() const;
  /// Q^* M for M given in the original row order of A.
  CMatrix apply_adjoint(const CMatrix& m) const;

  /// ||R(k:, k:)||_F for k = 0..cols; entry cols is 0.
  RVector trailing_norms() const;

 private:
  Eigen::ColPivHouseholderQR<CMatrix> qr_;
  Permutation perm_;
  Permutation row_perm_;
};

/// Row order by decreasing infinity norm (stable for ties).
Permutation row_presort_order(const CMatrix& a);

enum class LSMode { min_norm, basic };

struct TruncationOptions {
  double eps = -1.0;  // negative: cols * unit roundoff
  LSMode mode = LSMode::basic;
  bool presort_rows = false;
  bool column_equilibrate = false;
};

struct TruncatedLSSolution {
  CMatrix x;
  Index numerical_rank = 0;
  /// Frobenius residual of the truncated problem, identical in both modes.
  double residual_norm = 0.0;
  LSMode mode = LSMode::basic;
  Permutation perm;
  /// |T_ii| of the pivoted factor (diagnostic only).
  RVector pivot_magnitudes;
};

/// Rank-revealing least squares. The numerical rank is the smallest k with
/// ||T22||_F <= eps * ||T11||_F for the pivoted triangular factor T, T22 is
/// then dropped. Basic mode zeros the truncated coordinates; min-norm mode
/// removes T12 by a right orthogonal reduction.
TruncatedLSSolution ls_solve_truncated(const CMatrix& a, const CMatrix& b,
                                       const TruncationOptions& options = {});

/// Thin SVD A = W diag(sigma) V^*.
struct Svd {
  CMatrix W;
  RVector sigma;
  CMatrix V;
};

Svd thin_svd(const CMatrix& a);

/// x_mu = sum_i sigma_i/(sigma_i^2 + mu^2) (w_i^* b) v_i, column by column.
CMatrix tikhonov_solve(const Svd& svd, const CMatrix& b, double mu);
CMatrix tikhonov_solve(const CMatrix& a, const CMatrix& b, double mu);

/// ||A x_mu - B||_F evaluated from the SVD.
double tikhonov_residual(const Svd& svd, const CMatrix& b, double mu);

enum class MorozovStatus { ok, below_minimal_residual, above_data_norm };

struct MorozovResult {
  double mu = 0.0;
  double residual_norm = 0.0;
  MorozovStatus status = MorozovStatus::ok;
  int iterations = 0;
};

/// Discrepancy principle: mu with ||A x_mu - b|| within nu*(1 +- delta),
/// found by bisection on log(mu) in [1e-16, 1e4] * sigma_max.
MorozovResult morozov_select_mu(const Svd& svd, const CMatrix& b, double nu,
                                double delta = 1e-3);
MorozovResult morozov_select_mu(const CMatrix& a, const CMatrix& b, double nu,
                                double delta = 1e-3);

/// C(row_perm, col_perm) = L diag(D) U for the (row-scaled) Cauchy matrix
/// C_ij = s_i/(xi_i - lambda_j), complete pivoting.
struct CauchyLDU {
  Permutation row_perm;
  Permutation col_perm;
  CMatrix L;  // rows x k, unit lower trapezoidal
  CVector D;  // k
  CMatrix U;  // k x cols, unit upper trapezoidal
};

/// Every entry of L, D, U is formed from products and quotients of node
/// differences, so each carries a small relative error.
CauchyLDU cauchy_ldu(const CVector& xi, const CVector& lambda,
                     const RVector& row_scaling = RVector());

/// SVD of the (row-scaled) Cauchy matrix with singular values accurate to
/// small relative error, built from cauchy_ldu.
Svd accurate_cauchy_svd(const CVector& xi, const CVector& lambda,
                        const RVector& row_scaling = RVector());

/// One-sided Jacobi: G = U diag(sigma) V^* by orthogonalizing columns of G.
Svd one_sided_jacobi_svd(const CMatrix& g);

}  // namespace vfit

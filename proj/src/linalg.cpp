#include "vfit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

namespace vfit {

namespace {

Permutation identity_perm(Index n) {
  Permutation p(n);
  std::iota(p.data(), p.data() + n, 0);
  return p;
}

CMatrix permute_rows(const CMatrix& m, const Permutation& p) {
  CMatrix out(m.rows(), m.cols());
  for (Index i = 0; i < p.size(); ++i) out.row(i) = m.row(p(i));
  return out;
}

}  // namespace

Permutation row_presort_order(const CMatrix& a) {
  RVector norms(a.rows());
  for (Index i = 0; i < a.rows(); ++i) norms(i) = a.row(i).cwiseAbs().maxCoeff();
  Permutation p = identity_perm(a.rows());
  std::stable_sort(p.data(), p.data() + p.size(),
                   [&](int x, int y) { return norms(x) > norms(y); });
  return p;
}

PivotedQR::PivotedQR(const CMatrix& a, bool presort_rows) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(Errc::invalid_argument, "qr_column_pivoted: empty matrix");
  }
  row_perm_ = presort_rows ? row_presort_order(a) : identity_perm(a.rows());
  qr_.compute(presort_rows ? permute_rows(a, row_perm_) : a);
  perm_ = qr_.colsPermutation().indices().cast<int>();
}

CMatrix PivotedQR::R() const {
  const Index k = std::min(rows(), cols());
  CMatrix r = qr_.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return r;
}

CMatrix PivotedQR::thin_q() const {
  const Index k = std::min(rows(), cols());
  CMatrix q = CMatrix::Identity(rows(), k);
  q.applyOnTheLeft(qr_.householderQ());
  return q;
}

CMatrix PivotedQR::apply_adjoint(const CMatrix& m) const {
  CMatrix out = permute_rows(m, row_perm_);
  out.applyOnTheLeft(qr_.householderQ().adjoint());
  return out;
}

RVector PivotedQR::trailing_norms() const {
  const CMatrix r = R();
  const Index n = cols();
  RVector sq = RVector::Zero(n + 1);
  for (Index k = n - 1; k >= 0; --k) {
    double row = 0.0;
    if (k < r.rows()) row = r.row(k).tail(n - k).squaredNorm();
    sq(k) = sq(k + 1) + row;
  }
  return sq.cwiseSqrt();
}

TruncatedLSSolution ls_solve_truncated(const CMatrix& a, const CMatrix& b,
                                       const TruncationOptions& options) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(Errc::invalid_argument, "ls_solve_truncated: empty matrix");
  }
  if (b.rows() != a.rows()) {
    throw Error(Errc::invalid_argument, "ls_solve_truncated: row mismatch");
  }
  const Index n = a.cols();
  const double eps = options.eps < 0.0 ? static_cast<double>(n) * kUnitRoundoff
                                       : options.eps;

  RVector colscale = RVector::Ones(n);
  CMatrix work = a;
  if (options.column_equilibrate) {
    for (Index j = 0; j < n; ++j) {
      const double c = a.col(j).norm();
      if (c > 0.0) {
        colscale(j) = 1.0 / c;
        work.col(j) *= colscale(j);
      }
    }
  }

  const PivotedQR qr(work, options.presort_rows);
  const CMatrix r = qr.R();
  const RVector trailing = qr.trailing_norms();

  // ||T11(k)||_F for the leading k x k triangle.
  const Index kmax = std::min(a.rows(), n);
  RVector lead = RVector::Zero(kmax + 1);
  for (Index k = 1; k <= kmax; ++k) {
    lead(k) = std::sqrt(lead(k - 1) * lead(k - 1) +
                        r.col(k - 1).head(k).squaredNorm());
  }
  Index rank = kmax;
  for (Index k = 0; k <= kmax; ++k) {
    if (trailing(k) <= eps * lead(k)) {
      rank = k;
      break;
    }
  }

  TruncatedLSSolution sol;
  sol.mode = options.mode;
  sol.numerical_rank = rank;
  sol.perm = qr.perm();
  sol.pivot_magnitudes = r.diagonal().cwiseAbs();

  const CMatrix qtb = qr.apply_adjoint(b);
  sol.residual_norm = qtb.bottomRows(a.rows() - rank).norm();

  CMatrix xp = CMatrix::Zero(n, b.cols());
  if (rank > 0) {
    const CMatrix c1 = qtb.topRows(rank);
    if (options.mode == LSMode::basic) {
      xp.topRows(rank) =
          r.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(c1);
    } else {
      // [T11 T12] = Rt^* Z^* with Z^* Z = I from a QR of the transpose.
      const CMatrix tk = r.topRows(rank).adjoint();
      Eigen::HouseholderQR<CMatrix> rz(tk);
      const CMatrix rt = rz.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
      const CMatrix w = rt.adjoint().triangularView<Eigen::Lower>().solve(c1);
      CMatrix z = CMatrix::Identity(n, rank);
      z.applyOnTheLeft(rz.householderQ());
      xp = z * w;
    }
  }
  sol.x.resize(n, b.cols());
  for (Index j = 0; j < n; ++j) sol.x.row(sol.perm(j)) = xp.row(j);
  if (options.column_equilibrate) sol.x = colscale.asDiagonal() * sol.x;
  return sol;
}

Svd thin_svd(const CMatrix& a) {
  const Index k = std::min(a.rows(), a.cols());
  if (k > 0 && a.isDiagonal(0.0)) {
    // Read off directly: an iterative SVD would rescale the entries and
    // perturb them in the last bit.
    std::vector<Index> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
      return std::abs(a(x, x)) > std::abs(a(y, y));
    });
    Svd out{CMatrix::Zero(a.rows(), k), RVector(k), CMatrix::Zero(a.cols(), k)};
    for (Index t = 0; t < k; ++t) {
      const Index i = order[static_cast<size_t>(t)];
      const double mag = std::abs(a(i, i));
      out.sigma(t) = mag;
      out.W(i, t) = mag > 0.0 ? a(i, i) / mag : Complex(1.0, 0.0);
      out.V(i, t) = 1.0;
    }
    return out;
  }
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

CMatrix tikhonov_solve(const Svd& svd, const CMatrix& b, double mu) {
  const CMatrix beta = svd.W.adjoint() * b;
  RVector filter(svd.sigma.size());
  for (Index i = 0; i < svd.sigma.size(); ++i) {
    const double s = svd.sigma(i);
    const double den = s * s + mu * mu;
    filter(i) = den > 0.0 ? s / den : 0.0;
  }
  return svd.V * (filter.asDiagonal() * beta);
}

CMatrix tikhonov_solve(const CMatrix& a, const CMatrix& b, double mu) {
  return tikhonov_solve(thin_svd(a), b, mu);
}

namespace {

// Residual of the Tikhonov solution from projected data.
struct TikhonovResidual {
  RVector sigma;
  RVector beta_sq;  // row-wise ||w_i^* B||^2
  double perp_sq;   // ||B - W W^* B||_F^2

  TikhonovResidual(const Svd& svd, const CMatrix& b) : sigma(svd.sigma) {
    const CMatrix beta = svd.W.adjoint() * b;
    beta_sq = beta.rowwise().squaredNorm();
    perp_sq = (b - svd.W * beta).squaredNorm();
  }

  double operator()(double mu) const {
    double acc = perp_sq;
    for (Index i = 0; i < sigma.size(); ++i) {
      const double s2 = sigma(i) * sigma(i);
      const double f = s2 == 0.0 ? 1.0 : mu * mu / (s2 + mu * mu);
      acc += f * f * beta_sq(i);
    }
    return std::sqrt(acc);
  }
};

}  // namespace

double tikhonov_residual(const Svd& svd, const CMatrix& b, double mu) {
  return TikhonovResidual(svd, b)(mu);
}

MorozovResult morozov_select_mu(const Svd& svd, const CMatrix& b, double nu,
                                double delta) {
  const TikhonovResidual res(svd, b);
  const double lo_ok = nu * (1.0 - delta);
  const double hi_ok = nu * (1.0 + delta);
  const double sigma_max = svd.sigma.size() > 0 ? svd.sigma.maxCoeff() : 0.0;

  MorozovResult out;
  const double r0 = res(0.0);
  if (r0 > hi_ok) {
    out.status = MorozovStatus::below_minimal_residual;
    out.residual_norm = r0;
    return out;
  }
  if (r0 >= lo_ok || sigma_max == 0.0) {
    out.residual_norm = r0;
    if (r0 < lo_ok) out.status = MorozovStatus::above_data_norm;
    return out;
  }

  double lo = std::log(1e-16 * sigma_max);
  double hi = std::log(1e4 * sigma_max);
  const double r_hi = res(std::exp(hi));
  if (r_hi < lo_ok) {
    out.mu = std::exp(hi);
    out.residual_norm = r_hi;
    out.status = MorozovStatus::above_data_norm;
    return out;
  }
  double mid = hi;
  double r_mid = r_hi;
  if (r_hi <= hi_ok) {
    out.mu = std::exp(hi);
    out.residual_norm = r_hi;
    return out;
  }
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    r_mid = res(std::exp(mid));
    out.iterations = it + 1;
    if (r_mid < lo_ok) {
      lo = mid;
    } else if (r_mid > hi_ok) {
      hi = mid;
    } else {
      break;
    }
  }
  out.mu = std::exp(mid);
  out.residual_norm = r_mid;
  return out;
}

MorozovResult morozov_select_mu(const CMatrix& a, const CMatrix& b, double nu,
                                double delta) {
  return morozov_select_mu(thin_svd(a), b, nu, delta);
}

CauchyLDU cauchy_ldu(const CVector& xi, const CVector& lambda,
                     const RVector& row_scaling) {
  const Index l = xi.size();
  const Index n = lambda.size();
  if (row_scaling.size() != 0 && row_scaling.size() != l) {
    throw Error(Errc::invalid_argument, "cauchy_ldu: row scaling length mismatch");
  }
  CVector x = xi;
  CVector y = lambda;
  CMatrix g(l, n);
  for (Index i = 0; i < l; ++i) {
    const double s = row_scaling.size() == 0 ? 1.0 : row_scaling(i);
    for (Index j = 0; j < n; ++j) {
      const Complex gap = x(i) - y(j);
      if (std::abs(gap) <= 4.0 * kUnitRoundoff * std::max(std::abs(x(i)), std::abs(y(j)))) {
        throw Error(Errc::collision, "cauchy_ldu: node coincides with a pole");
      }
      g(i, j) = s / gap;
    }
  }

  CauchyLDU out;
  out.row_perm = identity_perm(l);
  out.col_perm = identity_perm(n);
  const Index k = std::min(l, n);
  Index steps = k;
  for (Index t = 0; t < k; ++t) {
    Index pi = t;
    Index pj = t;
    double best = -1.0;
    for (Index j = t; j < n; ++j) {
      for (Index i = t; i < l; ++i) {
        const double v = std::abs(g(i, j));
        if (v > best) {
          best = v;
          pi = i;
          pj = j;
        }
      }
    }
    if (best == 0.0) {
      steps = t;
      break;
    }
    g.row(t).swap(g.row(pi));
    std::swap(x(t), x(pi));
    std::swap(out.row_perm(t), out.row_perm(pi));
    g.col(t).swap(g.col(pj));
    std::swap(y(t), y(pj));
    std::swap(out.col_perm(t), out.col_perm(pj));

    // Schur complement of a quasi-Cauchy matrix:
    // S_ij = G_ij (x_i - x_t)(y_t - y_j) / ((x_i - y_t)(x_t - y_j)).
    CVector row_factor(l);
    for (Index i = t + 1; i < l; ++i) row_factor(i) = (x(i) - x(t)) / (x(i) - y(t));
    for (Index j = t + 1; j < n; ++j) {
      const Complex col_factor = (y(t) - y(j)) / (x(t) - y(j));
      for (Index i = t + 1; i < l; ++i) g(i, j) *= row_factor(i) * col_factor;
    }
  }

  out.L = CMatrix::Identity(l, k);
  out.U = CMatrix::Identity(k, n);
  out.D = CVector::Zero(k);
  for (Index t = 0; t < steps; ++t) {
    const Complex piv = g(t, t);
    out.D(t) = piv;
    for (Index i = t + 1; i < l; ++i) out.L(i, t) = g(i, t) / piv;
    for (Index j = t + 1; j < n; ++j) out.U(t, j) = g(t, j) / piv;
  }
  return out;
}

Svd one_sided_jacobi_svd(const CMatrix& g) {
  const Index k = g.cols();
  CMatrix u = g;
  CMatrix v = CMatrix::Identity(k, k);
  const double tol = std::max<double>(1.0, static_cast<double>(g.rows())) * kUnitRoundoff;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i < k - 1; ++i) {
      for (Index j = i + 1; j < k; ++j) {
        const double alpha = u.col(i).squaredNorm();
        const double beta = u.col(j).squaredNorm();
        const Complex gamma = u.col(i).dot(u.col(j));
        const double ag = std::abs(gamma);
        if (ag == 0.0 || ag <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = std::conj(gamma / ag);
        const double zeta = (beta - alpha) / (2.0 * ag);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const CVector ui = u.col(i);
        const CVector uj = phase * u.col(j);
        u.col(i) = c * ui - s * uj;
        u.col(j) = s * ui + c * uj;
        const CVector vi = v.col(i);
        const CVector vj = phase * v.col(j);
        v.col(i) = c * vi - s * vj;
        v.col(j) = s * vi + c * vj;
      }
    }
    if (!rotated) break;
  }
  RVector sigma(k);
  for (Index j = 0; j < k; ++j) {
    sigma(j) = u.col(j).norm();
    if (sigma(j) > 0.0) u.col(j) /= sigma(j);
  }
  Permutation order = identity_perm(k);
  std::stable_sort(order.data(), order.data() + k,
                   [&](int a, int b) { return sigma(a) > sigma(b); });
  Svd out;
  out.W.resize(u.rows(), k);
  out.V.resize(k, k);
  out.sigma.resize(k);
  for (Index j = 0; j < k; ++j) {
    out.W.col(j) = u.col(order(j));
    out.V.col(j) = v.col(order(j));
    out.sigma(j) = sigma(order(j));
  }
  return out;
}

Svd accurate_cauchy_svd(const CVector& xi, const CVector& lambda,
                        const RVector& row_scaling) {
  const CauchyLDU f = cauchy_ldu(xi, lambda, row_scaling);
  const Index l = xi.size();
  const Index n = lambda.size();

  // X D P = Q R, then W = R P^T Y has graded rows; one-sided Jacobi on W^*
  // orthogonalizes the (column-graded) transpose accurately.
  const CMatrix xd = f.L * f.D.asDiagonal();
  Eigen::ColPivHouseholderQR<CMatrix> qr(xd);
  const Index k = xd.cols();
  const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  CMatrix rpt(k, k);
  const auto& cp = qr.colsPermutation().indices();
  for (Index j = 0; j < k; ++j) rpt.col(cp(j)) = r.col(j);
  const CMatrix w = rpt * f.U;

  const Svd js = one_sided_jacobi_svd(w.adjoint());  // W^* = U_g S J^*
  CMatrix q = CMatrix::Identity(l, k);
  q.applyOnTheLeft(qr.householderQ());
  const CMatrix left = q * js.V;

  Svd out;
  out.sigma = js.sigma;
  out.W.resize(l, k);
  out.V.resize(n, k);
  for (Index i = 0; i < l; ++i) out.W.row(f.row_perm(i)) = left.row(i);
  for (Index j = 0; j < n; ++j) out.V.row(f.col_perm(j)) = js.W.row(j);
  return out;
}

}  // namespace vfit

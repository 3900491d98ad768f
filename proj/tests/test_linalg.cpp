#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "vfit/linalg.hpp"

using namespace vfit;

namespace {

using LDMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

LDMatrix to_long_double(const CMatrix& a) {
  LDMatrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out(i, j) = std::complex<long double>(a(i, j));
  }
  return out;
}

}  // namespace

TEST_CASE("truncated least squares") {
  SUBCASE("rank-deficient system") {
    CMatrix a(3, 2);
    a << 1.0, 1.0, 1.0, 1.0, 0.0, 0.0;
    CMatrix b(3, 1);
    b << 2.0, 2.0, 0.0;

    TruncationOptions opt;
    opt.eps = 1e-12;
    opt.mode = LSMode::min_norm;
    const TruncatedLSSolution mn = ls_solve_truncated(a, b, opt);
    CHECK(mn.numerical_rank == 1);
    CHECK(std::abs(mn.x(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(mn.x(1, 0) - 1.0) < 1e-14);
    CHECK(mn.residual_norm < 1e-14);

    opt.mode = LSMode::basic;
    const TruncatedLSSolution bs = ls_solve_truncated(a, b, opt);
    CHECK(bs.numerical_rank == 1);
    CHECK(((a * bs.x) - b).norm() < 1e-14);
    // Exactly one coordinate is zeroed.
    CHECK(((bs.x.array().abs() == 0.0).count()) == 1);
  }

  SUBCASE("full rank reproduces the exact solution") {
    std::mt19937_64 rng(1);
    const CMatrix a = vfit::testing::random_cmatrix(12, 5, rng);
    const CMatrix x = vfit::testing::random_cmatrix(5, 2, rng);
    const TruncatedLSSolution s = ls_solve_truncated(a, a * x);
    CHECK(s.numerical_rank == 5);
    CHECK((s.x - x).norm() / x.norm() < 1e-13);
  }

  SUBCASE("residuals agree between modes") {
    std::mt19937_64 rng(2);
    CMatrix a = vfit::testing::random_cmatrix(20, 6, rng);
    a.col(5) = a.col(0) + a.col(1) * Complex(0.0, 2.0);
    const CMatrix b = vfit::testing::random_cmatrix(20, 1, rng);
    TruncationOptions opt;
    opt.eps = 1e-10;
    opt.mode = LSMode::basic;
    const auto basic = ls_solve_truncated(a, b, opt);
    opt.mode = LSMode::min_norm;
    const auto minn = ls_solve_truncated(a, b, opt);
    CHECK(basic.numerical_rank == 5);
    CHECK(minn.numerical_rank == 5);
    CHECK(std::abs((a * basic.x - b).norm() - (a * minn.x - b).norm()) < 1e-12);
    CHECK(minn.x.norm() <= basic.x.norm() + 1e-12);
  }

  SUBCASE("row presorting is transparent") {
    std::mt19937_64 rng(3);
    CMatrix a = vfit::testing::random_cmatrix(10, 3, rng);
    a.row(7) *= 1e6;
    const CMatrix b = vfit::testing::random_cmatrix(10, 1, rng);
    TruncationOptions opt;
    const auto plain = ls_solve_truncated(a, b, opt);
    opt.presort_rows = true;
    const auto sorted = ls_solve_truncated(a, b, opt);
    CHECK((plain.x - sorted.x).norm() / plain.x.norm() < 1e-10);
  }
}

TEST_CASE("Tikhonov and Morozov") {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1e-8;
  CMatrix b(2, 1);
  b << 2.0, 1.0;

  SUBCASE("filter factors on a diagonal system") {
    const double mu = 1e-3;
    const CMatrix x = tikhonov_solve(a, b, mu);
    CHECK(x(0, 0) == Complex(2.0 * 2.0 / (4.0 + mu * mu)));
    CHECK(x(1, 0) == Complex(1e-8 / (1e-16 + mu * mu)));
    CHECK(std::abs(tikhonov_solve(a, b, 0.0)(1, 0) - 1e8) <= 1.0);
  }

  SUBCASE("Morozov statuses") {
    std::mt19937_64 rng(7);
    const CMatrix g = vfit::testing::random_cmatrix(30, 4, rng);
    const CMatrix rhs = g * vfit::testing::random_cmatrix(4, 1, rng) +
                        1e-3 * vfit::testing::random_cmatrix(30, 1, rng);
    const Svd svd = thin_svd(g);
    const double floor_res = tikhonov_residual(svd, rhs, 0.0);

    const double nu = 3.0 * floor_res;
    const MorozovResult ok = morozov_select_mu(svd, rhs, nu);
    CHECK(ok.status == MorozovStatus::ok);
    CHECK(std::abs(ok.residual_norm - nu) <= 1e-3 * nu);

    CHECK(morozov_select_mu(svd, rhs, 0.5 * floor_res).status ==
          MorozovStatus::below_minimal_residual);
    CHECK(morozov_select_mu(svd, rhs, 2.0 * rhs.norm()).status ==
          MorozovStatus::above_data_norm);
  }
}

TEST_CASE("pivoted QR") {
  std::mt19937_64 rng(4);
  const CMatrix a = vfit::testing::random_cmatrix(9, 4, rng);
  const PivotedQR qr(a, true);
  CMatrix ap(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) ap(i, j) = a(qr.row_perm()(i), qr.perm()(j));
  }
  CHECK((qr.thin_q() * qr.R() - ap).norm() / a.norm() < 1e-14);
  const RVector t = qr.trailing_norms();
  CHECK(t(0) == doctest::Approx(a.norm()).epsilon(1e-13));
  CHECK(t(4) == 0.0);
  for (Index k = 1; k < t.size(); ++k) CHECK(t(k) <= t(k - 1));
}

TEST_CASE("Cauchy LDU and accurate SVD") {
  SUBCASE("reconstruction") {
    std::mt19937_64 rng(8);
    const CVector xi = log_imaginary_nodes(0.1, 100.0, 6);
    const CVector lambda = vfit::testing::random_closed_nodes(5, rng);
    const RVector scale = RVector::LinSpaced(xi.size(), 1.0, 3.0);
    const CauchyLDU f = cauchy_ldu(xi, lambda, scale);
    CMatrix c(xi.size(), lambda.size());
    for (Index i = 0; i < xi.size(); ++i) {
      for (Index j = 0; j < lambda.size(); ++j) c(i, j) = scale(i) / (xi(i) - lambda(j));
    }
    CMatrix cp(c.rows(), c.cols());
    for (Index i = 0; i < c.rows(); ++i) {
      for (Index j = 0; j < c.cols(); ++j) cp(i, j) = c(f.row_perm(i), f.col_perm(j));
    }
    CHECK((f.L * f.D.asDiagonal() * f.U - cp).norm() / c.norm() < 1e-14);
  }

  SUBCASE("Hilbert singular values to relative accuracy") {
    const Index n = 10;
    CVector x(n), y(n);
    for (Index i = 0; i < n; ++i) {
      x(i) = static_cast<double>(i + 1);
      y(i) = -static_cast<double>(i);
    }
    const Svd s = accurate_cauchy_svd(x, y);
    // Extreme singular values of the 10x10 Hilbert matrix (40-digit oracle).
    CHECK(s.sigma(n - 1) == doctest::Approx(1.0931538193796658e-13).epsilon(1e-12));
    CHECK(s.sigma(0) == doctest::Approx(1.7519196702651775).epsilon(1e-13));
    double logdet = 0.0;
    for (Index k = 0; k < n; ++k) logdet += std::log(s.sigma(k));
    CHECK(logdet == doctest::Approx(std::log(2.164179226431492e-53)).epsilon(1e-13));
  }

  SUBCASE("one-sided Jacobi against a long double reconstruction") {
    std::mt19937_64 rng(10);
    CMatrix g = vfit::testing::random_cmatrix(8, 5, rng);
    g.col(4) *= 1e-10;
    const Svd s = one_sided_jacobi_svd(g);
    const LDMatrix rec = to_long_double(s.W) *
                         to_long_double(s.sigma.cast<Complex>().asDiagonal()) *
                         to_long_double(s.V).adjoint();
    const LDMatrix diff = rec - to_long_double(g);
    CHECK(static_cast<double>(diff.norm()) / g.norm() < 1e-14);
    CHECK((s.W.adjoint() * s.W - CMatrix::Identity(5, 5)).norm() < 1e-13);
    for (Index k = 1; k < 5; ++k) CHECK(s.sigma(k) <= s.sigma(k - 1));
  }
}

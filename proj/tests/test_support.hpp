#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <cmath>
#include <random>

#include "vfit/core_model.hpp"

namespace vfit::testing {

inline Complex random_complex(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const double re = n(rng);
  return Complex(re, n(rng));
}

inline CMatrix random_cmatrix(Index rows, Index cols, std::mt19937_64& rng) {
  CMatrix a(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) a(i, j) = random_complex(rng);
  }
  return a;
}

/// Conjugate-closed nodes: pairs with Re in [-2, -0.1], Im in [0.5, 20],
/// plus one real node when r is odd.
inline CVector random_closed_nodes(Index r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> re(0.1, 2.0), im(0.5, 20.0);
  CVector z(r);
  Index j = 0;
  for (; j + 1 < r; j += 2) {
    z(j) = Complex(-re(rng), im(rng));
    z(j + 1) = std::conj(z(j));
  }
  if (j < r) z(j) = Complex(-re(rng) * 5.0, 0.0);
  return z;
}

/// Coefficients matching a closed node vector: conjugate values at
/// conjugate nodes, real at real nodes.
inline CVector closed_coefficients(const CVector& nodes, double scale, std::mt19937_64& rng) {
  CVector c(nodes.size());
  for (Index j = 0; j < nodes.size(); ++j) {
    if (nodes(j).imag() < 0.0) {
      c(j) = std::conj(c(j - 1));
    } else {
      c(j) = scale * random_complex(rng);
      if (nodes(j).imag() == 0.0) c(j) = c(j).real();
    }
  }
  return c;
}

inline std::vector<CMatrix> closed_matrices(const CVector& nodes, Index p, Index m,
                                            std::mt19937_64& rng) {
  std::vector<CMatrix> out;
  for (Index j = 0; j < nodes.size(); ++j) {
    if (nodes(j).imag() < 0.0) {
      out.push_back(out.back().conjugate());
    } else {
      CMatrix a = random_cmatrix(p, m, rng);
      if (nodes(j).imag() == 0.0) a = a.real().cast<Complex>();
      out.push_back(a);
    }
  }
  return out;
}

inline BarycentricModel random_barycentric(Index r, Index p, Index m, std::mt19937_64& rng) {
  BarycentricModel b;
  b.p = p;
  b.m = m;
  b.nodes = random_closed_nodes(r, rng);
  b.denom_weights = closed_coefficients(b.nodes, 1.0, rng);
  b.numer_coeffs = closed_matrices(b.nodes, p, m, rng);
  return b;
}

inline double relative_deviation(const CMatrix& ref, const CMatrix& x) {
  return (ref - x).norm() / ref.norm();
}

/// sup over a log grid of |d(+-i omega) - 1|, d = 1 + sum phi_j/(s - lambda_j).
inline double sampled_denominator_deviation(const CVector& lambda, const CVector& phi,
                                            double omega_min, double omega_max,
                                            Index points) {
  double worst = 0.0;
  const double a = std::log(omega_min);
  const double step = (std::log(omega_max) - a) / static_cast<double>(points / 2 - 1);
  for (Index k = 0; k < points / 2; ++k) {
    const double w = std::exp(a + step * static_cast<double>(k));
    for (double sign : {1.0, -1.0}) {
      const Complex s(0.0, sign * w);
      Complex acc = 0.0;
      for (Index j = 0; j < lambda.size(); ++j) acc += phi(j) / (s - lambda(j));
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

}  // namespace vfit::testing

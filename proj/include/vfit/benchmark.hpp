#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfit/core_model.hpp"
#include "vfit/degree_control.hpp"
#include "vfit/quadrature.hpp"
#include "vfit/vf_engine.hpp"

namespace vfit {

/// Heat equation on (0,1) with zero boundary values, central differences on
/// n interior points: A = (alpha/h^2) tridiag(1,-2,1), h = 1/(n+1). B holds
/// m point inputs and C reads p point outputs, spread over the rod.
DiagonalStateSpace generate_heat1d(Index n, double alpha, Index p = 2, Index m = 2);

/// The same system in pole-residue form (A is symmetric, so its
/// eigendecomposition gives real poles and real rank-one residues).
PoleResidueModel heat1d_model(Index n, double alpha, Index p = 2, Index m = 2);

/// Stable model with n distinct poles: conjugate pairs with imaginary parts
/// log-uniform in [1, 100] and damping ratios in [0.05, 0.5], plus one real
/// pole when n is odd. Residues are dense Gaussian p x m matrices.
PoleResidueModel random_stable(Index n, Index p, Index m, std::uint64_t seed);

/// As random_stable but with rank-one residues c_j b_j^T (McMillan degree r).
PoleResidueModel rank_one_planted(Index r, Index p, Index m, std::uint64_t seed);

enum class Generator { heat1d, random_stable, rank_one_planted };

struct SamplingPlan {
  QuadKind kind = QuadKind::boyd_cc;
  /// Function evaluations on the positive frequency axis; the mirrored
  /// negative frequencies come for free by conjugation.
  Index evaluations = 20;
  double omega_min = 1e-1;
  double omega_max = 1e3;
  double scale_l = 10.0;
};

QuadratureRule sampling_rule(const SamplingPlan& plan);

struct BenchmarkSpec {
  Generator generator = Generator::heat1d;
  Index n = 197;
  double alpha = 1.0;
  Index p = 2;
  Index m = 2;
  std::uint64_t seed = 1;
  SamplingPlan sampling;
  std::vector<Index> orders{6, 10};
  int vf_iters = 20;
  int als_sweeps = 1;
};

struct BenchCell {
  double gamma = 0.0;
  double chi = 0.0;
};

struct BenchRow {
  std::string method;
  std::vector<BenchCell> cells;  // one per order
};

struct BenchTable {
  std::vector<Index> orders;
  std::vector<BenchRow> rows;
  std::vector<std::string> notes;
};

PoleResidueModel generate_model(const BenchmarkSpec& spec);

/// Fits the sampled generator at every order and compares degree-control
/// methods. gamma is measured on the fitting samples, chi against the
/// generator in closed form. A method that fails leaves NaN in its cell and
/// a note.
BenchTable run_bench(const BenchmarkSpec& spec);

std::string bench_csv(const BenchTable& table);

const char* generator_name(Generator g);

}  // namespace vfit

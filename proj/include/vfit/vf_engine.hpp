#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfit/core_model.hpp"
#include "vfit/linalg.hpp"

namespace vfit {

enum class FitMode { vf, sk };
enum class InitStrategy { log_conjugate, random_stable };
enum class ResidueSolver { plain, truncated, tikhonov, morozov };

struct VFOptions {
  Index r = 0;
  int max_iters = 10;
  /// Threshold on theta. With noise_estimate set, the effective threshold
  /// is stop_eps * (1 + noise_estimate / ||data||).
  double stop_eps = 1e-8;
  std::optional<double> noise_estimate;
  FitMode mode = FitMode::vf;
  InitStrategy init = InitStrategy::log_conjugate;
  std::uint64_t seed = 0;
  std::optional<CVector> initial_poles;
  bool flip_unstable = true;
  /// Truncation threshold of the phi solve; negative means r * unit roundoff.
  double truncation_eps = -1.0;
  bool presort_rows = true;
  bool column_equilibrate = false;
  ResidueSolver residue_solver = ResidueSolver::plain;
  double residue_truncation_eps = -1.0;
  double mu = 0.0;
  double nu = 0.0;
  bool enforce_conjugate = true;
  /// Record gamma of the pole-residue model at every iterate (one extra LS
  /// solve per iteration).
  bool track_gamma = true;
  /// |phi_j| <= phi_zero_tol counts as zero when SK converts its result.
  double phi_zero_tol = 0.0;

  void validate(Index n_samples) const;
};

struct IterationRecord {
  CVector nodes;  // barycentric nodes lambda^(k) used in this solve
  CVector phi;
  double theta = 0.0;
  double gamma = -1.0;  // negative when not tracked
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;
  Index rank = 0;
  Index zeroed_phi = 0;
};

struct ResidueReport {
  ResidueSolver solver = ResidueSolver::plain;
  Index numerical_rank = 0;
  Index zero_residues = 0;
  double residual_norm = 0.0;
  double mu = 0.0;
  MorozovStatus morozov = MorozovStatus::ok;
};

struct FitDiagnostics {
  std::vector<IterationRecord> iterations;
  ResidueReport final_solve;
  std::vector<std::string> warnings;
  bool converged = false;
  double stop_threshold = 0.0;
  double gamma = 0.0;
};

struct FitResult {
  PoleResidueModel model;
  FitDiagnostics diagnostics;
};

CVector initial_poles(InitStrategy strategy, const CVector& sample_nodes,
                      Index r, std::uint64_t seed = 0);

/// C_ij = 1/(xi_i - lambda_j).
CMatrix build_cauchy(const CVector& xi, const CVector& lambda);

/// Reduced system for phi: min ||B22 phi - s2||.
struct B22System {
  CMatrix B22;  // (p*m*r) x r, pair order u fastest
  CVector s2;
  PivotedQR shared_qr;  // of D_rho C
  double eps3 = 0.0;    // part of the objective no phi can reduce
};

/// Fast path: one pivoted QR of D_rho C shared by all pairs, then a QR of
/// the trailing (l-r) x r block per pair.
B22System assemble_b22(const SampleSet& samples, const CVector& lambda,
                       bool presort_rows = false);
/// Reference path: a separate QR of [D_rho C, -D_rho D^(uv) C] per pair.
B22System assemble_b22_naive(const SampleSet& samples, const CVector& lambda);

struct PhiSolution {
  CVector phi;
  Index rank = 0;
  Index zeroed = 0;
};

/// Truncated basic-mode solve. When lambda is conjugate-closed and
/// options.enforce_conjugate is set, the conjugated equations are stacked
/// under the original ones and the result is symmetrized.
PhiSolution solve_phi(const CMatrix& b22, const CVector& s2,
                      const CVector& lambda, const VFOptions& options);

struct Relocation {
  CVector poles;
  std::vector<std::string> warnings;
};

/// Zeros of d: eigenvalues of diag(lambda) - 1 phi^T.
Relocation relocate_poles(const CVector& lambda, const CVector& phi,
                          bool flip_unstable, bool enforce_conjugate = true);

/// theta = sum_j |phi_j| / |Re lambda_j| bounds sup_w |d(iw) - 1|.
double stopping_theta(const CVector& lambda, const CVector& phi);

struct ResidualComponents {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;
  double total() const { return eps1 + eps2 + eps3; }
};

/// Splits the linearized objective at (phi, Phi) through the per-pair
/// factorizations.
ResidualComponents residual_decomposition(const SampleSet& samples,
                                          const CVector& lambda,
                                          const CVector& phi,
                                          const std::vector<CMatrix>& numer);

/// sum_uv ||D_rho (C Phi_uv - D^(uv) C phi - S_uv)||^2 evaluated directly.
double linearized_objective(const SampleSet& samples, const CVector& lambda,
                            const CVector& phi,
                            const std::vector<CMatrix>& numer);

/// Numerator coefficients that minimize the linearized objective for a
/// given phi (back substitution through the shared factor).
std::vector<CMatrix> numerator_for_phi(const SampleSet& samples,
                                       const CVector& lambda,
                                       const CVector& phi);

struct ResidueSolution {
  std::vector<CMatrix> residues;
  ResidueReport report;
};

ResidueSolution final_residues(const SampleSet& samples, const CVector& poles,
                               const VFOptions& options);

FitResult vf_fit(const SampleSet& samples, const VFOptions& options);
FitResult sk_fit(const SampleSet& samples, const VFOptions& options);

/// Dispatches on options.mode.
FitResult fit(const SampleSet& samples, const VFOptions& options);

}  // namespace vfit

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vfit/core_model.hpp"

namespace vfit {

struct ReductionReport {
  std::string method;
  Index degree_before = 0;
  Index degree_after = 0;
  double gamma_before = std::numeric_limits<double>::quiet_NaN();
  double gamma_after = std::numeric_limits<double>::quiet_NaN();
  double chi_before = std::numeric_limits<double>::quiet_NaN();
  double chi_after = std::numeric_limits<double>::quiet_NaN();
  /// Objective after every half-step, starting with the initial value.
  std::vector<double> als_objective;
  /// Half-steps whose update was discarded because the objective rose.
  Index als_rejected_steps = 0;
  RVector hankel_singular_values;
  std::vector<CVector> shift_history;
  double shift_gap = std::numeric_limits<double>::quiet_NaN();
  double interpolation_residual = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = true;
};

/// Best rank-one approximation of every residue, c_j = u_1 sqrt(s_1),
/// b_j = conj(v_1) sqrt(s_1).
RankOneResidueModel truncate_rank_one(const PoleResidueModel& model);

/// Rank-one factors of conjugate-closed residues; near-conjugate pole pairs
/// are made exactly conjugate.
RankOneResidueModel closed_rank_one(const CVector& poles,
                                    const std::vector<CMatrix>& residues);

/// Least-squares minimizer over C with poles and B fixed. With use_weights
/// the objective carries the sample weights, otherwise all weights are 1.
/// Throws singular when a column of B vanishes.
CMatrix als_correct_C(const SampleSet& samples, const CVector& poles,
                      const CMatrix& b, bool use_weights = false);
/// Mirror of als_correct_C with the roles of C and B exchanged.
CMatrix als_correct_B(const SampleSet& samples, const CVector& poles,
                      const CMatrix& c, bool use_weights = false);

/// sum_i w_i ||C (xi_i I - Lambda)^{-1} B^T - S_i||_F^2.
double als_objective(const SampleSet& samples, const RankOneResidueModel& model,
                     bool use_weights = false);

struct ALSResult {
  RankOneResidueModel model;
  ReductionReport report;
};

/// Alternates C and B corrections; each half-step is kept only if it does
/// not increase the objective.
ALSResult als_fit(const SampleSet& samples, const RankOneResidueModel& init,
                  int n_sweeps, bool use_weights = false);

struct Gramians {
  DiagonalStateSpace realization;
  CMatrix P;
  CMatrix Q;
};

/// Closed-form Gramians of the block-diagonal realization.
Gramians closed_form_gramians(const PoleResidueModel& model);

RVector hankel_singular_values(const PoleResidueModel& model);

struct BTResult {
  RankOneResidueModel model;
  DiagonalStateSpace reduced;
  ReductionReport report;
};

/// Square-root balanced truncation to r_target states.
BTResult bt_reduce(const PoleResidueModel& model, Index r_target);

/// H and H' at arbitrary points.
struct TransferEvaluator {
  Index p = 0;
  Index m = 0;
  std::function<CMatrix(Complex)> value;
  std::function<CMatrix(Complex)> derivative;
};

TransferEvaluator make_evaluator(const PoleResidueModel& model);

/// Tangent directions at each shift. reduced_residues uses the residue
/// factors of the previous reduced model (the first step falls back to the
/// dominant singular pair); its fixed points satisfy the H2 optimality
/// conditions. dominant_singular keeps the leading singular vectors of
/// H(sigma_i) throughout.
enum class TangentChoice { dominant_singular, reduced_residues };

struct IRKAOptions {
  int max_iters = 200;
  double tol = 1e-10;
  std::optional<CVector> init_shifts;
  TangentChoice directions = TangentChoice::reduced_residues;
};

struct IRKAResult {
  PoleResidueModel model;
  RankOneResidueModel factors;
  ReductionReport report;
};

/// Interpolatory H2 reduction that only samples H and H'. The reduced model
/// is assembled from Hermite tangential data at the current shifts (Loewner
/// and shifted Loewner matrices); shifts move to the mirror images of its
/// poles until they settle.
IRKAResult irka_reduce(const TransferEvaluator& h, Index r_target,
                       const IRKAOptions& options);
/// Same, defaulting the initial shifts to dominant_pole_shifts(model, r).
IRKAResult irka_reduce(const PoleResidueModel& model, Index r_target,
                       IRKAOptions options = {});

/// Mirror images -conj(lambda_j) of the r most dominant poles
/// (largest ||R_j||_F / |Re lambda_j|), conjugate-closed.
CVector dominant_pole_shifts(const PoleResidueModel& model, Index r);

enum class DegreeControl { none, trnct, als, irka, bt };

struct ReductionResult {
  PoleResidueModel model;
  RankOneResidueModel factors;  // empty for DegreeControl::none
  ReductionReport report;
};

/// Runs one degree-control method on a full-residue model and fills gamma
/// (when samples are given) and chi against `reference` (defaults to the
/// input model).
ReductionResult reduce_degree(const PoleResidueModel& full, DegreeControl method,
                              Index r_target, const SampleSet* samples,
                              int als_sweeps = 1,
                              const PoleResidueModel* reference = nullptr);

const char* degree_control_name(DegreeControl method);

}  // namespace vfit

#pragma once

#include <vector>

#include "vfit/types.hpp"

namespace vfit {

/// Frequency-response samples: nodes xi_i, weights rho_i and p x m values.
struct SampleSet {
  CVector nodes;
  RVector weights;
  std::vector<CMatrix> values;
  Index p = 0;
  Index m = 0;

  Index size() const { return nodes.size(); }

  /// Throws invalid_argument/non_finite/collision on a malformed set.
  void validate() const;
};

/// H(s) = N(s)/d(s), N = sum Phi_j/(s - lambda_j), d = 1 + sum phi_j/(s - lambda_j).
struct BarycentricModel {
  CVector nodes;
  CVector denom_weights;
  std::vector<CMatrix> numer_coeffs;
  Index p = 0;
  Index m = 0;

  Index order() const { return nodes.size(); }
};

/// H(s) = sum_j R_j/(s - lambda_j).
struct PoleResidueModel {
  CVector poles;
  std::vector<CMatrix> residues;
  Index p = 0;
  Index m = 0;

  Index order() const { return poles.size(); }
  bool is_stable() const;
};

/// H(s) = C (sI - diag(poles))^{-1} B^T, i.e. residues c_j b_j^T.
struct RankOneResidueModel {
  CVector poles;
  CMatrix C;  // p x r
  CMatrix B;  // m x r

  Index order() const { return poles.size(); }
  Index p() const { return C.rows(); }
  Index m() const { return B.rows(); }
};

/// H(s) = C_out (sI - A)^{-1} B_in. A is diagonal for realizations of
/// pole-residue models and general after balanced truncation.
struct DiagonalStateSpace {
  CMatrix A;
  CMatrix B_in;
  CMatrix C_out;

  Index states() const { return A.rows(); }
};

CMatrix eval(const BarycentricModel& model, Complex s);
CMatrix eval(const PoleResidueModel& model, Complex s);
CMatrix eval(const RankOneResidueModel& model, Complex s);
CMatrix eval(const DiagonalStateSpace& model, Complex s);

/// dH/ds of a pole-residue model.
CMatrix eval_derivative(const PoleResidueModel& model, Complex s);

/// Denominator d(s) of the barycentric form.
Complex eval_denominator(const CVector& nodes, const CVector& phi, Complex s);

/// Partial-fraction form of a barycentric model. Entries with
/// |phi_j| <= zero_tol keep lambda_j as a pole; the others are replaced by
/// the zeros of d.
PoleResidueModel to_pole_residue(const BarycentricModel& model,
                                 double zero_tol = 0.0);
PoleResidueModel to_pole_residue(const RankOneResidueModel& model);
BarycentricModel to_barycentric(const PoleResidueModel& model);

/// ||S - S_r||_F / ||S||_F over all samples, unweighted.
template <class Model>
double relative_ls_error(const Model& model, const SampleSet& samples);

/// Weighted squared residual sum_i rho_i ||S_i - H(xi_i)||_F^2.
template <class Model>
double weighted_ls_residual(const Model& model, const SampleSet& samples);

double h2_norm(const PoleResidueModel& model);
/// <G, H> = sum_{j,k} trace(R_j Q_k^*) / (-lambda_j - conj(mu_k)).
Complex h2_inner(const PoleResidueModel& g, const PoleResidueModel& h);
/// ||H - H_r||_H2, evaluated through residues of the error so that small
/// errors are not lost to cancellation.
double h2_error(const PoleResidueModel& h, const PoleResidueModel& hr);
double relative_h2_error(const PoleResidueModel& h,
                         const PoleResidueModel& hr);

/// Block realization with state dimension sum_j rank(R_j); ranks count
/// singular values above rank_tol * sigma_max(R_j) (negative: default
/// max(p,m) * unit roundoff).
DiagonalStateSpace realize_state_space(const PoleResidueModel& model,
                                       double rank_tol = -1.0);
DiagonalStateSpace realize_state_space(const RankOneResidueModel& model);

Index mcmillan_degree_estimate(const PoleResidueModel& model,
                               double rank_tol);

/// Sample a model at the given nodes.
template <class Model>
SampleSet sample_model(const Model& model, const CVector& nodes,
                       const RVector& weights);

// Conjugate-closure helpers.

/// partner[j] = k with z_k = conj(z_j) (k == j for real entries), or an
/// empty vector when z is not closed within tol * max(1, |z|).
Permutation conjugate_partners(const CVector& z, double tol = 1e-10);

/// Snaps near-real entries to the real axis and replaces each nearest
/// (z, w) pair with (a, conj(a)), a = (z + conj(w))/2. Pairs are emitted
/// adjacent with the positive imaginary part first. Other unpaired entries
/// are kept as they are.
CVector enforce_conjugate_closure(const CVector& z, double tol = 1e-10);

/// Adds mirrored samples for non-real nodes whose conjugate is missing.
SampleSet conjugate_closure(const SampleSet& samples);
bool is_conjugate_closed(const SampleSet& samples);

/// Purely imaginary nodes +-i*omega with n_positive log-spaced omega.
CVector log_imaginary_nodes(double omega_min, double omega_max,
                            Index n_positive);

namespace detail {
void check_not_pole(Complex s, const CVector& poles, const char* what);
}

// ---------------------------------------------------------------------------

template <class Model>
double weighted_ls_residual(const Model& model, const SampleSet& samples) {
  double acc = 0.0;
  for (Index i = 0; i < samples.size(); ++i) {
    acc += samples.weights(i) *
           (samples.values[i] - eval(model, samples.nodes(i))).squaredNorm();
  }
  return acc;
}

template <class Model>
double relative_ls_error(const Model& model, const SampleSet& samples) {
  double num = 0.0;
  double den = 0.0;
  for (Index i = 0; i < samples.size(); ++i) {
    num += (samples.values[i] - eval(model, samples.nodes(i))).squaredNorm();
    den += samples.values[i].squaredNorm();
  }
  if (den == 0.0) {
    throw Error(Errc::degenerate, "relative_ls_error: data norm is zero");
  }
  return std::sqrt(num / den);
}

template <class Model>
SampleSet sample_model(const Model& model, const CVector& nodes,
                       const RVector& weights) {
  SampleSet out;
  out.nodes = nodes;
  out.weights = weights;
  out.values.reserve(nodes.size());
  for (Index i = 0; i < nodes.size(); ++i) {
    out.values.push_back(eval(model, nodes(i)));
  }
  if (!out.values.empty()) {
    out.p = out.values.front().rows();
    out.m = out.values.front().cols();
  }
  return out;
}

}  // namespace vfit

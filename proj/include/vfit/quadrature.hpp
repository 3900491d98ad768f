#pragma once

#include <functional>

#include "vfit/core_model.hpp"

namespace vfit {

enum class QuadKind { uniform, log, trapezoid, boyd_cc };

/// Nodes i*omega_j with weights for integrals over omega.
///
/// Weight convention: `weights` are the rule's own weights, so that
/// sum_j weights_j f(omega_j) approximates the integral of f over omega.
/// Sample sets consume rho_j = weights_j / (2 pi) (see sample_weights()),
/// which turns the weighted LS objective into the discretized squared H2
/// distance. This is the only place the 2 pi enters.
struct QuadratureRule {
  CVector nodes;
  RVector weights;
  double tail_plus = 0.0;
  double tail_minus = 0.0;
  QuadKind kind = QuadKind::uniform;

  Index size() const { return nodes.size(); }
  RVector sample_weights() const;
};

/// Composite trapezoid rule on [omega_min, omega_max] with n_points nodes,
/// mirrored to negative frequencies (2 * n_points nodes in total).
QuadratureRule trapezoid_rule(double omega_min, double omega_max, Index n_points);

/// Cotangent-mapped rule on the whole real line, omega = L cot(theta),
/// equispaced midpoint angles theta_j = (j - 1/2) pi / N, j = 1..N, and
/// weights (pi/N) L / sin^2(theta_j).
QuadratureRule boyd_cc_rule(double scale_l, Index n_points);

/// Unit weights on equispaced (uniform) or log-spaced (log) positive
/// frequencies, mirrored (2 * n_points nodes).
QuadratureRule uniform_rule(double omega_min, double omega_max, Index n_points);
QuadratureRule log_rule(double omega_min, double omega_max, Index n_points);

/// Samples of a model at the rule's nodes, weighted by sample_weights().
template <class Model>
SampleSet sample_on_rule(const Model& model, const QuadratureRule& rule) {
  return sample_model(model, rule.nodes, rule.sample_weights());
}

/// (sum_j rho_j ||S_j - H_r(xi_j)||_F^2)^{1/2} with rho_j the sample
/// weights; for a set produced by sample_on_rule this is the rule's
/// estimate of ||H - H_r||_H2 (tail terms are zero).
template <class Model>
double discretized_h2_error(const SampleSet& samples_with_rule, const Model& model) {
  return std::sqrt(weighted_ls_residual(model, samples_with_rule));
}

/// Rule weights applied to an arbitrary scalar integrand of omega.
double integrate(const QuadratureRule& rule, const std::function<double(double)>& f);

const char* quad_kind_name(QuadKind kind);

}  // namespace vfit

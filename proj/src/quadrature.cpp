#include "vfit/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace vfit {

RVector QuadratureRule::sample_weights() const {
  return weights / (2.0 * std::numbers::pi);
}

namespace {

void check_range(double omega_min, double omega_max, Index n_points, Index min_points) {
  if (!(omega_min > 0.0) || !(omega_max > omega_min) || !std::isfinite(omega_max)) {
    throw Error(Errc::invalid_argument, "quadrature: need 0 < omega_min < omega_max");
  }
  if (n_points < min_points) {
    throw Error(Errc::invalid_argument, "quadrature: too few points");
  }
}

QuadratureRule mirrored(const RVector& omega, const RVector& w, QuadKind kind) {
  const Index n = omega.size();
  QuadratureRule rule;
  rule.kind = kind;
  rule.nodes.resize(2 * n);
  rule.weights.resize(2 * n);
  for (Index i = 0; i < n; ++i) {
    rule.nodes(2 * i) = Complex(0.0, omega(i));
    rule.nodes(2 * i + 1) = Complex(0.0, -omega(i));
    rule.weights(2 * i) = w(i);
    rule.weights(2 * i + 1) = w(i);
  }
  return rule;
}

}  // namespace

QuadratureRule trapezoid_rule(double omega_min, double omega_max, Index n_points) {
  check_range(omega_min, omega_max, n_points, 2);
  const double h = (omega_max - omega_min) / static_cast<double>(n_points - 1);
  RVector omega(n_points);
  RVector w = RVector::Constant(n_points, h);
  for (Index i = 0; i < n_points; ++i) omega(i) = omega_min + h * static_cast<double>(i);
  omega(n_points - 1) = omega_max;
  w(0) = w(n_points - 1) = 0.5 * h;
  return mirrored(omega, w, QuadKind::trapezoid);
}

QuadratureRule boyd_cc_rule(double scale_l, Index n_points) {
  if (!(scale_l > 0.0) || n_points < 2) {
    throw Error(Errc::invalid_argument, "boyd_cc_rule: need L > 0 and N >= 2");
  }
  // Angles pair up as theta and pi - theta, giving +-omega with equal weight;
  // odd N adds the self-conjugate node omega = 0.
  const double n = static_cast<double>(n_points);
  const double h = std::numbers::pi / n;
  QuadratureRule rule;
  rule.kind = QuadKind::boyd_cc;
  rule.nodes.resize(n_points);
  rule.weights.resize(n_points);
  Index pos = 0;
  for (Index j = 0; j < n_points / 2; ++j) {
    const double theta = (static_cast<double>(j) + 0.5) * h;
    const double s = std::sin(theta);
    const double omega = scale_l * std::cos(theta) / s;
    const double w = h * scale_l / (s * s);
    rule.nodes(pos) = Complex(0.0, omega);
    rule.weights(pos++) = w;
    rule.nodes(pos) = Complex(0.0, -omega);
    rule.weights(pos++) = w;
  }
  if (n_points % 2 == 1) {
    rule.nodes(pos) = Complex(0.0, 0.0);
    rule.weights(pos) = h * scale_l;
  }
  return rule;
}

QuadratureRule uniform_rule(double omega_min, double omega_max, Index n_points) {
  check_range(omega_min, omega_max, n_points, 1);
  RVector omega(n_points);
  for (Index i = 0; i < n_points; ++i) {
    const double t = n_points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n_points - 1);
    omega(i) = omega_min + t * (omega_max - omega_min);
  }
  return mirrored(omega, RVector::Ones(n_points), QuadKind::uniform);
}

QuadratureRule log_rule(double omega_min, double omega_max, Index n_points) {
  check_range(omega_min, omega_max, n_points, 1);
  const CVector nodes = log_imaginary_nodes(omega_min, omega_max, n_points);
  QuadratureRule rule;
  rule.kind = QuadKind::log;
  rule.nodes = nodes;
  rule.weights = RVector::Ones(nodes.size());
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f) {
  double acc = 0.0;
  for (Index j = 0; j < rule.size(); ++j) acc += rule.weights(j) * f(rule.nodes(j).imag());
  return acc;
}

const char* quad_kind_name(QuadKind kind) {
  switch (kind) {
    case QuadKind::uniform: return "uniform";
    case QuadKind::log: return "log";
    case QuadKind::trapezoid: return "trap";
    case QuadKind::boyd_cc: return "boyd";
  }
  return "unknown";
}

}  // namespace vfit

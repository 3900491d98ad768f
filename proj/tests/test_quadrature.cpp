#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vfit/benchmark.hpp"
#include "vfit/quadrature.hpp"

using namespace vfit;

namespace {

bool mirrored(const QuadratureRule& rule) {
  for (Index j = 0; j < rule.size(); ++j) {
    bool found = false;
    for (Index k = 0; k < rule.size(); ++k) {
      if (rule.nodes(k) == std::conj(rule.nodes(j)) && rule.weights(k) == rule.weights(j)) {
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

PoleResidueModel one_over_s_plus_one() {
  PoleResidueModel m;
  m.p = m.m = 1;
  m.poles = CVector::Constant(1, -1.0);
  m.residues = {CMatrix::Constant(1, 1, 1.0)};
  return m;
}

}  // namespace

TEST_CASE("trapezoid rule") {
  const QuadratureRule r = trapezoid_rule(1.0, 2.0, 11);
  CHECK(r.size() == 22);
  CHECK(r.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mirrored(r));

  const QuadratureRule dense = trapezoid_rule(0.5, 1.5, 10000);
  double acc = 0.0;
  for (Index j = 0; j < dense.size(); ++j) {
    const double w = dense.nodes(j).imag();
    if (w > 0.0) acc += dense.weights(j) * w * w;
  }
  const double exact = (1.5 * 1.5 * 1.5 - 0.5 * 0.5 * 0.5) / 3.0;
  CHECK(std::abs(acc - exact) <= 1e-6 * exact);

  CHECK_THROWS_AS(trapezoid_rule(2.0, 1.0, 5), Error);
}

TEST_CASE("cotangent-mapped rule") {
  const QuadratureRule r = boyd_cc_rule(1.0, 64);
  CHECK(r.size() == 64);
  CHECK(mirrored(r));
  const double lorentz = integrate(r, [](double w) { return 1.0 / (1.0 + w * w); });
  CHECK(std::abs(lorentz - std::numbers::pi) <= 1e-6 * std::numbers::pi);

  const QuadratureRule fine = boyd_cc_rule(1.0, 128);
  const PoleResidueModel h = one_over_s_plus_one();
  PoleResidueModel zero = h;
  zero.residues[0].setZero();
  const double est = discretized_h2_error(sample_on_rule(h, fine), zero);
  CHECK(std::abs(est - 1.0 / std::sqrt(2.0)) <= 1e-6 / std::sqrt(2.0));

  CHECK_THROWS_AS(boyd_cc_rule(-1.0, 8), Error);
  CHECK_THROWS_AS(boyd_cc_rule(1.0, 0), Error);
}

TEST_CASE("discretized H2 error") {
  const PoleResidueModel h = random_stable(6, 2, 2, 3);
  const QuadratureRule rule = boyd_cc_rule(10.0, 64);
  const SampleSet s = sample_on_rule(h, rule);
  CHECK(discretized_h2_error(s, h) == 0.0);

  SUBCASE("converges to the closed form") {
    const PoleResidueModel hr = random_stable(4, 2, 2, 8);
    const double exact = h2_error(h, hr);
    double previous = INFINITY;
    for (Index n : {16, 32, 64, 128}) {
      const double gap = std::abs(discretized_h2_error(sample_on_rule(h, boyd_cc_rule(10.0, n)), hr) - exact);
      CHECK(gap <= previous);
      previous = gap;
    }
    const double dense =
        discretized_h2_error(sample_on_rule(h, boyd_cc_rule(10.0, 256)), hr);
    CHECK(std::abs(dense - exact) <= 1e-5 * exact);
    const double denser =
        discretized_h2_error(sample_on_rule(h, boyd_cc_rule(10.0, 2048)), hr);
    CHECK(std::abs(denser - exact) <= 1e-4 * exact);
  }

  SUBCASE("unit weights give the plain LS residual over 2 pi") {
    const QuadratureRule u = uniform_rule(0.1, 10.0, 20);
    CHECK(u.weights.isOnes());
    const SampleSet su = sample_on_rule(h, u);
    const PoleResidueModel hr = random_stable(4, 2, 2, 8);
    double plain = 0.0;
    for (Index i = 0; i < su.size(); ++i) {
      plain += (su.values[i] - eval(hr, su.nodes(i))).squaredNorm();
    }
    const double est = discretized_h2_error(su, hr);
    CHECK(est * est == doctest::Approx(plain / (2.0 * std::numbers::pi)).epsilon(1e-13));
  }
}

TEST_CASE("log and uniform rules") {
  const QuadratureRule l = log_rule(0.1, 1000.0, 5);
  CHECK(l.size() == 10);
  CHECK(mirrored(l));
  CHECK(std::abs(l.nodes.imag().maxCoeff() - 1000.0) < 1e-9);
  CHECK(std::abs(l.nodes.imag().cwiseAbs().minCoeff() - 0.1) < 1e-15);
  CHECK(std::string(quad_kind_name(QuadKind::boyd_cc)).size() > 0);
}

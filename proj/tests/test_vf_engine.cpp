#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_support.hpp"
#include "vfit/benchmark.hpp"
#include "vfit/vf_engine.hpp"

using namespace vfit;

namespace {

SampleSet exact_samples(const PoleResidueModel& m, Index per_side) {
  const CVector nodes = log_imaginary_nodes(0.1, 1000.0, per_side);
  return sample_model(m, nodes, RVector::Ones(nodes.size()));
}

bool contains(const CVector& z, Complex v, double tol) {
  for (Index j = 0; j < z.size(); ++j) {
    if (std::abs(z(j) - v) <= tol) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("initial poles") {
  CVector range(2);
  range << Complex(0.0, 1.0), Complex(0.0, 100.0);
  const CVector two = initial_poles(InitStrategy::log_conjugate, range, 2);
  CHECK(contains(two, Complex(-10.0, 10.0), 1e-12));
  CHECK(contains(two, Complex(-10.0, -10.0), 1e-12));

  const CVector four = initial_poles(InitStrategy::log_conjugate, range, 4);
  for (Complex z : {Complex(-1.0, 1.0), Complex(-1.0, -1.0), Complex(-100.0, 100.0),
                    Complex(-100.0, -100.0)}) {
    CHECK(contains(four, z, 1e-12));
  }

  const CVector a = initial_poles(InitStrategy::random_stable, range, 7, 42);
  const CVector b = initial_poles(InitStrategy::random_stable, range, 7, 42);
  CHECK(a == b);
  CHECK(a.real().maxCoeff() < 0.0);
  CHECK(conjugate_partners(a).size() == 7);

  CVector flat(2);
  flat << Complex(0.0, 5.0), Complex(0.0, -5.0);
  CHECK_THROWS_AS(initial_poles(InitStrategy::log_conjugate, flat, 2), Error);
}

TEST_CASE("Cauchy matrix") {
  const CMatrix one = build_cauchy(CVector::Constant(1, Complex(0.0, 1.0)),
                                   CVector::Constant(1, -1.0));
  CHECK(one(0, 0) == Complex(1.0) / Complex(1.0, 1.0));

  CVector xi(2);
  xi << Complex(0.0, 1.0), Complex(0.0, -1.0);
  const CMatrix pair = build_cauchy(xi, CVector::Constant(1, -1.0));
  CHECK(pair(1, 0) == std::conj(pair(0, 0)));

  std::mt19937_64 rng(3);
  const CVector x5 = vfit::testing::random_closed_nodes(5, rng) * Complex(0.0, 1.0);
  const CVector l3 = vfit::testing::random_closed_nodes(3, rng);
  const CMatrix c = build_cauchy(x5, l3);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 3; ++j) CHECK(c(i, j) == 1.0 / (x5(i) - l3(j)));
  }

  CHECK_THROWS_AS(build_cauchy(l3, l3), Error);
}

TEST_CASE("B22 assembly") {
  std::mt19937_64 rng(5);
  SUBCASE("shapes and agreement with the per-pair reference") {
    const PoleResidueModel m = random_stable(4, 2, 2, 12);
    const SampleSet s = sample_model(m, log_imaginary_nodes(0.5, 50.0, 6),
                                     RVector::LinSpaced(12, 0.5, 2.0));
    const CVector lambda = vfit::testing::random_closed_nodes(3, rng);
    const B22System fast = assemble_b22(s, lambda, true);
    const B22System ref = assemble_b22_naive(s, lambda);
    CHECK(fast.B22.rows() == 12);
    CHECK(fast.B22.cols() == 3);
    CHECK(fast.s2.size() == 12);
    // Blocks are unique up to unitary row transforms, so compare the normal
    // equations.
    const CMatrix g1 = fast.B22.adjoint() * fast.B22;
    const CMatrix g2 = ref.B22.adjoint() * ref.B22;
    CHECK((g1 - g2).norm() / g2.norm() < 1e-12);
    const CVector h1 = fast.B22.adjoint() * fast.s2;
    const CVector h2 = ref.B22.adjoint() * ref.s2;
    CHECK((h1 - h2).norm() / h2.norm() < 1e-12);
    CHECK(std::abs(fast.eps3 - ref.eps3) <= 1e-10 * std::max(ref.eps3, 1e-300) + 1e-24);
  }

  SUBCASE("exact data at the current poles collapses the right-hand side") {
    const PoleResidueModel m = random_stable(6, 1, 1, 3);
    const SampleSet s = exact_samples(m, 30);
    const B22System sys = assemble_b22(s, m.poles, true);
    double data = 0.0;
    for (const auto& v : s.values) data += v.squaredNorm();
    CHECK(sys.s2.norm() <= 1e-10 * std::sqrt(data));
  }
}

TEST_CASE("phi solve") {
  const PoleResidueModel m = random_stable(6, 2, 2, 7);
  const SampleSet s = exact_samples(m, 30);
  VFOptions opt;
  opt.r = 6;
  const B22System sys = assemble_b22(s, m.poles, true);
  const PhiSolution phi = solve_phi(sys.B22, sys.s2, m.poles, opt);
  CHECK(phi.phi.cwiseAbs().maxCoeff() <= 1e-10);

  SUBCASE("rank-deficient block zeroes the trailing coordinates") {
    std::mt19937_64 rng(9);
    const CMatrix left = vfit::testing::random_cmatrix(40, 5, rng);
    const CMatrix b = left * vfit::testing::random_cmatrix(5, 8, rng);
    const CVector rhs = vfit::testing::random_cmatrix(40, 1, rng);
    VFOptions o;
    o.r = 8;
    o.truncation_eps = 1e-10;
    o.enforce_conjugate = false;
    const PhiSolution sol = solve_phi(b, rhs, vfit::testing::random_closed_nodes(8, rng), o);
    CHECK(sol.rank == 5);
    CHECK((sol.phi.array() == Complex(0.0)).count() == 3);
  }
}

TEST_CASE("pole relocation") {
  CVector lambda(2);
  lambda << -1.0, -2.0;
  const Relocation same = relocate_poles(lambda, CVector::Zero(2), false);
  CHECK(contains(same.poles, -1.0, 1e-14));
  CHECK(contains(same.poles, -2.0, 1e-14));

  // d(s) = 1 + 1/(s+1) + 1/(s+2) has numerator s^2 + 5s + 5.
  const Relocation r = relocate_poles(lambda, CVector::Ones(2), false);
  CHECK(contains(r.poles, (-5.0 + std::sqrt(5.0)) / 2.0, 1e-13));
  CHECK(contains(r.poles, (-5.0 - std::sqrt(5.0)) / 2.0, 1e-13));

  // d(s) = 1 - 3/(s+1) vanishes at s = 2, which is mirrored to -2.
  CVector l2(2), phi2(2);
  l2 << -1.0, -5.0;
  phi2 << -3.0, 0.0;
  const Relocation unflipped = relocate_poles(l2, phi2, false);
  CHECK(contains(unflipped.poles, 2.0, 1e-13));
  const Relocation flipped = relocate_poles(l2, phi2, true);
  CHECK(contains(flipped.poles, -2.0, 1e-13));
  CHECK(contains(flipped.poles, -5.0, 1e-13));

  std::mt19937_64 rng(4);
  const CVector nodes = vfit::testing::random_closed_nodes(6, rng);
  const CVector phi = vfit::testing::closed_coefficients(nodes, 1.0, rng);
  const Relocation closed = relocate_poles(nodes, phi, true);
  CHECK(conjugate_partners(closed.poles).size() == 6);
}

TEST_CASE("stopping theta") {
  CVector l = CVector::Constant(1, -2.0);
  CHECK(stopping_theta(l, CVector::Zero(1)) == 0.0);
  CHECK(stopping_theta(l, CVector::Constant(1, Complex(1.0, 1.0))) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));

  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const CVector nodes = vfit::testing::random_closed_nodes(6, rng);
    const CVector phi = vfit::testing::closed_coefficients(nodes, 1.0, rng);
    const double sup = vfit::testing::sampled_denominator_deviation(nodes, phi, 1e-4, 1e6, 100000);
    CHECK(sup <= stopping_theta(nodes, phi) * (1.0 + 1e-12));
  }
}

TEST_CASE("residual decomposition") {
  std::mt19937_64 rng(8);
  const PoleResidueModel m = random_stable(4, 2, 2, 5);
  SampleSet s = sample_model(m, log_imaginary_nodes(0.3, 30.0, 10), RVector::LinSpaced(20, 1.0, 2.0));
  for (auto& v : s.values) v += 0.05 * vfit::testing::random_cmatrix(2, 2, rng);
  const CVector lambda = vfit::testing::random_closed_nodes(4, rng);
  const CVector phi = vfit::testing::closed_coefficients(lambda, 0.3, rng);

  const std::vector<CMatrix> numer = numerator_for_phi(s, lambda, phi);
  const ResidualComponents opt = residual_decomposition(s, lambda, phi, numer);
  const double direct = linearized_objective(s, lambda, phi, numer);
  CHECK(opt.eps1 <= 1e-20 * std::max(1.0, direct));
  CHECK(std::abs(opt.total() - direct) <= 1e-10 * direct);

  std::vector<CMatrix> other = numer;
  for (auto& n : other) n += 0.1 * vfit::testing::random_cmatrix(2, 2, rng);
  const ResidualComponents off = residual_decomposition(s, lambda, phi, other);
  const double direct_off = linearized_objective(s, lambda, phi, other);
  CHECK(off.eps1 > 0.0);
  CHECK(std::abs(off.total() - direct_off) <= 1e-10 * direct_off);

  SUBCASE("fixed point") {
    const SampleSet exact = exact_samples(m, 20);
    const std::vector<CMatrix> fit_numer = numerator_for_phi(exact, m.poles, CVector::Zero(4));
    const ResidualComponents fp = residual_decomposition(exact, m.poles, CVector::Zero(4), fit_numer);
    double data = 0.0;
    for (const auto& v : exact.values) data += v.squaredNorm();
    CHECK(fp.eps2 <= 1e-20 * data);
    CHECK(fp.eps3 <= 1e-20 * data);
  }
}

TEST_CASE("final residues") {
  const PoleResidueModel m = random_stable(5, 2, 3, 2);
  const SampleSet s = exact_samples(m, 15);
  VFOptions opt;
  opt.r = 5;
  const ResidueSolution sol = final_residues(s, m.poles, opt);
  for (Index j = 0; j < 5; ++j) {
    CHECK((sol.residues[j] - m.residues[j]).norm() <= 1e-10 * m.residues[j].norm());
  }

  opt.residue_solver = ResidueSolver::tikhonov;
  opt.mu = 1e12;
  const ResidueSolution damped = final_residues(s, m.poles, opt);
  for (const auto& r : damped.residues) CHECK(r.norm() < 1e-8);

  SUBCASE("determined scalar system") {
    PoleResidueModel one;
    one.p = one.m = 1;
    one.poles = CVector::Constant(1, -2.0);
    one.residues = {CMatrix::Constant(1, 1, 3.0)};
    CVector nodes(2);
    nodes << Complex(0.0, 1.0), Complex(0.0, -1.0);
    const SampleSet two = sample_model(one, nodes, RVector::Ones(2));
    VFOptions o;
    o.r = 1;
    const ResidueSolution r = final_residues(two, one.poles, o);
    CHECK(std::abs(r.residues[0](0, 0) - 3.0) < 1e-14);
  }
}

TEST_CASE("VF exact recovery") {
  const PoleResidueModel m = random_stable(6, 2, 2, 1);
  const SampleSet s = exact_samples(m, 30);
  VFOptions opt;
  opt.r = 6;
  opt.max_iters = 10;
  const FitResult fit_vf = vf_fit(s, opt);
  CHECK(fit_vf.diagnostics.gamma <= 1e-10);
  CHECK(fit_vf.model.order() == 6);
  CHECK(conjugate_partners(fit_vf.model.poles).size() == 6);

  SUBCASE("starting at the true poles stops after one solve") {
    VFOptions at;
    at.r = 6;
    at.initial_poles = m.poles;
    const FitResult f = vf_fit(s, at);
    REQUIRE(!f.diagnostics.iterations.empty());
    CHECK(f.diagnostics.iterations.front().theta <= 1e-10);
    CHECK(f.diagnostics.iterations.size() == 1);
  }

  SUBCASE("node collision is reported") {
    VFOptions bad;
    bad.r = 2;
    bad.initial_poles = CVector(2);
    *bad.initial_poles << s.nodes(0), std::conj(s.nodes(0));
    CHECK_THROWS_AS(vf_fit(s, bad), Error);
  }

  SUBCASE("too few samples") {
    VFOptions big;
    big.r = 40;
    CHECK_THROWS_AS(vf_fit(s, big), Error);
  }
}

TEST_CASE("SK iteration") {
  const PoleResidueModel m = random_stable(6, 2, 2, 1);
  const SampleSet s = exact_samples(m, 30);

  VFOptions opt;
  opt.r = 6;
  opt.mode = FitMode::sk;
  opt.max_iters = 20;
  const FitResult f = sk_fit(s, opt);
  CHECK(f.diagnostics.gamma <= 1e-8);

  VFOptions at = opt;
  at.initial_poles = m.poles;
  const FitResult g = sk_fit(s, at);
  REQUIRE(!g.diagnostics.iterations.empty());
  CHECK(g.diagnostics.iterations.size() == 1);
  CHECK(g.diagnostics.iterations.front().phi.cwiseAbs().maxCoeff() <= 1e-10);

  SUBCASE("first SK step equals the first VF step") {
    VFOptions one = opt;
    one.max_iters = 1;
    one.stop_eps = 0.0;
    const FitResult a = sk_fit(s, one);
    one.mode = FitMode::vf;
    const FitResult b = vf_fit(s, one);
    const CVector& pa = a.diagnostics.iterations.front().phi;
    const CVector& pb = b.diagnostics.iterations.front().phi;
    CHECK((pa - pb).norm() <= 1e-12 * std::max(1.0, pb.norm()));
  }
}

TEST_CASE("noisy data stays at the noise floor") {
  const PoleResidueModel m = random_stable(6, 2, 2, 4);
  SampleSet s = exact_samples(m, 30);
  std::mt19937_64 rng(17);
  double data = 0.0;
  for (const auto& v : s.values) data += v.squaredNorm();
  const double level = 1e-4 * std::sqrt(data / static_cast<double>(s.size() * 4));
  for (Index i = 0; i < s.size(); ++i) s.values[i] += level * vfit::testing::random_cmatrix(2, 2, rng);
  VFOptions opt;
  opt.r = 6;
  opt.max_iters = 20;
  opt.stop_eps = 0.0;
  const FitResult f = vf_fit(s, opt);
  REQUIRE(f.diagnostics.iterations.size() == 20);
  for (const auto& it : f.diagnostics.iterations) CHECK(std::isfinite(it.gamma));
  CHECK(f.diagnostics.gamma <= 3e-4);
}

TEST_CASE("heat equation analogue at r = 80") {
  const PoleResidueModel m = heat1d_model(197, 1.0);
  const CVector nodes = log_imaginary_nodes(1e-1, 1e6, 500);
  const SampleSet s = sample_model(m, nodes, RVector::Ones(nodes.size()));
  VFOptions opt;
  opt.r = 80;
  opt.max_iters = 20;
  CHECK(vf_fit(s, opt).diagnostics.gamma <= 1e-8);
}

#include "vfit/vf_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace vfit {

void VFOptions::validate(Index n_samples) const {
  if (r < 1) throw Error(Errc::invalid_argument, "VFOptions: order r must be >= 1");
  if (max_iters < 0) throw Error(Errc::invalid_argument, "VFOptions: max_iters < 0");
  if (2 * r > n_samples) {
    throw Error(Errc::invalid_argument,
                "VFOptions: need at least 2r samples (after conjugate closure)");
  }
  if (!(stop_eps >= 0.0)) throw Error(Errc::invalid_argument, "VFOptions: stop_eps < 0");
  if (residue_solver == ResidueSolver::tikhonov && !(mu >= 0.0)) {
    throw Error(Errc::invalid_argument, "VFOptions: mu must be >= 0");
  }
  if (residue_solver == ResidueSolver::morozov && !(nu >= 0.0)) {
    throw Error(Errc::invalid_argument, "VFOptions: nu must be >= 0");
  }
  if (initial_poles && initial_poles->size() != r) {
    throw Error(Errc::invalid_argument, "VFOptions: initial_poles size differs from r");
  }
}

CVector initial_poles(InitStrategy strategy, const CVector& sample_nodes, Index r,
                      std::uint64_t seed) {
  if (r < 1) throw Error(Errc::invalid_argument, "initial_poles: r must be >= 1");
  double wmin = INFINITY;
  double wmax = 0.0;
  for (Index i = 0; i < sample_nodes.size(); ++i) {
    const double w = std::abs(sample_nodes(i).imag());
    if (w > 0.0) {
      wmin = std::min(wmin, w);
      wmax = std::max(wmax, w);
    }
  }
  const bool have_range = wmax > 0.0 && wmax > wmin * (1.0 + 1e-12);

  if (strategy == InitStrategy::log_conjugate) {
    if (!have_range) {
      throw Error(Errc::degenerate,
                  "initial_poles: sample nodes do not span a frequency range");
    }
    const Index npairs = r / 2;
    const double mid = std::sqrt(wmin * wmax);
    CVector poles(r);
    for (Index k = 0; k < npairs; ++k) {
      double beta = mid;
      if (npairs > 1) {
        const double t = static_cast<double>(k) / static_cast<double>(npairs - 1);
        beta = std::exp(std::log(wmin) + t * (std::log(wmax) - std::log(wmin)));
      }
      poles(2 * k) = Complex(-beta, beta);
      poles(2 * k + 1) = Complex(-beta, -beta);
    }
    if (r % 2 == 1) poles(r - 1) = Complex(-mid, 0.0);
    return poles;
  }

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RMatrix a(r, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) a(i, j) = normal(gen);
  }
  Eigen::EigenSolver<RMatrix> eig(a, false);
  CVector mu = eig.eigenvalues();
  double mean_mod = 0.0;
  for (Index j = 0; j < r; ++j) mean_mod += std::abs(mu(j));
  mean_mod /= static_cast<double>(r);
  const double scale = (have_range ? std::sqrt(wmin * wmax) : 1.0) / mean_mod;
  CVector poles(r);
  for (Index j = 0; j < r; ++j) {
    const double mod = std::abs(mu(j));
    const double re = -std::max(std::abs(mu(j).real()), 1e-2 * mod);
    poles(j) = scale * Complex(re, mu(j).imag());
  }
  return enforce_conjugate_closure(poles);
}

CMatrix build_cauchy(const CVector& xi, const CVector& lambda) {
  CMatrix c(xi.size(), lambda.size());
  for (Index j = 0; j < lambda.size(); ++j) {
    for (Index i = 0; i < xi.size(); ++i) {
      const Complex gap = xi(i) - lambda(j);
      if (gap == Complex(0.0) ||
          std::abs(gap) <= 4.0 * kUnitRoundoff *
                               std::max(std::abs(xi(i)), std::abs(lambda(j)))) {
        throw Error(Errc::collision, "build_cauchy: sample node coincides with a pole");
      }
      c(i, j) = 1.0 / gap;
    }
  }
  return c;
}

namespace {

RVector sqrt_weights(const SampleSet& samples) { return samples.weights.cwiseSqrt(); }

CVector pair_column(const SampleSet& samples, Index u, Index v) {
  CVector out(samples.size());
  for (Index i = 0; i < samples.size(); ++i) out(i) = samples.values[i](u, v);
  return out;
}

// Per-pair pieces of the block factorization.
struct PairBlock {
  CMatrix r12;
  CVector s1;
  CMatrix r22;
  CVector s2;
  double s3_sq = 0.0;
};

class SharedFactor {
 public:
  SharedFactor(const SampleSet& samples, const CVector& lambda, bool presort)
      : samples_(samples),
        sw_(sqrt_weights(samples)),
        cauchy_(build_cauchy(samples.nodes, lambda)),
        dc_(sw_.asDiagonal() * cauchy_),
        qr_(dc_, presort) {}

  const PivotedQR& qr() const { return qr_; }
  const CMatrix& dc() const { return dc_; }
  const RVector& sw() const { return sw_; }

  PairBlock block(Index u, Index v) const {
    const Index l = samples_.size();
    const Index r = cauchy_.cols();
    const CVector data = pair_column(samples_, u, v);
    const CVector b = sw_.cwiseProduct(data);
    const CMatrix m = -(b.asDiagonal() * cauchy_);
    const CMatrix qm = qr_.apply_adjoint(m);
    const CVector qb = qr_.apply_adjoint(b);

    PairBlock out;
    out.r12 = qm.topRows(r);
    out.s1 = qb.head(r);
    const PivotedQR local(qm.bottomRows(l - r));
    const CMatrix r2 = local.R();
    out.r22.resize(r2.rows(), r);
    for (Index j = 0; j < r; ++j) out.r22.col(local.perm()(j)) = r2.col(j);
    const CVector tq = local.apply_adjoint(qb.tail(l - r));
    out.s2 = tq.head(r2.rows());
    out.s3_sq = tq.tail(tq.size() - r2.rows()).squaredNorm();
    return out;
  }

 private:
  const SampleSet& samples_;
  RVector sw_;
  CMatrix cauchy_;
  CMatrix dc_;
  PivotedQR qr_;
};

void check_dimensions(const SampleSet& samples, const CVector& lambda) {
  const Index r = lambda.size();
  if (r < 1) throw Error(Errc::invalid_argument, "need at least one node");
  if (samples.size() < 2 * r) {
    throw Error(Errc::invalid_argument, "need at least 2r samples");
  }
}

bool phi_closed(const CVector& lambda, const CVector& phi, Permutation* partner_out) {
  const Permutation partner = conjugate_partners(lambda);
  if (partner.size() != lambda.size()) return false;
  for (Index j = 0; j < lambda.size(); ++j) {
    const Complex a = phi(partner(j));
    const Complex b = std::conj(phi(j));
    if (std::abs(a - b) > 1e-8 * (1.0 + std::abs(phi(j)))) return false;
  }
  if (partner_out) *partner_out = partner;
  return true;
}

template <class Vec>
void symmetrize_vector(Vec& x, const Permutation& partner) {
  for (Index j = 0; j < x.size(); ++j) {
    const Index k = partner(j);
    if (k == j) {
      x(j) = Complex(x(j).real(), 0.0);
    } else if (k > j) {
      const Complex avg = 0.5 * (x(j) + std::conj(x(k)));
      x(j) = avg;
      x(k) = std::conj(avg);
    }
  }
}

void symmetrize_matrices(std::vector<CMatrix>& x, const Permutation& partner) {
  for (Index j = 0; j < static_cast<Index>(x.size()); ++j) {
    const Index k = partner(j);
    if (k == j) {
      x[j] = x[j].real().cast<Complex>();
    } else if (k > j) {
      const CMatrix avg = 0.5 * (x[j] + x[k].conjugate());
      x[j] = avg;
      x[k] = avg.conjugate();
    }
  }
}

double data_norm(const SampleSet& samples) {
  double acc = 0.0;
  for (const CMatrix& v : samples.values) acc += v.squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

B22System assemble_b22(const SampleSet& samples, const CVector& lambda,
                       bool presort_rows) {
  check_dimensions(samples, lambda);
  const Index r = lambda.size();
  const Index p = samples.p;
  const Index m = samples.m;
  SharedFactor shared(samples, lambda, presort_rows);

  B22System out;
  out.B22 = CMatrix::Zero(p * m * r, r);
  out.s2 = CVector::Zero(p * m * r);
  for (Index v = 0; v < m; ++v) {
    for (Index u = 0; u < p; ++u) {
      const Index iota = v * p + u;
      const PairBlock blk = shared.block(u, v);
      out.B22.middleRows(iota * r, r) = blk.r22;
      out.s2.segment(iota * r, r) = blk.s2;
      out.eps3 += blk.s3_sq;
    }
  }
  out.shared_qr = shared.qr();
  return out;
}

B22System assemble_b22_naive(const SampleSet& samples, const CVector& lambda) {
  check_dimensions(samples, lambda);
  const Index l = samples.size();
  const Index r = lambda.size();
  const Index p = samples.p;
  const Index m = samples.m;
  const CMatrix cauchy = build_cauchy(samples.nodes, lambda);
  const RVector sw = sqrt_weights(samples);
  const CMatrix dc = sw.asDiagonal() * cauchy;

  B22System out;
  out.B22 = CMatrix::Zero(p * m * r, r);
  out.s2 = CVector::Zero(p * m * r);
  for (Index v = 0; v < m; ++v) {
    for (Index u = 0; u < p; ++u) {
      const Index iota = v * p + u;
      const CVector b = sw.cwiseProduct(pair_column(samples, u, v));
      CMatrix k(l, 2 * r);
      k.leftCols(r) = dc;
      k.rightCols(r) = -(b.asDiagonal() * cauchy);
      Eigen::HouseholderQR<CMatrix> qr(k);
      const CMatrix rr = qr.matrixQR().topRows(2 * r).triangularView<Eigen::Upper>();
      CVector qb = b;
      qb.applyOnTheLeft(qr.householderQ().adjoint());
      out.B22.middleRows(iota * r, r) = rr.bottomRightCorner(r, r);
      out.s2.segment(iota * r, r) = qb.segment(r, r);
      out.eps3 += qb.tail(l - 2 * r).squaredNorm();
    }
  }
  out.shared_qr = PivotedQR(dc);
  return out;
}

PhiSolution solve_phi(const CMatrix& b22, const CVector& s2, const CVector& lambda,
                      const VFOptions& options) {
  const Index r = lambda.size();
  if (b22.cols() != r || b22.rows() != s2.size()) {
    throw Error(Errc::invalid_argument, "solve_phi: dimension mismatch");
  }
  Permutation partner;
  if (options.enforce_conjugate) partner = conjugate_partners(lambda);
  const bool stack = partner.size() == r;

  CMatrix a = b22;
  CVector rhs = s2;
  if (stack) {
    const Index n = b22.rows();
    a.resize(2 * n, r);
    rhs.resize(2 * n);
    a.topRows(n) = b22;
    for (Index j = 0; j < r; ++j) a.col(j).tail(n) = b22.col(partner(j)).conjugate();
    rhs.head(n) = s2;
    rhs.tail(n) = s2.conjugate();
  }
  TruncationOptions topt;
  topt.eps = options.truncation_eps;
  topt.mode = LSMode::basic;
  topt.presort_rows = options.presort_rows;
  topt.column_equilibrate = options.column_equilibrate;
  const TruncatedLSSolution sol = ls_solve_truncated(a, rhs, topt);

  PhiSolution out;
  out.phi = sol.x.col(0);
  out.rank = sol.numerical_rank;
  if (stack) symmetrize_vector(out.phi, partner);
  for (Index j = 0; j < r; ++j) {
    if (out.phi(j) == Complex(0.0)) ++out.zeroed;
  }
  return out;
}

Relocation relocate_poles(const CVector& lambda, const CVector& phi,
                          bool flip_unstable, bool enforce_conjugate) {
  const Index r = lambda.size();
  if (phi.size() != r) throw Error(Errc::invalid_argument, "relocate_poles: size mismatch");
  CMatrix arrow(r, r);
  for (Index i = 0; i < r; ++i) arrow.row(i) = -phi.transpose();
  arrow.diagonal() += lambda;
  Eigen::ComplexEigenSolver<CMatrix> eig(arrow, false);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::not_converged, "relocate_poles: eigensolver failed");
  }
  Relocation out;
  out.poles = eig.eigenvalues();
  if (enforce_conjugate && phi_closed(lambda, phi, nullptr)) {
    out.poles = enforce_conjugate_closure(out.poles, 1e-6);
  }
  double scale = 0.0;
  for (Index j = 0; j < r; ++j) scale = std::max(scale, std::abs(out.poles(j)));
  if (flip_unstable) {
    for (Index j = 0; j < r; ++j) {
      Complex& z = out.poles(j);
      if (z.real() > 0.0) {
        z = Complex(-z.real(), z.imag());
      } else if (z.real() == 0.0) {
        z = Complex(-1e-12 * std::max(scale, 1.0), z.imag());
        out.warnings.push_back("relocated pole on the imaginary axis moved left");
      }
    }
  }
  for (Index a = 0; a < r; ++a) {
    for (Index b = a + 1; b < r; ++b) {
      if (std::abs(out.poles(a) - out.poles(b)) <= 1e-12 * std::max(scale, 1.0)) {
        std::ostringstream msg;
        msg << "relocated poles " << a << " and " << b << " coincide";
        out.warnings.push_back(msg.str());
      }
    }
  }
  return out;
}

double stopping_theta(const CVector& lambda, const CVector& phi) {
  double theta = 0.0;
  for (Index j = 0; j < lambda.size(); ++j) {
    const double re = std::abs(lambda(j).real());
    if (re == 0.0) {
      throw Error(Errc::unstable, "stopping_theta: node on the imaginary axis");
    }
    theta += std::abs(phi(j)) / re;
  }
  return theta;
}

ResidualComponents residual_decomposition(const SampleSet& samples,
                                          const CVector& lambda, const CVector& phi,
                                          const std::vector<CMatrix>& numer) {
  check_dimensions(samples, lambda);
  const Index r = lambda.size();
  SharedFactor shared(samples, lambda, false);
  const CMatrix r11 = shared.qr().apply_adjoint(shared.dc()).topRows(r);
  ResidualComponents out;
  for (Index v = 0; v < samples.m; ++v) {
    for (Index u = 0; u < samples.p; ++u) {
      const PairBlock blk = shared.block(u, v);
      CVector coeff(r);
      for (Index j = 0; j < r; ++j) coeff(j) = numer[j](u, v);
      out.eps1 += (r11 * coeff + blk.r12 * phi - blk.s1).squaredNorm();
      out.eps2 += (blk.r22 * phi - blk.s2).squaredNorm();
      out.eps3 += blk.s3_sq;
    }
  }
  return out;
}

double linearized_objective(const SampleSet& samples, const CVector& lambda,
                            const CVector& phi, const std::vector<CMatrix>& numer) {
  const CMatrix cauchy = build_cauchy(samples.nodes, lambda);
  const RVector sw = sqrt_weights(samples);
  const CVector cphi = cauchy * phi;
  double acc = 0.0;
  for (Index v = 0; v < samples.m; ++v) {
    for (Index u = 0; u < samples.p; ++u) {
      CVector coeff(lambda.size());
      for (Index j = 0; j < lambda.size(); ++j) coeff(j) = numer[j](u, v);
      const CVector data = pair_column(samples, u, v);
      const CVector res = cauchy * coeff - data.cwiseProduct(cphi) - data;
      acc += sw.cwiseProduct(res).squaredNorm();
    }
  }
  return acc;
}

std::vector<CMatrix> numerator_for_phi(const SampleSet& samples, const CVector& lambda,
                                       const CVector& phi) {
  const Index r = lambda.size();
  const Index p = samples.p;
  const Index m = samples.m;
  const CMatrix cauchy = build_cauchy(samples.nodes, lambda);
  const RVector sw = sqrt_weights(samples);
  const CVector cphi = cauchy * phi;
  CMatrix rhs(samples.size(), p * m);
  for (Index v = 0; v < m; ++v) {
    for (Index u = 0; u < p; ++u) {
      const CVector data = pair_column(samples, u, v);
      rhs.col(v * p + u) = sw.cwiseProduct(data + data.cwiseProduct(cphi));
    }
  }
  TruncationOptions topt;
  topt.eps = 0.0;
  const TruncatedLSSolution sol =
      ls_solve_truncated(sw.asDiagonal() * cauchy, rhs, topt);
  std::vector<CMatrix> out(static_cast<size_t>(r), CMatrix(p, m));
  for (Index j = 0; j < r; ++j) {
    for (Index v = 0; v < m; ++v) {
      for (Index u = 0; u < p; ++u) out[j](u, v) = sol.x(j, v * p + u);
    }
  }
  return out;
}

ResidueSolution final_residues(const SampleSet& samples_in, const CVector& poles,
                               const VFOptions& options) {
  const SampleSet samples =
      options.enforce_conjugate ? conjugate_closure(samples_in) : samples_in;
  const Index r = poles.size();
  const Index p = samples.p;
  const Index m = samples.m;
  if (r == 0) {
    ResidueSolution empty;
    empty.report.solver = options.residue_solver;
    return empty;
  }
  const CMatrix cauchy = build_cauchy(samples.nodes, poles);
  const RVector sw = sqrt_weights(samples);
  CMatrix rhs(samples.size(), p * m);
  for (Index v = 0; v < m; ++v) {
    for (Index u = 0; u < p; ++u) {
      rhs.col(v * p + u) = sw.cwiseProduct(pair_column(samples, u, v));
    }
  }

  ResidueSolution out;
  out.report.solver = options.residue_solver;
  CMatrix x;
  switch (options.residue_solver) {
    case ResidueSolver::plain:
    case ResidueSolver::truncated: {
      TruncationOptions topt;
      topt.eps = options.residue_solver == ResidueSolver::plain
                     ? 0.0
                     : options.residue_truncation_eps;
      topt.mode = LSMode::basic;
      topt.presort_rows = options.presort_rows;
      const TruncatedLSSolution sol =
          ls_solve_truncated(sw.asDiagonal() * cauchy, rhs, topt);
      x = sol.x;
      out.report.numerical_rank = sol.numerical_rank;
      out.report.residual_norm = sol.residual_norm;
      break;
    }
    case ResidueSolver::tikhonov:
    case ResidueSolver::morozov: {
      const Svd svd = accurate_cauchy_svd(samples.nodes, poles, sw);
      double mu = options.mu;
      if (options.residue_solver == ResidueSolver::morozov) {
        const MorozovResult sel = morozov_select_mu(svd, rhs, options.nu);
        mu = sel.mu;
        out.report.morozov = sel.status;
      }
      x = tikhonov_solve(svd, rhs, mu);
      out.report.mu = mu;
      out.report.residual_norm = tikhonov_residual(svd, rhs, mu);
      Index rank = 0;
      for (Index i = 0; i < svd.sigma.size(); ++i) {
        if (svd.sigma(i) > svd.sigma(0) * static_cast<double>(r) * kUnitRoundoff) ++rank;
      }
      out.report.numerical_rank = rank;
      break;
    }
  }

  out.residues.assign(static_cast<size_t>(r), CMatrix(p, m));
  for (Index j = 0; j < r; ++j) {
    for (Index v = 0; v < m; ++v) {
      for (Index u = 0; u < p; ++u) out.residues[j](u, v) = x(j, v * p + u);
    }
  }
  if (options.enforce_conjugate) {
    const Permutation partner = conjugate_partners(poles);
    if (partner.size() == r) symmetrize_matrices(out.residues, partner);
  }
  for (const CMatrix& res : out.residues) {
    if (res.isZero(0.0)) ++out.report.zero_residues;
  }
  return out;
}

namespace {

double effective_threshold(const VFOptions& options, const SampleSet& samples) {
  if (!options.noise_estimate) return options.stop_eps;
  const double norm = data_norm(samples);
  if (norm == 0.0) return options.stop_eps;
  return options.stop_eps * (1.0 + *options.noise_estimate / norm);
}

SampleSet prepared_samples(const SampleSet& samples, const VFOptions& options) {
  samples.validate();
  SampleSet out = options.enforce_conjugate ? conjugate_closure(samples) : samples;
  options.validate(out.size());
  if (data_norm(out) == 0.0) throw Error(Errc::degenerate, "fit: data are identically zero");
  return out;
}

CVector starting_poles(const SampleSet& samples, const VFOptions& options) {
  if (options.initial_poles) return *options.initial_poles;
  return initial_poles(options.init, samples.nodes, options.r, options.seed);
}

}  // namespace

FitResult vf_fit(const SampleSet& samples_in, const VFOptions& options) {
  const SampleSet samples = prepared_samples(samples_in, options);
  FitResult result;
  FitDiagnostics& diag = result.diagnostics;
  diag.stop_threshold = effective_threshold(options, samples);

  VFOptions plain = options;
  plain.residue_solver = ResidueSolver::plain;

  CVector lambda = starting_poles(samples, options);
  for (int k = 0; k < options.max_iters; ++k) {
    const B22System sys = assemble_b22(samples, lambda, false);
    const PhiSolution ph = solve_phi(sys.B22, sys.s2, lambda, options);

    IterationRecord rec;
    rec.nodes = lambda;
    rec.phi = ph.phi;
    rec.theta = stopping_theta(lambda, ph.phi);
    rec.rank = ph.rank;
    rec.zeroed_phi = ph.zeroed;
    rec.eps2 = (sys.B22 * ph.phi - sys.s2).squaredNorm();
    rec.eps3 = sys.eps3;

    Relocation reloc = relocate_poles(lambda, ph.phi, options.flip_unstable,
                                      options.enforce_conjugate);
    for (const std::string& w : reloc.warnings) {
      diag.warnings.push_back("iteration " + std::to_string(k + 1) + ": " + w);
    }
    lambda = reloc.poles;
    if (options.track_gamma) {
      PoleResidueModel probe;
      probe.p = samples.p;
      probe.m = samples.m;
      probe.poles = lambda;
      probe.residues = final_residues(samples, lambda, plain).residues;
      rec.gamma = relative_ls_error(probe, samples);
    }
    diag.iterations.push_back(rec);
    if (rec.theta <= diag.stop_threshold) {
      diag.converged = true;
      break;
    }
  }

  ResidueSolution fin = final_residues(samples, lambda, options);
  result.model.p = samples.p;
  result.model.m = samples.m;
  result.model.poles = lambda;
  result.model.residues = std::move(fin.residues);
  diag.final_solve = fin.report;
  diag.gamma = relative_ls_error(result.model, samples);
  return result;
}

FitResult sk_fit(const SampleSet& samples_in, const VFOptions& options) {
  const SampleSet samples = prepared_samples(samples_in, options);
  FitResult result;
  FitDiagnostics& diag = result.diagnostics;
  diag.stop_threshold = effective_threshold(options, samples);

  const CVector lambda = starting_poles(samples, options);
  const Index l = samples.size();
  CVector d_old = CVector::Ones(l);
  CVector phi = CVector::Zero(lambda.size());
  SampleSet weighted = samples;

  for (int k = 0; k < options.max_iters; ++k) {
    for (Index i = 0; i < l; ++i) {
      weighted.weights(i) = samples.weights(i) / std::norm(d_old(i));
    }
    const B22System sys = assemble_b22(weighted, lambda, false);
    const PhiSolution ph = solve_phi(sys.B22, sys.s2, lambda, options);
    phi = ph.phi;

    IterationRecord rec;
    rec.nodes = lambda;
    rec.phi = phi;
    rec.theta = stopping_theta(lambda, phi);
    rec.rank = ph.rank;
    rec.zeroed_phi = ph.zeroed;
    rec.eps2 = (sys.B22 * phi - sys.s2).squaredNorm();
    rec.eps3 = sys.eps3;

    CVector d_new(l);
    double change = 0.0;
    for (Index i = 0; i < l; ++i) {
      d_new(i) = eval_denominator(lambda, phi, samples.nodes(i));
      if (!(std::abs(d_new(i)) > 1e-300) || !std::isfinite(std::abs(d_new(i)))) {
        throw Error(Errc::singular, "sk_fit: denominator vanishes at a sample node");
      }
      change = std::max(change, std::abs(d_new(i) / d_old(i) - 1.0));
    }
    if (options.track_gamma) {
      BarycentricModel bary;
      bary.p = samples.p;
      bary.m = samples.m;
      bary.nodes = lambda;
      bary.denom_weights = phi;
      bary.numer_coeffs = numerator_for_phi(weighted, lambda, phi);
      rec.gamma = relative_ls_error(bary, samples);
    }
    diag.iterations.push_back(rec);
    d_old = d_new;
    if (change <= diag.stop_threshold) {
      diag.converged = true;
      break;
    }
  }

  // Terms whose share of theta is below the stopping threshold leave d at 1
  // to working accuracy; keeping them would put a zero of d next to its node.
  Index dropped = 0;
  for (Index j = 0; j < phi.size(); ++j) {
    if (phi(j) != Complex(0.0) &&
        std::abs(phi(j)) <= diag.stop_threshold * std::abs(lambda(j).real())) {
      phi(j) = 0.0;
      ++dropped;
    }
  }
  if (dropped > 0) {
    diag.warnings.push_back("sk_fit: " + std::to_string(dropped) +
                            " negligible denominator weights set to zero");
  }
  BarycentricModel bary;
  bary.p = samples.p;
  bary.m = samples.m;
  bary.nodes = lambda;
  bary.denom_weights = phi;
  bary.numer_coeffs = numerator_for_phi(weighted, lambda, phi);
  if (options.enforce_conjugate) {
    const Permutation partner = conjugate_partners(lambda);
    if (partner.size() == lambda.size()) symmetrize_matrices(bary.numer_coeffs, partner);
  }
  result.model = to_pole_residue(bary, options.phi_zero_tol);
  diag.final_solve.solver = ResidueSolver::plain;
  diag.final_solve.numerical_rank = lambda.size();
  diag.gamma = relative_ls_error(result.model, samples);
  return result;
}

FitResult fit(const SampleSet& samples, const VFOptions& options) {
  return options.mode == FitMode::sk ? sk_fit(samples, options)
                                     : vf_fit(samples, options);
}

}  // namespace vfit

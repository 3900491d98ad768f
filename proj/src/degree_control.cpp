#include "vfit/degree_control.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "vfit/vf_engine.hpp"

namespace vfit {

namespace {

struct RankOneFactor {
  CVector c;
  CVector b;
};

RankOneFactor leading_factor(const CMatrix& r) {
  Eigen::JacobiSVD<CMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const double root = std::sqrt(s);
  return RankOneFactor{svd.matrixU().col(0) * root,
                       svd.matrixV().col(0).conjugate() * root};
}

}  // namespace

RankOneResidueModel truncate_rank_one(const PoleResidueModel& model) {
  const Index r = model.order();
  RankOneResidueModel out;
  out.poles = model.poles;
  out.C = CMatrix::Zero(model.p, r);
  out.B = CMatrix::Zero(model.m, r);
  const Permutation partner = conjugate_partners(model.poles);
  for (Index j = 0; j < r; ++j) {
    const Index k = partner.size() == r ? partner(j) : j;
    if (k < j) {
      out.C.col(j) = out.C.col(k).conjugate();
      out.B.col(j) = out.B.col(k).conjugate();
      continue;
    }
    const RankOneFactor f = leading_factor(model.residues[j]);
    out.C.col(j) = f.c;
    out.B.col(j) = f.b;
  }
  return out;
}

RankOneResidueModel closed_rank_one(const CVector& poles,
                                    const std::vector<CMatrix>& residues) {
  const Index r = poles.size();
  const Index p = residues.empty() ? 0 : residues.front().rows();
  const Index m = residues.empty() ? 0 : residues.front().cols();
  PoleResidueModel tmp;
  tmp.p = p;
  tmp.m = m;
  tmp.poles = poles;
  tmp.residues = residues;
  const Permutation partner = conjugate_partners(poles, 1e-6);
  if (partner.size() == r) {
    for (Index j = 0; j < r; ++j) {
      const Index k = partner(j);
      if (k == j) {
        tmp.poles(j) = Complex(poles(j).real(), 0.0);
        tmp.residues[j] = residues[j].real().cast<Complex>();
      } else if (k > j) {
        const Complex pole = 0.5 * (poles(j) + std::conj(poles(k)));
        const CMatrix res = 0.5 * (residues[j] + residues[k].conjugate());
        tmp.poles(j) = pole;
        tmp.poles(k) = std::conj(pole);
        tmp.residues[j] = res;
        tmp.residues[k] = res.conjugate();
      }
    }
  }
  return truncate_rank_one(tmp);
}

namespace {

struct CauchyQR {
  CMatrix q;  // l x r
  CMatrix r;  // r x r
  RVector sw;
};

CauchyQR cauchy_qr(const SampleSet& samples, const CVector& poles, bool use_weights) {
  CauchyQR out;
  out.sw = use_weights ? RVector(samples.weights.cwiseSqrt())
                       : RVector(RVector::Ones(samples.size()));
  const CMatrix a = out.sw.asDiagonal() * build_cauchy(samples.nodes, poles);
  Eigen::HouseholderQR<CMatrix> qr(a);
  const Index r = poles.size();
  out.r = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  out.q = CMatrix::Identity(samples.size(), r);
  out.q.applyOnTheLeft(qr.householderQ());
  return out;
}

// Solves min over X (q x r) of sum_k || Cq diag(F(k,:)) X^T - D_k ||_F^2 where
// F is the fixed factor (n_fixed x r) and D_k = data slice k (l x q), through
// the stacked triangular system [R diag(F(1,:)); ...] = U T.
CMatrix correct_factor(const CauchyQR& cq, const CMatrix& fixed,
                       const std::vector<CMatrix>& slices) {
  const Index r = cq.r.cols();
  const Index nf = fixed.rows();
  CMatrix stacked(nf * r, r);
  for (Index k = 0; k < nf; ++k) {
    stacked.middleRows(k * r, r) = cq.r * fixed.row(k).transpose().asDiagonal();
  }
  Eigen::HouseholderQR<CMatrix> qr(stacked);
  const CMatrix t = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const double tmax = t.diagonal().cwiseAbs().maxCoeff();
  for (Index j = 0; j < r; ++j) {
    if (!(std::abs(t(j, j)) > 1e-14 * tmax)) {
      throw Error(Errc::singular,
                  "ALS correction: fixed factor leaves a pole unused (zero column)");
    }
  }
  const Index q = slices.front().cols();
  CMatrix rhs(nf * r, q);
  for (Index k = 0; k < nf; ++k) {
    rhs.middleRows(k * r, r) = cq.q.adjoint() * (cq.sw.asDiagonal() * slices[k]);
  }
  rhs.applyOnTheLeft(qr.householderQ().adjoint());
  const CMatrix xt = t.triangularView<Eigen::Upper>().solve(rhs.topRows(r));
  return xt.transpose();
}

void symmetrize_columns(CMatrix& x, const CVector& poles) {
  const Permutation partner = conjugate_partners(poles);
  if (partner.size() != poles.size()) return;
  for (Index j = 0; j < poles.size(); ++j) {
    const Index k = partner(j);
    if (k == j) {
      x.col(j) = x.col(j).real().cast<Complex>();
    } else if (k > j) {
      const CVector avg = 0.5 * (x.col(j) + x.col(k).conjugate());
      x.col(j) = avg;
      x.col(k) = avg.conjugate();
    }
  }
}

std::vector<CMatrix> output_slices(const SampleSet& samples) {
  // slice k: l x p, row i = S_i(:, k)^T
  std::vector<CMatrix> slices(static_cast<size_t>(samples.m),
                              CMatrix(samples.size(), samples.p));
  for (Index i = 0; i < samples.size(); ++i) {
    for (Index k = 0; k < samples.m; ++k) {
      slices[k].row(i) = samples.values[i].col(k).transpose();
    }
  }
  return slices;
}

std::vector<CMatrix> input_slices(const SampleSet& samples) {
  // slice u: l x m, row i = S_i(u, :)
  std::vector<CMatrix> slices(static_cast<size_t>(samples.p),
                              CMatrix(samples.size(), samples.m));
  for (Index i = 0; i < samples.size(); ++i) {
    for (Index u = 0; u < samples.p; ++u) slices[u].row(i) = samples.values[i].row(u);
  }
  return slices;
}

SampleSet closed(const SampleSet& samples) { return conjugate_closure(samples); }

}  // namespace

CMatrix als_correct_C(const SampleSet& samples_in, const CVector& poles,
                      const CMatrix& b, bool use_weights) {
  const SampleSet samples = closed(samples_in);
  if (b.rows() != samples.m || b.cols() != poles.size()) {
    throw Error(Errc::invalid_argument, "als_correct_C: B has the wrong shape");
  }
  const CauchyQR cq = cauchy_qr(samples, poles, use_weights);
  CMatrix c = correct_factor(cq, b, output_slices(samples));
  symmetrize_columns(c, poles);
  return c;
}

CMatrix als_correct_B(const SampleSet& samples_in, const CVector& poles,
                      const CMatrix& c, bool use_weights) {
  const SampleSet samples = closed(samples_in);
  if (c.rows() != samples.p || c.cols() != poles.size()) {
    throw Error(Errc::invalid_argument, "als_correct_B: C has the wrong shape");
  }
  const CauchyQR cq = cauchy_qr(samples, poles, use_weights);
  CMatrix b = correct_factor(cq, c, input_slices(samples));
  symmetrize_columns(b, poles);
  return b;
}

double als_objective(const SampleSet& samples_in, const RankOneResidueModel& model,
                     bool use_weights) {
  const SampleSet samples = closed(samples_in);
  double acc = 0.0;
  for (Index i = 0; i < samples.size(); ++i) {
    const double w = use_weights ? samples.weights(i) : 1.0;
    acc += w * (eval(model, samples.nodes(i)) - samples.values[i]).squaredNorm();
  }
  return acc;
}

ALSResult als_fit(const SampleSet& samples_in, const RankOneResidueModel& init,
                  int n_sweeps, bool use_weights) {
  const SampleSet samples = closed(samples_in);
  ALSResult out;
  out.model = init;
  out.report.method = "als";
  out.report.degree_before = init.order();
  out.report.degree_after = init.order();
  out.report.gamma_before = relative_ls_error(init, samples);
  double obj = als_objective(samples, init, use_weights);
  out.report.als_objective.push_back(obj);

  const CauchyQR cq = cauchy_qr(samples, init.poles, use_weights);
  const std::vector<CMatrix> out_slices = output_slices(samples);
  const std::vector<CMatrix> in_slices = input_slices(samples);

  auto try_step = [&](bool c_step) {
    RankOneResidueModel trial = out.model;
    if (c_step) {
      trial.C = correct_factor(cq, trial.B, out_slices);
      symmetrize_columns(trial.C, trial.poles);
    } else {
      trial.B = correct_factor(cq, trial.C, in_slices);
      symmetrize_columns(trial.B, trial.poles);
    }
    const double next = als_objective(samples, trial, use_weights);
    if (next <= obj) {
      out.model = std::move(trial);
      obj = next;
    } else {
      ++out.report.als_rejected_steps;
    }
    out.report.als_objective.push_back(obj);
  };

  for (int sweep = 0; sweep < n_sweeps; ++sweep) {
    try_step(true);
    try_step(false);
  }
  out.report.iterations = n_sweeps;
  out.report.gamma_after = relative_ls_error(out.model, samples);
  return out;
}

Gramians closed_form_gramians(const PoleResidueModel& model) {
  if (!model.is_stable()) {
    throw Error(Errc::unstable, "closed_form_gramians: model is not stable");
  }
  Gramians g;
  g.realization = realize_state_space(model);
  const CVector a = g.realization.A.diagonal();
  const CMatrix bb = g.realization.B_in * g.realization.B_in.adjoint();
  const CMatrix cc = g.realization.C_out.adjoint() * g.realization.C_out;
  const Index n = a.size();
  g.P.resize(n, n);
  g.Q.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < n; ++j) {
      g.P(j, k) = bb(j, k) / (-a(j) - std::conj(a(k)));
      g.Q(j, k) = cc(j, k) / (-std::conj(a(j)) - a(k));
    }
  }
  return g;
}

namespace {

// Z with Z Z^* = G for a Hermitian positive semidefinite G.
CMatrix psd_factor(const CMatrix& g) {
  const CMatrix herm = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
  const RVector vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal();
}

}  // namespace

RVector hankel_singular_values(const PoleResidueModel& model) {
  const Gramians g = closed_form_gramians(model);
  const CMatrix prod = psd_factor(g.Q).adjoint() * psd_factor(g.P);
  Eigen::JacobiSVD<CMatrix> svd(prod);
  return svd.singularValues();
}

BTResult bt_reduce(const PoleResidueModel& model, Index r_target) {
  const Gramians g = closed_form_gramians(model);
  const Index n = g.realization.states();
  if (r_target < 1 || r_target > n) {
    throw Error(Errc::invalid_argument, "bt_reduce: r_target must lie in [1, state dimension]");
  }
  const CMatrix zp = psd_factor(g.P);
  const CMatrix zq = psd_factor(g.Q);
  Eigen::JacobiSVD<CMatrix> svd(zq.adjoint() * zp, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& hsv = svd.singularValues();
  if (!(hsv(r_target - 1) > 0.0)) {
    throw Error(Errc::singular, "bt_reduce: Hankel singular value sigma_r is zero");
  }
  const RVector inv_root = hsv.head(r_target).cwiseSqrt().cwiseInverse();
  const CMatrix wr = zq * svd.matrixU().leftCols(r_target) * inv_root.asDiagonal();
  const CMatrix vr = zp * svd.matrixV().leftCols(r_target) * inv_root.asDiagonal();

  BTResult out;
  out.reduced.A = wr.adjoint() * g.realization.A * vr;
  out.reduced.B_in = wr.adjoint() * g.realization.B_in;
  out.reduced.C_out = g.realization.C_out * vr;

  Eigen::ComplexEigenSolver<CMatrix> eig(out.reduced.A);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::not_converged, "bt_reduce: eigensolver failed");
  }
  const CMatrix x = eig.eigenvectors();
  const CMatrix cx = out.reduced.C_out * x;
  const CMatrix xb = x.partialPivLu().solve(out.reduced.B_in);
  std::vector<CMatrix> residues;
  for (Index j = 0; j < r_target; ++j) residues.push_back(cx.col(j) * xb.row(j));
  out.model = closed_rank_one(eig.eigenvalues(), residues);

  out.report.method = "bt";
  out.report.degree_before = n;
  out.report.degree_after = r_target;
  out.report.hankel_singular_values = hsv;
  return out;
}

const char* degree_control_name(DegreeControl method) {
  switch (method) {
    case DegreeControl::none: return "none";
    case DegreeControl::trnct: return "trnct";
    case DegreeControl::als: return "als";
    case DegreeControl::irka: return "irka";
    case DegreeControl::bt: return "bt";
  }
  return "unknown";
}

ReductionResult reduce_degree(const PoleResidueModel& full, DegreeControl method,
                              Index r_target, const SampleSet* samples, int als_sweeps,
                              const PoleResidueModel* reference) {
  ReductionResult out;
  switch (method) {
    case DegreeControl::none:
      out.model = full;
      break;
    case DegreeControl::trnct:
      out.factors = truncate_rank_one(full);
      break;
    case DegreeControl::als: {
      if (!samples) throw Error(Errc::invalid_argument, "ALS correction needs samples");
      ALSResult als = als_fit(*samples, truncate_rank_one(full), als_sweeps);
      out.factors = std::move(als.model);
      out.report = std::move(als.report);
      break;
    }
    case DegreeControl::irka: {
      IRKAResult irka = irka_reduce(full, r_target);
      out.factors = std::move(irka.factors);
      out.report = std::move(irka.report);
      break;
    }
    case DegreeControl::bt: {
      BTResult bt = bt_reduce(full, r_target);
      out.factors = std::move(bt.model);
      out.report = std::move(bt.report);
      break;
    }
  }
  if (method != DegreeControl::none) out.model = to_pole_residue(out.factors);
  out.model.p = full.p;
  out.model.m = full.m;

  ReductionReport& rep = out.report;
  rep.method = degree_control_name(method);
  rep.degree_before = mcmillan_degree_estimate(full, 1e-13);
  rep.degree_after = mcmillan_degree_estimate(out.model, 1e-13);
  if (samples) {
    rep.gamma_before = relative_ls_error(full, *samples);
    rep.gamma_after = relative_ls_error(out.model, *samples);
  }
  const PoleResidueModel& ref = reference ? *reference : full;
  if (ref.is_stable() && full.is_stable()) rep.chi_before = relative_h2_error(ref, full);
  if (ref.is_stable() && out.model.is_stable()) {
    rep.chi_after = relative_h2_error(ref, out.model);
  }
  return out;
}

}  // namespace vfit

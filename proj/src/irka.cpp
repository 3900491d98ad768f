#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "vfit/degree_control.hpp"

namespace vfit {

TransferEvaluator make_evaluator(const PoleResidueModel& model) {
  TransferEvaluator h;
  h.p = model.p;
  h.m = model.m;
  h.value = [model](Complex s) { return eval(model, s); };
  h.derivative = [model](Complex s) { return eval_derivative(model, s); };
  return h;
}

CVector dominant_pole_shifts(const PoleResidueModel& model, Index r) {
  const Index n = model.order();
  if (r < 1 || r > n) {
    throw Error(Errc::invalid_argument, "dominant_pole_shifts: r must lie in [1, order]");
  }
  Permutation partner = conjugate_partners(model.poles);
  if (partner.size() != n) {
    partner.resize(n);
    for (Index j = 0; j < n; ++j) partner(j) = static_cast<int>(j);
  }
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) order[j] = j;
  auto score = [&](Index j) {
    const double re = std::abs(model.poles(j).real());
    return model.residues[j].norm() / std::max(re, std::numeric_limits<double>::min());
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return score(a) > score(b); });

  std::vector<Complex> picked;
  std::vector<bool> used(static_cast<size_t>(n), false);
  for (Index j : order) {
    if (static_cast<Index>(picked.size()) == r) break;
    if (used[j]) continue;
    const Index k = partner(j);
    const Complex mirror(std::abs(model.poles(j).real()), model.poles(j).imag());
    if (k == j) {
      picked.push_back(Complex(mirror.real(), 0.0));
      used[j] = true;
    } else if (static_cast<Index>(picked.size()) + 2 <= r) {
      picked.push_back(mirror);
      picked.push_back(std::conj(mirror));
      used[j] = used[k] = true;
    }
  }
  // An odd r with only complex pairs left: fill with real shifts at the
  // moduli of the remaining dominant poles.
  for (Index j : order) {
    if (static_cast<Index>(picked.size()) == r) break;
    if (used[j]) continue;
    picked.push_back(Complex(std::abs(model.poles(j)), 0.0));
    used[j] = true;
  }
  CVector out(r);
  for (Index i = 0; i < r; ++i) out(i) = picked[i];
  return out;
}

namespace {

struct Directions {
  CMatrix b;  // m x r
  CMatrix c;  // p x r
};

void fix_phase(CVector& u, CVector& v) {
  Index imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  if (std::abs(u(imax)) == 0.0) return;
  const Complex ph = std::conj(u(imax)) / std::abs(u(imax));
  u *= ph;
  v *= ph;
}

Directions dominant_directions(const std::vector<CMatrix>& hs, const CVector& shifts) {
  const Index r = shifts.size();
  Directions d{CMatrix(hs.front().cols(), r), CMatrix(hs.front().rows(), r)};
  const Permutation partner = conjugate_partners(shifts);
  for (Index j = 0; j < r; ++j) {
    const Index k = partner.size() == r ? partner(j) : j;
    if (k < j) {
      d.b.col(j) = d.b.col(k).conjugate();
      d.c.col(j) = d.c.col(k).conjugate();
      continue;
    }
    Eigen::JacobiSVD<CMatrix> svd(hs[j], Eigen::ComputeThinU | Eigen::ComputeThinV);
    CVector u = svd.matrixU().col(0);
    CVector v = svd.matrixV().col(0);
    fix_phase(u, v);
    if (k == j && partner.size() == r) {
      u = u.real().cast<Complex>();
      v = v.real().cast<Complex>();
    }
    d.b.col(j) = v;
    d.c.col(j) = u.conjugate();
  }
  return d;
}

struct LoewnerModel {
  CVector poles;
  CMatrix c;  // p x r
  CMatrix b;  // m x r
};

LoewnerModel loewner_model(const std::vector<CMatrix>& hs, const std::vector<CMatrix>& dhs,
                           const CVector& shifts, const Directions& dir) {
  const Index r = shifts.size();
  const Index p = hs.front().rows();
  const Index m = hs.front().cols();
  CMatrix e(r, r), a(r, r), bh(r, m), ch(p, r);
  double scale = 0.0;
  for (Index i = 0; i < r; ++i) scale = std::max(scale, std::abs(shifts(i)));
  for (Index i = 0; i < r; ++i) {
    for (Index j = i + 1; j < r; ++j) {
      if (std::abs(shifts(i) - shifts(j)) <= 1e-12 * scale) {
        throw Error(Errc::collision, "irka: two interpolation shifts coincide");
      }
    }
  }
  for (Index i = 0; i < r; ++i) {
    bh.row(i) = dir.c.col(i).transpose() * hs[i];
    ch.col(i) = hs[i] * dir.b.col(i);
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) {
      const Complex ci_hi_bj = (dir.c.col(i).transpose() * hs[i] * dir.b.col(j))(0, 0);
      const Complex ci_hj_bj = (dir.c.col(i).transpose() * hs[j] * dir.b.col(j))(0, 0);
      if (i == j) {
        const Complex d = (dir.c.col(i).transpose() * dhs[i] * dir.b.col(i))(0, 0);
        e(i, i) = -d;
        a(i, i) = -(ci_hi_bj + shifts(i) * d);
      } else {
        const Complex den = shifts(i) - shifts(j);
        e(i, j) = -(ci_hi_bj - ci_hj_bj) / den;
        a(i, j) = -(shifts(i) * ci_hi_bj - shifts(j) * ci_hj_bj) / den;
      }
    }
  }
  // Two-sided diagonal scaling keeps the rank test meaningful when the shifts
  // span many decades; the eigenvalues of E^{-1} A are unchanged.
  RVector d1(r), d2(r);
  for (Index i = 0; i < r; ++i) {
    const double n = e.row(i).cwiseAbs().maxCoeff();
    d1(i) = n > 0.0 ? 1.0 / n : 1.0;
  }
  const CMatrix e1 = d1.asDiagonal() * e;
  for (Index j = 0; j < r; ++j) {
    const double n = e1.col(j).cwiseAbs().maxCoeff();
    d2(j) = n > 0.0 ? 1.0 / n : 1.0;
  }
  const CMatrix es = e1 * d2.asDiagonal();
  const CMatrix as = d1.asDiagonal() * a * d2.asDiagonal();
  Eigen::FullPivLU<CMatrix> elu(es);
  if (!elu.isInvertible()) {
    throw Error(Errc::singular, "irka: Loewner matrix is singular; tangential data is degenerate");
  }
  const CMatrix ea = elu.solve(as);
  const CMatrix eb = elu.solve(d1.asDiagonal() * bh);
  Eigen::ComplexEigenSolver<CMatrix> eig(ea);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::not_converged, "irka: eigensolver failed");
  }
  const CMatrix x = eig.eigenvectors();
  Eigen::PartialPivLU<CMatrix> xlu(x);
  LoewnerModel out;
  out.poles = eig.eigenvalues();
  out.c = ch * d2.asDiagonal() * x;
  out.b = xlu.solve(eb).transpose();
  return out;
}

double hausdorff_gap(const CVector& a, const CVector& b) {
  double gap = 0.0;
  double scale = 0.0;
  auto one_way = [&](const CVector& x, const CVector& y) {
    for (Index i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < y.size(); ++j) best = std::min(best, std::abs(x(i) - y(j)));
      gap = std::max(gap, best);
      scale = std::max(scale, std::abs(x(i)));
    }
  };
  one_way(a, b);
  one_way(b, a);
  return gap / std::max(scale, std::numeric_limits<double>::min());
}

double interpolation_mismatch(const TransferEvaluator& h, const RankOneResidueModel& hr,
                              const CVector& shifts, const Directions& dir) {
  double worst = 0.0;
  for (Index i = 0; i < shifts.size(); ++i) {
    const CMatrix hv = h.value(shifts(i));
    const CMatrix diff = hv - eval(hr, shifts(i));
    const double right = (diff * dir.b.col(i)).norm() /
                         std::max((hv * dir.b.col(i)).norm(), std::numeric_limits<double>::min());
    const double left = (dir.c.col(i).transpose() * diff).norm() /
                        std::max((dir.c.col(i).transpose() * hv).norm(),
                                 std::numeric_limits<double>::min());
    worst = std::max({worst, right, left});
  }
  return worst;
}

}  // namespace

IRKAResult irka_reduce(const TransferEvaluator& h, Index r_target, const IRKAOptions& options) {
  if (r_target < 1) throw Error(Errc::invalid_argument, "irka: r_target must be positive");
  if (!options.init_shifts || options.init_shifts->size() != r_target) {
    throw Error(Errc::invalid_argument, "irka: need r_target initial shifts");
  }
  if (options.max_iters < 1) throw Error(Errc::invalid_argument, "irka: max_iters must be >= 1");

  CVector shifts = enforce_conjugate_closure(*options.init_shifts);
  for (Index i = 0; i < r_target; ++i) {
    if (!(shifts(i).real() > 0.0)) {
      throw Error(Errc::invalid_argument, "irka: shifts must lie in the open right half-plane");
    }
  }

  IRKAResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  std::optional<RankOneResidueModel> previous;
  ReductionReport report;
  report.method = "irka";
  report.converged = false;

  for (int it = 1; it <= options.max_iters; ++it) {
    report.shift_history.push_back(shifts);
    std::vector<CMatrix> hs, dhs;
    for (Index i = 0; i < r_target; ++i) {
      hs.push_back(h.value(shifts(i)));
      dhs.push_back(h.derivative(shifts(i)));
    }
    Directions dir;
    if (options.directions == TangentChoice::reduced_residues && previous) {
      // Residue directions of the previous reduced model, matched to the
      // shifts by construction (shift i mirrors pole i).
      dir.b = previous->B;
      dir.c = previous->C;
    } else {
      dir = dominant_directions(hs, shifts);
    }
    const LoewnerModel lm = loewner_model(hs, dhs, shifts, dir);

    std::vector<CMatrix> residues;
    for (Index j = 0; j < r_target; ++j) residues.push_back(lm.c.col(j) * lm.b.col(j).transpose());
    RankOneResidueModel factors = closed_rank_one(lm.poles, residues);

    CVector next(r_target);
    for (Index j = 0; j < r_target; ++j) {
      next(j) = Complex(std::abs(factors.poles(j).real()), factors.poles(j).imag());
    }
    const double gap = hausdorff_gap(next, shifts);
    report.iterations = it;
    report.shift_gap = gap;
    if (gap < best_gap) {
      best_gap = gap;
      best.factors = factors;
      best.report.interpolation_residual = interpolation_mismatch(h, factors, shifts, dir);
    }
    if (gap < options.tol) {
      report.converged = true;
      break;
    }
    previous = factors;
    shifts = next;
  }

  const double residual = best.report.interpolation_residual;
  best.report = std::move(report);
  best.report.interpolation_residual = residual;
  best.report.shift_gap = best_gap;
  best.report.degree_after = r_target;
  best.model = to_pole_residue(best.factors);
  best.model.p = h.p;
  best.model.m = h.m;
  return best;
}

IRKAResult irka_reduce(const PoleResidueModel& model, Index r_target, IRKAOptions options) {
  if (!model.is_stable()) throw Error(Errc::unstable, "irka: full model is not stable");
  if (!options.init_shifts) options.init_shifts = dominant_pole_shifts(model, r_target);
  IRKAResult out = irka_reduce(make_evaluator(model), r_target, options);
  out.report.degree_before = model.order();
  return out;
}

}  // namespace vfit

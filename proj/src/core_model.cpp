#include "vfit/core_model.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace vfit {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::io: return "io";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::collision: return "collision";
    case Errc::multiple_pole: return "multiple_pole";
    case Errc::degenerate: return "degenerate";
    case Errc::unstable: return "unstable";
    case Errc::non_finite: return "non_finite";
    case Errc::singular: return "singular";
    case Errc::infeasible: return "infeasible";
    case Errc::not_converged: return "not_converged";
  }
  return "unknown";
}

namespace detail {

void check_not_pole(Complex s, const CVector& poles, const char* what) {
  for (Index j = 0; j < poles.size(); ++j) {
    const double gap = std::abs(s - poles(j));
    const double scale = std::max(std::abs(s), std::abs(poles(j)));
    if (gap <= 4.0 * kUnitRoundoff * scale || gap == 0.0) {
      throw Error(Errc::collision,
                  std::string(what) + ": evaluation point coincides with a pole");
    }
  }
}

}  // namespace detail

namespace {

bool all_finite(const CMatrix& a) { return a.allFinite(); }

// Shared check used by the conversions: closure of (nodes, phi, Phi).
bool barycentric_closed(const BarycentricModel& model, const Permutation& partner) {
  if (partner.size() != model.order()) return false;
  for (Index j = 0; j < model.order(); ++j) {
    const Index k = partner(j);
    const double scale = 1.0 + std::abs(model.denom_weights(j));
    if (std::abs(model.denom_weights(k) - std::conj(model.denom_weights(j))) >
        1e-10 * scale) {
      return false;
    }
    const double nscale = 1.0 + model.numer_coeffs[j].norm();
    if ((model.numer_coeffs[k] - model.numer_coeffs[j].conjugate()).norm() >
        1e-10 * nscale) {
      return false;
    }
  }
  return true;
}

}  // namespace

void SampleSet::validate() const {
  const Index l = nodes.size();
  if (weights.size() != l || static_cast<Index>(values.size()) != l) {
    throw Error(Errc::invalid_argument,
                "SampleSet: nodes, weights and values differ in length");
  }
  for (Index i = 0; i < l; ++i) {
    if (values[i].rows() != p || values[i].cols() != m) {
      throw Error(Errc::invalid_argument, "SampleSet: inconsistent value shape");
    }
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) {
      throw Error(Errc::invalid_argument, "SampleSet: weights must be positive");
    }
    if (!std::isfinite(nodes(i).real()) || !std::isfinite(nodes(i).imag()) ||
        !all_finite(values[i])) {
      throw Error(Errc::non_finite, "SampleSet: non-finite node or value");
    }
  }
  std::vector<Index> order(static_cast<size_t>(l));
  std::iota(order.begin(), order.end(), Index{0});
  auto key = [&](Index i) {
    return std::pair<double, double>(nodes(i).real(), nodes(i).imag());
  };
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return key(a) < key(b); });
  for (size_t i = 1; i < order.size(); ++i) {
    if (nodes(order[i]) == nodes(order[i - 1])) {
      throw Error(Errc::collision, "SampleSet: repeated sample node");
    }
  }
}

bool PoleResidueModel::is_stable() const {
  for (Index j = 0; j < poles.size(); ++j) {
    if (!(poles(j).real() < 0.0)) return false;
  }
  return true;
}

Complex eval_denominator(const CVector& nodes, const CVector& phi, Complex s) {
  Complex d(1.0, 0.0);
  for (Index j = 0; j < nodes.size(); ++j) d += phi(j) / (s - nodes(j));
  return d;
}

CMatrix eval(const BarycentricModel& model, Complex s) {
  detail::check_not_pole(s, model.nodes, "eval_barycentric");
  CMatrix num = CMatrix::Zero(model.p, model.m);
  Complex den(1.0, 0.0);
  for (Index j = 0; j < model.order(); ++j) {
    const Complex w = 1.0 / (s - model.nodes(j));
    num += model.numer_coeffs[j] * w;
    den += model.denom_weights(j) * w;
  }
  if (!(std::abs(den) >= DBL_MIN)) {
    throw Error(Errc::singular, "eval_barycentric: denominator vanishes");
  }
  return num / den;
}

CMatrix eval(const PoleResidueModel& model, Complex s) {
  detail::check_not_pole(s, model.poles, "eval_pole_residue");
  CMatrix out = CMatrix::Zero(model.p, model.m);
  for (Index j = 0; j < model.order(); ++j) {
    out += model.residues[j] / (s - model.poles(j));
  }
  return out;
}

CMatrix eval(const RankOneResidueModel& model, Complex s) {
  detail::check_not_pole(s, model.poles, "eval_rank_one");
  CVector w(model.order());
  for (Index j = 0; j < model.order(); ++j) w(j) = 1.0 / (s - model.poles(j));
  return model.C * w.asDiagonal() * model.B.transpose();
}

CMatrix eval(const DiagonalStateSpace& model, Complex s) {
  const Index n = model.states();
  bool diagonal = true;
  for (Index j = 0; j < n && diagonal; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i != j && model.A(i, j) != Complex(0.0)) {
        diagonal = false;
        break;
      }
    }
  }
  if (diagonal) {
    CVector w(n);
    for (Index j = 0; j < n; ++j) {
      const Complex gap = s - model.A(j, j);
      if (gap == Complex(0.0)) {
        throw Error(Errc::collision, "eval_state_space: s is an eigenvalue of A");
      }
      w(j) = 1.0 / gap;
    }
    return model.C_out * w.asDiagonal() * model.B_in;
  }
  CMatrix shifted = -model.A;
  shifted.diagonal().array() += s;
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  return model.C_out * lu.solve(model.B_in);
}

CMatrix eval_derivative(const PoleResidueModel& model, Complex s) {
  detail::check_not_pole(s, model.poles, "eval_derivative");
  CMatrix out = CMatrix::Zero(model.p, model.m);
  for (Index j = 0; j < model.order(); ++j) {
    const Complex w = 1.0 / (s - model.poles(j));
    out -= model.residues[j] * (w * w);
  }
  return out;
}

PoleResidueModel to_pole_residue(const BarycentricModel& model, double zero_tol) {
  const Index r = model.order();
  std::vector<Index> j0;
  std::vector<Index> j1;
  for (Index j = 0; j < r; ++j) {
    (std::abs(model.denom_weights(j)) <= zero_tol ? j0 : j1).push_back(j);
  }

  PoleResidueModel out;
  out.p = model.p;
  out.m = model.m;
  if (j1.empty()) {
    out.poles = model.nodes;
    out.residues = model.numer_coeffs;
    return out;
  }

  const Index n1 = static_cast<Index>(j1.size());
  CMatrix arrow = CMatrix::Zero(n1, n1);
  for (Index a = 0; a < n1; ++a) {
    arrow.row(a).setZero();
    for (Index b = 0; b < n1; ++b) arrow(a, b) = -model.denom_weights(j1[b]);
    arrow(a, a) += model.nodes(j1[a]);
  }
  Eigen::ComplexEigenSolver<CMatrix> eig(arrow, false);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::not_converged, "to_pole_residue: eigensolver failed");
  }
  CVector zeros = eig.eigenvalues();
  // A few Newton steps on d itself; the eigenvalues lose accuracy when phi
  // is large, d does not.
  for (Index a = 0; a < n1; ++a) {
    Complex z = zeros(a);
    double best = std::abs(eval_denominator(model.nodes, model.denom_weights, z));
    for (int it = 0; it < 4 && best > 0.0; ++it) {
      Complex dv = 1.0, dd = 0.0;
      for (Index j : j1) {
        const Complex q = 1.0 / (z - model.nodes(j));
        dv += model.denom_weights(j) * q;
        dd -= model.denom_weights(j) * q * q;
      }
      if (dd == Complex(0.0)) break;
      const Complex next = z - dv / dd;
      const double val = std::abs(eval_denominator(model.nodes, model.denom_weights, next));
      if (!(val < best)) break;
      z = next;
      best = val;
    }
    zeros(a) = z;
  }

  const Permutation partner = conjugate_partners(model.nodes);
  const bool closed = barycentric_closed(model, partner);
  // The eigensolver only sees a complex matrix; its error grows with the
  // size of phi, so pair the zeros with a loose tolerance.
  if (closed) zeros = enforce_conjugate_closure(zeros, 1e-6);

  double scale = 0.0;
  for (Index j = 0; j < r; ++j) scale = std::max(scale, std::abs(model.nodes(j)));
  for (Index j = 0; j < n1; ++j) scale = std::max(scale, std::abs(zeros(j)));
  const double tiny = 64.0 * kUnitRoundoff * std::max(scale, 1.0);

  for (Index a = 0; a < n1; ++a) {
    for (Index b = a + 1; b < n1; ++b) {
      if (std::abs(zeros(a) - zeros(b)) <= tiny) {
        throw Error(Errc::multiple_pole, "to_pole_residue: relocated zeros coincide");
      }
    }
    for (Index j : j1) {
      if (std::abs(zeros(a) - model.nodes(j)) <= tiny) {
        throw Error(Errc::degenerate,
                    "to_pole_residue: zero of d collides with a barycentric node");
      }
    }
    for (Index j : j0) {
      if (std::abs(zeros(a) - model.nodes(j)) <= tiny) {
        throw Error(Errc::multiple_pole,
                    "to_pole_residue: zero of d coincides with a retained node");
      }
    }
  }

  out.poles.resize(n1 + static_cast<Index>(j0.size()));
  out.residues.reserve(static_cast<size_t>(out.poles.size()));
  for (Index a = 0; a < n1; ++a) {
    const Complex z = zeros(a);
    // prod_{i in J1}(z - lambda_i) / prod_{i != a}(z - z_i), paired factor by
    // factor so that large r does not overflow.
    Complex ratio = z - model.nodes(j1[static_cast<size_t>(a)]);
    for (Index b = 0, c = 0; b < n1; ++b) {
      if (b == a) continue;
      // pair the b-th relocated zero with the next unused node in J1
      if (c == a) ++c;
      ratio *= (z - model.nodes(j1[static_cast<size_t>(c)])) / (z - zeros(b));
      ++c;
    }
    CMatrix sum = CMatrix::Zero(model.p, model.m);
    for (Index i = 0; i < r; ++i) sum += model.numer_coeffs[i] / (z - model.nodes(i));
    out.poles(a) = z;
    out.residues.push_back(ratio * sum);
  }
  for (size_t t = 0; t < j0.size(); ++t) {
    const Index j = j0[t];
    Complex den(1.0, 0.0);
    for (Index i : j1) den += model.denom_weights(i) / (model.nodes(j) - model.nodes(i));
    out.poles(n1 + static_cast<Index>(t)) = model.nodes(j);
    out.residues.push_back(model.numer_coeffs[j] / den);
  }

  if (closed) {
    const Permutation pp = conjugate_partners(out.poles);
    if (pp.size() == out.order()) {
      for (Index j = 0; j < out.order(); ++j) {
        const Index k = pp(j);
        if (k < j) continue;
        if (k == j) {
          out.residues[j] = out.residues[j].real().cast<Complex>();
        } else {
          const CMatrix avg = 0.5 * (out.residues[j] + out.residues[k].conjugate());
          out.residues[j] = avg;
          out.residues[k] = avg.conjugate();
        }
      }
    }
  }
  return out;
}

PoleResidueModel to_pole_residue(const RankOneResidueModel& model) {
  PoleResidueModel out;
  out.p = model.p();
  out.m = model.m();
  out.poles = model.poles;
  for (Index j = 0; j < model.order(); ++j) {
    out.residues.push_back(model.C.col(j) * model.B.col(j).transpose());
  }
  return out;
}

BarycentricModel to_barycentric(const PoleResidueModel& model) {
  BarycentricModel out;
  out.p = model.p;
  out.m = model.m;
  out.nodes = model.poles;
  out.denom_weights = CVector::Zero(model.order());
  out.numer_coeffs = model.residues;
  return out;
}

namespace {

void require_stable(const PoleResidueModel& model, const char* what) {
  if (!model.is_stable()) {
    throw Error(Errc::unstable, std::string(what) + ": model has poles with Re >= 0");
  }
}

Complex trace_product_adjoint(const CMatrix& a, const CMatrix& b) {
  return a.cwiseProduct(b.conjugate()).sum();
}

}  // namespace

Complex h2_inner(const PoleResidueModel& g, const PoleResidueModel& h) {
  require_stable(g, "h2_inner");
  require_stable(h, "h2_inner");
  Complex acc(0.0);
  for (Index j = 0; j < g.order(); ++j) {
    for (Index k = 0; k < h.order(); ++k) {
      acc += trace_product_adjoint(g.residues[j], h.residues[k]) /
             (-g.poles(j) - std::conj(h.poles(k)));
    }
  }
  return acc;
}

double h2_norm(const PoleResidueModel& model) {
  return std::sqrt(std::max(0.0, h2_inner(model, model).real()));
}

namespace {

// (1/2pi) int ||E(i w)||_F^2 dw with w = L cot(theta), split at the angles of
// the pole frequencies so every peak sits at a panel edge.
double h2_error_sq_by_quadrature(const PoleResidueModel& h, const PoleResidueModel& hr) {
  std::vector<double> mags;
  for (const PoleResidueModel* m : {&h, &hr}) {
    for (Index k = 0; k < m->order(); ++k) mags.push_back(std::abs(m->poles(k)));
  }
  std::sort(mags.begin(), mags.end());
  const double scale = mags.empty() ? 1.0 : std::max(mags[mags.size() / 2], DBL_MIN);
  std::vector<double> cuts{0.0, std::numbers::pi};
  for (const PoleResidueModel* m : {&h, &hr}) {
    for (Index k = 0; k < m->order(); ++k) {
      cuts.push_back(std::atan2(scale, m->poles(k).imag()));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto integrand = [&](double theta) {
    const double sn = std::sin(theta);
    const Complex s(0.0, scale * std::cos(theta) / sn);
    return (eval(h, s) - eval(hr, s)).squaredNorm() * scale / (sn * sn);
  };
  double acc = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, cuts[i], cuts[i + 1], 10, 1e-12);
  }
  return acc / (2.0 * std::numbers::pi);
}

}  // namespace

double h2_error(const PoleResidueModel& h, const PoleResidueModel& hr) {
  require_stable(h, "h2_error");
  require_stable(hr, "h2_error");
  if (h.p != hr.p || h.m != hr.m) {
    throw Error(Errc::invalid_argument, "h2_error: dimension mismatch");
  }
  // ||E||^2 = sum_k trace(E(-conj mu_k) E_k^*) over the poles mu_k of E.
  // Nearly coincident poles of h and hr make the terms cancel; when the sum
  // is not clearly above its rounding level, integrate instead.
  double acc = 0.0;
  double noise = 0.0;
  auto add = [&](const PoleResidueModel& m, Index k, double sign) {
    const Complex s = -std::conj(m.poles(k));
    const CMatrix hs = eval(h, s), hrs = eval(hr, s);
    acc += sign * trace_product_adjoint(hs - hrs, m.residues[k]).real();
    noise += (hs.norm() + hrs.norm()) * m.residues[k].norm();
  };
  for (Index k = 0; k < h.order(); ++k) add(h, k, 1.0);
  for (Index k = 0; k < hr.order(); ++k) add(hr, k, -1.0);
  if (acc > 1e8 * kUnitRoundoff * noise) return std::sqrt(acc);
  return std::sqrt(h2_error_sq_by_quadrature(h, hr));
}

double relative_h2_error(const PoleResidueModel& h, const PoleResidueModel& hr) {
  const double nh = h2_norm(h);
  if (nh == 0.0) throw Error(Errc::degenerate, "relative_h2_error: ||H|| = 0");
  return h2_error(h, hr) / nh;
}

namespace {

struct ResidueFactor {
  CMatrix x;  // p x k
  CMatrix y;  // k x m
};

ResidueFactor factor_residue(const CMatrix& r, double rank_tol) {
  Eigen::JacobiSVD<CMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  Index k = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    while (k < sv.size() && sv(k) > rank_tol * sv(0)) ++k;
  }
  ResidueFactor f;
  const RVector root = sv.head(k).cwiseSqrt();
  f.x = svd.matrixU().leftCols(k) * root.asDiagonal();
  f.y = root.asDiagonal() * svd.matrixV().leftCols(k).adjoint();
  return f;
}

}  // namespace

DiagonalStateSpace realize_state_space(const PoleResidueModel& model, double rank_tol) {
  if (rank_tol < 0.0) {
    rank_tol = 10.0 * static_cast<double>(std::max(model.p, model.m)) * kUnitRoundoff;
  }
  const Index r = model.order();
  std::vector<ResidueFactor> factors(static_cast<size_t>(r));
  const Permutation partner = conjugate_partners(model.poles);
  for (Index j = 0; j < r; ++j) {
    const Index k = partner.size() == r ? partner(j) : j;
    if (k < j) {
      factors[j].x = factors[k].x.conjugate();
      factors[j].y = factors[k].y.conjugate();
    } else {
      factors[j] = factor_residue(model.residues[j], rank_tol);
    }
  }
  Index n = 0;
  for (const auto& f : factors) n += f.x.cols();

  DiagonalStateSpace ss;
  ss.A = CMatrix::Zero(n, n);
  ss.B_in = CMatrix::Zero(n, model.m);
  ss.C_out = CMatrix::Zero(model.p, n);
  Index offset = 0;
  for (Index j = 0; j < r; ++j) {
    const Index k = factors[j].x.cols();
    for (Index t = 0; t < k; ++t) ss.A(offset + t, offset + t) = model.poles(j);
    ss.B_in.middleRows(offset, k) = factors[j].y;
    ss.C_out.middleCols(offset, k) = factors[j].x;
    offset += k;
  }
  return ss;
}

DiagonalStateSpace realize_state_space(const RankOneResidueModel& model) {
  DiagonalStateSpace ss;
  ss.A = model.poles.asDiagonal();
  ss.B_in = model.B.transpose();
  ss.C_out = model.C;
  return ss;
}

Index mcmillan_degree_estimate(const PoleResidueModel& model, double rank_tol) {
  Index degree = 0;
  for (const CMatrix& r : model.residues) {
    Eigen::JacobiSVD<CMatrix> svd(r);
    const RVector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) continue;
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > rank_tol * sv(0)) ++degree;
    }
  }
  return degree;
}

Permutation conjugate_partners(const CVector& z, double tol) {
  const Index n = z.size();
  Permutation partner = Permutation::Constant(n, -1);
  for (Index j = 0; j < n; ++j) {
    if (partner(j) >= 0) continue;
    const double scale = std::max(1.0, std::abs(z(j)));
    if (std::abs(z(j).imag()) <= tol * scale) {
      partner(j) = static_cast<int>(j);
      continue;
    }
    Index best = -1;
    double best_gap = tol * scale;
    for (Index k = 0; k < n; ++k) {
      if (k == j || partner(k) >= 0) continue;
      const double gap = std::abs(z(k) - std::conj(z(j)));
      if (gap <= best_gap) {
        best = k;
        best_gap = gap;
      }
    }
    if (best < 0) return Permutation();
    partner(j) = static_cast<int>(best);
    partner(best) = static_cast<int>(j);
  }
  return partner;
}

CVector enforce_conjugate_closure(const CVector& z, double tol) {
  const Index n = z.size();
  double scale = 1.0;
  for (Index j = 0; j < n; ++j) scale = std::max(scale, std::abs(z(j)));

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return z(a).imag() > z(b).imag(); });

  Permutation partner = Permutation::Constant(n, -1);
  for (Index j : order) {
    if (z(j).imag() <= 0.0 || partner(j) >= 0) continue;
    Index best = -1;
    double best_gap = std::min(tol * scale, std::abs(z(j).imag()));
    for (Index k = 0; k < n; ++k) {
      if (k == j || partner(k) >= 0 || z(k).imag() >= 0.0) continue;
      const double gap = std::abs(z(k) - std::conj(z(j)));
      if (gap < best_gap) {
        best = k;
        best_gap = gap;
      }
    }
    if (best >= 0) {
      partner(j) = static_cast<int>(best);
      partner(best) = static_cast<int>(j);
    }
  }

  CVector out(n);
  Index pos = 0;
  std::vector<bool> done(static_cast<size_t>(n), false);
  for (Index j = 0; j < n; ++j) {
    if (done[j]) continue;
    const Index k = partner(j);
    if (k < 0) {
      // Unpaired: only near-real entries are snapped.
      out(pos++) = std::abs(z(j).imag()) <= tol * scale ? Complex(z(j).real(), 0.0) : z(j);
      done[j] = true;
      continue;
    }
    const Index up = z(j).imag() > 0.0 ? j : k;
    const Index down = up == j ? k : j;
    const Complex avg = 0.5 * (z(up) + std::conj(z(down)));
    out(pos++) = avg;
    out(pos++) = std::conj(avg);
    done[j] = done[k] = true;
  }
  return out;
}

SampleSet conjugate_closure(const SampleSet& samples) {
  SampleSet out = samples;
  const Index l = samples.size();
  for (Index i = 0; i < l; ++i) {
    const Complex xi = samples.nodes(i);
    if (xi.imag() == 0.0) continue;
    const Complex target = std::conj(xi);
    bool found = false;
    for (Index k = 0; k < l && !found; ++k) {
      found = std::abs(samples.nodes(k) - target) <=
              4.0 * kUnitRoundoff * std::abs(xi);
    }
    if (found) continue;
    const Index n = out.size();
    out.nodes.conservativeResize(n + 1);
    out.weights.conservativeResize(n + 1);
    out.nodes(n) = target;
    out.weights(n) = samples.weights(i);
    out.values.push_back(samples.values[i].conjugate());
  }
  return out;
}

bool is_conjugate_closed(const SampleSet& samples) {
  return conjugate_closure(samples).size() == samples.size();
}

CVector log_imaginary_nodes(double omega_min, double omega_max, Index n_positive) {
  if (!(omega_min > 0.0) || !(omega_max > omega_min) || n_positive < 1) {
    throw Error(Errc::invalid_argument, "log_imaginary_nodes: invalid range");
  }
  CVector nodes(2 * n_positive);
  const double a = std::log10(omega_min);
  const double b = std::log10(omega_max);
  for (Index i = 0; i < n_positive; ++i) {
    const double t = n_positive == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n_positive - 1);
    const double w = std::pow(10.0, a + t * (b - a));
    nodes(2 * i) = Complex(0.0, w);
    nodes(2 * i + 1) = Complex(0.0, -w);
  }
  return nodes;
}

}  // namespace vfit

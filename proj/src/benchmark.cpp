#include "vfit/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace vfit {

namespace {

// 1-based grid positions floor(k (n+1) / d), kept inside [1, n].
Index grid_position(Index k, Index n, Index d) {
  const Index pos = (k * (n + 1)) / d;
  return std::clamp<Index>(pos, 1, n) - 1;
}

}  // namespace

DiagonalStateSpace generate_heat1d(Index n, double alpha, Index p, Index m) {
  if (n < 2 || !(alpha > 0.0) || p < 1 || m < 1) {
    throw Error(Errc::invalid_argument, "heat1d: need n >= 2, alpha > 0, p, m >= 1");
  }
  const double h = 1.0 / static_cast<double>(n + 1);
  const double k = alpha / (h * h);
  DiagonalStateSpace ss;
  ss.A = CMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    ss.A(i, i) = -2.0 * k;
    if (i > 0) ss.A(i, i - 1) = k;
    if (i + 1 < n) ss.A(i, i + 1) = k;
  }
  ss.B_in = CMatrix::Zero(n, m);
  for (Index j = 0; j < m; ++j) ss.B_in(grid_position(j + 1, n, m + 1), j) = 1.0;
  ss.C_out = CMatrix::Zero(p, n);
  for (Index i = 0; i < p; ++i) ss.C_out(i, grid_position(2 * i + 1, n, 2 * p)) = 1.0;
  return ss;
}

PoleResidueModel heat1d_model(Index n, double alpha, Index p, Index m) {
  const DiagonalStateSpace ss = generate_heat1d(n, alpha, p, m);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(ss.A.real());
  const RMatrix& v = eig.eigenvectors();
  const RMatrix cv = ss.C_out.real() * v;
  const RMatrix vb = v.transpose() * ss.B_in.real();
  PoleResidueModel model;
  model.p = p;
  model.m = m;
  model.poles = eig.eigenvalues().cast<Complex>();
  for (Index j = 0; j < n; ++j) {
    model.residues.push_back((cv.col(j) * vb.row(j)).cast<Complex>());
  }
  return model;
}

namespace {

CVector random_poles(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_im(0.0, 2.0);
  std::uniform_real_distribution<double> damping(0.05, 0.5);
  CVector poles(n);
  Index j = 0;
  for (; j + 1 < n; j += 2) {
    const double im = std::pow(10.0, log_im(rng));
    const double re = -im * damping(rng);
    poles(j) = Complex(re, im);
    poles(j + 1) = Complex(re, -im);
  }
  if (j < n) poles(j) = Complex(-std::pow(10.0, log_im(rng)), 0.0);
  return poles;
}

CMatrix random_matrix(Index rows, Index cols, bool real, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CMatrix out(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      out(r, c) = Complex(re, real ? 0.0 : normal(rng));
    }
  }
  return out;
}

PoleResidueModel random_model(Index n, Index p, Index m, std::uint64_t seed,
                              const std::function<CMatrix(bool, std::mt19937_64&)>& residue) {
  if (n < 1 || p < 1 || m < 1) {
    throw Error(Errc::invalid_argument, "random model: need n, p, m >= 1");
  }
  std::mt19937_64 rng(seed);
  PoleResidueModel model;
  model.p = p;
  model.m = m;
  model.poles = random_poles(n, rng);
  for (Index j = 0; j < n; ++j) {
    if (model.poles(j).imag() < 0.0) {
      model.residues.push_back(model.residues.back().conjugate());
    } else {
      model.residues.push_back(residue(model.poles(j).imag() == 0.0, rng));
    }
  }
  return model;
}

}  // namespace

PoleResidueModel random_stable(Index n, Index p, Index m, std::uint64_t seed) {
  return random_model(n, p, m, seed, [p, m](bool real, std::mt19937_64& rng) {
    return random_matrix(p, m, real, rng);
  });
}

PoleResidueModel rank_one_planted(Index r, Index p, Index m, std::uint64_t seed) {
  return random_model(r, p, m, seed, [p, m](bool real, std::mt19937_64& rng) {
    const CMatrix c = random_matrix(p, 1, real, rng);
    const CMatrix b = random_matrix(m, 1, real, rng);
    return CMatrix(c * b.transpose());
  });
}

QuadratureRule sampling_rule(const SamplingPlan& plan) {
  switch (plan.kind) {
    case QuadKind::boyd_cc: return boyd_cc_rule(plan.scale_l, 2 * plan.evaluations);
    case QuadKind::trapezoid:
      return trapezoid_rule(plan.omega_min, plan.omega_max, plan.evaluations);
    case QuadKind::uniform: return uniform_rule(plan.omega_min, plan.omega_max, plan.evaluations);
    case QuadKind::log: return log_rule(plan.omega_min, plan.omega_max, plan.evaluations);
  }
  throw Error(Errc::invalid_argument, "unknown quadrature kind");
}

PoleResidueModel generate_model(const BenchmarkSpec& spec) {
  switch (spec.generator) {
    case Generator::heat1d: return heat1d_model(spec.n, spec.alpha, spec.p, spec.m);
    case Generator::random_stable: return random_stable(spec.n, spec.p, spec.m, spec.seed);
    case Generator::rank_one_planted:
      return rank_one_planted(spec.n, spec.p, spec.m, spec.seed);
  }
  throw Error(Errc::invalid_argument, "unknown generator");
}

const char* generator_name(Generator g) {
  switch (g) {
    case Generator::heat1d: return "heat1d";
    case Generator::random_stable: return "random_stable";
    case Generator::rank_one_planted: return "rank_one_planted";
  }
  return "unknown";
}

BenchTable run_bench(const BenchmarkSpec& spec) {
  if (spec.orders.empty()) throw Error(Errc::invalid_argument, "bench: no target orders");
  const PoleResidueModel truth = generate_model(spec);
  const QuadratureRule rule = sampling_rule(spec.sampling);
  const SampleSet samples = sample_on_rule(truth, rule);

  const char* methods[] = {"mimoVF", "Trnct", "ALS", "IRKA", "BT", "direct-IRKA"};
  BenchTable table;
  table.orders = spec.orders;
  for (const char* name : methods) {
    table.rows.push_back(BenchRow{name, std::vector<BenchCell>(spec.orders.size())});
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto score = [&](const PoleResidueModel& model) {
    BenchCell cell{relative_ls_error(model, samples), nan};
    if (model.is_stable()) cell.chi = relative_h2_error(truth, model);
    return cell;
  };

  for (size_t k = 0; k < spec.orders.size(); ++k) {
    const Index r = spec.orders[k];
    auto guarded = [&](size_t row, const std::function<BenchCell()>& f) {
      try {
        table.rows[row].cells[k] = f();
      } catch (const Error& e) {
        table.rows[row].cells[k] = BenchCell{nan, nan};
        table.notes.push_back(std::string(methods[row]) + " r=" + std::to_string(r) + ": " +
                              e.what());
      }
    };

    std::optional<PoleResidueModel> full;
    guarded(0, [&] {
      VFOptions opt;
      opt.r = r;
      opt.max_iters = spec.vf_iters;
      opt.track_gamma = false;
      full = vf_fit(samples, opt).model;
      return score(*full);
    });
    if (!full) continue;
    const DegreeControl controls[] = {DegreeControl::trnct, DegreeControl::als,
                                      DegreeControl::irka, DegreeControl::bt};
    for (size_t c = 0; c < 4; ++c) {
      guarded(c + 1, [&] {
        return score(reduce_degree(*full, controls[c], r, &samples, spec.als_sweeps, &truth).model);
      });
    }
    guarded(5, [&] { return score(irka_reduce(truth, r).model); });
  }
  return table;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string bench_csv(const BenchTable& table) {
  std::ostringstream os;
  os << "method";
  for (Index r : table.orders) os << ",gamma_r" << r << ",chi_r" << r;
  os << '\n';
  for (const BenchRow& row : table.rows) {
    os << row.method;
    for (const BenchCell& cell : row.cells) os << ',' << fmt17(cell.gamma) << ',' << fmt17(cell.chi);
    os << '\n';
  }
  return os.str();
}

}  // namespace vfit

// vfit command-line front end.
//
// Exit codes: 0 success, 2 I/O failure, 3 bad configuration or input,
// 4 numerical failure. Errors are reported as one JSON object on stdout,
// {"error": <class>, "message": <text>}.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfit/benchmark.hpp"
#include "vfit/degree_control.hpp"
#include "vfit/io.hpp"
#include "vfit/quadrature.hpp"
#include "vfit/vf_engine.hpp"

using namespace vfit;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumerical = 4;

int exit_code(Errc code) {
  switch (code) {
    case Errc::io: return kExitIo;
    case Errc::invalid_argument: return kExitConfig;
    default: return kExitNumerical;
  }
}

void print_error(const std::string& kind, const std::string& message) {
  std::cout << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

struct QuadFlags {
  std::string kind;
  Index n = 64;
  double scale_l = 1.0;
  std::vector<double> range{0.1, 1000.0};

  void add(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--quad", kind, "Quadrature rule")
                    ->check(CLI::IsMember({"uniform", "log", "trap", "boyd"}));
    if (required) opt->required();
    cmd->add_option("--quad-n", n, "Points per side (uniform, log, trap) or total N (boyd)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--quad-L", scale_l, "Scale L of the boyd rule")->check(CLI::PositiveNumber);
    cmd->add_option("--quad-range", range, "omega_min omega_max")->expected(2);
  }

  QuadratureRule rule() const {
    if (kind == "boyd") return boyd_cc_rule(scale_l, n);
    if (kind == "trap") return trapezoid_rule(range[0], range[1], n);
    if (kind == "uniform") return uniform_rule(range[0], range[1], n);
    return log_rule(range[0], range[1], n);
  }
};

const std::map<std::string, DegreeControl> kDegreeControls{
    {"none", DegreeControl::none}, {"trnct", DegreeControl::trnct}, {"als", DegreeControl::als},
    {"irka", DegreeControl::irka}, {"bt", DegreeControl::bt}};

// Replaces sample weights with the rule's, after checking that the samples
// sit on the rule's nodes.
void apply_rule(SampleSet& samples, const QuadratureRule& rule) {
  if (rule.size() != samples.size()) {
    throw Error(Errc::invalid_argument, "--quad: the rule has " + std::to_string(rule.size()) +
                                            " nodes but the data has " +
                                            std::to_string(samples.size()) + " samples");
  }
  const RVector w = rule.sample_weights();
  for (Index i = 0; i < samples.size(); ++i) {
    Index match = -1;
    for (Index j = 0; j < rule.size(); ++j) {
      if (std::abs(samples.nodes(i) - rule.nodes(j)) <=
          1e-12 * std::max(1.0, std::abs(rule.nodes(j)))) {
        match = j;
        break;
      }
    }
    if (match < 0) {
      throw Error(Errc::invalid_argument,
                  "--quad: sample node " + std::to_string(i + 1) + " is not a node of the rule");
    }
    samples.weights(i) = w(match);
  }
}

RVector read_weights(const std::string& path, Index expected) {
  std::istringstream is(read_file(path));
  std::vector<double> w;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      w.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "--weights: bad number '" + line + "'");
    }
  }
  if (static_cast<Index>(w.size()) != expected) {
    throw Error(Errc::invalid_argument, "--weights: expected one weight per sample node");
  }
  return Eigen::Map<RVector>(w.data(), expected);
}

struct FitFlags {
  std::string input, output, diagnostics, weights, plot_csv, svg, report;
  Index order = 0;
  Index target = 0;
  int max_iters = 10;
  double stop_eps = 1e-8;
  std::optional<double> noise;
  std::string mode = "vf", init = "log", residue_solver = "plain", degree_control = "none";
  std::uint64_t seed = 0;
  bool flip_unstable = true;
  double mu = 0.0, nu = 0.0;
  int sweeps = 1;
  QuadFlags quad;
};

int cmd_fit(const FitFlags& f) {
  SampleSet samples = load_samples(f.input);
  if (!f.weights.empty()) samples.weights = read_weights(f.weights, samples.size());
  if (!f.quad.kind.empty()) apply_rule(samples, f.quad.rule());
  samples.validate();

  VFOptions opt;
  opt.r = f.order;
  opt.max_iters = f.max_iters;
  opt.stop_eps = f.stop_eps;
  opt.noise_estimate = f.noise;
  opt.mode = f.mode == "sk" ? FitMode::sk : FitMode::vf;
  opt.init = f.init == "random" ? InitStrategy::random_stable : InitStrategy::log_conjugate;
  opt.seed = f.seed;
  opt.flip_unstable = f.flip_unstable;
  const std::map<std::string, ResidueSolver> solvers{{"plain", ResidueSolver::plain},
                                                     {"trunc", ResidueSolver::truncated},
                                                     {"tikhonov", ResidueSolver::tikhonov},
                                                     {"morozov", ResidueSolver::morozov}};
  opt.residue_solver = solvers.at(f.residue_solver);
  opt.mu = f.mu;
  opt.nu = f.nu;

  const FitResult fit = vfit::fit(samples, opt);
  PoleResidueModel model = fit.model;
  std::optional<ReductionResult> reduced;
  const DegreeControl method = kDegreeControls.at(f.degree_control);
  if (method != DegreeControl::none) {
    const Index target = f.target > 0 ? f.target : f.order;
    reduced = reduce_degree(model, method, target, &samples, f.sweeps);
    model = reduced->model;
  }

  save_model(f.output, model);
  if (!f.diagnostics.empty()) write_file(f.diagnostics, diagnostics_to_json(fit.diagnostics));
  if (!f.report.empty() && reduced) write_file(f.report, reduction_report_to_json(reduced->report));
  if (!f.plot_csv.empty()) write_file(f.plot_csv, plot_csv(samples, model));
  if (!f.svg.empty()) write_file(f.svg, plot_svg(samples, model));

  std::printf("order %lld, %zu iterations, %s, gamma %.6e\n", static_cast<long long>(f.order),
              fit.diagnostics.iterations.size(),
              fit.diagnostics.converged ? "converged" : "not converged",
              relative_ls_error(model, samples));
  for (const std::string& w : fit.diagnostics.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int cmd_convert(const std::string& input, const std::string& output, const std::string& to) {
  const AnyModel model = load_model(input);
  const PoleResidueModel pr = as_pole_residue(model);
  if (to == "pole_residue") {
    save_model(output, pr);
  } else if (to == "barycentric") {
    save_model(output, to_barycentric(pr));
  } else if (to == "state_space") {
    save_model(output, realize_state_space(pr));
  } else {
    save_model(output, truncate_rank_one(pr));
  }
  return 0;
}

int cmd_reduce(const std::string& input, const std::string& output, const std::string& method,
               Index order, const std::string& samples_path, int sweeps,
               const std::string& report) {
  const PoleResidueModel full = as_pole_residue(load_model(input));
  std::optional<SampleSet> samples;
  if (!samples_path.empty()) samples = load_samples(samples_path);
  const DegreeControl dc = kDegreeControls.at(method);
  if (dc == DegreeControl::als && !samples) {
    throw Error(Errc::invalid_argument, "reduce: --degree-control als needs --samples");
  }
  const ReductionResult res =
      reduce_degree(full, dc, order > 0 ? order : full.order(), samples ? &*samples : nullptr, sweeps);
  save_model(output, res.model);
  if (!report.empty()) write_file(report, reduction_report_to_json(res.report));
  return 0;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int cmd_quad(const QuadFlags& q, const std::string& output) {
  const QuadratureRule rule = q.rule();
  const RVector sw = rule.sample_weights();
  std::ostringstream os;
  os << "omega,weight,sample_weight\n";
  for (Index i = 0; i < rule.size(); ++i) {
    os << fmt17(rule.nodes(i).imag()) << ',' << fmt17(rule.weights(i)) << ',' << fmt17(sw(i))
       << '\n';
  }
  if (output.empty()) {
    std::cout << os.str();
  } else {
    write_file(output, os.str());
  }
  return 0;
}

int cmd_sample(const std::string& model_path, const QuadFlags& q, const std::string& output) {
  const PoleResidueModel model = as_pole_residue(load_model(model_path));
  const SampleSet samples = sample_on_rule(model, q.rule());
  if (output.empty()) {
    std::cout << samples_to_csv(samples);
  } else {
    save_samples(output, samples);
  }
  return 0;
}

struct BenchFlags {
  std::string generator = "heat1d";
  Index n = 197;
  double alpha = 1.0;
  Index p = 2, m = 2;
  std::uint64_t seed = 1;
  std::vector<Index> orders{6, 10};
  std::string quad = "boyd";
  Index evaluations = 20;
  double scale_l = 30.0;
  std::vector<double> range{0.1, 1000.0};
  int sweeps = 1;
  int vf_iters = 20;
  std::string output;
};

int cmd_bench(const BenchFlags& b) {
  BenchmarkSpec spec;
  spec.generator = b.generator == "heat1d"           ? Generator::heat1d
                   : b.generator == "random_stable" ? Generator::random_stable
                                                     : Generator::rank_one_planted;
  spec.n = b.n;
  spec.alpha = b.alpha;
  spec.p = b.p;
  spec.m = b.m;
  spec.seed = b.seed;
  spec.orders = b.orders;
  spec.sampling.kind = b.quad == "boyd"      ? QuadKind::boyd_cc
                       : b.quad == "trap"    ? QuadKind::trapezoid
                       : b.quad == "uniform" ? QuadKind::uniform
                                             : QuadKind::log;
  spec.sampling.evaluations = b.evaluations;
  spec.sampling.scale_l = b.scale_l;
  spec.sampling.omega_min = b.range[0];
  spec.sampling.omega_max = b.range[1];
  spec.als_sweeps = b.sweeps;
  spec.vf_iters = b.vf_iters;
  const BenchTable table = run_bench(spec);
  const std::string csv = bench_csv(table);
  if (b.output.empty()) {
    std::cout << csv;
  } else {
    write_file(b.output, csv);
  }
  for (const std::string& note : table.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vfit: rational fitting of MIMO frequency-response data"};
  app.require_subcommand(1);

  FitFlags ff;
  CLI::App* fit = app.add_subcommand("fit", "Fit a pole-residue model to sample data");
  fit->add_option("--input,-i", ff.input, "Sample CSV")->required();
  fit->add_option("--output,-o", ff.output, "Model JSON")->required();
  fit->add_option("--diagnostics", ff.diagnostics, "Fit diagnostics JSON");
  fit->add_option("--order,-r", ff.order, "Number of poles")->required()->check(CLI::PositiveNumber);
  fit->add_option("--max-iters", ff.max_iters)->check(CLI::PositiveNumber);
  fit->add_option("--stop-eps", ff.stop_eps)->check(CLI::NonNegativeNumber);
  fit->add_option("--noise", ff.noise, "Noise level estimate (absolute)");
  fit->add_option("--mode", ff.mode)->check(CLI::IsMember({"vf", "sk"}));
  fit->add_option("--init", ff.init)->check(CLI::IsMember({"log", "random"}));
  fit->add_option("--seed", ff.seed);
  fit->add_flag("--flip-unstable,!--no-flip-unstable", ff.flip_unstable,
                "Reflect unstable relocated poles (default on)");
  fit->add_option("--residue-solver", ff.residue_solver)
      ->check(CLI::IsMember({"plain", "trunc", "tikhonov", "morozov"}));
  fit->add_option("--mu", ff.mu, "Tikhonov parameter")->check(CLI::NonNegativeNumber);
  fit->add_option("--nu", ff.nu, "Morozov discrepancy level")->check(CLI::NonNegativeNumber);
  auto* weights = fit->add_option("--weights", ff.weights, "One weight per sample node");
  ff.quad.add(fit, false);
  fit->get_option("--quad")->excludes(weights);
  fit->add_option("--degree-control", ff.degree_control)
      ->check(CLI::IsMember({"none", "trnct", "als", "irka", "bt"}));
  fit->add_option("--target", ff.target, "McMillan degree after degree control (default: order)");
  fit->add_option("--sweeps", ff.sweeps, "ALS sweeps")->check(CLI::NonNegativeNumber);
  fit->add_option("--report", ff.report, "Degree-control report JSON");
  fit->add_option("--plot-csv", ff.plot_csv);
  fit->add_option("--svg", ff.svg);

  std::string cv_in, cv_out, cv_to = "pole_residue";
  CLI::App* convert = app.add_subcommand("convert", "Convert between model representations");
  convert->add_option("--input,-i", cv_in)->required();
  convert->add_option("--output,-o", cv_out)->required();
  convert->add_option("--to", cv_to)
      ->check(CLI::IsMember({"pole_residue", "barycentric", "state_space", "rank_one"}));

  std::string rd_in, rd_out, rd_method = "trnct", rd_samples, rd_report;
  Index rd_order = 0;
  int rd_sweeps = 1;
  CLI::App* reduce = app.add_subcommand("reduce", "Reduce a model to McMillan degree r");
  reduce->add_option("--input,-i", rd_in)->required();
  reduce->add_option("--output,-o", rd_out)->required();
  reduce->add_option("--degree-control", rd_method)
      ->check(CLI::IsMember({"none", "trnct", "als", "irka", "bt"}));
  reduce->add_option("--order,-r", rd_order, "Target degree (irka, bt)");
  reduce->add_option("--samples", rd_samples, "Sample CSV (als, gamma)");
  reduce->add_option("--sweeps", rd_sweeps)->check(CLI::NonNegativeNumber);
  reduce->add_option("--report", rd_report);

  QuadFlags qf;
  std::string q_out;
  CLI::App* quad = app.add_subcommand("quad", "Emit quadrature nodes and weights");
  qf.add(quad, true);
  quad->add_option("--output,-o", q_out);

  std::string s_model, s_out;
  QuadFlags sq;
  CLI::App* sample = app.add_subcommand("sample", "Evaluate a model on a rule's nodes");
  sample->add_option("--model", s_model)->required();
  sq.add(sample, true);
  sample->add_option("--output,-o", s_out);

  BenchFlags bf;
  CLI::App* bench = app.add_subcommand("bench", "Compare degree-control methods on a generator");
  bench->add_option("--generator", bf.generator)
      ->check(CLI::IsMember({"heat1d", "random_stable", "rank_one_planted"}));
  bench->add_option("--n", bf.n, "Generator size")->check(CLI::PositiveNumber);
  bench->add_option("--alpha", bf.alpha)->check(CLI::PositiveNumber);
  bench->add_option("--p", bf.p)->check(CLI::PositiveNumber);
  bench->add_option("--m", bf.m)->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed);
  bench->add_option("--orders", bf.orders)->delimiter(',');
  bench->add_option("--quad", bf.quad)->check(CLI::IsMember({"uniform", "log", "trap", "boyd"}));
  bench->add_option("--evaluations", bf.evaluations)->check(CLI::PositiveNumber);
  bench->add_option("--quad-L", bf.scale_l)->check(CLI::PositiveNumber);
  bench->add_option("--quad-range", bf.range)->expected(2);
  bench->add_option("--sweeps", bf.sweeps)->check(CLI::NonNegativeNumber);
  bench->add_option("--vf-iters", bf.vf_iters)->check(CLI::PositiveNumber);
  bench->add_option("--output,-o", bf.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("config", e.what());
    return kExitConfig;
  }

  try {
    if (*fit) return cmd_fit(ff);
    if (*convert) return cmd_convert(cv_in, cv_out, cv_to);
    if (*reduce) return cmd_reduce(rd_in, rd_out, rd_method, rd_order, rd_samples, rd_sweeps, rd_report);
    if (*quad) return cmd_quad(qf, q_out);
    if (*sample) return cmd_sample(s_model, sq, s_out);
    if (*bench) return cmd_bench(bf);
  } catch (const Error& e) {
    print_error(errc_name(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitNumerical;
  }
  return 0;
}

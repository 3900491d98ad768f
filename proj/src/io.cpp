#include "vfit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace vfit {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

namespace {

json complex_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

json vector_json(const CVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

json matrix_json(const CMatrix& a) {
  json out = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < a.cols(); ++j) row.push_back(complex_json(a(i, j)));
    out.push_back(row);
  }
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(Errc::invalid_argument, std::string("model JSON: missing field '") + key + "'");
  }
  return j.at(key);
}

double number(const json& j) {
  if (!j.is_number()) throw Error(Errc::invalid_argument, "model JSON: expected a number");
  return j.get<double>();
}

Complex complex_from(const json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, "model JSON: expected {\"re\", \"im\"}");
  return Complex(number(field(j, "re")), number(field(j, "im")));
}

CVector vector_from(const json& j) {
  if (!j.is_array()) throw Error(Errc::invalid_argument, "model JSON: expected a complex array");
  CVector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from(j[i]);
  return v;
}

CMatrix matrix_from(const json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw Error(Errc::invalid_argument, "model JSON: matrix has the wrong number of rows");
  }
  CMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(Errc::invalid_argument, "model JSON: matrix has the wrong number of columns");
    }
    for (Index k = 0; k < cols; ++k) a(i, k) = complex_from(row[static_cast<size_t>(k)]);
  }
  return a;
}

Index count(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(Errc::invalid_argument, std::string("model JSON: '") + key + "' must be a count");
  }
  return static_cast<Index>(v.get<long long>());
}

json to_json(const PoleResidueModel& m) {
  json res = json::array();
  for (const CMatrix& r : m.residues) res.push_back(matrix_json(r));
  return json{{"type", "pole_residue"}, {"p", m.p}, {"m", m.m},
              {"poles", vector_json(m.poles)}, {"residues", res}};
}

json to_json(const RankOneResidueModel& m) {
  return json{{"type", "rank_one"}, {"p", m.p()}, {"m", m.m()},
              {"poles", vector_json(m.poles)}, {"C", matrix_json(m.C)}, {"B", matrix_json(m.B)}};
}

json to_json(const BarycentricModel& m) {
  json numer = json::array();
  for (const CMatrix& r : m.numer_coeffs) numer.push_back(matrix_json(r));
  return json{{"type", "barycentric"}, {"p", m.p}, {"m", m.m},
              {"nodes", vector_json(m.nodes)}, {"phi", vector_json(m.denom_weights)},
              {"Phi", numer}};
}

json to_json(const DiagonalStateSpace& m) {
  return json{{"type", "state_space"}, {"A", matrix_json(m.A)}, {"B", matrix_json(m.B_in)},
              {"C", matrix_json(m.C_out)}, {"n", m.states()}, {"p", m.C_out.rows()},
              {"m", m.B_in.cols()}};
}

std::vector<CMatrix> matrices_from(const json& arr, Index count_expected, Index p, Index m) {
  if (!arr.is_array() || static_cast<Index>(arr.size()) != count_expected) {
    throw Error(Errc::invalid_argument, "model JSON: one coefficient matrix per pole expected");
  }
  std::vector<CMatrix> out;
  for (const json& r : arr) out.push_back(matrix_from(r, p, m));
  return out;
}

}  // namespace

std::string model_to_json(const AnyModel& model) {
  const json j = std::visit([](const auto& m) { return to_json(m); }, model);
  return j.dump(2) + "\n";
}

AnyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("model JSON: ") + e.what());
  }
  // Untagged files are read as pole-residue (or rank-one when C and B are
  // present).
  std::string t;
  if (j.is_object() && j.contains("type")) {
    if (!j["type"].is_string()) throw Error(Errc::invalid_argument, "model JSON: 'type' must be a string");
    t = j["type"].get<std::string>();
  } else {
    t = j.is_object() && j.contains("C") && j.contains("B") ? "rank_one" : "pole_residue";
  }
  if (t == "pole_residue") {
    PoleResidueModel m;
    m.p = count(j, "p");
    m.m = count(j, "m");
    m.poles = vector_from(field(j, "poles"));
    m.residues = matrices_from(field(j, "residues"), m.poles.size(), m.p, m.m);
    return m;
  }
  if (t == "rank_one") {
    RankOneResidueModel m;
    const Index p = count(j, "p"), mm = count(j, "m");
    m.poles = vector_from(field(j, "poles"));
    m.C = matrix_from(field(j, "C"), p, m.poles.size());
    m.B = matrix_from(field(j, "B"), mm, m.poles.size());
    return m;
  }
  if (t == "barycentric") {
    BarycentricModel m;
    m.p = count(j, "p");
    m.m = count(j, "m");
    m.nodes = vector_from(field(j, "nodes"));
    m.denom_weights = vector_from(field(j, "phi"));
    if (m.denom_weights.size() != m.nodes.size()) {
      throw Error(Errc::invalid_argument, "model JSON: phi and nodes differ in length");
    }
    m.numer_coeffs = matrices_from(field(j, "Phi"), m.nodes.size(), m.p, m.m);
    return m;
  }
  if (t == "state_space") {
    DiagonalStateSpace m;
    const Index n = count(j, "n"), p = count(j, "p"), mm = count(j, "m");
    m.A = matrix_from(field(j, "A"), n, n);
    m.B_in = matrix_from(field(j, "B"), n, mm);
    m.C_out = matrix_from(field(j, "C"), p, n);
    return m;
  }
  throw Error(Errc::invalid_argument, "model JSON: unknown type '" + t + "'");
}

AnyModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

void save_model(const std::string& path, const AnyModel& model) {
  write_file(path, model_to_json(model));
}

PoleResidueModel as_pole_residue(const AnyModel& model) {
  if (const auto* pr = std::get_if<PoleResidueModel>(&model)) return *pr;
  if (const auto* r1 = std::get_if<RankOneResidueModel>(&model)) return to_pole_residue(*r1);
  if (const auto* bc = std::get_if<BarycentricModel>(&model)) return to_pole_residue(*bc);
  const auto& ss = std::get<DiagonalStateSpace>(model);
  Eigen::ComplexEigenSolver<CMatrix> eig(ss.A);
  if (eig.info() != Eigen::Success) {
    throw Error(Errc::not_converged, "state space: eigensolver failed");
  }
  const CMatrix& x = eig.eigenvectors();
  Eigen::FullPivLU<CMatrix> lu(x);
  if (!lu.isInvertible()) {
    throw Error(Errc::multiple_pole, "state space: A is not diagonalizable");
  }
  const CMatrix cx = ss.C_out * x;
  const CMatrix xb = lu.solve(ss.B_in);
  PoleResidueModel out;
  out.p = ss.C_out.rows();
  out.m = ss.B_in.cols();
  out.poles = eig.eigenvalues();
  for (Index j = 0; j < out.poles.size(); ++j) out.residues.push_back(cx.col(j) * xb.row(j));
  return out;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw Error(Errc::invalid_argument,
                "sample CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string samples_to_csv(const SampleSet& samples) {
  std::ostringstream os;
  os << "node_re,node_im,weight,u,v,val_re,val_im\n";
  for (Index i = 0; i < samples.size(); ++i) {
    const std::string head = fmt17(samples.nodes(i).real()) + ',' +
                             fmt17(samples.nodes(i).imag()) + ',' + fmt17(samples.weights(i));
    for (Index u = 0; u < samples.p; ++u) {
      for (Index v = 0; v < samples.m; ++v) {
        const Complex z = samples.values[i](u, v);
        os << head << ',' << u + 1 << ',' << v + 1 << ',' << fmt17(z.real()) << ','
           << fmt17(z.imag()) << '\n';
      }
    }
  }
  return os.str();
}

SampleSet samples_from_csv(const std::string& text) {
  struct Entry {
    Index u, v;
    Complex z;
  };
  struct Node {
    Complex xi;
    double w;
    std::vector<Entry> entries;
  };
  std::vector<Node> nodes;
  Index p = 0, m = 0;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("node_re", 0) == 0) continue;
    }
    const std::vector<std::string> cells = split(line);
    if (cells.size() != 7) {
      throw Error(Errc::invalid_argument,
                  "sample CSV line " + std::to_string(lineno) + ": expected 7 columns");
    }
    const Complex xi(parse_double(cells[0], lineno), parse_double(cells[1], lineno));
    const double w = parse_double(cells[2], lineno);
    const double uf = parse_double(cells[3], lineno), vf = parse_double(cells[4], lineno);
    if (uf < 1 || vf < 1 || uf != std::floor(uf) || vf != std::floor(vf)) {
      throw Error(Errc::invalid_argument,
                  "sample CSV line " + std::to_string(lineno) + ": u, v must be 1-based indices");
    }
    const Entry e{static_cast<Index>(uf) - 1, static_cast<Index>(vf) - 1,
                  Complex(parse_double(cells[5], lineno), parse_double(cells[6], lineno))};
    if (nodes.empty() || nodes.back().xi != xi || nodes.back().w != w) {
      nodes.push_back(Node{xi, w, {}});
    }
    nodes.back().entries.push_back(e);
    p = std::max(p, e.u + 1);
    m = std::max(m, e.v + 1);
  }
  if (nodes.empty()) throw Error(Errc::invalid_argument, "sample CSV: no samples");
  SampleSet out;
  out.p = p;
  out.m = m;
  out.nodes.resize(static_cast<Index>(nodes.size()));
  out.weights.resize(static_cast<Index>(nodes.size()));
  for (size_t i = 0; i < nodes.size(); ++i) {
    out.nodes(static_cast<Index>(i)) = nodes[i].xi;
    out.weights(static_cast<Index>(i)) = nodes[i].w;
    CMatrix value = CMatrix::Constant(p, m, Complex(std::numeric_limits<double>::quiet_NaN(), 0.0));
    for (const Entry& e : nodes[i].entries) value(e.u, e.v) = e.z;
    if (value.hasNaN() || static_cast<Index>(nodes[i].entries.size()) != p * m) {
      throw Error(Errc::invalid_argument, "sample CSV: node " + std::to_string(i + 1) +
                                              " does not list every matrix entry once");
    }
    out.values.push_back(std::move(value));
  }
  out.validate();
  return out;
}

SampleSet load_samples(const std::string& path) { return samples_from_csv(read_file(path)); }

void save_samples(const std::string& path, const SampleSet& samples) {
  write_file(path, samples_to_csv(samples));
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const char* residue_solver_name(ResidueSolver s) {
  switch (s) {
    case ResidueSolver::plain: return "plain";
    case ResidueSolver::truncated: return "trunc";
    case ResidueSolver::tikhonov: return "tikhonov";
    case ResidueSolver::morozov: return "morozov";
  }
  return "unknown";
}

const char* morozov_name(MorozovStatus s) {
  switch (s) {
    case MorozovStatus::ok: return "ok";
    case MorozovStatus::below_minimal_residual: return "below_minimal_residual";
    case MorozovStatus::above_data_norm: return "above_data_norm";
  }
  return "unknown";
}

}  // namespace

std::string diagnostics_to_json(const FitDiagnostics& diag) {
  json iters = json::array();
  for (const IterationRecord& it : diag.iterations) {
    iters.push_back(json{{"theta", finite_or_null(it.theta)},
                         {"gamma", it.gamma < 0.0 ? json(nullptr) : finite_or_null(it.gamma)},
                         {"eps1", it.eps1}, {"eps2", it.eps2}, {"eps3", it.eps3},
                         {"rank", it.rank}, {"zeroed_phi", it.zeroed_phi}});
  }
  const ResidueReport& f = diag.final_solve;
  const json j{{"iterations", iters},
               {"converged", diag.converged},
               {"stop_threshold", diag.stop_threshold},
               {"gamma", finite_or_null(diag.gamma)},
               {"warnings", diag.warnings},
               {"final_solve", json{{"solver", residue_solver_name(f.solver)},
                                    {"numerical_rank", f.numerical_rank},
                                    {"zero_residues", f.zero_residues},
                                    {"residual_norm", f.residual_norm},
                                    {"mu", f.mu},
                                    {"morozov", morozov_name(f.morozov)}}}};
  return j.dump(2) + "\n";
}

std::string reduction_report_to_json(const ReductionReport& r) {
  json hsv = json::array();
  for (Index i = 0; i < r.hankel_singular_values.size(); ++i) hsv.push_back(r.hankel_singular_values(i));
  json shifts = json::array();
  for (const CVector& s : r.shift_history) shifts.push_back(vector_json(s));
  const json j{{"method", r.method},
               {"degree_before", r.degree_before},
               {"degree_after", r.degree_after},
               {"gamma_before", finite_or_null(r.gamma_before)},
               {"gamma_after", finite_or_null(r.gamma_after)},
               {"chi_before", finite_or_null(r.chi_before)},
               {"chi_after", finite_or_null(r.chi_after)},
               {"als_objective", r.als_objective},
               {"als_rejected_steps", r.als_rejected_steps},
               {"hankel_singular_values", hsv},
               {"shift_history", shifts},
               {"shift_gap", finite_or_null(r.shift_gap)},
               {"interpolation_residual", finite_or_null(r.interpolation_residual)},
               {"iterations", r.iterations},
               {"converged", r.converged}};
  return j.dump(2) + "\n";
}

std::string plot_csv(const SampleSet& samples, const PoleResidueModel& model) {
  std::ostringstream os;
  os << "omega,u,v,abs_H,abs_Hr,rel_err\n";
  for (Index i = 0; i < samples.size(); ++i) {
    if (samples.nodes(i).imag() < 0.0) continue;
    const CMatrix hr = eval(model, samples.nodes(i));
    for (Index u = 0; u < samples.p; ++u) {
      for (Index v = 0; v < samples.m; ++v) {
        const double a = std::abs(samples.values[i](u, v));
        const double d = std::abs(samples.values[i](u, v) - hr(u, v));
        os << fmt17(samples.nodes(i).imag()) << ',' << u + 1 << ',' << v + 1 << ','
           << fmt17(a) << ',' << fmt17(std::abs(hr(u, v))) << ','
           << fmt17(a > 0.0 ? d / a : std::numeric_limits<double>::infinity()) << '\n';
      }
    }
  }
  return os.str();
}

std::string plot_svg(const SampleSet& samples, const PoleResidueModel& model) {
  struct Point {
    double w, data, fit;
  };
  std::vector<Index> order;
  for (Index i = 0; i < samples.size(); ++i) {
    if (samples.nodes(i).imag() > 0.0) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return samples.nodes(a).imag() < samples.nodes(b).imag();
  });
  const double width = 640, height = 400, margin = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (order.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  std::vector<std::vector<Point>> curves(static_cast<size_t>(samples.p * samples.m));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Index i : order) {
    const CMatrix hr = eval(model, samples.nodes(i));
    for (Index u = 0; u < samples.p; ++u) {
      for (Index v = 0; v < samples.m; ++v) {
        const Point pt{samples.nodes(i).imag(), std::abs(samples.values[i](u, v)), std::abs(hr(u, v))};
        for (double y : {pt.data, pt.fit}) {
          if (y > 0.0) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
          }
        }
        curves[static_cast<size_t>(u * samples.m + v)].push_back(pt);
      }
    }
  }
  if (!(hi > 0.0)) lo = hi = 1.0;
  const double wlo = std::log10(samples.nodes(order.front()).imag());
  const double whi = std::log10(samples.nodes(order.back()).imag());
  const double ylo = std::log10(lo), yhi = std::log10(hi);
  auto x_of = [&](double w) {
    return margin + (whi > wlo ? (std::log10(w) - wlo) / (whi - wlo) : 0.5) * (width - 2 * margin);
  };
  auto y_of = [&](double y) {
    const double ly = y > 0.0 ? std::log10(y) : ylo;
    return height - margin - (yhi > ylo ? (ly - ylo) / (yhi - ylo) : 0.5) * (height - 2 * margin);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << margin << "\" y=\"" << margin
     << "\" width=\"" << width - 2 * margin << "\" height=\"" << height - 2 * margin
     << "\"/></g>\n";
  for (size_t c = 0; c < curves.size(); ++c) {
    const char* color = colors[c % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const Point& pt : curves[c]) os << x_of(pt.w) << ',' << y_of(pt.fit) << ' ';
    os << "\"/>\n";
    for (const Point& pt : curves[c]) {
      os << "<circle r=\"2\" fill=\"" << color << "\" cx=\"" << x_of(pt.w) << "\" cy=\""
         << y_of(pt.data) << "\"/>\n";
    }
  }
  os << "<text x=\"" << margin << "\" y=\"" << height - 15
     << "\" font-size=\"12\">log10 omega in [" << wlo << ", " << whi << "], log10 |H| in ["
     << ylo << ", " << yhi << "]; dots: data, lines: model</text>\n</svg>\n";
  return os.str();
}

}  // namespace vfit

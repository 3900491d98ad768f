#pragma once

#include <string>
#include <variant>

#include "vfit/core_model.hpp"
#include "vfit/degree_control.hpp"
#include "vfit/vf_engine.hpp"

namespace vfit {

using AnyModel =
    std::variant<PoleResidueModel, RankOneResidueModel, BarycentricModel, DiagonalStateSpace>;

// Model files are JSON objects tagged by "type" (pole_residue, rank_one,
// barycentric, state_space; untagged files are read as pole_residue). Every
// complex number is an object {"re", "im"}; matrices are arrays of rows. Doubles use the shortest decimal form
// that reads back to the same value, so load + save is byte-identical.
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);

AnyModel load_model(const std::string& path);
void save_model(const std::string& path, const AnyModel& model);

/// Anything that can be evaluated, as a pole-residue model (state-space
/// models are diagonalized).
PoleResidueModel as_pole_residue(const AnyModel& model);

// Sample CSV: header "node_re,node_im,weight,u,v,val_re,val_im", one row per node and
// matrix entry, u and v 1-based, doubles with 17 significant digits.
std::string samples_to_csv(const SampleSet& samples);
SampleSet samples_from_csv(const std::string& text);
SampleSet load_samples(const std::string& path);
void save_samples(const std::string& path, const SampleSet& samples);

std::string diagnostics_to_json(const FitDiagnostics& diag);
std::string reduction_report_to_json(const ReductionReport& report);

/// Per-entry magnitude comparison at the nonnegative-frequency samples:
/// omega,u,v,abs_H,abs_Hr,rel_err.
std::string plot_csv(const SampleSet& samples, const PoleResidueModel& model);

/// Static log-log plot of |H_uv| (data markers) and |H_r,uv| (lines).
std::string plot_svg(const SampleSet& samples, const PoleResidueModel& model);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace vfit

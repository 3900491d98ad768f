#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vfit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;
using Permutation = Eigen::VectorXi;

/// Failure classes. The CLI maps them onto exit codes, so keep them coarse.
enum class Errc {
  io,
  invalid_argument,
  collision,        // evaluation point or sample node coincides with a pole/node
  multiple_pole,    // relocated zeros coincide
  degenerate,       // structurally unusable input (e.g. zero range, zero data)
  unstable,         // operation requires Re(pole) < 0
  non_finite,
  singular,
  infeasible,
  not_converged,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Short machine-friendly name of an error code ("io", "collision", ...).
const char* errc_name(Errc code);

inline constexpr double kUnitRoundoff = 1.1102230246251565e-16;

}  // namespace vfit

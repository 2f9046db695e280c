#pragma once

#include "scaleop/augment.hpp"
#include "scaleop/sino.hpp"

#include <nlohmann/json.hpp>

namespace scaleop {

/// Solver-level scale-consistency check: generate reference instances, crop at
/// fraction lambda, re-solve the rescaled crop with the transformed
/// parameters and boundary data extracted from the solution, and compare
/// against the restricted solution.
struct ConsistencyReport {
  Equation equation = Equation::Darcy;
  Real lambda = 0.5;
  Index resolution = 0;
  Index trials = 0;
  Real mean_rel_l2 = 0.0;
  Real max_rel_l2 = 0.0;
  nlohmann::json to_json() const;
};

/// `k` is the scale parameter of the generated instances (Darcy: table scale;
/// Helmholtz: wavenumber; Burgers: 1/nu; NS: Reynolds number). For NS the
/// check is the fixed zoom identity zeta(x, t) = omega(2x, t) with nu/4, so
/// lambda is ignored.
ConsistencyReport check_solver_consistency(Equation eq, Real lambda, Index res,
                                           Index trials, Real k,
                                           std::uint64_t seed);

/// Computable out-of-distribution error terms for an operator Psi on Darcy:
/// the near-constant-input error, the boundary condition error and the
/// self-consistency error (discrete L2 norms, sup over trials).
struct DiagnosticsReport {
  Real err_near_constant = 0.0;  // sup ||Psi - reference|| on near-constant a
  Real err_boundary = 0.0;       // sup ||Psi(a,g)|boundary - g||
  Real err_selfcon = 0.0;        // sup crop discrepancy of Psi with itself
  Index trials = 0;
  nlohmann::json to_json() const;
};

using Operator = std::function<Field(const PdeInstance&)>;

/// Psi = exact Darcy solver.
Operator exact_darcy_operator();
/// Psi = a trained model (real single-channel output).
Operator model_operator(const SinoModel& model);

DiagnosticsReport appendix_diagnostics(const Operator& psi, Real lambda,
                                       Index res, Index trials,
                                       std::uint64_t seed);

}  // namespace scaleop

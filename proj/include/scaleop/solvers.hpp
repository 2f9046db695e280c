#pragma once

#include "scaleop/grid.hpp"

#include <functional>
#include <optional>

namespace scaleop {

enum class Equation { Darcy, Helmholtz, Burgers, NavierStokes };

std::string equation_name(Equation eq);
Equation equation_from_name(const std::string& name);

/// One dataset/loss unit: inputs, scale parameter and (optionally) the
/// reference solution. Which members are present depends on the equation
/// signature; validate() enforces it.
struct PdeInstance {
  Equation equation = Equation::Darcy;
  Domain domain;
  std::optional<Field> a;           // coefficient
  std::optional<Field> f;           // forcing
  std::optional<BoundaryTrace> g;   // Dirichlet data (real)
  std::optional<CBoundaryTrace> gc; // Dirichlet data (complex, Helmholtz crops)
  Real k = 1.0;                     // scale parameter (k, 1/nu, Re, GRF scale)
  std::optional<Field> history;     // NS autoregressive: past frames as channels
  std::optional<Field> u;           // solution (real)
  std::optional<CField> uc;         // solution (complex)

  void validate() const;
  bool has_solution() const { return u.has_value() || uc.has_value(); }
};

// ---------------------------------------------------------------------------
// Elliptic solvers (Darcy / Helmholtz), 5-point variable-coefficient stencil
// with harmonic-mean face coefficients on a vertex grid.
// ---------------------------------------------------------------------------

struct EllipticOptions {
  Real tol = 1e-11;       // iterative relative residual target
  Index iter_per_n = 50;  // iteration cap = iter_per_n * max axis resolution
  bool force_direct = false;
  bool check_resolution = true;  // Helmholtz: enforce the 8k points guideline
};

/// -div(a grad u) = f with Dirichlet data g; f may be null (Darcy's zero
/// forcing). Coercivity (min a > 0) is required. The returned field carries g
/// on the boundary and satisfies the discrete equations to the solver
/// tolerance.
Field darcy_solve(const Field& a, const BoundaryTrace& g,
                  const Field* forcing = nullptr,
                  const EllipticOptions& opt = {});

/// Sign convention of the zeroth-order term.
enum class HelmholtzSign {
  MinusK2,  // -div(a grad u) - k^2 u = f   (default)
  PlusK2,   // -div(a grad u) + k^2 u = f
};

/// Complex Helmholtz solve with Dirichlet data. The discrete operator is real,
/// so the real and imaginary parts are solved independently.
CField helmholtz_solve(const Field& a, Real k, const Field& f,
                       const CBoundaryTrace& g,
                       HelmholtzSign sign = HelmholtzSign::MinusK2,
                       const EllipticOptions& opt = {});

/// Promote a real trace to a complex one (zero imaginary part).
CBoundaryTrace to_complex(const BoundaryTrace& g);
CField to_complex(const Field& f);

// ---------------------------------------------------------------------------
// Burgers, conservative viscous form  u_t + (u^2/2)_x = nu u_xx.
// Space axis is vertex-sampled, the time axis is cell-start (frame j at
// t = j T/nt, frame 0 = u0). Diffusion is Crank-Nicolson, convection is
// explicit 2nd-order (Adams-Bashforth on the central flux) with internal
// CFL-limited substepping.
// ---------------------------------------------------------------------------

/// Dirichlet problem on [0,1]: g_time is (nt x 2), columns are the left/right
/// end values at the output frames (linearly interpolated at substeps).
Field burgers_solve(const VectorX& u0, const MatrixX& g_time, Real nu, Real T,
                    Index nt);

/// Periodic variant on [0,1) used for data generation and as an oracle.
Field burgers_solve_periodic(const VectorX& u0, Real nu, Real T, Index nt);

// ---------------------------------------------------------------------------
// 2D incompressible Navier-Stokes, vorticity form, periodic unit torus.
// Pseudo-spectral with 2/3-rule dealiasing; Crank-Nicolson viscous term,
// Adams-Bashforth 2 nonlinear term (first step: explicit Euler at dt/2 twice).
// ---------------------------------------------------------------------------

struct NsOptions {
  Real cfl = 0.4;
  Real dt_max = 1e-2;
  bool check_cfl = true;
};

/// Evolve vorticity from omega0 and return the frames at t = 0, dt_out, ...,
/// T (inclusive; T must be a multiple of dt_out).
std::vector<Field> ns_solve(const Field& omega0, Real nu, Real T, Real dt_out,
                            const NsOptions& opt = {});

/// Velocity (2 channels) recovered from vorticity through the streamfunction.
Field velocity_from_vorticity(const Field& omega);

/// Spectral curl of a 2-channel periodic velocity field.
Field spectral_curl(const Field& velocity);

/// Pack a frame sequence into one space-time field (time axis cell-start,
/// spacing dt_out).
Field pack_frames(const std::vector<Field>& frames, Real dt_out);

}  // namespace scaleop

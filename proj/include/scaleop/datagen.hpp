#pragma once

#include "scaleop/solvers.hpp"

namespace scaleop {

/// Dataset recipes, one instance at a time. Each function is a pure function
/// of its arguments; per-instance seeds are derived by the caller (the CLI
/// uses Philox(master_seed, instance_index)).

/// Two-phase Darcy flow. The table scale s maps to the GRF wavelength
/// sigma = 4/s; the boundary data is a fixed-sigma Gaussian trace normalized
/// to sup-norm 1. The instance's scale parameter k is the table scale.
PdeInstance make_darcy_instance(Real scale, Index res, std::uint64_t seed,
                                bool solve = true);

/// Helmholtz with wavenumber k: smooth positive coefficient exp(0.5 * GRF),
/// fixed forcing f = 1, Gaussian boundary data.
PdeInstance make_helmholtz_instance(Real k, Index res, std::uint64_t seed,
                                    bool solve = true);

/// Burgers space-time instance: periodic solve from a smooth random profile
/// (normalized to unit sup), wrapped onto the vertex grid so the instance
/// carries honest Dirichlet data. nx is the periodic cell count (the instance
/// has nx+1 vertex points); scale parameter k = 1/nu.
PdeInstance make_burgers_instance(Real nu, Index nx, Index nt, std::uint64_t seed);

/// Autoregressive Navier-Stokes: decaying turbulence on the torus at
/// resolution res, truncated to the [0, 1/2]^2 vertex window. The instance
/// carries `history_frames` past vorticity frames as channels and the next
/// frame as the target; k = Re, nu = 1/Re.
PdeInstance make_ns_instance(Real re, Index res, Index history_frames,
                             std::uint64_t seed, Real dt_out = 0.1);

/// Space-time (2+1d) Navier-Stokes block: `frames` vorticity frames on the
/// [0, 1/2]^2 vertex window packed along a cell-start time axis; k = Re.
PdeInstance make_ns_spacetime_instance(Real re, Index res, Index frames,
                                       std::uint64_t seed, Real dt_out);

/// Fresh unlabeled inputs at a given scale parameter, for super-domain
/// sampling (defined for Darcy, Helmholtz and Burgers; the NS attractor
/// distribution is unknown).
PdeInstance sample_inputs(Equation eq, Real k, Index res, std::uint64_t seed);

}  // namespace scaleop

#pragma once

#include "scaleop/grid.hpp"
#include "scaleop/rng.hpp"

namespace scaleop {

/// Gaussian random field on the periodic unit square with coefficient
/// amplitude exp(-sigma * |xi|^(1/2)) at integer wavevector xi. sigma is the
/// inverse-scale wavelength parameter (sigma = 1/k).
struct GrfSpec {
  Real sigma = 1.0;
  Index resolution = 64;
  std::uint64_t seed = 0;

  void validate() const {
    require(sigma > 0.0, "grf: sigma must be > 0");
    require(resolution >= 2, "grf: resolution must be >= 2");
  }
};

/// Draw one mean-zero real GRF sample. Deterministic in spec.seed: modes are
/// drawn from a counter-based stream indexed by mode, Hermitian-symmetrized,
/// and inverse-transformed, so the sample's DFT reproduces the target
/// amplitudes exactly in expectation.
Field sample_grf(const GrfSpec& spec);

/// Two-phase medium: 2 + 10 * [ahat > 0], pointwise values in {2, 12}.
/// Ties at exactly zero map to 2 (strict inequality).
Field threshold_coefficient(const Field& ahat);

/// Smooth Dirichlet data: a 2D GRF sample wrapped onto the (res x res) vertex
/// grid of the unit square and restricted to the boundary. When `normalize`
/// is set the trace is scaled so its sup-norm is <= 1.
BoundaryTrace sample_gaussian_boundary(Real sigma, Index res, std::uint64_t seed,
                                       bool normalize = true);

}  // namespace scaleop

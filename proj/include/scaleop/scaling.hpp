#pragma once

#include "scaleop/solvers.hpp"

#include <array>

namespace scaleop {

/// Whether the crop acts on space only (time kept) or on the space-time block.
enum class ScaleVariant { Spatial, SpaceTime };

/// How a sub-domain crop of side fraction lambda transforms an instance.
/// Everything is stated in the zoom-in convention: lambda in (0,1] is the
/// sub-domain side fraction and the crop is rescaled back to unit size
/// (lambda > 1 describes super-domain sampling). The scale parameter maps as
/// k -> lambda^p k; auxiliary fields pick up lambda powers of their own.
struct ScaleLaw {
  Equation equation = Equation::Darcy;
  ScaleVariant variant = ScaleVariant::Spatial;
  int param_exponent = 1;     // k-hat = lambda^p k
  int forcing_exponent = 0;   // f-hat = lambda^q f   (Helmholtz: q = 2)
  int velocity_exponent = 0;  // u-hat = lambda^r u   (NS vorticity: r = -1)

  static ScaleLaw of(Equation eq, ScaleVariant variant);
};

/// k-hat = lambda^p k for the equation/variant. lambda <= 0 is a domain error;
/// lambda > 1 is the super-domain direction.
Real scale_param(Equation eq, ScaleVariant variant, Real k, Real lambda);

/// Helmholtz forcing under a fraction-lambda crop rescaled to unit size:
/// values multiplied by lambda^2.
Field scale_forcing_helmholtz(const Field& f, Real lambda);

/// NS velocity under a fraction-lambda spatial crop: components multiplied by
/// 1/lambda (the vorticity itself keeps its magnitude).
Field scale_velocity_ns(const Field& u, Real lambda);

// ---------------------------------------------------------------------------
// D4 symmetry transforms on square 2D instances (rotation plus reflection).
// ---------------------------------------------------------------------------

enum class D4 {
  Id,
  Rot90,
  Rot180,
  Rot270,
  FlipAxis0,  // reverse the first axis
  FlipAxis1,  // reverse the second axis
  Transpose,
  AntiTranspose,
};

constexpr std::array<D4, 8> kD4Elements = {
    D4::Id,       D4::Rot90,     D4::Rot180,   D4::Rot270,
    D4::FlipAxis0, D4::FlipAxis1, D4::Transpose, D4::AntiTranspose};

/// Apply a D4 element to every channel of a square 2D field.
template <class Scalar>
FieldT<Scalar> d4_transform(const FieldT<Scalar>& f, D4 g);

/// Rotate/reflect all fields and boundary traces of an instance coherently.
/// The scale parameter is unchanged. Only square, purely spatial 2D instances
/// are supported (shape error otherwise).
PdeInstance symmetry_transform(const PdeInstance& inst, D4 g);

extern template Field d4_transform<Real>(const Field&, D4);
extern template CField d4_transform<Complex>(const CField&, D4);

}  // namespace scaleop

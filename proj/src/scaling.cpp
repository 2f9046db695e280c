#include "scaleop/scaling.hpp"

namespace scaleop {

ScaleLaw ScaleLaw::of(Equation eq, ScaleVariant variant) {
  ScaleLaw law;
  law.equation = eq;
  law.variant = variant;
  switch (eq) {
    case Equation::Darcy:
      law.param_exponent = 1;  // scale label only; the PDE has no parameter
      break;
    case Equation::Helmholtz:
      law.param_exponent = 1;
      law.forcing_exponent = 2;
      break;
    case Equation::Burgers:
      // space-time crop with equal ratios; k = 1/nu, so nu-hat = nu/lambda
      law.param_exponent = 1;
      break;
    case Equation::NavierStokes:
      if (variant == ScaleVariant::Spatial) {
        // vorticity form, time kept: nu-hat = lambda^-2 nu
        law.param_exponent = 2;
        law.velocity_exponent = -1;
      } else {
        // space-time blocks (velocity form): Re-tilde = lambda Re
        law.param_exponent = 1;
      }
      break;
  }
  return law;
}

Real scale_param(Equation eq, ScaleVariant variant, Real k, Real lambda) {
  if (lambda <= 0.0) throw DomainError("scale_param: lambda must be > 0");
  const int p = ScaleLaw::of(eq, variant).param_exponent;
  Real out = k;
  for (int i = 0; i < p; ++i) out *= lambda;
  return out;
}

Field scale_forcing_helmholtz(const Field& f, Real lambda) {
  if (lambda <= 0.0)
    throw DomainError("scale_forcing_helmholtz: lambda must be > 0");
  Field out = f;
  out.values *= lambda * lambda;
  return out;
}

Field scale_velocity_ns(const Field& u, Real lambda) {
  if (lambda <= 0.0) throw DomainError("scale_velocity_ns: lambda must be > 0");
  Field out = u;
  out.values /= lambda;
  return out;
}

namespace {

void check_square_2d(const Domain& d, const char* who) {
  if (d.naxes() != 2 || d.has_time || d.axes[0].res != d.axes[1].res)
    throw ShapeError(std::string(who) + ": needs a square 2D spatial domain");
}

// Source index of output point (i, j) for group element g on an n x n grid.
std::pair<Index, Index> d4_source(D4 g, Index i, Index j, Index n) {
  const Index m = n - 1;
  switch (g) {
    case D4::Id: return {i, j};
    case D4::Rot90: return {j, m - i};
    case D4::Rot180: return {m - i, m - j};
    case D4::Rot270: return {m - j, i};
    case D4::FlipAxis0: return {m - i, j};
    case D4::FlipAxis1: return {i, m - j};
    case D4::Transpose: return {j, i};
    case D4::AntiTranspose: return {m - j, m - i};
  }
  return {i, j};
}

}  // namespace

template <class Scalar>
FieldT<Scalar> d4_transform(const FieldT<Scalar>& f, D4 g) {
  check_square_2d(f.domain, "d4_transform");
  const Index n = f.domain.axes[0].res;
  FieldT<Scalar> out(f.domain, f.channels());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      auto [si, sj] = d4_source(g, i, j, n);
      out.values.row(i * n + j) = f.values.row(si * n + sj);
    }
  return out;
}

PdeInstance symmetry_transform(const PdeInstance& inst, D4 g) {
  check_square_2d(inst.domain, "symmetry_transform");
  require(inst.equation == Equation::Darcy || inst.equation == Equation::Helmholtz,
          "symmetry_transform: supported for scalar 2D instances only");

  PdeInstance out = inst;
  if (inst.a) out.a = d4_transform(*inst.a, g);
  if (inst.f) out.f = d4_transform(*inst.f, g);
  if (inst.u) out.u = d4_transform(*inst.u, g);
  if (inst.uc) out.uc = d4_transform(*inst.uc, g);
  if (inst.history) out.history = d4_transform(*inst.history, g);

  // Traces are transported through a full-grid carrier so faces permute and
  // reverse coherently with the fields.
  if (inst.g) {
    Field carrier(inst.domain, inst.g->channels());
    apply_trace(carrier, *inst.g);
    out.g = boundary_trace(d4_transform(carrier, g));
  }
  if (inst.gc) {
    CField carrier(inst.domain, inst.gc->channels());
    apply_trace(carrier, *inst.gc);
    out.gc = boundary_trace(d4_transform(carrier, g));
  }
  return out;
}

template Field d4_transform<Real>(const Field&, D4);
template CField d4_transform<Complex>(const CField&, D4);

}  // namespace scaleop

#include "scaleop/scaling.hpp"

#include "scaleop/datagen.hpp"
#include "scaleop/randfield.hpp"
#include "scaleop/fft_utils.hpp"
#include "scaleop/rng.hpp"

#include <doctest.h>

using namespace scaleop;

TEST_CASE("scale_param: per-equation laws") {
  // Helmholtz: k-hat = lambda k
  CHECK(scale_param(Equation::Helmholtz, ScaleVariant::Spatial, 10.0, 0.5) ==
        doctest::Approx(5.0));
  // identity at lambda = 1
  for (Equation eq : {Equation::Darcy, Equation::Helmholtz, Equation::Burgers,
                      Equation::NavierStokes})
    CHECK(scale_param(eq, ScaleVariant::Spatial, 3.7, 1.0) == 3.7);
  // NS vorticity (spatial crop): Re-hat = lambda^2 Re
  CHECK(scale_param(Equation::NavierStokes, ScaleVariant::Spatial, 1000.0, 0.5) ==
        doctest::Approx(250.0));
  // NS space-time: Re-tilde = lambda Re
  CHECK(scale_param(Equation::NavierStokes, ScaleVariant::SpaceTime, 1000.0, 0.5) ==
        doctest::Approx(500.0));
  // Burgers: k = 1/nu scales linearly, so nu-hat = nu / lambda
  CHECK(scale_param(Equation::Burgers, ScaleVariant::SpaceTime, 100.0, 0.5) ==
        doctest::Approx(50.0));
  CHECK_THROWS_AS(scale_param(Equation::Darcy, ScaleVariant::Spatial, 1.0, 0.0),
                  DomainError);
  CHECK_THROWS_AS(scale_param(Equation::Darcy, ScaleVariant::Spatial, 1.0, -2.0),
                  DomainError);
}

TEST_CASE("scale_param composes multiplicatively") {
  Philox rng(5);
  for (Equation eq : {Equation::Darcy, Equation::Helmholtz, Equation::Burgers,
                      Equation::NavierStokes}) {
    for (ScaleVariant v : {ScaleVariant::Spatial, ScaleVariant::SpaceTime}) {
      for (int trial = 0; trial < 20; ++trial) {
        Real k = 0.1 + 10.0 * rng.uniform();
        Real l1 = 0.1 + rng.uniform();
        Real l2 = 0.1 + rng.uniform();
        Real two_step = scale_param(eq, v, scale_param(eq, v, k, l1), l2);
        Real one_step = scale_param(eq, v, k, l1 * l2);
        CHECK(two_step == doctest::Approx(one_step).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("helmholtz forcing rescale: lambda^2 and linear") {
  Domain d = Domain::unit_square(17);
  Field f(d, 1);
  f.values.setConstant(1.0);
  Field fh = scale_forcing_helmholtz(f, 0.5);
  CHECK((fh.values.array() == 0.25).all());

  Field f1 = scale_forcing_helmholtz(f, 1.0);
  CHECK((f1.values - f.values).cwiseAbs().maxCoeff() == 0.0);

  Philox rng(3);
  Field fr(d, 1);
  for (Index i = 0; i < d.npoints(); ++i) fr.values(i, 0) = rng.normal();
  Field lhs = scale_forcing_helmholtz(Field(d, MatrixX(3.0 * fr.values)), 0.7);
  Field rhs = scale_forcing_helmholtz(fr, 0.7);
  CHECK((lhs.values - 3.0 * rhs.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ns velocity rescale: 1/lambda on components") {
  Domain d = Domain::unit_torus(8);
  Field u(d, 2);
  u.values.col(0).setConstant(1.0);
  u.values.col(1).setConstant(0.0);
  Field s = scale_velocity_ns(u, 0.5);
  CHECK((s.values.col(0).array() == 2.0).all());
  CHECK((s.values.col(1).array() == 0.0).all());
  Field id = scale_velocity_ns(u, 1.0);
  CHECK((id.values - u.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ns velocity rescale commutes with the spectral curl") {
  // zeta(x) = omega(2x) on the torus: sample at doubled coordinates, scale
  // the velocity by 1/lambda with lambda = 2, and compare curls spectrally.
  // The field must be band-limited below n/4 so the 2x sampling is alias-free.
  const Index n = 64;
  Field w0 = sample_grf({1.5, n, 77});
  {
    VectorXc coef = fftops::fft_nd(VectorXc(w0.values.col(0).cast<Complex>()),
                                   {n, n}, false);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (std::abs(fftops::fft_freq(i, n)) >= n / 4 ||
            std::abs(fftops::fft_freq(j, n)) >= n / 4)
          coef[i * n + j] = 0.0;
    w0.values.col(0) = fftops::fft_nd(coef, {n, n}, true).real();
  }
  Field vel = velocity_from_vorticity(w0);
  Field omega = spectral_curl(vel);

  Field vel2(vel.domain, 2);
  Field omega2(omega.domain, 1);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Index src = ((2 * i) % n) * n + ((2 * j) % n);
      vel2.values.row(i * n + j) = vel.values.row(src);
      omega2.values(i * n + j, 0) = omega.values(src, 0);
    }
  Field scaled = scale_velocity_ns(vel2, 2.0);
  Field curl_scaled = spectral_curl(scaled);
  CHECK((curl_scaled.values - omega2.values).norm() / omega2.values.norm() <
        1e-10);
}

TEST_CASE("d4: identity and fourfold rotation") {
  PdeInstance inst = make_darcy_instance(4.0, 17, 900);
  PdeInstance id = symmetry_transform(inst, D4::Id);
  CHECK((id.a->values - inst.a->values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((id.u->values - inst.u->values).cwiseAbs().maxCoeff() == 0.0);

  PdeInstance r = inst;
  for (int i = 0; i < 4; ++i) r = symmetry_transform(r, D4::Rot90);
  CHECK((r.a->values - inst.a->values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.u->values - inst.u->values).cwiseAbs().maxCoeff() == 0.0);
  for (size_t f = 0; f < r.g->faces.size(); ++f)
    CHECK((r.g->face(inst.g->faces[f].axis, inst.g->faces[f].high).values -
           inst.g->faces[f].values)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  CHECK(r.k == inst.k);
}

TEST_CASE("d4: transforms preserve norms exactly") {
  PdeInstance inst = make_darcy_instance(4.0, 17, 901);
  for (D4 g : kD4Elements) {
    PdeInstance t = symmetry_transform(inst, g);
    CHECK(t.u->values.norm() == inst.u->values.norm());
    CHECK(t.a->values.norm() == inst.a->values.norm());
  }
}

TEST_CASE("d4: darcy solver is equivariant under the group") {
  PdeInstance inst = make_darcy_instance(4.0, 33, 902);
  for (D4 g : {D4::Rot90, D4::FlipAxis0, D4::Transpose}) {
    PdeInstance t = symmetry_transform(inst, g);
    Field solved = darcy_solve(*t.a, *t.g);
    Field rotated = d4_transform(*inst.u, g);
    CHECK((solved.values - rotated.values).norm() / rotated.values.norm() <
          1e-9);
  }
}

TEST_CASE("d4: non-square domains are rejected") {
  PdeInstance inst;
  inst.equation = Equation::Darcy;
  inst.domain = Domain({Axis{0, 1, 17, false, false}, Axis{0, 1, 33, false, false}}, 2);
  Field a(inst.domain, 1);
  a.values.setConstant(1.0);
  inst.a = a;
  Field carrier(inst.domain, 1);
  inst.g = boundary_trace(carrier);
  CHECK_THROWS_AS(symmetry_transform(inst, D4::Rot90), ShapeError);
}

#include "scaleop/datagen.hpp"

#include "scaleop/randfield.hpp"
#include "scaleop/rng.hpp"

namespace scaleop {

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t purpose) {
  return Philox(seed, purpose).at(0);
}

// Smooth periodic profile: one row of a 2D GRF, normalized to sup-norm 1.
VectorX grf_profile(Real sigma, Index n, std::uint64_t seed) {
  Field g2 = sample_grf({sigma, n, seed});
  VectorX row(n);
  for (Index j = 0; j < n; ++j) row[j] = g2.at({0, j});
  Real sup = row.cwiseAbs().maxCoeff();
  if (sup > 0.0) row /= sup;
  return row;
}

Field vorticity_ic(Index res, std::uint64_t seed) {
  Field w0 = sample_grf({1.0, res, seed});
  Field vel = velocity_from_vorticity(w0);
  Real umax = vel.values.cwiseAbs().maxCoeff();
  if (umax > 0.0) w0.values /= umax;  // unit peak speed
  return w0;
}

Domain half_window(Index res) {
  // [0, 1/2]^2 vertex window of an res x res torus
  const Real h = 1.0 / static_cast<Real>(res);
  const Index m = res / 2;
  Axis ax{0.0, 0.5, m + 1, false, false};
  (void)h;
  return Domain({ax, ax}, 2);
}

}  // namespace

PdeInstance make_darcy_instance(Real scale, Index res, std::uint64_t seed,
                                bool solve) {
  require(scale > 0.0, "make_darcy_instance: scale must be > 0");
  const Real sigma = 4.0 / scale;
  Domain vertex = Domain::unit_square(res);

  Field ahat = sample_grf({sigma, res - 1, derive(seed, 0)});
  Field a = restrict_field(threshold_coefficient(ahat), vertex);
  BoundaryTrace g = sample_gaussian_boundary(1.0, res, derive(seed, 1));

  PdeInstance inst;
  inst.equation = Equation::Darcy;
  inst.domain = vertex;
  inst.a = std::move(a);
  inst.g = std::move(g);
  inst.k = scale;
  if (solve) inst.u = darcy_solve(*inst.a, *inst.g);
  inst.validate();
  return inst;
}

PdeInstance make_helmholtz_instance(Real k, Index res, std::uint64_t seed,
                                    bool solve) {
  Domain vertex = Domain::unit_square(res);

  Field ahat = restrict_field(sample_grf({1.0, res - 1, derive(seed, 0)}), vertex);
  Real rms = std::sqrt(ahat.values.squaredNorm() / static_cast<Real>(ahat.npoints()));
  Field a(vertex, 1);
  a.values = (0.5 * ahat.values / std::max(rms, 1e-12)).array().exp();

  Field f(vertex, 1);
  f.values.setConstant(1.0);
  BoundaryTrace g = sample_gaussian_boundary(1.0, res, derive(seed, 1));

  PdeInstance inst;
  inst.equation = Equation::Helmholtz;
  inst.domain = vertex;
  inst.a = std::move(a);
  inst.f = std::move(f);
  inst.g = g;
  inst.gc = to_complex(g);
  inst.k = k;
  if (solve) inst.uc = helmholtz_solve(*inst.a, k, *inst.f, *inst.gc);
  inst.validate();
  return inst;
}

PdeInstance make_burgers_instance(Real nu, Index nx, Index nt,
                                  std::uint64_t seed) {
  require(nu > 0.0, "make_burgers_instance: nu must be > 0");
  VectorX u0 = grf_profile(1.0, nx, derive(seed, 0));
  Field periodic = burgers_solve_periodic(u0, nu, 1.0, nt);

  // Wrap onto the vertex grid so x = 1 duplicates x = 0.
  Domain vertex(
      {Axis{0.0, 1.0, nx + 1, false, false}, periodic.domain.axes[1]}, 1, true);
  Field u = restrict_field(periodic, vertex);

  PdeInstance inst;
  inst.equation = Equation::Burgers;
  inst.domain = vertex;
  inst.u = u;
  inst.g = boundary_trace(u);
  inst.k = 1.0 / nu;
  inst.validate();
  return inst;
}

PdeInstance make_ns_instance(Real re, Index res, Index history_frames,
                             std::uint64_t seed, Real dt_out) {
  require(re > 0.0, "make_ns_instance: Re must be > 0");
  require(history_frames >= 1, "make_ns_instance: needs at least one frame");
  Field w0 = vorticity_ic(res, derive(seed, 0));
  const Real T = dt_out * static_cast<Real>(history_frames);
  auto frames = ns_solve(w0, 1.0 / re, T, dt_out);

  Domain window = half_window(res);
  PdeInstance inst;
  inst.equation = Equation::NavierStokes;
  inst.domain = window;
  Field hist(window, history_frames);
  for (Index t = 0; t < history_frames; ++t)
    hist.values.col(t) = restrict_field(frames[t], window).values.col(0);
  inst.history = std::move(hist);
  inst.u = restrict_field(frames[history_frames], window);
  inst.k = re;
  inst.validate();
  return inst;
}

PdeInstance make_ns_spacetime_instance(Real re, Index res, Index frames_n,
                                       std::uint64_t seed, Real dt_out) {
  require(frames_n >= 2 && frames_n % 2 == 0,
          "make_ns_spacetime_instance: frame count must be even");
  Field w0 = vorticity_ic(res, derive(seed, 0));
  const Real T = dt_out * static_cast<Real>(frames_n - 1);
  auto frames = ns_solve(w0, 1.0 / re, T, dt_out);

  Domain window = half_window(res);
  std::vector<Field> cropped;
  cropped.reserve(frames_n);
  for (Index t = 0; t < frames_n; ++t)
    cropped.push_back(restrict_field(frames[t], window));

  PdeInstance inst;
  inst.equation = Equation::NavierStokes;
  inst.u = pack_frames(cropped, dt_out);
  inst.domain = inst.u->domain;
  inst.k = re;
  inst.validate();
  return inst;
}

PdeInstance sample_inputs(Equation eq, Real k, Index res, std::uint64_t seed) {
  switch (eq) {
    case Equation::Darcy: return make_darcy_instance(k, res, seed, false);
    case Equation::Helmholtz: return make_helmholtz_instance(k, res, seed, false);
    case Equation::Burgers: {
      // inputs only: the labeler supplies the space-time solution estimate
      PdeInstance inst = make_burgers_instance(1.0 / k, res - 1, res / 2, seed);
      inst.u.reset();
      return inst;
    }
    case Equation::NavierStokes:
      throw DomainError(
          "sample_inputs: the NS input distribution is unknown "
          "(super-domain sampling unsupported)");
  }
  throw DomainError("sample_inputs: bad equation");
}

}  // namespace scaleop

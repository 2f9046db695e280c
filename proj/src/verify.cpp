#include "scaleop/verify.hpp"

#include "scaleop/datagen.hpp"
#include "scaleop/fft_utils.hpp"
#include "scaleop/randfield.hpp"
#include "scaleop/training.hpp"

namespace scaleop {

namespace {

Real discrete_l2(const MatrixX& v) {
  return std::sqrt(v.squaredNorm() / static_cast<Real>(v.rows()));
}

// Band-limited vorticity sample so that the twice-frequency companion is
// resolvable on the same grid.
Field bandlimited_w0(Index res, Index max_mode, std::uint64_t seed) {
  Field w = sample_grf({1.0, res, seed});
  VectorXc coef = fftops::fft_nd(VectorXc(w.values.col(0).cast<Complex>()),
                                 {res, res}, false);
  for (Index i = 0; i < res; ++i)
    for (Index j = 0; j < res; ++j)
      if (std::abs(fftops::fft_freq(i, res)) > max_mode ||
          std::abs(fftops::fft_freq(j, res)) > max_mode)
        coef[i * res + j] = 0.0;
  w.values.col(0) = fftops::fft_nd(coef, {res, res}, true).real();
  Field vel = velocity_from_vorticity(w);
  const Real umax = vel.values.cwiseAbs().maxCoeff();
  if (umax > 0.0) w.values /= umax;
  return w;
}

Real ns_zoom_check(Index res, Real re, std::uint64_t seed) {
  const Real nu = 1.0 / re;
  Field w0 = bandlimited_w0(res, 8, seed);
  Field z0(w0.domain, 1);
  for (Index i = 0; i < res; ++i)
    for (Index j = 0; j < res; ++j)
      z0.at({i, j}) = w0.at({(2 * i) % res, (2 * j) % res});

  auto w_frames = ns_solve(w0, nu, 1.0, 0.5);
  auto z_frames = ns_solve(z0, nu / 4.0, 1.0, 0.5);

  const Field& w_end = w_frames.back();
  const Field& z_end = z_frames.back();
  MatrixX expect(res * res, 1);
  for (Index i = 0; i < res; ++i)
    for (Index j = 0; j < res; ++j)
      expect(i * res + j, 0) = w_end.values(((2 * i) % res) * res + (2 * j) % res, 0);
  return (z_end.values - expect).norm() / expect.norm();
}

}  // namespace

nlohmann::json ConsistencyReport::to_json() const {
  return {{"equation", equation_name(equation)},
          {"lambda", lambda},
          {"resolution", resolution},
          {"trials", trials},
          {"mean_rel_l2", mean_rel_l2},
          {"max_rel_l2", max_rel_l2}};
}

ConsistencyReport check_solver_consistency(Equation eq, Real lambda, Index res,
                                           Index trials, Real k,
                                           std::uint64_t seed) {
  require(trials >= 1, "check_solver_consistency: trials must be >= 1");
  ConsistencyReport report;
  report.equation = eq;
  report.lambda = lambda;
  report.resolution = res;
  report.trials = trials;

  Philox rng(seed, 0xC0DE);
  Real sum = 0.0, worst = 0.0;
  for (Index t = 0; t < trials; ++t) {
    const std::uint64_t iseed = Philox(seed, t).at(0);
    Real rel = 0.0;
    switch (eq) {
      case Equation::Darcy: {
        PdeInstance inst = make_darcy_instance(k, res, iseed);
        CropSpec spec = random_crop(inst, lambda, 16, rng);
        PdeInstance crop = subdomain_sample(inst, spec);
        Field resolved = darcy_solve(*crop.a, *crop.g);
        rel = rel_l2(resolved, *crop.u);
        break;
      }
      case Equation::Helmholtz: {
        PdeInstance inst = make_helmholtz_instance(k, res, iseed);
        CropSpec spec = random_crop(inst, lambda, 16, rng);
        PdeInstance crop = subdomain_sample(inst, spec);
        CField resolved = helmholtz_solve(*crop.a, crop.k, *crop.f, *crop.gc);
        rel = rel_l2(resolved, *crop.uc);
        break;
      }
      case Equation::Burgers: {
        const Real nu = 1.0 / k;
        const Index nx = res;       // periodic cells
        const Index nt = res / 2;   // frames
        PdeInstance inst = make_burgers_instance(nu, nx, nt, iseed);
        CropSpec spec;
        spec.lambda = lambda;
        spec.min_resolution = 16;
        // random anchor in space, time anchored at zero
        Index xcells = 0;
        snapped_fraction(inst.domain.axes[0], lambda, 16, &xcells);
        spec.anchor = {static_cast<Index>(rng.uniform_int(nx - xcells + 1)), 0};
        PdeInstance crop = subdomain_sample(inst, spec);

        const Index cnx = crop.domain.axes[0].res;
        const Index cnt = crop.domain.axes[1].res;
        VectorX u0(cnx);
        for (Index i = 0; i < cnx; ++i) u0[i] = crop.u->at({i, 0});
        MatrixX g_time(cnt, 2);
        for (Index j = 0; j < cnt; ++j) {
          g_time(j, 0) = crop.u->at({0, j});
          g_time(j, 1) = crop.u->at({cnx - 1, j});
        }
        Field resolved = burgers_solve(u0, g_time, 1.0 / crop.k,
                                       crop.domain.axes[1].extent, cnt);
        rel = rel_l2(resolved, *crop.u);
        break;
      }
      case Equation::NavierStokes: {
        rel = ns_zoom_check(res, k, iseed);
        break;
      }
    }
    sum += rel;
    worst = std::max(worst, rel);
  }
  report.mean_rel_l2 = sum / static_cast<Real>(trials);
  report.max_rel_l2 = worst;
  return report;
}

nlohmann::json DiagnosticsReport::to_json() const {
  return {{"err_near_constant", err_near_constant},
          {"err_boundary", err_boundary},
          {"err_selfcon", err_selfcon},
          {"trials", trials}};
}

Operator exact_darcy_operator() {
  return [](const PdeInstance& inst) { return darcy_solve(*inst.a, *inst.g); };
}

Operator model_operator(const SinoModel& model) {
  return [&model](const PdeInstance& inst) {
    MatrixX pred = sino_eval(model, inst);
    Field out(inst.domain, 1);
    out.values.col(0) = pred.col(0);
    return out;
  };
}

DiagnosticsReport appendix_diagnostics(const Operator& psi, Real lambda,
                                       Index res, Index trials,
                                       std::uint64_t seed) {
  DiagnosticsReport report;
  report.trials = trials;
  Philox rng(seed, 0xD1A6);

  for (Index t = 0; t < trials; ++t) {
    const std::uint64_t iseed = Philox(seed, 0x1000 + t).at(0);

    // near-constant coefficients: a = 3 (1 + delta ahat), ||g||_sup <= 1
    Domain d = Domain::unit_square(res);
    Field ahat = restrict_field(sample_grf({1.0, res - 1, iseed}), d);
    const Real amax = ahat.values.cwiseAbs().maxCoeff();
    Field a(d, 1);
    a.values = 3.0 * (1.0 + 0.05 * ahat.values.array() / std::max(amax, 1e-12));
    PdeInstance inst;
    inst.equation = Equation::Darcy;
    inst.domain = d;
    inst.a = a;
    inst.g = sample_gaussian_boundary(1.0, res, iseed + 1);
    inst.k = 4.0;

    Field pred = psi(inst);
    Field reference = darcy_solve(*inst.a, *inst.g);
    report.err_near_constant = std::max(
        report.err_near_constant, discrete_l2(pred.values - reference.values));

    // boundary condition error
    BoundaryTrace ptrace = boundary_trace(pred);
    Real bsum = 0.0;
    Index bcount = 0;
    for (const auto& face : ptrace.faces) {
      bsum += (face.values - inst.g->face(face.axis, face.high).values)
                  .squaredNorm();
      bcount += face.values.rows();
    }
    report.err_boundary = std::max(
        report.err_boundary, std::sqrt(bsum / static_cast<Real>(bcount)));

    // self-consistency: crop the prediction, re-apply Psi with the crop's own
    // boundary taken from the prediction
    PdeInstance labeled = inst;
    labeled.u = pred;
    CropSpec spec = random_crop(labeled, lambda, 16, rng);
    PdeInstance crop = subdomain_sample(labeled, spec);
    Field crop_pred = psi(crop);
    report.err_selfcon = std::max(
        report.err_selfcon, discrete_l2(crop_pred.values - crop.u->values));
  }
  return report;
}

}  // namespace scaleop

#include "scaleop/solvers.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace scaleop {

namespace {

using SpMat = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

constexpr Real kCfl = 0.4;

// Central conservative flux divergence d/dx (u^2/2).
void flux_div(const VectorX& u, Real inv2h, VectorX& out, bool periodic) {
  const Index n = u.size();
  auto F = [&](Index i) { return 0.5 * u[i] * u[i]; };
  if (periodic) {
    for (Index i = 0; i < n; ++i)
      out[i] = (F((i + 1) % n) - F((i + n - 1) % n)) * inv2h;
  } else {
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for (Index i = 1; i + 1 < n; ++i) out[i] = (F(i + 1) - F(i - 1)) * inv2h;
  }
}

void second_diff(const VectorX& u, Real invh2, VectorX& out, bool periodic) {
  const Index n = u.size();
  if (periodic) {
    for (Index i = 0; i < n; ++i)
      out[i] = (u[(i + 1) % n] - 2.0 * u[i] + u[(i + n - 1) % n]) * invh2;
  } else {
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for (Index i = 1; i + 1 < n; ++i)
      out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invh2;
  }
}

// Factorized Crank-Nicolson diffusion matrix I - (nu dt/2) D2 (coef = nu dt/(2 h^2)).
struct CnSolver {
  Eigen::SparseLU<SpMat> lu;
  Real coef;

  CnSolver(Index n, Real coef_, bool periodic) : coef(coef_) {
    std::vector<Triplet> trip;
    for (Index i = 0; i < n; ++i) {
      trip.emplace_back(i, i, 1.0 + 2.0 * coef);
      if (periodic) {
        trip.emplace_back(i, (i + 1) % n, -coef);
        trip.emplace_back(i, (i + n - 1) % n, -coef);
      } else {
        if (i > 0) trip.emplace_back(i, i - 1, -coef);
        if (i + 1 < n) trip.emplace_back(i, i + 1, -coef);
      }
    }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw SolverError("burgers: diffusion matrix factorization failed");
  }
};

void check_cfl(const VectorX& u, Real dt, Real h) {
  const Real umax = u.cwiseAbs().maxCoeff();
  if (dt * umax / h > kCfl * 1.25)
    throw SolverError("burgers: CFL violated during time stepping");
}

Index substeps_for(Real dt_out, Real umax, Real h) {
  return std::max<Index>(
      1, static_cast<Index>(
             std::ceil(dt_out * std::max(umax, 1e-12) * 1.25 / (kCfl * h))));
}

}  // namespace

Field burgers_solve(const VectorX& u0, const MatrixX& g_time, Real nu, Real T,
                    Index nt) {
  const Index nx = u0.size();
  require(nx >= 3, "burgers_solve: need at least 3 spatial points");
  require(nt >= 2, "burgers_solve: need at least 2 frames");
  require(g_time.rows() == nt && g_time.cols() == 2,
          "burgers_solve: g_time must be nt x 2 (left,right end values)");
  require(nu > 0.0 && T > 0.0, "burgers_solve: nu and T must be positive");

  const Real h = 1.0 / static_cast<Real>(nx - 1);
  const Real dt_out = T / static_cast<Real>(nt);

  // Viscous Burgers obeys a maximum principle, so the data bounds the speed.
  const Real umax =
      std::max(u0.cwiseAbs().maxCoeff(), g_time.cwiseAbs().maxCoeff());
  const Index sub = substeps_for(dt_out, umax, h);
  const Real dt = dt_out / static_cast<Real>(sub);

  CnSolver full(nx - 2, nu * dt / (2.0 * h * h), false);
  CnSolver half(nx - 2, nu * dt / (4.0 * h * h), false);

  // End values linearly interpolated between output frames.
  auto g_at = [&](Real t, int side) {
    Real s = t / dt_out;
    Index j0 = std::min<Index>(static_cast<Index>(std::floor(s)), nt - 1);
    Index j1 = std::min<Index>(j0 + 1, nt - 1);
    Real w = s - static_cast<Real>(j0);
    return (1.0 - w) * g_time(j0, side) + w * g_time(j1, side);
  };

  Domain dom({Axis{0.0, 1.0, nx, false, false}, Axis{0.0, T, nt, false, true}},
             1, true);
  Field out(dom, 1);
  auto store_frame = [&](Index frame, const VectorX& state) {
    for (Index i = 0; i < nx; ++i) out.values(i * nt + frame, 0) = state[i];
  };

  VectorX u = u0;
  u[0] = g_time(0, 0);
  u[nx - 1] = g_time(0, 1);
  store_frame(0, u);

  VectorX diff(nx), rhs(nx - 2);
  const Real inv2h = 1.0 / (2.0 * h);
  const Real invh2 = 1.0 / (h * h);

  // Crank-Nicolson diffusion step with explicit convection source
  // c(x) = w_cur * cur + w_prev * prev.
  auto cn_step = [&](VectorX& state, Real t_new, Real step_dt,
                     const VectorX& cur, Real w_cur, const VectorX* prev,
                     Real w_prev, CnSolver& solver) {
    second_diff(state, invh2, diff, false);
    const Real gl = g_at(t_new, 0);
    const Real gr = g_at(t_new, 1);
    for (Index i = 1; i + 1 < nx; ++i) {
      Real c = w_cur * cur[i] + (prev ? w_prev * (*prev)[i] : 0.0);
      rhs[i - 1] = state[i] - step_dt * c + 0.5 * nu * step_dt * diff[i];
    }
    rhs[0] += solver.coef * gl;
    rhs[nx - 3] += solver.coef * gr;
    VectorX sol = solver.lu.solve(rhs);
    if (solver.lu.info() != Eigen::Success)
      throw SolverError("burgers: implicit diffusion solve failed");
    for (Index i = 1; i + 1 < nx; ++i) state[i] = sol[i - 1];
    state[0] = gl;
    state[nx - 1] = gr;
  };

  VectorX conv_prev(nx), conv(nx), conv_mid(nx);
  flux_div(u, inv2h, conv_prev, false);  // flux at t = 0

  Real t = 0.0;
  bool primed = false;
  for (Index frame = 1; frame < nt; ++frame) {
    for (Index s = 0; s < sub; ++s) {
      check_cfl(u, dt, h);
      if (!primed) {
        // Two explicit Euler half-steps; conv_prev keeps the flux at t=0 so
        // the first Adams-Bashforth step sees a history spaced by dt.
        cn_step(u, t + dt / 2.0, dt / 2.0, conv_prev, 1.0, nullptr, 0.0, half);
        flux_div(u, inv2h, conv_mid, false);
        cn_step(u, t + dt, dt / 2.0, conv_mid, 1.0, nullptr, 0.0, half);
        primed = true;
      } else {
        flux_div(u, inv2h, conv, false);
        cn_step(u, t + dt, dt, conv, 1.5, &conv_prev, -0.5, full);
        std::swap(conv_prev, conv);
      }
      t += dt;
    }
    if (!u.allFinite()) throw SolverError("burgers: solution blew up");
    store_frame(frame, u);
  }
  return out;
}

Field burgers_solve_periodic(const VectorX& u0, Real nu, Real T, Index nt) {
  const Index nx = u0.size();
  require(nx >= 3, "burgers_solve_periodic: need at least 3 spatial points");
  require(nt >= 2, "burgers_solve_periodic: need at least 2 frames");
  require(nu > 0.0 && T > 0.0, "burgers_solve_periodic: nu, T must be positive");

  const Real h = 1.0 / static_cast<Real>(nx);
  const Real dt_out = T / static_cast<Real>(nt);
  const Index sub = substeps_for(dt_out, u0.cwiseAbs().maxCoeff(), h);
  const Real dt = dt_out / static_cast<Real>(sub);

  CnSolver full(nx, nu * dt / (2.0 * h * h), true);
  CnSolver half(nx, nu * dt / (4.0 * h * h), true);

  Domain dom({Axis{0.0, 1.0, nx, true, true}, Axis{0.0, T, nt, false, true}},
             1, true);
  Field out(dom, 1);
  auto store_frame = [&](Index frame, const VectorX& state) {
    for (Index i = 0; i < nx; ++i) out.values(i * nt + frame, 0) = state[i];
  };

  VectorX u = u0;
  store_frame(0, u);

  VectorX diff(nx), rhs(nx);
  const Real inv2h = 1.0 / (2.0 * h);
  const Real invh2 = 1.0 / (h * h);

  auto cn_step = [&](VectorX& state, Real step_dt, const VectorX& cur,
                     Real w_cur, const VectorX* prev, Real w_prev,
                     CnSolver& solver) {
    second_diff(state, invh2, diff, true);
    for (Index i = 0; i < nx; ++i) {
      Real c = w_cur * cur[i] + (prev ? w_prev * (*prev)[i] : 0.0);
      rhs[i] = state[i] - step_dt * c + 0.5 * nu * step_dt * diff[i];
    }
    state = solver.lu.solve(rhs);
    if (solver.lu.info() != Eigen::Success)
      throw SolverError("burgers: implicit diffusion solve failed");
  };

  VectorX conv_prev(nx), conv(nx), conv_mid(nx);
  flux_div(u, inv2h, conv_prev, true);

  bool primed = false;
  for (Index frame = 1; frame < nt; ++frame) {
    for (Index s = 0; s < sub; ++s) {
      check_cfl(u, dt, h);
      if (!primed) {
        cn_step(u, dt / 2.0, conv_prev, 1.0, nullptr, 0.0, half);
        flux_div(u, inv2h, conv_mid, true);
        cn_step(u, dt / 2.0, conv_mid, 1.0, nullptr, 0.0, half);
        primed = true;
      } else {
        flux_div(u, inv2h, conv, true);
        cn_step(u, dt, conv, 1.5, &conv_prev, -0.5, full);
        std::swap(conv_prev, conv);
      }
    }
    if (!u.allFinite()) throw SolverError("burgers: solution blew up");
    store_frame(frame, u);
  }
  return out;
}

}  // namespace scaleop

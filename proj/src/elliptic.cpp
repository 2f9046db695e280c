#include "scaleop/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace scaleop {

namespace {

using SpMat = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

Real harmonic(Real a, Real b) { return 2.0 * a * b / (a + b); }

struct EllipticSystem {
  SpMat A;                      // interior x interior
  std::vector<Index> interior;  // flat indices of interior points
  std::vector<Index> to_row;    // flat index -> interior row (-1 on boundary)
  Index n0 = 0, n1 = 0;
  Real inv_h0sq = 0.0, inv_h1sq = 0.0;
};

void check_square_vertex_2d(const Domain& d, const char* who) {
  require(d.naxes() == 2 && !d.has_time, std::string(who) + ": expects a 2D spatial domain");
  for (const Axis& a : d.axes)
    require(!a.periodic && !a.cell_start,
            std::string(who) + ": expects a vertex-sampled Dirichlet grid");
}

// Assemble  -div(a grad u) + sign_k2 * k^2 u  on interior points, with
// harmonic means of `a` at cell faces.
EllipticSystem assemble(const Field& a, Real k2_signed) {
  const Domain& d = a.domain;
  const Index n0 = d.axes[0].res;
  const Index n1 = d.axes[1].res;
  EllipticSystem sys;
  sys.n0 = n0;
  sys.n1 = n1;
  sys.inv_h0sq = 1.0 / (d.axes[0].spacing() * d.axes[0].spacing());
  sys.inv_h1sq = 1.0 / (d.axes[1].spacing() * d.axes[1].spacing());

  sys.to_row.assign(d.npoints(), -1);
  for (Index i = 1; i + 1 < n0; ++i)
    for (Index j = 1; j + 1 < n1; ++j) {
      sys.to_row[i * n1 + j] = static_cast<Index>(sys.interior.size());
      sys.interior.push_back(i * n1 + j);
    }

  const auto av = [&](Index i, Index j) { return a.values(i * n1 + j, 0); };

  std::vector<Triplet> trip;
  trip.reserve(sys.interior.size() * 5);
  for (size_t r = 0; r < sys.interior.size(); ++r) {
    const Index flat = sys.interior[r];
    const Index i = flat / n1;
    const Index j = flat % n1;
    const Real w0m = harmonic(av(i, j), av(i - 1, j)) * sys.inv_h0sq;
    const Real w0p = harmonic(av(i, j), av(i + 1, j)) * sys.inv_h0sq;
    const Real w1m = harmonic(av(i, j), av(i, j - 1)) * sys.inv_h1sq;
    const Real w1p = harmonic(av(i, j), av(i, j + 1)) * sys.inv_h1sq;
    trip.emplace_back(r, r, w0m + w0p + w1m + w1p + k2_signed);
    auto couple = [&](Index ni, Index nj, Real w) {
      Index row = sys.to_row[ni * n1 + nj];
      if (row >= 0) trip.emplace_back(r, row, -w);
    };
    couple(i - 1, j, w0m);
    couple(i + 1, j, w0p);
    couple(i, j - 1, w1m);
    couple(i, j + 1, w1p);
  }
  sys.A.resize(static_cast<Index>(sys.interior.size()),
               static_cast<Index>(sys.interior.size()));
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

// Dirichlet contribution of boundary values plus the forcing term.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> build_rhs(
    const EllipticSystem& sys, const Field& a,
    const FieldT<Scalar>& with_boundary, const Field* forcing, Index fch) {
  const Index n1 = sys.n1;
  const auto av = [&](Index i, Index j) { return a.values(i * n1 + j, 0); };
  const auto bv = [&](Index i, Index j) {
    return with_boundary.values(i * n1 + j, 0);
  };
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(sys.interior.size());
  for (size_t r = 0; r < sys.interior.size(); ++r) {
    const Index flat = sys.interior[r];
    const Index i = flat / n1;
    const Index j = flat % n1;
    Scalar v = forcing ? Scalar(forcing->values(flat, fch)) : Scalar(0);
    if (sys.to_row[(i - 1) * n1 + j] < 0)
      v += harmonic(av(i, j), av(i - 1, j)) * sys.inv_h0sq * bv(i - 1, j);
    if (sys.to_row[(i + 1) * n1 + j] < 0)
      v += harmonic(av(i, j), av(i + 1, j)) * sys.inv_h0sq * bv(i + 1, j);
    if (sys.to_row[i * n1 + j - 1] < 0)
      v += harmonic(av(i, j), av(i, j - 1)) * sys.inv_h1sq * bv(i, j - 1);
    if (sys.to_row[i * n1 + j + 1] < 0)
      v += harmonic(av(i, j), av(i, j + 1)) * sys.inv_h1sq * bv(i, j + 1);
    rhs[r] = v;
  }
  return rhs;
}

VectorX solve_direct(const SpMat& A, const VectorX& b) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SolverError("elliptic: near-singular discrete operator (LU failed)");
  VectorX x = lu.solve(b);
  if (lu.info() != Eigen::Success)
    throw SolverError("elliptic: direct solve failed");
  return x;
}

VectorX solve_linear(const SpMat& A, const VectorX& b, bool spd,
                     const EllipticOptions& opt, Index max_res) {
  if (b.size() == 0) return VectorX();
  const Real bnorm = b.norm();
  if (bnorm == 0.0) return VectorX::Zero(b.size());

  VectorX x;
  bool solved = false;
  const bool direct = opt.force_direct || max_res < 64;
  if (!direct) {
    const Index cap = opt.iter_per_n * max_res;
    if (spd) {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                               Eigen::DiagonalPreconditioner<Real>>
          cg(A);
      cg.setTolerance(opt.tol);
      cg.setMaxIterations(cap);
      x = cg.solve(b);
      if (cg.info() != Eigen::Success)
        throw SolverError("elliptic: conjugate gradient hit the iteration limit");
      solved = true;
    } else {
      Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<Real>> bicg(A);
      bicg.setTolerance(opt.tol);
      bicg.setMaxIterations(cap);
      x = bicg.solve(b);
      // Indefinite systems can stall BiCGSTAB; fall back to a direct solve.
      solved = (bicg.info() == Eigen::Success) &&
               (A * x - b).norm() <= 1e-10 * bnorm;
    }
  }
  if (!solved) x = solve_direct(A, b);
  if ((A * x - b).norm() > 1e-10 * bnorm)
    throw SolverError("elliptic: residual above tolerance after solve");
  return x;
}

template <class Scalar>
void scatter(FieldT<Scalar>& out,
             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
             const EllipticSystem& sys, Index ch) {
  for (size_t r = 0; r < sys.interior.size(); ++r)
    out.values(sys.interior[r], ch) = x[r];
}

}  // namespace

Field darcy_solve(const Field& a, const BoundaryTrace& g, const Field* forcing,
                  const EllipticOptions& opt) {
  check_square_vertex_2d(a.domain, "darcy_solve");
  require(a.channels() == 1, "darcy_solve: coefficient must be one channel");
  if (a.values.minCoeff() <= 0.0)
    throw DomainError("darcy_solve: coefficient must be coercive (a > 0)");
  require(a.domain.same_shape(g.domain), "darcy_solve: trace shape mismatch");
  if (forcing)
    require(forcing->domain.same_shape(a.domain), "darcy_solve: forcing shape");

  EllipticSystem sys = assemble(a, 0.0);
  Field out(a.domain, 1);
  apply_trace(out, g);
  VectorX rhs = build_rhs<Real>(sys, a, out, forcing, 0);
  const Index max_res = std::max(sys.n0, sys.n1);
  VectorX x = solve_linear(sys.A, rhs, /*spd=*/true, opt, max_res);
  scatter(out, x, sys, 0);
  return out;
}

CField helmholtz_solve(const Field& a, Real k, const Field& f,
                       const CBoundaryTrace& g, HelmholtzSign sign,
                       const EllipticOptions& opt) {
  check_square_vertex_2d(a.domain, "helmholtz_solve");
  require(a.channels() == 1, "helmholtz_solve: coefficient must be one channel");
  if (a.values.minCoeff() <= 0.0)
    throw DomainError("helmholtz_solve: coefficient must be coercive (a > 0)");
  require(f.domain.same_shape(a.domain), "helmholtz_solve: forcing shape");
  require(k >= 0.0, "helmholtz_solve: wavenumber must be >= 0");

  if (opt.check_resolution) {
    for (const Axis& ax : a.domain.axes) {
      const Real points_per_unit = static_cast<Real>(ax.res - 1) / ax.extent;
      if (points_per_unit < 8.0 * k / (2.0 * M_PI))
        throw SolverError(
            "helmholtz_solve: grid does not resolve the wavelength "
            "(needs at least 8 points per wavelength)");
    }
  }

  const Real k2 = (sign == HelmholtzSign::MinusK2) ? -k * k : k * k;
  EllipticSystem sys = assemble(a, k2);
  CField out(a.domain, 1);
  apply_trace(out, g);

  // Real operator: solve the real and imaginary parts separately.
  Field re(a.domain, 1), im(a.domain, 1);
  re.values = out.values.real();
  im.values = out.values.imag();
  const Index max_res = std::max(sys.n0, sys.n1);

  VectorX rhs_re = build_rhs<Real>(sys, a, re, &f, 0);
  VectorX x_re = solve_linear(sys.A, rhs_re, /*spd=*/false, opt, max_res);
  VectorX rhs_im = build_rhs<Real>(sys, a, im, nullptr, 0);
  VectorX x_im = solve_linear(sys.A, rhs_im, /*spd=*/false, opt, max_res);

  for (size_t r = 0; r < sys.interior.size(); ++r)
    out.values(sys.interior[r], 0) = Complex(x_re[r], x_im[r]);
  return out;
}

CBoundaryTrace to_complex(const BoundaryTrace& g) {
  CBoundaryTrace out;
  out.domain = g.domain;
  for (const auto& f : g.faces) {
    FaceT<Complex> cf;
    cf.axis = f.axis;
    cf.high = f.high;
    cf.values = f.values.cast<Complex>();
    out.faces.push_back(std::move(cf));
  }
  return out;
}

CField to_complex(const Field& f) {
  CField out(f.domain, f.channels());
  out.values = f.values.cast<Complex>();
  return out;
}

std::string equation_name(Equation eq) {
  switch (eq) {
    case Equation::Darcy: return "darcy";
    case Equation::Helmholtz: return "helmholtz";
    case Equation::Burgers: return "burgers";
    case Equation::NavierStokes: return "navier-stokes";
  }
  return "unknown";
}

Equation equation_from_name(const std::string& name) {
  if (name == "darcy") return Equation::Darcy;
  if (name == "helmholtz") return Equation::Helmholtz;
  if (name == "burgers") return Equation::Burgers;
  if (name == "navier-stokes" || name == "ns") return Equation::NavierStokes;
  throw DomainError("unknown equation: " + name);
}

void PdeInstance::validate() const {
  domain.validate();
  auto same = [&](const Domain& d) { return domain.same_shape(d); };
  switch (equation) {
    case Equation::Darcy:
      require(a && g, "darcy instance: needs coefficient a and boundary g");
      require(same(a->domain), "darcy instance: a domain mismatch");
      require(a->values.minCoeff() > 0.0, "darcy instance: a must be coercive");
      if (u) require(same(u->domain), "darcy instance: u domain mismatch");
      break;
    case Equation::Helmholtz:
      require(a && f && (g || gc),
              "helmholtz instance: needs a, f and boundary data");
      require(same(a->domain) && same(f->domain),
              "helmholtz instance: field domain mismatch");
      if (uc) require(same(uc->domain), "helmholtz instance: u domain mismatch");
      break;
    case Equation::Burgers:
      require(domain.has_time, "burgers instance: needs a space-time domain");
      require(g.has_value(), "burgers instance: needs boundary data");
      if (u) require(same(u->domain), "burgers instance: u domain mismatch");
      break;
    case Equation::NavierStokes:
      require(history || u, "ns instance: needs history or solution frames");
      break;
  }
}

}  // namespace scaleop

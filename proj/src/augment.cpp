#include "scaleop/augment.hpp"

#include "scaleop/datagen.hpp"

namespace scaleop {

namespace {

// Number of cells spanned by a crop of an axis (vertex axes have res-1 cells,
// cell-start axes res cells).
Index axis_cells(const Axis& a) { return a.cell_start ? a.res : a.res - 1; }

template <class Scalar>
FieldT<Scalar> with_domain(const FieldT<Scalar>& f, const Domain& d) {
  require(d.npoints() == f.npoints(), "with_domain: point count mismatch");
  FieldT<Scalar> out;
  out.domain = d;
  out.values = f.values;
  return out;
}

Domain crop_domain(const Domain& parent, const std::vector<Index>& cells,
                   const std::vector<Index>& anchor) {
  std::vector<Axis> axes = parent.axes;
  for (int a = 0; a < parent.naxes(); ++a) {
    const Axis& pa = parent.axes[a];
    const Real h = pa.spacing();
    Axis na;
    na.origin = pa.origin + h * static_cast<Real>(anchor[a]);
    na.extent = h * static_cast<Real>(cells[a]);
    na.periodic = false;
    if (cells[a] == axis_cells(pa) && anchor[a] == 0) {
      na = pa;  // full axis: keep sampling and periodicity
    } else if (pa.cell_start && !pa.periodic) {
      na.cell_start = true;  // time axes stay cell-start
      na.res = cells[a];
    } else {
      na.cell_start = false;  // spatial crops become vertex Dirichlet grids
      na.res = cells[a] + 1;
    }
    axes[a] = na;
  }
  return Domain(axes, parent.rank, parent.has_time);
}

bool is_full_crop(const Domain& parent, const std::vector<Index>& cells,
                  const std::vector<Index>& anchor) {
  for (int a = 0; a < parent.naxes(); ++a)
    if (anchor[a] != 0 || cells[a] != axis_cells(parent.axes[a])) return false;
  return true;
}

}  // namespace

Real snapped_fraction(const Axis& parent, Real lambda, Index min_points,
                      Index* cells_out) {
  if (lambda <= 0.0 || lambda > 1.0)
    throw DomainError("crop: lambda must be in (0, 1]");
  const Index cells = axis_cells(parent);
  Index sub = static_cast<Index>(std::llround(lambda * static_cast<Real>(cells)));
  sub = std::min(sub, cells);
  const Index min_cells = parent.cell_start ? min_points : min_points - 1;
  if (sub < min_cells)
    throw DomainError("crop: sub-grid below the minimum resolution");
  if (cells_out) *cells_out = sub;
  return static_cast<Real>(sub) / static_cast<Real>(cells);
}

CropSpec random_crop(const PdeInstance& inst, Real lambda, Index min_res,
                     Philox& rng) {
  CropSpec spec;
  spec.lambda = lambda;
  spec.min_resolution = min_res;
  for (const Axis& ax : inst.domain.axes) {
    Index sub = 0;
    snapped_fraction(ax, lambda, min_res, &sub);
    const Index slack = axis_cells(ax) - sub;
    spec.anchor.push_back(slack > 0 ? static_cast<Index>(rng.uniform_int(
                                          static_cast<std::uint64_t>(slack) + 1))
                                    : 0);
  }
  return spec;
}

PdeInstance subdomain_sample(const PdeInstance& inst, const CropSpec& spec) {
  inst.validate();
  if (!inst.has_solution())
    throw DomainError("subdomain_sample: instance has no solution field");

  const Domain& parent = inst.domain;
  std::vector<Index> cells(parent.naxes()), anchor(parent.naxes(), 0);
  std::vector<Real> fraction(parent.naxes());
  for (int a = 0; a < parent.naxes(); ++a) {
    fraction[a] = snapped_fraction(parent.axes[a], spec.lambda,
                                   spec.min_resolution, &cells[a]);
    if (a < static_cast<int>(spec.anchor.size())) anchor[a] = spec.anchor[a];
    require(anchor[a] >= 0 &&
                anchor[a] + cells[a] <= axis_cells(parent.axes[a]),
            "subdomain_sample: anchor out of range");
  }

  // Realized fraction: per-axis values agree for isotropic crops; snapped
  // space-time crops use the geometric mean.
  Real lambda_eff = 1.0;
  for (Real fr : fraction) lambda_eff *= fr;
  lambda_eff = std::pow(lambda_eff, 1.0 / static_cast<Real>(parent.naxes()));

  const bool full = is_full_crop(parent, cells, anchor);
  Domain sub = crop_domain(parent, cells, anchor);
  Domain unit = rescale_isotropic(sub, fraction[0]);

  PdeInstance out;
  out.equation = inst.equation;
  out.domain = unit;
  out.k = scale_param(inst.equation,
                      parent.has_time ? ScaleVariant::SpaceTime
                                      : ScaleVariant::Spatial,
                      inst.k, lambda_eff);

  if (inst.a) out.a = with_domain(restrict_field(*inst.a, sub), unit);
  if (inst.f) {
    Field fs = with_domain(restrict_field(*inst.f, sub), unit);
    if (inst.equation == Equation::Helmholtz)
      fs = scale_forcing_helmholtz(fs, lambda_eff);
    out.f = std::move(fs);
  }
  if (inst.history)
    out.history = with_domain(restrict_field(*inst.history, sub), unit);
  if (inst.u) out.u = with_domain(restrict_field(*inst.u, sub), unit);
  if (inst.uc) out.uc = with_domain(restrict_field(*inst.uc, sub), unit);

  // Boundary data: the solution restricted to the crop boundary; a full crop
  // keeps the instance's own data (identical for ground-truth labels).
  if (full && (inst.g || inst.gc)) {
    out.g = inst.g;
    out.gc = inst.gc;
    if (out.g) out.g->domain = unit;
    if (out.gc) out.gc->domain = unit;
  } else if (inst.equation == Equation::Darcy ||
             inst.equation == Equation::Burgers) {
    out.g = boundary_trace(*out.u);
  } else if (inst.equation == Equation::Helmholtz) {
    out.gc = boundary_trace(*out.uc);
  }
  out.validate();
  return out;
}

PdeInstance spacetime_crop(const PdeInstance& traj, const CropSpec& spec,
                           Philox& rng) {
  traj.validate();
  require(traj.domain.has_time, "spacetime_crop: needs a space-time instance");
  if (!traj.u) throw DomainError("spacetime_crop: instance has no solution");

  const Domain& parent = traj.domain;
  const int nax = parent.naxes();
  const int taxis = nax - 1;
  std::vector<Index> cells(nax), anchor(nax, 0);
  std::vector<Real> fraction(nax, 1.0);

  for (int a = 0; a < taxis; ++a) {
    fraction[a] = snapped_fraction(parent.axes[a], spec.lambda,
                                   spec.min_resolution, &cells[a]);
    const Index slack = axis_cells(parent.axes[a]) - cells[a];
    anchor[a] = slack > 0 ? static_cast<Index>(
                                rng.uniform_int(static_cast<std::uint64_t>(slack) + 1))
                          : 0;
  }

  const Axis& tax = parent.axes[taxis];
  const Index nt = tax.res;
  require(nt % 2 == 0, "spacetime_crop: expects an even frame count");
  if (spec.no_temporal_crop) {
    cells[taxis] = axis_cells(tax);
    anchor[taxis] = 0;
  } else {
    // Symmetric around the boundary between the two halves of the window.
    Index half = static_cast<Index>(
        std::llround(spec.lambda * static_cast<Real>(nt) / 2.0));
    half = std::clamp<Index>(half, (spec.min_resolution + 1) / 2, nt / 2);
    cells[taxis] = 2 * half;
    anchor[taxis] = nt / 2 - half;
    fraction[taxis] = static_cast<Real>(cells[taxis]) / static_cast<Real>(nt);
  }

  Real lambda_geo = 1.0;
  for (int a = 0; a < nax; ++a) lambda_geo *= fraction[a];
  lambda_geo = std::pow(lambda_geo, 1.0 / static_cast<Real>(nax));

  Domain sub = crop_domain(parent, cells, anchor);
  Domain unit = rescale_isotropic(sub, fraction[0]);

  PdeInstance out;
  out.equation = traj.equation;
  out.domain = unit;
  out.u = with_domain(restrict_field(*traj.u, sub), unit);
  out.k = scale_param(traj.equation, ScaleVariant::SpaceTime, traj.k, lambda_geo);
  out.validate();
  return out;
}

SuperSample superdomain_sample(Equation eq, Real k, Real lambda, Index res,
                               const Labeler& label, Philox& rng) {
  if (lambda < 1.0)
    throw DomainError("superdomain_sample: lambda must be >= 1");

  SuperSample out;
  out.lambda = lambda;
  out.parent = sample_inputs(
      eq, scale_param(eq, ScaleVariant::Spatial, k, lambda), res, rng.next());
  label(out.parent);
  if (!out.parent.has_solution())
    throw DomainError("superdomain_sample: labeler did not attach a solution");

  CropSpec spec = random_crop(out.parent, 1.0 / lambda,
                              std::min<Index>(32, res / 2), rng);
  out.crop = subdomain_sample(out.parent, spec);
  out.anchor = spec.anchor;
  return out;
}

}  // namespace scaleop

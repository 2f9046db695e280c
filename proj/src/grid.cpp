#include "scaleop/grid.hpp"

namespace scaleop {

namespace detail {

namespace {

// Index of the parent grid point under `x`, or -1 when x is off-grid.
Index snap_index(Real x, Real origin, Real h, Real tol) {
  Real t = (x - origin) / h;
  Real r = std::round(t);
  if (std::abs(t - r) > tol) return -1;
  return static_cast<Index>(r);
}

}  // namespace

std::vector<std::vector<Index>> alignment_maps(const Domain& parent,
                                               const Domain& sub) {
  require(parent.naxes() == sub.naxes(),
          "restrict: sub-domain must have the same number of axes");
  std::vector<std::vector<Index>> maps(parent.naxes());
  for (int a = 0; a < parent.naxes(); ++a) {
    const Axis& pa = parent.axes[a];
    const Axis& sa = sub.axes[a];
    const Real hp = pa.spacing();
    const Real hs = sa.spacing();
    if (std::abs(hp - hs) > 1e-9 * hp)
      throw AlignmentError("restrict: sub-domain spacing differs from parent");
    maps[a].resize(sa.res);
    for (Index j = 0; j < sa.res; ++j) {
      Index i = snap_index(sa.coord(j), pa.origin, hp, 1e-6);
      if (i < 0)
        throw AlignmentError("restrict: sub-domain point off the parent grid");
      if (pa.periodic) {
        i = ((i % pa.res) + pa.res) % pa.res;
      } else if (i >= pa.res) {
        throw AlignmentError("restrict: sub-domain exceeds parent extent");
      }
      maps[a][j] = i;
    }
  }
  return maps;
}

}  // namespace detail

namespace {

// Walk all multi-indices of `dims`, calling fn(flat_row_major_index, idx).
template <class Fn>
void for_each_index(const std::vector<Index>& dims, Fn&& fn) {
  std::vector<Index> idx(dims.size(), 0);
  Index total = 1;
  for (Index d : dims) total *= d;
  for (Index f = 0; f < total; ++f) {
    fn(f, idx);
    for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
}

std::vector<Index> resolutions(const Domain& d) {
  std::vector<Index> r(d.naxes());
  for (int a = 0; a < d.naxes(); ++a) r[a] = d.axes[a].res;
  return r;
}

}  // namespace

template <class Scalar>
FieldT<Scalar> restrict_field(const FieldT<Scalar>& field, const Domain& sub) {
  sub.validate();
  auto maps = detail::alignment_maps(field.domain, sub);
  FieldT<Scalar> out(sub, field.channels());
  std::vector<Index> pidx(field.domain.naxes());
  for_each_index(resolutions(sub), [&](Index f, const std::vector<Index>& idx) {
    for (int a = 0; a < sub.naxes(); ++a) pidx[a] = maps[a][idx[a]];
    out.values.row(f) = field.values.row(field.domain.flat(pidx));
  });
  return out;
}

template <class Scalar>
BoundaryTraceT<Scalar> boundary_trace(const FieldT<Scalar>& field) {
  const Domain& d = field.domain;
  bool any = false;
  for (const Axis& a : d.axes) any = any || !a.periodic;
  if (!any) throw DomainError("boundary_trace: fully periodic field has no boundary");

  BoundaryTraceT<Scalar> trace;
  trace.domain = d;
  std::vector<Index> dims = resolutions(d);
  for (int axis = 0; axis < d.naxes(); ++axis) {
    if (d.axes[axis].periodic) continue;
    for (int side = 0; side < 2; ++side) {
      FaceT<Scalar> face;
      face.axis = axis;
      face.high = (side == 1);
      std::vector<Index> fdims = dims;
      fdims.erase(fdims.begin() + axis);
      Index fpts = 1;
      for (Index n : fdims) fpts *= n;
      face.values.resize(fpts, field.channels());
      const Index layer = face.high ? d.axes[axis].res - 1 : 0;
      std::vector<Index> idx(d.naxes());
      for_each_index(fdims, [&](Index f, const std::vector<Index>& fidx) {
        for (int a = 0, k = 0; a < d.naxes(); ++a)
          idx[a] = (a == axis) ? layer : fidx[k++];
        face.values.row(f) = field.values.row(d.flat(idx));
      });
      trace.faces.push_back(std::move(face));
    }
  }
  return trace;
}

template <class Scalar>
void apply_trace(FieldT<Scalar>& field, const BoundaryTraceT<Scalar>& trace) {
  const Domain& d = field.domain;
  require(d.same_shape(trace.domain), "apply_trace: trace/field shape mismatch");
  std::vector<Index> dims = resolutions(d);
  for (const FaceT<Scalar>& face : trace.faces) {
    std::vector<Index> fdims = dims;
    fdims.erase(fdims.begin() + face.axis);
    const Index layer = face.high ? d.axes[face.axis].res - 1 : 0;
    std::vector<Index> idx(d.naxes());
    for_each_index(fdims, [&](Index f, const std::vector<Index>& fidx) {
      for (int a = 0, k = 0; a < d.naxes(); ++a)
        idx[a] = (a == face.axis) ? layer : fidx[k++];
      field.values.row(d.flat(idx)) = face.values.row(f);
    });
  }
}

std::vector<Index> boundary_flat_indices(const Domain& d) {
  std::vector<Index> dims = resolutions(d);
  std::vector<char> on_boundary(d.npoints(), 0);
  for_each_index(dims, [&](Index f, const std::vector<Index>& idx) {
    for (int a = 0; a < d.naxes(); ++a) {
      if (d.axes[a].periodic) continue;
      if (idx[a] == 0 || idx[a] == d.axes[a].res - 1) {
        on_boundary[f] = 1;
        break;
      }
    }
  });
  std::vector<Index> out;
  for (Index f = 0; f < d.npoints(); ++f)
    if (on_boundary[f]) out.push_back(f);
  return out;
}

Index boundary_point_count(const Domain& d) {
  return static_cast<Index>(boundary_flat_indices(d).size());
}

template Field restrict_field<Real>(const Field&, const Domain&);
template CField restrict_field<Complex>(const CField&, const Domain&);
template BoundaryTrace boundary_trace<Real>(const Field&);
template CBoundaryTrace boundary_trace<Complex>(const CField&);
template void apply_trace<Real>(Field&, const BoundaryTrace&);
template void apply_trace<Complex>(CField&, const CBoundaryTrace&);

}  // namespace scaleop

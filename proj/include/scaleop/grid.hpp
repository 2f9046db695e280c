#pragma once

#include "scaleop/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace scaleop {

/// One grid axis. Periodic axes and time axes are sampled cell-start
/// (spacing = extent/res, right endpoint excluded); non-periodic space axes
/// are vertex-centered (spacing = extent/(res-1), both endpoints included).
/// The cell-start convention on time axes keeps half-length time crops
/// grid-aligned.
struct Axis {
  Real origin = 0.0;
  Real extent = 1.0;
  Index res = 2;
  bool periodic = false;
  bool cell_start = false;

  Real spacing() const {
    return cell_start ? extent / static_cast<Real>(res)
                      : extent / static_cast<Real>(res - 1);
  }
  Real coord(Index i) const { return origin + spacing() * static_cast<Real>(i); }
};

/// Axis-aligned rectangular grid. `rank` spatial axes, optionally followed by
/// one time axis (`has_time`).
struct Domain {
  std::vector<Axis> axes;
  int rank = 0;
  bool has_time = false;

  Domain() = default;
  Domain(std::vector<Axis> ax, int spatial_rank, bool time = false)
      : axes(std::move(ax)), rank(spatial_rank), has_time(time) {
    validate();
  }

  /// Unit square [0,1]^2, n x n vertex grid (Dirichlet problems).
  static Domain unit_square(Index n) {
    return Domain({Axis{0.0, 1.0, n, false, false}, Axis{0.0, 1.0, n, false, false}}, 2);
  }
  /// Unit torus [0,1)^2, n x n cell-start grid (periodic problems).
  static Domain unit_torus(Index n) {
    return Domain({Axis{0.0, 1.0, n, true, true}, Axis{0.0, 1.0, n, true, true}}, 2);
  }

  void validate() const {
    require(static_cast<int>(axes.size()) == rank + (has_time ? 1 : 0),
            "domain: axis count does not match rank/has_time");
    require(rank >= 1 && rank <= 3, "domain: rank must be in {1,2,3}");
    for (const Axis& a : axes) {
      require(a.extent > 0.0, "domain: axis extent must be > 0");
      require(a.res >= 2, "domain: axis resolution must be >= 2");
      require(!(a.periodic && !a.cell_start),
              "domain: periodic axes are cell-start sampled");
    }
  }

  int naxes() const { return static_cast<int>(axes.size()); }

  Index npoints() const {
    Index n = 1;
    for (const Axis& a : axes) n *= a.res;
    return n;
  }

  bool is_unit() const {
    return std::all_of(axes.begin(), axes.end(), [](const Axis& a) {
      return a.origin == 0.0 && a.extent == 1.0;
    });
  }

  bool same_shape(const Domain& o) const {
    if (naxes() != o.naxes()) return false;
    for (int i = 0; i < naxes(); ++i)
      if (axes[i].res != o.axes[i].res) return false;
    return true;
  }

  /// Row-major linear index (axis 0 slowest).
  Index flat(const std::vector<Index>& idx) const {
    Index f = 0;
    for (int a = 0; a < naxes(); ++a) f = f * axes[a].res + idx[a];
    return f;
  }
};

/// Same grid, every axis mapped to [0,1]. Idempotent.
inline Domain rescale_to_unit(const Domain& d) {
  Domain out = d;
  for (Axis& a : out.axes) {
    a.origin = 0.0;
    a.extent = 1.0;
  }
  return out;
}

/// Every axis extent divided by `lambda`, origins reset to 0. Used to map a
/// fraction-lambda crop back to unit spatial size while keeping the aspect of
/// any time axis (so a space-time crop of equal ratios stays consistent).
inline Domain rescale_isotropic(const Domain& d, Real lambda) {
  require(lambda > 0.0, "rescale_isotropic: lambda must be > 0");
  Domain out = d;
  for (Axis& a : out.axes) {
    a.origin = 0.0;
    a.extent = a.extent / lambda;
  }
  return out;
}

/// Discretized multi-channel function on a Domain. Values are stored with the
/// channel as the slow index; each channel is a contiguous column in row-major
/// spatial order (axis 0 slowest).
template <class Scalar>
struct FieldT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Domain domain;
  Matrix values;  // npoints x channels

  FieldT() = default;
  FieldT(Domain d, Index channels) : domain(std::move(d)) {
    values.setZero(domain.npoints(), channels);
  }
  FieldT(Domain d, Matrix v) : domain(std::move(d)), values(std::move(v)) {
    require(values.rows() == domain.npoints(),
            "field: value count must equal channels * prod(resolution)");
    require(values.cols() >= 1, "field: needs at least one channel");
    require(values.allFinite(), "field: all entries must be finite");
  }

  Index channels() const { return values.cols(); }
  Index npoints() const { return values.rows(); }

  Scalar& at(const std::vector<Index>& idx, Index ch = 0) {
    require(ch >= 0 && ch < channels(), "field: channel out of range");
    return values(domain.flat(idx), ch);
  }
  Scalar at(const std::vector<Index>& idx, Index ch = 0) const {
    require(ch >= 0 && ch < channels(), "field: channel out of range");
    return values(domain.flat(idx), ch);
  }
};

using Field = FieldT<Real>;
using CField = FieldT<Complex>;

/// One face of the grid boundary: the outermost layer orthogonal to `axis` on
/// the low or high side. Values are in row-major order over the remaining axes.
template <class Scalar>
struct FaceT {
  int axis = 0;
  bool high = false;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> values;  // face pts x channels
};

/// Boundary data on all non-periodic axes of a domain. Corner values shared by
/// adjacent faces agree exactly because every face is extracted from (or
/// validated against) one common field.
template <class Scalar>
struct BoundaryTraceT {
  Domain domain;
  std::vector<FaceT<Scalar>> faces;

  const FaceT<Scalar>& face(int axis, bool high) const {
    for (const auto& f : faces)
      if (f.axis == axis && f.high == high) return f;
    throw ShapeError("boundary trace: no face for that axis/side");
  }
  FaceT<Scalar>& face(int axis, bool high) {
    for (auto& f : faces)
      if (f.axis == axis && f.high == high) return f;
    throw ShapeError("boundary trace: no face for that axis/side");
  }
  bool has_face(int axis, bool high) const {
    for (const auto& f : faces)
      if (f.axis == axis && f.high == high) return true;
    return false;
  }
  Index channels() const {
    return faces.empty() ? 0 : faces.front().values.cols();
  }
};

using BoundaryTrace = BoundaryTraceT<Real>;
using CBoundaryTrace = BoundaryTraceT<Complex>;

namespace detail {

/// Per-axis map from sub grid indices to parent grid indices.
/// Throws AlignmentError when the sub grid is not a subset of the parent grid.
std::vector<std::vector<Index>> alignment_maps(const Domain& parent,
                                               const Domain& sub);

}  // namespace detail

/// Copy the values of `field` at the grid points of `sub`. No interpolation:
/// `sub` must be grid-aligned with and contained in the field's domain
/// (periodic parent axes wrap). The crop keeps the parent spacing, so the
/// sub-field has the same resolution in the sense of identical grid spacing.
template <class Scalar>
FieldT<Scalar> restrict_field(const FieldT<Scalar>& field, const Domain& sub);

/// Outermost grid layer of every non-periodic axis, as a BoundaryTrace.
/// Throws DomainError for fully periodic fields (no boundary).
template <class Scalar>
BoundaryTraceT<Scalar> boundary_trace(const FieldT<Scalar>& field);

/// Write Dirichlet trace values into the matching boundary entries of `field`.
template <class Scalar>
void apply_trace(FieldT<Scalar>& field, const BoundaryTraceT<Scalar>& trace);

/// Number of boundary points of the domain (union of faces, counted once).
Index boundary_point_count(const Domain& d);

/// Flat indices of all boundary points (non-periodic axes' outer layers).
std::vector<Index> boundary_flat_indices(const Domain& d);

extern template Field restrict_field<Real>(const Field&, const Domain&);
extern template CField restrict_field<Complex>(const CField&, const Domain&);
extern template BoundaryTrace boundary_trace<Real>(const Field&);
extern template CBoundaryTrace boundary_trace<Complex>(const CField&);
extern template void apply_trace<Real>(Field&, const BoundaryTrace&);
extern template void apply_trace<Complex>(CField&, const CBoundaryTrace&);

}  // namespace scaleop

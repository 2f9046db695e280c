#include "scaleop/grid.hpp"
#include "scaleop/rng.hpp"

#include <doctest.h>

using namespace scaleop;

namespace {

Field random_field(const Domain& d, std::uint64_t seed, Index channels = 1) {
  Philox rng(seed);
  Field f(d, channels);
  for (Index c = 0; c < channels; ++c)
    for (Index i = 0; i < d.npoints(); ++i) f.values(i, c) = rng.normal();
  return f;
}

// Sub-square [lo*h, hi*h]^2 of a vertex grid with the parent spacing.
Domain vertex_subsquare(const Domain& parent, Index lo, Index hi) {
  const Real h = parent.axes[0].spacing();
  Axis ax{lo * h, (hi - lo) * h, hi - lo + 1, false, false};
  return Domain({ax, ax}, 2);
}

}  // namespace

TEST_CASE("axis spacing conventions") {
  Axis vertex{0.0, 1.0, 129, false, false};
  CHECK(vertex.spacing() == doctest::Approx(1.0 / 128.0));
  Axis cell{0.0, 1.0, 128, true, true};
  CHECK(cell.spacing() == doctest::Approx(1.0 / 128.0));
  Axis time{0.0, 2.0, 128, false, true};
  CHECK(time.spacing() == doctest::Approx(2.0 / 128.0));
}

TEST_CASE("domain validation rejects bad axes") {
  CHECK_THROWS_AS(Domain({Axis{0, 0.0, 5, false, false}}, 1), Error);
  CHECK_THROWS_AS(Domain({Axis{0, 1.0, 1, false, false}}, 1), Error);
  // periodic axes must be cell-start
  CHECK_THROWS_AS(Domain({Axis{0, 1.0, 8, true, false}}, 1), Error);
}

TEST_CASE("restrict: full-domain restriction is the identity") {
  Domain d = Domain::unit_square(33);
  Field f = random_field(d, 7);
  Field r = restrict_field(f, d);
  CHECK((r.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("restrict: half sub-square of a 129x129 grid picks the first 65 rows/cols") {
  Domain d = Domain::unit_square(129);
  Field f = random_field(d, 3, 2);
  Domain sub = vertex_subsquare(d, 0, 64);
  Field r = restrict_field(f, sub);
  CHECK(r.domain.npoints() == 65 * 65);
  // Direct index arithmetic oracle.
  for (Index i = 0; i < 65; ++i)
    for (Index j = 0; j < 65; ++j)
      CHECK(r.at({i, j}, 1) == f.at({i, j}, 1));
}

TEST_CASE("restrict: interior anchored crop uses offset indices") {
  Domain d = Domain::unit_square(129);
  Field f = random_field(d, 11);
  const Real h = 1.0 / 128.0;
  Axis ax{32 * h, 64 * h, 65, false, false};
  Field r = restrict_field(f, Domain({ax, ax}, 2));
  for (Index i = 0; i < 65; i += 16)
    for (Index j = 0; j < 65; j += 16)
      CHECK(r.at({i, j}) == f.at({i + 32, j + 32}));
}

TEST_CASE("restrict: misaligned sub-domain raises an alignment error") {
  Domain d = Domain::unit_square(129);
  Field f = random_field(d, 1);
  // 0.3 is not a multiple of 1/128
  Axis ax{0.3, 0.5, 65, false, false};
  CHECK_THROWS_AS(restrict_field(f, Domain({ax, ax}, 2)), AlignmentError);
  // out of bounds
  Axis oob{0.75, 0.5, 65, false, false};
  CHECK_THROWS_AS(restrict_field(f, Domain({oob, oob}, 2)), AlignmentError);
}

TEST_CASE("restrict: periodic parent wraps, so a full vertex cover is legal") {
  Domain torus = Domain::unit_torus(64);
  Field f = random_field(torus, 3);
  Domain vertex = Domain::unit_square(65);
  Field r = restrict_field(f, vertex);
  CHECK(r.at({64, 64}) == f.at({0, 0}));
  CHECK(r.at({64, 10}) == f.at({0, 10}));
  CHECK(r.at({5, 9}) == f.at({5, 9}));
}

TEST_CASE("restrict composes: restrict of a restrict equals one combined restrict") {
  Domain d = Domain::unit_square(129);
  Field f = random_field(d, 5, 2);
  Domain mid = vertex_subsquare(d, 16, 112);
  Domain inner = vertex_subsquare(d, 32, 96);
  Field two_step = restrict_field(restrict_field(f, mid), inner);
  Field one_step = restrict_field(f, inner);
  CHECK((two_step.values - one_step.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("boundary_trace: constant field gives constant faces") {
  Domain d = Domain::unit_square(17);
  Field f(d, 1);
  f.values.setConstant(3.25);
  BoundaryTrace t = boundary_trace(f);
  CHECK(t.faces.size() == 4);
  for (const auto& face : t.faces) {
    CHECK(face.values.rows() == 17);
    CHECK((face.values.array() == 3.25).all());
  }
}

TEST_CASE("boundary_trace: u(x,y) = x has analytic faces") {
  Domain d = Domain::unit_square(33);
  Field f(d, 1);
  for (Index i = 0; i < 33; ++i)
    for (Index j = 0; j < 33; ++j) f.at({i, j}) = d.axes[1].coord(j);  // x = axis 1
  BoundaryTrace t = boundary_trace(f);
  // axis-1 faces: left is x=0, right is x=1
  CHECK((t.face(1, false).values.array() == 0.0).all());
  CHECK((t.face(1, true).values.array() == 1.0).all());
  // axis-0 faces carry the x coordinate
  for (Index j = 0; j < 33; ++j) {
    CHECK(t.face(0, false).values(j, 0) == doctest::Approx(d.axes[1].coord(j)));
    CHECK(t.face(0, true).values(j, 0) == doctest::Approx(d.axes[1].coord(j)));
  }
}

TEST_CASE("boundary_trace: corners of a random 65x65 trace are consistent") {
  Domain d = Domain::unit_square(65);
  Field f = random_field(d, 99);
  BoundaryTrace t = boundary_trace(f);
  for (const auto& face : t.faces) CHECK(face.values.rows() == 65);
  // corner (0,0) is shared by axis0-low and axis1-low faces
  CHECK(t.face(0, false).values(0, 0) == t.face(1, false).values(0, 0));
  // corner (0, 64): axis0-low end vs axis1-high start
  CHECK(t.face(0, false).values(64, 0) == t.face(1, true).values(0, 0));
  // corner (64, 64)
  CHECK(t.face(0, true).values(64, 0) == t.face(1, true).values(64, 0));
}

TEST_CASE("boundary_trace values are a subset of the field values") {
  Domain d = Domain::unit_square(33);
  Field f = random_field(d, 123);
  Domain sub = vertex_subsquare(d, 8, 24);
  BoundaryTrace t = boundary_trace(restrict_field(f, sub));
  for (const auto& face : t.faces)
    for (Index i = 0; i < face.values.rows(); ++i) {
      bool found = false;
      for (Index p = 0; p < f.npoints() && !found; ++p)
        found = (f.values(p, 0) == face.values(i, 0));
      CHECK(found);
    }
}

TEST_CASE("boundary_trace rejects fully periodic fields") {
  Field f = random_field(Domain::unit_torus(16), 5);
  CHECK_THROWS_AS(boundary_trace(f), DomainError);
}

TEST_CASE("space-time domain exposes the time faces") {
  // Burgers-style: x vertex, t cell-start
  Domain d({Axis{0, 1, 65, false, false}, Axis{0, 1, 32, false, true}}, 1, true);
  Field f = random_field(d, 5);
  BoundaryTrace t = boundary_trace(f);
  CHECK(t.faces.size() == 4);
  CHECK(t.face(1, false).values.rows() == 65);  // initial condition u0
  CHECK(t.face(0, false).values.rows() == 32);  // left end time series
}

TEST_CASE("rescale_to_unit normalizes origin/extent and is idempotent") {
  Axis ax{0.25, 0.5, 65, false, false};
  Domain d({ax, ax}, 2);
  Domain u = rescale_to_unit(d);
  CHECK(u.axes[0].origin == 0.0);
  CHECK(u.axes[0].extent == 1.0);
  CHECK(u.axes[0].res == 65);
  CHECK(u.is_unit());
  Domain uu = rescale_to_unit(u);
  CHECK(uu.axes[0].origin == u.axes[0].origin);
  CHECK(uu.axes[0].extent == u.axes[0].extent);

  Domain d1({Axis{2.0, 0.5, 33, false, false}}, 1);
  Domain u1 = rescale_to_unit(d1);
  CHECK(u1.axes[0].origin == 0.0);
  CHECK(u1.axes[0].extent == 1.0);
  CHECK(u1.axes[0].res == 33);
}

TEST_CASE("apply_trace writes Dirichlet data back onto the field") {
  Domain d = Domain::unit_square(17);
  Field f = random_field(d, 3);
  BoundaryTrace t = boundary_trace(f);
  Field g(d, 1);
  apply_trace(g, t);
  for (Index idx : boundary_flat_indices(d))
    CHECK(g.values(idx, 0) == f.values(idx, 0));
  CHECK(boundary_point_count(d) == 4 * 17 - 4);
}

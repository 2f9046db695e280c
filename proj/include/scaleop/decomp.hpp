#pragma once

#include "scaleop/solvers.hpp"

#include <functional>

namespace scaleop {

/// One overlapping patch of the global vertex grid: the outer window the
/// local solver sees, plus its blending weight over the window points.
struct Patch {
  Index lo0 = 0, lo1 = 0;  // outer start, grid points
  Index pts0 = 0, pts1 = 0;
  Domain domain;           // sub-domain in global coordinates
  VectorX weight;          // distance-based ramp, per patch point
  Real side_fraction = 1.0;  // outer cells / global cells
};

/// Overlapping decomposition of a square vertex grid. Patches cover the
/// domain, external patch edges coincide with the global boundary, and the
/// normalized weights form a partition of unity.
struct PatchPlan {
  Domain global;
  Index per_side = 4;
  Index overlap = 0;  // cells
  Index ramp = 16;    // points
  std::vector<Patch> patches;
};

/// Build a per_side x per_side plan. Inner tiles are cells/per_side wide
/// (geometry error when not divisible); outer windows grow by `overlap` cells,
/// clamped into the domain. Weights ramp linearly from 1 in the patch
/// interior to 0 at internal patch edges over `ramp` points (L-infinity
/// distance); edges on the global boundary do not ramp.
PatchPlan make_plan(const Domain& global, Index per_side, Index overlap,
                    Index ramp);

/// Weighted partition-of-unity merge of per-patch fields.
Field blend(const std::vector<Field>& locals, const PatchPlan& plan);

/// Local solve callback: receives the unit-rescaled local instance (with the
/// scale parameter already transformed by the patch side fraction) and
/// returns the local solution on the patch grid.
using LocalSolver = std::function<Field(const PdeInstance&)>;

/// One Algorithm-3 sweep: extract patch boundary data from u_prev (true g on
/// external boundaries), solve every patch, and blend.
Field dd_iterate(const LocalSolver& apply_local, const PdeInstance& global_inst,
                 const Field& u_prev, const PatchPlan& plan, int threads = 0);

struct DdResult {
  Field u;
  std::vector<Real> errors;  // per-iteration rel-L2 against `truth` if given
};

/// Multi-level refinement: run `iters` sweeps per level, halving the patch
/// size (doubling per_side) between levels; each level starts from the
/// previous level's blend. `u0` seeds iteration 0 (global model prediction,
/// or zero-interior data for classical Schwarz).
DdResult dd_refine(const LocalSolver& apply_local, const PdeInstance& inst,
                   const PatchPlan& plan, Index iters, Index levels,
                   const Field& u0, const Field* truth = nullptr,
                   int threads = 0);

}  // namespace scaleop

#include "scaleop/decomp.hpp"

#include "scaleop/scaling.hpp"
#include "scaleop/training.hpp"

#include <atomic>
#include <thread>

namespace scaleop {

namespace {

void check_global(const Domain& d) {
  require(d.naxes() == 2 && !d.has_time, "decomp: expects a 2D spatial domain");
  for (const Axis& a : d.axes)
    require(!a.periodic && !a.cell_start, "decomp: expects a vertex grid");
  require(d.axes[0].res == d.axes[1].res, "decomp: expects a square grid");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<unsigned>(hc == 0 ? 1 : hc, 8));
}

}  // namespace

PatchPlan make_plan(const Domain& global, Index per_side, Index overlap,
                    Index ramp) {
  check_global(global);
  require(per_side >= 1 && overlap >= 0 && ramp >= 1, "make_plan: bad sizes");
  const Index cells = global.axes[0].res - 1;
  if (cells % per_side != 0)
    throw DomainError("make_plan: grid cells not divisible by the patch count");
  const Index inner = cells / per_side;
  const Index outer = std::min(cells, inner + overlap);

  PatchPlan plan;
  plan.global = global;
  plan.per_side = per_side;
  plan.overlap = overlap;
  plan.ramp = ramp;

  const Real h = global.axes[0].spacing();
  for (Index pi = 0; pi < per_side; ++pi) {
    for (Index pj = 0; pj < per_side; ++pj) {
      Patch p;
      auto start = [&](Index t) {
        return std::clamp<Index>(t * inner - overlap / 2, 0, cells - outer);
      };
      p.lo0 = start(pi);
      p.lo1 = start(pj);
      p.pts0 = outer + 1;
      p.pts1 = outer + 1;
      p.side_fraction = static_cast<Real>(outer) / static_cast<Real>(cells);
      Axis ax0{p.lo0 * h, outer * h, p.pts0, false, false};
      Axis ax1{p.lo1 * h, outer * h, p.pts1, false, false};
      p.domain = Domain({ax0, ax1}, 2);

      // L-infinity distance ramp to internal patch edges; edges lying on the
      // global boundary are not ramped (they carry the true boundary data).
      p.weight.resize(p.pts0 * p.pts1);
      for (Index i = 0; i < p.pts0; ++i) {
        for (Index j = 0; j < p.pts1; ++j) {
          Real d = static_cast<Real>(ramp);  // "far" when all edges external
          auto edge = [&](Index dist, bool external) {
            if (!external) d = std::min(d, static_cast<Real>(dist));
          };
          edge(i, /*external=*/p.lo0 == 0);
          edge(p.pts0 - 1 - i, p.lo0 + outer == cells);
          edge(j, p.lo1 == 0);
          edge(p.pts1 - 1 - j, p.lo1 + outer == cells);
          p.weight[i * p.pts1 + j] =
              std::clamp(d / static_cast<Real>(ramp), 0.0, 1.0);
        }
      }
      plan.patches.push_back(std::move(p));
    }
  }

  // every point must be covered by positive total weight
  VectorX total = VectorX::Zero(global.npoints());
  const Index n = global.axes[0].res;
  for (const Patch& p : plan.patches)
    for (Index i = 0; i < p.pts0; ++i)
      for (Index j = 0; j < p.pts1; ++j)
        total[(p.lo0 + i) * n + (p.lo1 + j)] += p.weight[i * p.pts1 + j];
  if (total.minCoeff() <= 0.0)
    throw DomainError("make_plan: weights do not cover the domain");
  return plan;
}

Field blend(const std::vector<Field>& locals, const PatchPlan& plan) {
  require(locals.size() == plan.patches.size(), "blend: patch count mismatch");
  const Index n = plan.global.axes[0].res;
  Field num(plan.global, 1);
  VectorX den = VectorX::Zero(plan.global.npoints());
  for (size_t pi = 0; pi < plan.patches.size(); ++pi) {
    const Patch& p = plan.patches[pi];
    require(locals[pi].npoints() == p.pts0 * p.pts1, "blend: local shape");
    for (Index i = 0; i < p.pts0; ++i)
      for (Index j = 0; j < p.pts1; ++j) {
        const Real w = p.weight[i * p.pts1 + j];
        const Index g = (p.lo0 + i) * n + (p.lo1 + j);
        num.values(g, 0) += w * locals[pi].values(i * p.pts1 + j, 0);
        den[g] += w;
      }
  }
  num.values.col(0).array() /= den.array();
  return num;
}

Field dd_iterate(const LocalSolver& apply_local, const PdeInstance& global_inst,
                 const Field& u_prev, const PatchPlan& plan, int threads) {
  require(global_inst.equation == Equation::Darcy,
          "dd_iterate: supported for Darcy instances");
  require(global_inst.a && global_inst.g, "dd_iterate: instance needs a and g");
  require(u_prev.domain.same_shape(plan.global), "dd_iterate: u_prev shape");

  // carrier: current estimate inside, true boundary data on the global edge
  Field carrier = u_prev;
  apply_trace(carrier, *global_inst.g);

  std::vector<Field> locals(plan.patches.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= plan.patches.size()) return;
      const Patch& p = plan.patches[i];
      PdeInstance local;
      local.equation = global_inst.equation;
      Field a_loc = restrict_field(*global_inst.a, p.domain);
      Field g_src = restrict_field(carrier, p.domain);
      Domain unit = rescale_to_unit(p.domain);
      a_loc.domain = unit;
      g_src.domain = unit;
      local.domain = unit;
      local.a = std::move(a_loc);
      local.g = boundary_trace(g_src);
      local.k = scale_param(global_inst.equation, ScaleVariant::Spatial,
                            global_inst.k, p.side_fraction);
      Field sol = apply_local(local);
      require(sol.npoints() == p.pts0 * p.pts1, "dd_iterate: local solution shape");
      locals[i] = std::move(sol);
    }
  };
  std::vector<std::thread> pool;
  const int nthr = std::min<int>(resolve_threads(threads),
                                 static_cast<int>(plan.patches.size()));
  for (int i = 1; i < nthr; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  return blend(locals, plan);
}

DdResult dd_refine(const LocalSolver& apply_local, const PdeInstance& inst,
                   const PatchPlan& plan, Index iters, Index levels,
                   const Field& u0, const Field* truth, int threads) {
  require(iters >= 1 && levels >= 1, "dd_refine: iters and levels must be >= 1");
  DdResult result;
  result.u = u0;
  for (Index level = 0; level < levels; ++level) {
    PatchPlan lp = level == 0
                       ? plan
                       : make_plan(plan.global, plan.per_side << level,
                                   std::max<Index>(2, plan.overlap >> level),
                                   plan.ramp);
    for (Index it = 0; it < iters; ++it) {
      result.u = dd_iterate(apply_local, inst, result.u, lp, threads);
      if (truth) result.errors.push_back(rel_l2(result.u, *truth));
    }
  }
  return result;
}

}  // namespace scaleop

#include "scaleop/training.hpp"

#include "scaleop/datagen.hpp"
#include "scaleop/runtime.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace scaleop {

using ad::Tape;
using ad::Tensor;
using ad::Var;

Real rel_l2(const MatrixX& pred, const MatrixX& truth) {
  const Real tn = truth.norm();
  if (tn <= 0.0) throw DomainError("rel_l2: degenerate zero-norm truth");
  require(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
          "rel_l2: shape mismatch");
  return (pred - truth).norm() / tn;
}

Real rel_l2(const Field& pred, const Field& truth) {
  return rel_l2(pred.values, truth.values);
}

Real rel_l2(const CField& pred, const CField& truth) {
  const Real tn = truth.values.norm();
  if (tn <= 0.0) throw DomainError("rel_l2: degenerate zero-norm truth");
  require(pred.values.rows() == truth.values.rows(), "rel_l2: shape mismatch");
  return (pred.values - truth.values).norm() / tn;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Var consistency_loss_data(Tape& tape, const SinoModel& model,
                          const std::vector<Var>& pv, const PdeInstance& inst,
                          const CropSpec& crop) {
  PdeInstance sub = subdomain_sample(inst, crop);
  Var pred = sino_forward(tape, model, pv, sub);
  return ad::rel_l2(tape, pred, build_target(sub));
}

Var consistency_loss_self(Tape& tape, const SinoModel& model,
                          const std::vector<Var>& pv, const SuperSample& sample,
                          bool detach) {
  Var crop_pred = sino_forward(tape, model, pv, sample.crop);
  const Tensor target = build_target(sample.crop);

  Var diff;
  if (detach) {
    diff = ad::sub(tape, crop_pred, tape.input(target));
  } else {
    // Re-run the pseudo-label branch on the tape and crop it with a gather so
    // gradients flow through both sides of the discrepancy.
    Var parent_pred = sino_forward(tape, model, pv, sample.parent);
    auto maps = detail::alignment_maps(
        sample.parent.domain,
        [&] {
          // reconstruct the crop geometry in parent coordinates
          Domain d = sample.crop.domain;
          for (int a = 0; a < d.naxes(); ++a) {
            const Axis& pa = sample.parent.domain.axes[a];
            const Real h = pa.spacing();
            d.axes[a].origin = pa.origin + h * static_cast<Real>(sample.anchor[a]);
            d.axes[a].extent = h * static_cast<Real>(d.axes[a].cell_start
                                                         ? d.axes[a].res
                                                         : d.axes[a].res - 1);
          }
          return d;
        }());
    std::vector<Index> pdims(sample.parent.domain.naxes());
    for (int a = 0; a < sample.parent.domain.naxes(); ++a)
      pdims[a] = sample.parent.domain.axes[a].res;
    std::vector<Index> cdims(sample.crop.domain.naxes());
    for (int a = 0; a < sample.crop.domain.naxes(); ++a)
      cdims[a] = sample.crop.domain.axes[a].res;
    Index total = 1;
    for (Index d : cdims) total *= d;
    std::vector<Index> idx(total);
    std::vector<Index> mi(cdims.size(), 0);
    for (Index f = 0; f < total; ++f) {
      Index flat = 0;
      for (size_t a = 0; a < cdims.size(); ++a) flat = flat * pdims[a] + maps[a][mi[a]];
      idx[f] = flat;
      for (int a = static_cast<int>(cdims.size()) - 1; a >= 0; --a) {
        if (++mi[a] < cdims[a]) break;
        mi[a] = 0;
      }
    }
    Var parent_crop = ad::gather(tape, parent_pred, std::move(idx), cdims);
    diff = ad::sub(tape, crop_pred, parent_crop);
  }
  // Eq.-7 norm is absolute; use the RMS so the magnitude is grid-independent.
  const Real n = static_cast<Real>(target.numel());
  return ad::scale(tape, ad::sqrt_scalar(tape, ad::sum_abs2(tape, diff)),
                   1.0 / std::sqrt(n));
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

namespace {

// View the real degrees of freedom of a tensor (complex entries interleave
// re/im, which is exactly the memory layout of std::complex<double>).
Eigen::Map<VectorX> dof_view(Tensor& t) {
  if (t.is_complex())
    return Eigen::Map<VectorX>(reinterpret_cast<Real*>(t.c.data()),
                               2 * t.c.size());
  return Eigen::Map<VectorX>(t.r.data(), t.r.size());
}

Eigen::Map<const VectorX> dof_view(const Tensor& t) {
  if (t.is_complex())
    return Eigen::Map<const VectorX>(reinterpret_cast<const Real*>(t.c.data()),
                                     2 * t.c.size());
  return Eigen::Map<const VectorX>(t.r.data(), t.r.size());
}

}  // namespace

Adam::Adam(const ParamStore& params, Real beta1, Real beta2, Real eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (size_t i = 0; i < params.size(); ++i) {
    const Index n = dof_view(params.item(i).second).size();
    m_.push_back(VectorX::Zero(n));
    v_.push_back(VectorX::Zero(n));
  }
}

void Adam::step(ParamStore& params, const std::vector<Tensor>& grads, Real lr) {
  require(grads.size() == m_.size(), "adam: gradient count mismatch");
  ++t_;
  const Real bc1 = 1.0 - std::pow(beta1_, static_cast<Real>(t_));
  const Real bc2 = 1.0 - std::pow(beta2_, static_cast<Real>(t_));
  for (size_t i = 0; i < grads.size(); ++i) {
    auto g = dof_view(grads[i]);
    auto p = dof_view(params.item(i).second);
    m_[i].array() = beta1_ * m_[i].array() + (1.0 - beta1_) * g.array();
    v_[i].array() = beta2_ * v_[i].array() + (1.0 - beta2_) * g.array().square();
    p.array() -=
        (lr / bc1) * m_[i].array() / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void Adam::restore(Index t, std::vector<VectorX> m, std::vector<VectorX> v) {
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kShuffleStream = 1ull << 32;
constexpr std::uint64_t kCropStream = 2ull << 32;
constexpr std::uint64_t kD4Stream = 3ull << 32;
constexpr std::uint64_t kSuperStream = 4ull << 32;

// Long-lived workers: each thread keeps its malloc arena (and therefore its
// recycled tensor buffers) warm across batches. Spawning fresh threads per
// batch costs more than the parallelism buys back.
class WorkerPool {
 public:
  explicit WorkerPool(int extra_threads) {
    for (int i = 0; i < extra_threads; ++i)
      threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  // fn(i) for i in [0, n); the calling thread participates.
  void run(size_t n, const std::function<void(size_t)>& fn) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      fn_ = &fn;
      next_ = 0;
      total_ = n;
      pending_ = n;
      ++generation_;
    }
    cv_.notify_all();
    work();
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

 private:
  void work() {
    for (;;) {
      const size_t i = next_.fetch_add(1);
      if (i >= total_) return;
      (*fn_)(i);
      if (pending_.fetch_sub(1) == 1) {
        std::lock_guard<std::mutex> lk(mu_);
        done_cv_.notify_all();
      }
    }
  }
  void loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      lk.unlock();
      work();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(size_t)>* fn_ = nullptr;
  std::atomic<size_t> next_{0};
  std::atomic<size_t> pending_{0};
  size_t total_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::min<unsigned>(hc == 0 ? 1 : hc, 8));
}

// Work items of one batch: each instance contributes a weighted list of loss
// terms, evaluated on its own tape.
struct InstanceWork {
  const PdeInstance* supervised = nullptr;  // after optional D4 transform
  PdeInstance transformed;                  // storage for the D4 copy
  std::optional<CropSpec> crop;             // Eq. 8 term
  std::optional<SuperSample> super_draw;    // Eq. 7 term
  Real sub_weight = 0.0;
  Real super_weight = 0.0;
};

struct InstanceOutcome {
  Real total = 0.0, sup = 0.0, sub = 0.0, super_v = 0.0;
  std::vector<Tensor> grads;
};

InstanceOutcome run_instance(const SinoModel& model, const InstanceWork& work,
                             const TrainConfig& cfg) {
  Tape tape;
  std::vector<Var> pv = model.params.register_on(tape, true);

  Var sup = ad::rel_l2(tape, sino_forward(tape, model, pv, *work.supervised),
                       build_target(*work.supervised));
  Var total = sup;
  Var sub_term, super_term;
  if (work.crop) {
    sub_term = consistency_loss_data(tape, model, pv, *work.supervised, *work.crop);
    total = ad::add(tape, total, ad::scale(tape, sub_term, work.sub_weight));
  }
  if (work.super_draw) {
    super_term = consistency_loss_self(tape, model, pv, *work.super_draw,
                                       cfg.detach_pseudo_label);
    total = ad::add(tape, total, ad::scale(tape, super_term, work.super_weight));
  }
  tape.backward(total);

  InstanceOutcome out;
  out.total = tape.value(total).scalar_value();
  out.sup = tape.value(sup).scalar_value();
  if (work.crop) out.sub = tape.value(sub_term).scalar_value();
  if (work.super_draw) out.super_v = tape.value(super_term).scalar_value();
  out.grads.reserve(pv.size());
  for (Var v : pv) out.grads.push_back(tape.grad(v));
  return out;
}

}  // namespace

TrainResult train(SinoModel model, const std::vector<PdeInstance>& dataset,
                  const TrainConfig& cfg, const EpochHook& on_epoch) {
  tune_allocator();
  cfg.validate();
  require(!dataset.empty(), "train: empty dataset");
  const Equation eq = dataset.front().equation;
  for (const PdeInstance& inst : dataset)
    require(inst.equation == eq, "train: dataset mixes equations");

  const int threads = resolve_threads(cfg.threads);
  WorkerPool pool(threads - 1);
  Adam opt(model.params);
  TrainResult result;

  ParamStore last_good = model.params;
  const bool d4_ok =
      (eq == Equation::Darcy || eq == Equation::Helmholtz) &&
      (cfg.aug_rot || cfg.aug_ref);

  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const Real lr = cfg.cosine_decay
                        ? cfg.lr * 0.5 *
                              (1.0 + std::cos(M_PI * static_cast<Real>(epoch) /
                                              static_cast<Real>(cfg.epochs)))
                        : cfg.lr;

    // deterministic shuffle
    std::vector<Index> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    Philox shuffle_rng(cfg.seed, kShuffleStream + epoch);
    for (Index i = static_cast<Index>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    Philox crop_rng(cfg.seed, kCropStream + epoch);
    Philox d4_rng(cfg.seed, kD4Stream + epoch);
    Philox super_rng(cfg.seed, kSuperStream + epoch);

    const Real anneal = cfg.anneal_super
                            ? static_cast<Real>(epoch) / static_cast<Real>(cfg.epochs)
                            : 1.0;

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;
    Index counted = 0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<InstanceWork> work(stop - start);
      for (size_t b = start; b < stop; ++b) {
        InstanceWork& w = work[b - start];
        const PdeInstance& inst = dataset[order[b]];
        w.supervised = &inst;
        if (d4_ok) {
          const int rot = cfg.aug_rot ? static_cast<int>(d4_rng.uniform_int(4)) : 0;
          const bool ref = cfg.aug_ref && d4_rng.uniform() < 0.5;
          if (rot != 0 || ref) {
            D4 g = static_cast<D4>(rot);  // Id..Rot270 order
            w.transformed = symmetry_transform(inst, g);
            if (ref) w.transformed = symmetry_transform(w.transformed, D4::FlipAxis0);
            w.supervised = &w.transformed;
          }
        }
        if (cfg.aug_sub) {
          const Real lambda =
              cfg.lambda_set[crop_rng.uniform_int(cfg.lambda_set.size())];
          w.crop = random_crop(*w.supervised, lambda, cfg.min_crop, crop_rng);
          w.sub_weight = cfg.sub_weight;
        }
        if (cfg.aug_super) {
          const Real alpha = anneal * cfg.super_weight;
          if (alpha > 0.0) {
            Labeler labeler = [&model](PdeInstance& p) { sino_label(model, p); };
            w.super_draw = superdomain_sample(eq, inst.k, cfg.super_lambda,
                                              cfg.super_res, labeler, super_rng);
            w.super_weight = alpha;
          }
        }
      }

      // evaluate instances concurrently; reduce in index order
      std::vector<InstanceOutcome> outcomes(work.size());
      pool.run(work.size(), [&](size_t i) {
        outcomes[i] = run_instance(model, work[i], cfg);
      });

      std::vector<Tensor> batch_grads;
      for (size_t i = 0; i < outcomes.size(); ++i) {
        em.train_loss += outcomes[i].total;
        em.sup_loss += outcomes[i].sup;
        em.sub_loss += outcomes[i].sub;
        em.super_loss += outcomes[i].super_v;
        ++counted;
        if (batch_grads.empty()) {
          batch_grads = std::move(outcomes[i].grads);
        } else {
          for (size_t p = 0; p < batch_grads.size(); ++p) {
            if (batch_grads[p].is_complex())
              batch_grads[p].c += outcomes[i].grads[p].c;
            else
              batch_grads[p].r += outcomes[i].grads[p].r;
          }
        }
      }
      const Real inv = 1.0 / static_cast<Real>(outcomes.size());
      for (Tensor& g : batch_grads) {
        if (g.is_complex()) g.c *= inv; else g.r *= inv;
      }
      opt.step(model.params, batch_grads, lr);
    }

    em.train_loss /= static_cast<Real>(counted);
    em.sup_loss /= static_cast<Real>(counted);
    em.sub_loss /= static_cast<Real>(counted);
    em.super_loss /= static_cast<Real>(counted);
    em.seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0)
                     .count();

    if (!std::isfinite(em.train_loss)) {
      model.params = last_good;  // retain the last finite state
      result.model = std::move(model);
      result.diverged = true;
      return result;
    }
    last_good = model.params;
    result.history.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Real instance_rel_l2(const SinoModel& model, const PdeInstance& inst) {
  MatrixX pred = sino_eval(model, inst);
  const Tensor target = build_target(inst);
  return rel_l2(pred, target.r);
}

std::vector<ScaleEval> evaluate_across_scales(
    const SinoModel& model, const std::map<Real, std::vector<PdeInstance>>& by_scale,
    int threads) {
  std::vector<ScaleEval> table;
  const int nthr = resolve_threads(threads);
  for (const auto& [scale, instances] : by_scale) {
    ScaleEval row;
    row.scale = scale;
    row.count = static_cast<Index>(instances.size());
    std::vector<Real> errs(instances.size(), 0.0);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= instances.size()) return;
        errs[i] = instance_rel_l2(model, instances[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < std::min<int>(nthr, static_cast<int>(instances.size())); ++i)
      pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (Real e : errs) row.mean_rel_l2 += e;
    if (!errs.empty()) row.mean_rel_l2 /= static_cast<Real>(errs.size());
    table.push_back(row);
  }
  return table;
}

}  // namespace scaleop

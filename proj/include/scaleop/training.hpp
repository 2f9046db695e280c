#pragma once

#include "scaleop/augment.hpp"
#include "scaleop/sino.hpp"

#include <functional>
#include <map>

namespace scaleop {

/// ||pred - truth||_2 / ||truth||_2 over all grid points and channels.
Real rel_l2(const Field& pred, const Field& truth);
Real rel_l2(const CField& pred, const CField& truth);
Real rel_l2(const MatrixX& pred, const MatrixX& truth);

struct TrainConfig {
  Index epochs = 40;
  Index batch_size = 8;
  Real lr = 1e-3;
  bool cosine_decay = true;

  bool aug_sub = false;
  bool aug_super = false;
  bool aug_rot = false;
  bool aug_ref = false;
  std::vector<Real> lambda_set = {0.5, 0.75, 1.0};  // sub-crop fractions
  Real super_lambda = 2.0;
  Index super_res = 65;       // generation resolution for super-domain draws
  bool anneal_super = true;   // weight alpha = ep/ep_max
  bool detach_pseudo_label = true;
  Real sub_weight = 1.0;
  Real super_weight = 1.0;
  Index min_crop = 32;

  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency (capped at 8)

  void validate() const {
    require(epochs >= 1 && batch_size >= 1, "train config: sizes must be >= 1");
    for (Real l : lambda_set)
      require(l > 0.0 && l <= 1.0, "train config: sub lambdas must be in (0,1]");
    require(super_lambda > 1.0, "train config: super lambda must be > 1");
  }
};

/// Eq.-8 style data consistency loss: rel-L2 between the model on the crop's
/// inputs and the cropped ground-truth solution.
ad::Var consistency_loss_data(ad::Tape& tape, const SinoModel& model,
                              const std::vector<ad::Var>& pv,
                              const PdeInstance& inst, const CropSpec& crop);

/// Eq.-7 style self-supervised loss on one super-domain draw: RMS discrepancy
/// between the model on the crop and the pseudo-label. With
/// detach_pseudo_label = false the pseudo-label branch is re-evaluated on the
/// tape so gradients flow through it as well.
ad::Var consistency_loss_self(ad::Tape& tape, const SinoModel& model,
                              const std::vector<ad::Var>& pv,
                              const SuperSample& sample, bool detach);

struct EpochMetrics {
  Index epoch = 0;
  Real lr = 0.0;
  Real train_loss = 0.0;   // mean total loss per instance
  Real sup_loss = 0.0;
  Real sub_loss = 0.0;
  Real super_loss = 0.0;
  Real seconds = 0.0;
};

struct TrainResult {
  SinoModel model;
  std::vector<EpochMetrics> history;
  bool diverged = false;  // model holds the last finite state when set
};

/// Adam with cosine learning-rate decay. Complex parameters are updated on
/// their real/imag components.
class Adam {
 public:
  explicit Adam(const ParamStore& params, Real beta1 = 0.9, Real beta2 = 0.999,
                Real eps = 1e-8);
  void step(ParamStore& params, const std::vector<ad::Tensor>& grads, Real lr);

  Index steps() const { return t_; }
  const std::vector<VectorX>& m() const { return m_; }
  const std::vector<VectorX>& v() const { return v_; }
  void restore(Index t, std::vector<VectorX> m, std::vector<VectorX> v);

 private:
  Real beta1_, beta2_, eps_;
  Index t_ = 0;
  std::vector<VectorX> m_, v_;
};

using EpochHook = std::function<void(const EpochMetrics&)>;

/// Deterministic training loop. Augmented crops are drawn fresh each epoch
/// from counter-based streams, so disabling an augmentation does not perturb
/// the others and the supervised path is bit-identical to augmentation off.
TrainResult train(SinoModel model, const std::vector<PdeInstance>& dataset,
                  const TrainConfig& cfg, const EpochHook& on_epoch = nullptr);

struct ScaleEval {
  Real scale = 0.0;
  Real mean_rel_l2 = 0.0;
  Index count = 0;
};

/// Mean rel-L2 per scale-parameter bucket (Table-1-style row).
std::vector<ScaleEval> evaluate_across_scales(
    const SinoModel& model, const std::map<Real, std::vector<PdeInstance>>& by_scale,
    int threads = 0);

/// Prediction error of the model on one instance.
Real instance_rel_l2(const SinoModel& model, const PdeInstance& inst);

}  // namespace scaleop

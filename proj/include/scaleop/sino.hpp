#pragma once

#include "scaleop/params.hpp"
#include "scaleop/solvers.hpp"

namespace scaleop {

/// Architecture of the scale-informed spectral operator. The multi-band
/// levels follow C_l = 2^l C and M_l = 2^-l M, so for d = 2 every level has
/// the same size C_l^2 M_l^2. Level 0 may use the weight-sharing
/// parameterization (one C x C complex matrix across all modes, Eq.-9 style
/// with scale/frequency features); deeper levels always use per-mode tensors.
/// Plain FNO is the degenerate configuration: one level, tensor weights, no
/// embeddings, no spectral normalization.
struct ArchSpec {
  int rank = 2;
  Index channels = 16;    // C
  Index modes = 12;       // M per axis at level 0
  Index levels = 1;       // L
  Index layers = 3;       // T
  bool shared_level0 = false;
  bool scale_informed = false;
  bool freq_embedding = false;
  bool spectral_norm = false;  // group norm + complex GeLU inside level 0
  Real padding_fraction = 0.125;
  bool boundary_normalize = false;

  void validate() const {
    require(rank >= 1 && rank <= 3, "arch: rank in {1,2,3}");
    require(channels >= 1 && modes >= 1 && levels >= 1 && layers >= 1,
            "arch: sizes must be positive");
    require(level_modes(levels - 1) >= 1, "arch: M_{L-1} must be >= 1");
    require(modes % (Index(1) << (levels - 1)) == 0,
            "arch: M must be divisible by 2^(L-1)");
    require(padding_fraction >= 0.0, "arch: negative padding");
    if (scale_informed || freq_embedding)
      require(shared_level0, "arch: embeddings require the shared level 0");
  }

  Index level_channels(Index l) const { return channels << l; }
  Index level_modes(Index l) const { return modes >> l; }
};

/// All trainable tensors plus the architecture and I/O signature.
struct SinoModel {
  ArchSpec arch;
  Index in_channels = 0;
  Index out_channels = 1;
  ParamStore params;

  /// Deterministic initialization (Philox streams keyed by parameter index).
  static SinoModel init(const ArchSpec& arch, Index in_channels,
                        Index out_channels, std::uint64_t seed);
};

/// Scale features h(k)_i = k^(i/(C-1)), i = 0..C-1 (endpoints 1 and k exact).
VectorX scale_features(Real k, Index c);

/// Per-axis frequency features |xi|^(j/(C-1)), with 0^0 := 1.
VectorX freq_features(Index xi, Index c);

/// Number of model input channels for an equation signature.
Index input_channel_count(const PdeInstance& inst);

/// Stack the instance into model input channels (coefficients, extended
/// boundary traces, the scale parameter as log(k), positional grids).
ad::Tensor build_input(const PdeInstance& inst);

/// Supervised target: the solution as channels (complex solutions split into
/// real and imaginary parts).
ad::Tensor build_target(const PdeInstance& inst);

/// Root-mean-square of the Dirichlet data; the boundary-normalization factor.
Real boundary_rms(const PdeInstance& inst);

/// Forward pass on a tape. `param_vars` must come from
/// model.params.register_on(tape).
ad::Var sino_forward(ad::Tape& tape, const SinoModel& model,
                     const std::vector<ad::Var>& param_vars,
                     const PdeInstance& inst);

/// Plain evaluation (no gradients): prediction channels on the instance grid.
MatrixX sino_eval(const SinoModel& model, const PdeInstance& inst);

/// Attach sino_eval output to an instance copy as its solution estimate.
void sino_label(const SinoModel& model, PdeInstance& inst);

// Exposed for tests: the two spectral transforms of one truncated spectrum.
ad::Var spectral_conv_shared(ad::Tape& t, ad::Var fhat, ad::Var r_shared,
                             ad::Var embedding /*invalid Var = off*/,
                             ad::Var gamma, ad::Var beta, bool norm_act);
ad::Var spectral_conv_tensor(ad::Tape& t, ad::Var fhat, ad::Var r_tensor);

/// One layer's multi-band spectral processing of the truncated level-0
/// spectrum z0 (the surrounding fft/ifft and the pointwise path live in
/// sino_forward). `skips_in` holds the previous layer's pyramid (empty on the
/// first layer); the new pyramid is written to `pyramid_out`.
struct UshapeWeights {
  ad::Var level0_r;
  ad::Var embedding;  // invalid = off
  ad::Var gamma, beta;
  bool norm_act = false;
  bool shared_level0 = false;
  std::vector<ad::Var> down_r, up_r;  // levels-1 entries each
};
ad::Var ushape_layer(ad::Tape& t, const ArchSpec& arch, const UshapeWeights& w,
                     ad::Var z0, const std::vector<ad::Var>& skips_in,
                     std::vector<ad::Var>* pyramid_out);

}  // namespace scaleop

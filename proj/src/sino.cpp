#include "scaleop/sino.hpp"

#include "scaleop/fft_utils.hpp"
#include "scaleop/rng.hpp"

#include <unordered_map>

namespace scaleop {

using ad::Tape;
using ad::Tensor;
using ad::Var;

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

VectorX scale_features(Real k, Index c) {
  if (k <= 0.0) throw DomainError("scale_features: k must be > 0");
  require(c >= 2, "scale_features: needs at least 2 channels");
  VectorX h(c);
  h[0] = 1.0;
  h[c - 1] = k;  // endpoints exact by construction
  for (Index i = 1; i + 1 < c; ++i)
    h[i] = std::pow(k, static_cast<Real>(i) / static_cast<Real>(c - 1));
  return h;
}

VectorX freq_features(Index xi, Index c) {
  require(c >= 2, "freq_features: needs at least 2 channels");
  const Real m = std::abs(static_cast<Real>(xi));
  VectorX h(c);
  h[0] = 1.0;  // 0^0 := 1
  for (Index i = 1; i < c; ++i)
    h[i] = (m == 0.0) ? 0.0
                      : std::pow(m, static_cast<Real>(i) / static_cast<Real>(c - 1));
  return h;
}

// ---------------------------------------------------------------------------
// Input/target assembly
// ---------------------------------------------------------------------------

namespace {

std::vector<Index> dims_of(const Domain& d) {
  std::vector<Index> dims(d.naxes());
  for (int a = 0; a < d.naxes(); ++a) dims[a] = d.axes[a].res;
  return dims;
}

// Walk row-major multi-indices.
template <class Fn>
void walk(const std::vector<Index>& dims, Fn&& fn) {
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

// Extend a boundary face over the whole grid by repeating along its axis.
template <class Scalar>
void extend_face(const Domain& d, const FaceT<Scalar>& face,
                 Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) {
  std::vector<Index> dims = dims_of(d);
  std::vector<Index> fdims = dims;
  fdims.erase(fdims.begin() + face.axis);
  out.resize(d.npoints());
  walk(dims, [&](Index f, const std::vector<Index>& idx) {
    Index ff = 0;
    for (int a = 0; a < d.naxes(); ++a) {
      if (a == face.axis) continue;
      ff = ff * dims[a] + idx[a];
    }
    out[f] = face.values(ff, 0);
  });
}

struct ChannelStack {
  MatrixX m;
  Index col = 0;
  void add(const VectorX& v) { m.col(col++) = v; }
};

// Positional channels: normalized index per axis.
void add_positions(ChannelStack& cs, const Domain& d) {
  std::vector<Index> dims = dims_of(d);
  for (int a = 0; a < d.naxes(); ++a) {
    VectorX pos(d.npoints());
    const Real denom = static_cast<Real>(d.axes[a].cell_start ? dims[a]
                                                              : dims[a] - 1);
    walk(dims, [&](Index f, const std::vector<Index>& idx) {
      pos[f] = static_cast<Real>(idx[a]) / denom;
    });
    cs.add(pos);
  }
}

Index face_channel_count(const PdeInstance& inst) {
  switch (inst.equation) {
    case Equation::Darcy: return 4;
    case Equation::Helmholtz: return 8;  // complex faces split re/im
    case Equation::Burgers: return 3;    // two end series + initial row
    case Equation::NavierStokes:
      return inst.domain.has_time ? 4 : 0;  // space-time: spatial faces
  }
  return 0;
}

}  // namespace

Index input_channel_count(const PdeInstance& inst) {
  Index n = face_channel_count(inst) + 1 /*k*/ + inst.domain.naxes() /*pos*/;
  if (inst.a) n += 1;
  if (inst.f) n += 1;
  if (inst.history) n += inst.history->channels();
  if (inst.equation == Equation::NavierStokes && inst.domain.has_time)
    n += 1;  // first-half trajectory channel
  return n;
}

ad::Tensor build_input(const PdeInstance& inst) {
  const Domain& d = inst.domain;
  const Index n = d.npoints();
  ChannelStack cs;
  cs.m.resize(n, input_channel_count(inst));

  if (inst.a) {
    // two-phase Darcy media {2, 12} map to {-1, +1}; smooth coefficients land
    // at the same order of magnitude
    if (inst.equation == Equation::Darcy)
      cs.add((inst.a->values.col(0).array() - 7.0) / 5.0);
    else
      cs.add(inst.a->values.col(0));
  }
  if (inst.f) cs.add(inst.f->values.col(0));

  auto faces_of = [&](int axis, bool high) {
    VectorX ext;
    if (inst.gc) {
      Eigen::Matrix<Complex, Eigen::Dynamic, 1> cext;
      extend_face<Complex>(d, inst.gc->face(axis, high), cext);
      cs.add(cext.real());
      cs.add(cext.imag());
    } else {
      extend_face<Real>(d, inst.g->face(axis, high), ext);
      cs.add(ext);
    }
  };

  switch (inst.equation) {
    case Equation::Darcy:
    case Equation::Helmholtz:
      for (int axis = 0; axis < 2; ++axis)
        for (bool high : {false, true}) faces_of(axis, high);
      break;
    case Equation::Burgers:
      faces_of(0, false);
      faces_of(0, true);
      faces_of(1, false);  // initial row; the final row is the unknown
      break;
    case Equation::NavierStokes:
      if (d.has_time) {
        // known first half of the trajectory, zero afterwards
        require(inst.u.has_value(), "build_input: space-time NS needs the block");
        const Index nt = d.axes.back().res;
        VectorX first = inst.u->values.col(0);
        std::vector<Index> dims = dims_of(d);
        walk(dims, [&](Index f, const std::vector<Index>& idx) {
          if (idx.back() >= nt / 2) first[f] = 0.0;
        });
        cs.add(first);
        // observed spatial boundaries of the whole block
        BoundaryTrace tr = boundary_trace(*inst.u);
        for (int axis = 0; axis < 2; ++axis)
          for (bool high : {false, true}) {
            VectorX ext;
            extend_face<Real>(d, tr.face(axis, high), ext);
            cs.add(ext);
          }
      }
      break;
  }

  if (inst.history)
    for (Index c = 0; c < inst.history->channels(); ++c)
      cs.add(inst.history->values.col(c));

  // scale parameter as a constant channel; log keeps the range sane
  cs.add(VectorX::Constant(n, std::log(std::max(inst.k, 1e-12))));
  add_positions(cs, d);
  require(cs.col == cs.m.cols(), "build_input: channel count mismatch");
  return Tensor::from_real(dims_of(d), std::move(cs.m));
}

ad::Tensor build_target(const PdeInstance& inst) {
  const std::vector<Index> dims = dims_of(inst.domain);
  if (inst.uc) {
    MatrixX t(inst.uc->npoints(), 2);
    t.col(0) = inst.uc->values.col(0).real();
    t.col(1) = inst.uc->values.col(0).imag();
    return Tensor::from_real(dims, std::move(t));
  }
  require(inst.u.has_value(), "build_target: instance has no solution");
  return Tensor::from_real(dims, MatrixX(inst.u->values.col(0)));
}

Real boundary_rms(const PdeInstance& inst) {
  Real sum = 0.0;
  Index count = 0;
  if (inst.gc) {
    for (const auto& f : inst.gc->faces) {
      sum += f.values.squaredNorm();
      count += f.values.size();
    }
  } else if (inst.g) {
    for (const auto& f : inst.g->faces) {
      sum += f.values.squaredNorm();
      count += f.values.size();
    }
  }
  if (count == 0) return 1.0;
  return std::sqrt(sum / static_cast<Real>(count));
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace {

Tensor random_real_tensor(std::vector<Index> dims, Index ch, Real std,
                          Philox& rng) {
  Tensor t = Tensor::real(std::move(dims), ch);
  for (Index j = 0; j < t.r.cols(); ++j)
    for (Index i = 0; i < t.r.rows(); ++i) t.r(i, j) = std * rng.normal();
  return t;
}

Tensor random_complex_tensor(std::vector<Index> dims, Index ch, Real std,
                             Philox& rng) {
  Tensor t = Tensor::complex(std::move(dims), ch);
  for (Index j = 0; j < t.c.cols(); ++j)
    for (Index i = 0; i < t.c.rows(); ++i) {
      auto g = rng.normal2();
      t.c(i, j) = std * M_SQRT1_2 * Complex(g[0], g[1]);
    }
  return t;
}

Index modes_total(const ArchSpec& arch, Index level) {
  Index m = 1;
  for (int a = 0; a < arch.rank; ++a) m *= 2 * arch.level_modes(level) - 1;
  return m;
}

Index embed_feature_dim(const ArchSpec& arch) {
  Index fd = 0;
  if (arch.scale_informed) fd += arch.channels;
  if (arch.freq_embedding) fd += arch.rank * arch.channels;
  return fd;
}

}  // namespace

SinoModel SinoModel::init(const ArchSpec& arch, Index in_channels,
                          Index out_channels, std::uint64_t seed) {
  arch.validate();
  require(in_channels >= 1 && out_channels >= 1, "sino: bad channel counts");
  SinoModel m;
  m.arch = arch;
  m.in_channels = in_channels;
  m.out_channels = out_channels;

  std::uint64_t stream = 0;
  auto rngs = [&]() { return Philox(seed, stream++); };

  const Index C = arch.channels;
  {
    Philox r = rngs();
    m.params.add("encoder.w",
                 random_real_tensor({in_channels}, C, std::sqrt(2.0 / in_channels), r));
    m.params.add("encoder.b", Tensor::real({1}, C));
  }
  const bool use_embed = arch.scale_informed || arch.freq_embedding;
  // scale-only features multiply the spectrum directly; frequency features
  // are concatenated and reduced to C by a learned complex map
  const bool project_embed = arch.freq_embedding;

  for (Index t = 0; t < arch.layers; ++t) {
    const std::string lp = "layer" + std::to_string(t) + ".";
    const Real spec_std =
        1.0 / (static_cast<Real>(C) *
               std::sqrt(std::sqrt(static_cast<Real>(modes_total(arch, 0)))));
    if (arch.shared_level0) {
      Philox r = rngs();
      m.params.add(lp + "level0.r",
                   random_complex_tensor({C}, C, 1.0 / std::sqrt(static_cast<Real>(C)), r));
    } else {
      Philox r = rngs();
      m.params.add(lp + "level0.r",
                   random_complex_tensor({modes_total(arch, 0), C}, C, spec_std, r));
    }
    if (use_embed && project_embed) {
      Philox r = rngs();
      const Index fd = embed_feature_dim(arch);
      m.params.add(lp + "embed",
                   random_complex_tensor({fd}, C, 1.0 / std::sqrt(static_cast<Real>(fd)), r));
    }
    if (arch.spectral_norm) {
      Tensor gamma = Tensor::complex({1}, C);
      gamma.c.setConstant(Complex(1.0, 0.0));
      m.params.add(lp + "gn.gamma", gamma);
      m.params.add(lp + "gn.beta", Tensor::complex({1}, C));
    }
    for (Index l = 1; l < arch.levels; ++l) {
      const Index cin = arch.level_channels(l - 1);
      const Index cout = arch.level_channels(l);
      const Index mt = modes_total(arch, l);
      const Real dstd = 1.0 / std::sqrt(static_cast<Real>(cin));
      Philox r1 = rngs();
      m.params.add(lp + "down" + std::to_string(l) + ".r",
                   random_complex_tensor({mt, cin}, cout, dstd, r1));
      Philox r2 = rngs();
      m.params.add(lp + "up" + std::to_string(l) + ".r",
                   random_complex_tensor({mt, cout}, cin,
                                         1.0 / std::sqrt(static_cast<Real>(cout)), r2));
    }
    Philox rw = rngs();
    m.params.add(lp + "w", random_real_tensor({C}, C, std::sqrt(1.0 / C), rw));
    m.params.add(lp + "b", Tensor::real({1}, C));
  }
  {
    Philox r1 = rngs();
    m.params.add("decoder.w1", random_real_tensor({C}, C, std::sqrt(2.0 / C), r1));
    m.params.add("decoder.b1", Tensor::real({1}, C));
    Philox r2 = rngs();
    m.params.add("decoder.w2",
                 random_real_tensor({C}, out_channels, std::sqrt(1.0 / C), r2));
    m.params.add("decoder.b2", Tensor::real({1}, out_channels));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

Var spectral_conv_shared(Tape& t, Var fhat, Var r_shared, Var embedding,
                         Var gamma, Var beta, bool norm_act) {
  Var zin = embedding.valid() ? ad::mul(t, fhat, embedding) : fhat;
  Var y = ad::matmul(t, zin, r_shared);
  if (norm_act) y = ad::cgelu(t, ad::group_norm(t, y, gamma, beta));
  return y;
}

Var spectral_conv_tensor(Tape& t, Var fhat, Var r_tensor) {
  return ad::mode_matmul(t, fhat, r_tensor);
}

Var ushape_layer(Tape& t, const ArchSpec& arch, const UshapeWeights& w, Var z0,
                 const std::vector<Var>& skips_in,
                 std::vector<Var>* pyramid_out) {
  const size_t rank = t.value(z0).dims.size();
  if (!skips_in.empty()) z0 = ad::add(t, z0, skips_in[0]);

  Var s0 = w.shared_level0
               ? spectral_conv_shared(t, z0, w.level0_r, w.embedding, w.gamma,
                                      w.beta, w.norm_act)
               : spectral_conv_tensor(t, z0, w.level0_r);

  std::vector<Var> pyr(arch.levels);
  pyr[0] = z0;
  for (Index l = 1; l < arch.levels; ++l) {
    std::vector<Index> keepl(rank, arch.level_modes(l));
    Var tl = ad::mode_truncate(t, pyr[l - 1], keepl);
    Var dl = ad::cgelu(t, ad::mode_matmul(t, tl, w.down_r[l - 1]));
    if (!skips_in.empty()) dl = ad::add(t, dl, skips_in[l]);
    pyr[l] = dl;
  }

  Var u = (arch.levels == 1) ? s0 : pyr[arch.levels - 1];
  for (Index l = arch.levels - 1; l >= 1; --l) {
    Var y = ad::cgelu(t, ad::mode_matmul(t, u, w.up_r[l - 1]));
    Var base = (l == 1) ? s0 : pyr[l - 1];
    std::vector<Index> wider(rank, 2 * arch.level_modes(l - 1) - 1);
    u = ad::add(t, base, ad::mode_pad(t, y, wider));
  }
  if (pyramid_out) *pyramid_out = std::move(pyr);
  return u;
}

namespace {

// Constant embedding features for the truncated level-0 spectrum:
// rows follow the wrapped truncated order, columns are [scale | freq-axis0 |
// freq-axis1 | ...] blocks of width C each.
MatrixX embedding_features(const ArchSpec& arch, Real k,
                           const std::vector<Index>& keep) {
  const Index C = arch.channels;
  std::vector<Index> tdims(keep.size());
  for (size_t a = 0; a < keep.size(); ++a) tdims[a] = 2 * keep[a] - 1;
  Index rows = 1;
  for (Index d : tdims) rows *= d;
  const Index fd = embed_feature_dim(arch);
  MatrixX feat(rows, fd);

  VectorX hscale;
  if (arch.scale_informed) hscale = scale_features(k, C);
  walk(tdims, [&](Index f, const std::vector<Index>& idx) {
    Index col = 0;
    if (arch.scale_informed)
      for (Index i = 0; i < C; ++i) feat(f, col++) = hscale[i];
    if (arch.freq_embedding)
      for (size_t a = 0; a < keep.size(); ++a) {
        const Index kban = keep[a];
        const Index freq = idx[a] < kban ? idx[a] : idx[a] - (2 * kban - 1);
        VectorX hf = freq_features(freq, C);
        for (Index i = 0; i < C; ++i) feat(f, col++) = hf[i];
      }
  });
  return feat;
}

}  // namespace

Var sino_forward(Tape& tape, const SinoModel& model,
                 const std::vector<Var>& param_vars, const PdeInstance& inst) {
  const ArchSpec& arch = model.arch;
  arch.validate();
  require(arch.rank == inst.domain.naxes(),
          "sino_forward: arch rank does not match the instance grid");
  require(param_vars.size() == model.params.size(),
          "sino_forward: parameter variables out of sync");

  std::unordered_map<std::string, Var> pv;
  for (size_t i = 0; i < param_vars.size(); ++i)
    pv[model.params.item(i).first] = param_vars[i];
  auto P = [&](const std::string& name) {
    auto it = pv.find(name);
    require(it != pv.end(), "sino_forward: missing parameter " + name);
    return it->second;
  };

  ad::Tensor input = build_input(inst);
  require(input.channels == model.in_channels,
          "sino_forward: instance signature does not match the model");
  const std::vector<Index> dims = input.dims;

  // encoder
  Var cur = ad::bias_add(tape, ad::matmul(tape, tape.input(std::move(input)),
                                          P("encoder.w")),
                         P("encoder.b"));

  // domain padding on non-periodic axes, rounded to FFT-friendly sizes
  std::vector<Index> padded(dims.size()), pads(dims.size());
  for (size_t a = 0; a < dims.size(); ++a) {
    if (inst.domain.axes[a].periodic || arch.padding_fraction == 0.0) {
      padded[a] = dims[a];
    } else {
      const Index want =
          dims[a] + static_cast<Index>(std::ceil(arch.padding_fraction *
                                                 static_cast<Real>(dims[a])));
      padded[a] = fftops::next_smooth(want);
    }
    pads[a] = padded[a] - dims[a];
    require(padded[a] >= 2 * arch.modes - 1,
            "sino_forward: grid too coarse for the mode count");
  }
  bool any_pad = false;
  for (Index p : pads) any_pad = any_pad || p > 0;
  if (any_pad) cur = ad::spatial_pad(tape, cur, pads);

  const std::vector<Index> keep0(dims.size(), arch.modes);

  // constant embedding features (shared by all layers)
  Var feat;
  const bool use_embed = arch.scale_informed || arch.freq_embedding;
  const bool project_embed = model.params.has("layer0.embed");
  if (use_embed) {
    MatrixX f = embedding_features(arch, inst.k, keep0);
    std::vector<Index> tdims(dims.size(), 2 * arch.modes - 1);
    feat = tape.input(Tensor::from_complex(tdims, f.cast<Complex>()));
  }

  std::vector<Var> skips;  // pyramid tensors from the previous layer
  for (Index t = 0; t < arch.layers; ++t) {
    const std::string lp = "layer" + std::to_string(t) + ".";

    Var fhat = ad::fft_nd(tape, cur);
    Var z0 = ad::mode_truncate(tape, fhat, keep0);

    UshapeWeights w;
    w.shared_level0 = arch.shared_level0;
    w.norm_act = arch.spectral_norm;
    w.level0_r = P(lp + "level0.r");
    if (use_embed)
      w.embedding = project_embed ? ad::matmul(tape, feat, P(lp + "embed")) : feat;
    if (arch.spectral_norm) {
      w.gamma = P(lp + "gn.gamma");
      w.beta = P(lp + "gn.beta");
    }
    for (Index l = 1; l < arch.levels; ++l) {
      w.down_r.push_back(P(lp + "down" + std::to_string(l) + ".r"));
      w.up_r.push_back(P(lp + "up" + std::to_string(l) + ".r"));
    }

    // Fourier-space skip connections belong to the multi-band structure; a
    // single-level stack is a plain FNO layer without them.
    std::vector<Var> pyr;
    Var u = ushape_layer(tape, arch, w, z0, arch.levels > 1 ? skips : std::vector<Var>{}, &pyr);

    Var spec = ad::real_part(tape, ad::ifft_nd(tape, ad::mode_pad(tape, u, padded)));
    Var wpath = ad::bias_add(tape, ad::matmul(tape, cur, P(lp + "w")), P(lp + "b"));
    Var pre = ad::add(tape, wpath, spec);
    cur = (t + 1 < arch.layers) ? ad::gelu(tape, pre) : pre;

    skips = std::move(pyr);
  }

  if (any_pad) cur = ad::spatial_crop(tape, cur, dims);

  Var q = ad::gelu(tape, ad::bias_add(tape, ad::matmul(tape, cur, P("decoder.w1")),
                                      P("decoder.b1")));
  Var out = ad::bias_add(tape, ad::matmul(tape, q, P("decoder.w2")),
                         P("decoder.b2"));
  if (arch.boundary_normalize) out = ad::scale(tape, out, boundary_rms(inst));
  return out;
}

MatrixX sino_eval(const SinoModel& model, const PdeInstance& inst) {
  Tape tape;
  std::vector<Var> pv = model.params.register_on(tape, /*trainable=*/false);
  Var out = sino_forward(tape, model, pv, inst);
  return tape.value(out).r;
}

void sino_label(const SinoModel& model, PdeInstance& inst) {
  MatrixX out = sino_eval(model, inst);
  if (inst.equation == Equation::Helmholtz) {
    require(out.cols() == 2, "sino_label: helmholtz model must emit 2 channels");
    CField u(inst.domain, 1);
    for (Index i = 0; i < out.rows(); ++i)
      u.values(i, 0) = Complex(out(i, 0), out(i, 1));
    inst.uc = std::move(u);
  } else {
    Field u(inst.domain, 1);
    u.values.col(0) = out.col(0);
    inst.u = std::move(u);
  }
}

}  // namespace scaleop

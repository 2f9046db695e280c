#include "scaleop/autodiff.hpp"

#include "scaleop/fft_utils.hpp"

#include <memory>

namespace scaleop {
namespace ad {

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::real(std::vector<Index> dims, Index channels) {
  Tensor t;
  t.dims = std::move(dims);
  t.channels = channels;
  t.dtype = Dtype::Real;
  t.r.setZero(t.rows(), channels);
  return t;
}

Tensor Tensor::complex(std::vector<Index> dims, Index channels) {
  Tensor t;
  t.dims = std::move(dims);
  t.channels = channels;
  t.dtype = Dtype::Complex;
  t.c.setZero(t.rows(), channels);
  return t;
}

Tensor Tensor::scalar(Real v) {
  Tensor t = Tensor::real({}, 1);
  t.r(0, 0) = v;
  return t;
}

Tensor Tensor::from_real(std::vector<Index> dims, MatrixX values) {
  Tensor t;
  t.dims = std::move(dims);
  t.channels = values.cols();
  t.dtype = Dtype::Real;
  t.r = std::move(values);
  require(t.r.rows() == t.rows(), "tensor: dims do not match value rows");
  return t;
}

Tensor Tensor::from_complex(std::vector<Index> dims, MatrixXc values) {
  Tensor t;
  t.dims = std::move(dims);
  t.channels = values.cols();
  t.dtype = Dtype::Complex;
  t.c = std::move(values);
  require(t.c.rows() == t.rows(), "tensor: dims do not match value rows");
  return t;
}

Real Tensor::scalar_value() const {
  require(!is_complex() && numel() == 1, "tensor: not a real scalar");
  return r(0, 0);
}

void Tensor::check() const {
  if (is_complex())
    require(c.allFinite(), "tensor: non-finite complex values");
  else
    require(r.allFinite(), "tensor: non-finite values");
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Var Tape::emit(Tensor value, bool requires_grad,
               std::function<void(Tape&, const Tensor&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<Index>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) { return emit(std::move(value), false, nullptr); }

Var Tape::param(Tensor value) {
  Var v = emit(std::move(value), true, nullptr);
  params_.push_back(v.id);
  return v;
}

Tape::Node& Tape::node(Index id) { return nodes_.at(id); }
const Tape::Node& Tape::node(Index id) const { return nodes_.at(id); }

void Tape::accumulate(Var v, const MatrixX& g) {
  Node& n = node(v.id);
  if (!n.requires_grad) return;
  require(!n.value.is_complex(), "autodiff: real gradient for complex node");
  if (!n.has_grad) {
    // first touch: copy instead of zero-fill plus add
    n.grad.dims = n.value.dims;
    n.grad.channels = n.value.channels;
    n.grad.dtype = Dtype::Real;
    n.grad.r = g;
    n.has_grad = true;
    return;
  }
  n.grad.r += g;
}

void Tape::accumulate(Var v, const MatrixXc& g) {
  Node& n = node(v.id);
  if (!n.requires_grad) return;
  require(n.value.is_complex(), "autodiff: complex gradient for real node");
  if (!n.has_grad) {
    n.grad.dims = n.value.dims;
    n.grad.channels = n.value.channels;
    n.grad.dtype = Dtype::Complex;
    n.grad.c = g;
    n.has_grad = true;
    return;
  }
  n.grad.c += g;
}

void Tape::backward(Var loss) {
  require(!ran_backward_, "autodiff: tape backward already ran");
  ran_backward_ = true;
  const Node& ln = node(loss.id);
  require(!ln.value.is_complex() && ln.value.numel() == 1,
          "autodiff: loss must be a real scalar");
  accumulate(loss, MatrixX(MatrixX::Constant(1, 1, 1.0)));
  for (Index i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backprop) n.backprop(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (n.has_grad) return n.grad;
  return n.value.is_complex() ? Tensor::complex(n.value.dims, n.value.channels)
                              : Tensor::real(n.value.dims, n.value.channels);
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) throw ShapeError(std::string(who) + ": shape mismatch");
}

void check_dtype(const Tensor& a, const Tensor& b, const char* who) {
  if (a.dtype != b.dtype)
    throw ShapeError(std::string(who) + ": dtype mix without explicit cast");
}

Real gelu_fn(Real x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
Real gelu_grad(Real x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

}  // namespace

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

Var add(Tape& t, Var a, Var b) {
  const Tensor& ta = t.value(a);
  const Tensor& tb = t.value(b);
  check_same_shape(ta, tb, "add");
  Tensor out = ta;
  if (out.is_complex()) out.c += tb.c; else out.r += tb.r;
  bool rg = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    if (g.is_complex()) {
      tp.accumulate(a, g.c);
      tp.accumulate(b, g.c);
    } else {
      tp.accumulate(a, g.r);
      tp.accumulate(b, g.r);
    }
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& ta = t.value(a);
  const Tensor& tb = t.value(b);
  check_same_shape(ta, tb, "sub");
  Tensor out = ta;
  if (out.is_complex()) out.c -= tb.c; else out.r -= tb.r;
  bool rg = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    if (g.is_complex()) {
      tp.accumulate(a, g.c);
      tp.accumulate(b, MatrixXc(-g.c));
    } else {
      tp.accumulate(a, g.r);
      tp.accumulate(b, MatrixX(-g.r));
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& ta = t.value(a);
  const Tensor& tb = t.value(b);
  check_same_shape(ta, tb, "mul");
  Tensor out = ta;
  if (out.is_complex())
    out.c = ta.c.cwiseProduct(tb.c);
  else
    out.r = ta.r.cwiseProduct(tb.r);
  bool rg = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), rg, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& va = tp.value(a);
    const Tensor& vb = tp.value(b);
    if (g.is_complex()) {
      tp.accumulate(a, MatrixXc(vb.c.conjugate().cwiseProduct(g.c)));
      tp.accumulate(b, MatrixXc(va.c.conjugate().cwiseProduct(g.c)));
    } else {
      tp.accumulate(a, MatrixX(vb.r.cwiseProduct(g.r)));
      tp.accumulate(b, MatrixX(va.r.cwiseProduct(g.r)));
    }
  });
}

Var scale(Tape& t, Var a, Real s) {
  Tensor out = t.value(a);
  if (out.is_complex()) out.c *= s; else out.r *= s;
  return t.emit(std::move(out), t.needs_grad(a), [a, s](Tape& tp, const Tensor& g) {
    if (g.is_complex())
      tp.accumulate(a, MatrixXc(s * g.c));
    else
      tp.accumulate(a, MatrixX(s * g.r));
  });
}

// ---------------------------------------------------------------------------
// Linear maps
// ---------------------------------------------------------------------------

Var matmul(Tape& t, Var x, Var w) {
  const Tensor& tx = t.value(x);
  const Tensor& tw = t.value(w);
  check_dtype(tx, tw, "matmul");
  require(tx.channels == tw.rows(), "matmul: inner dimensions disagree");
  Tensor out;
  if (tx.is_complex())
    out = Tensor::from_complex(tx.dims, tx.c * tw.c);
  else
    out = Tensor::from_real(tx.dims, tx.r * tw.r);
  bool rg = t.needs_grad(x) || t.needs_grad(w);
  return t.emit(std::move(out), rg, [x, w](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const Tensor& vw = tp.value(w);
    if (g.is_complex()) {
      if (tp.needs_grad(x)) tp.accumulate(x, MatrixXc(g.c * vw.c.adjoint()));
      if (tp.needs_grad(w)) tp.accumulate(w, MatrixXc(vx.c.adjoint() * g.c));
    } else {
      if (tp.needs_grad(x)) tp.accumulate(x, MatrixX(g.r * vw.r.transpose()));
      if (tp.needs_grad(w)) tp.accumulate(w, MatrixX(vx.r.transpose() * g.r));
    }
  });
}

namespace {

// Per-mode contraction y[m, co] = sum_ci x[m, ci] W[m, ci, co], evaluated one
// output channel at a time over the whole mode block (the weight memory for a
// fixed co is a contiguous [modes x Cin] row-major slab).
template <class Mat>
void mode_contract(const Mat& x, const Mat& w, Index modes, Index cin, Mat& y) {
  using Scalar = typename Mat::Scalar;
  for (Index co = 0; co < y.cols(); ++co) {
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        wco(w.col(co).data(), modes, cin);
    y.col(co) = (x.array() * wco.array()).rowwise().sum();
  }
}

}  // namespace

Var mode_matmul(Tape& t, Var x, Var w) {
  const Tensor& tx = t.value(x);
  const Tensor& tw = t.value(w);
  check_dtype(tx, tw, "mode_matmul");
  const Index modes = tx.rows();
  const Index cin = tx.channels;
  const Index cout = tw.channels;
  require(tw.rows() == modes * cin,
          "mode_matmul: weight must have modes*Cin rows");
  Tensor out;
  if (tx.is_complex()) {
    MatrixXc y(modes, cout);
    mode_contract(tx.c, tw.c, modes, cin, y);
    out = Tensor::from_complex(tx.dims, std::move(y));
  } else {
    MatrixX y(modes, cout);
    mode_contract(tx.r, tw.r, modes, cin, y);
    out = Tensor::from_real(tx.dims, std::move(y));
  }
  bool rg = t.needs_grad(x) || t.needs_grad(w);
  return t.emit(std::move(out), rg, [x, w, modes, cin](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const Tensor& vw = tp.value(w);
    if (g.is_complex()) {
      if (tp.needs_grad(x)) {
        MatrixXc gx = MatrixXc::Zero(modes, cin);
        for (Index co = 0; co < g.c.cols(); ++co) {
          Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>
              wco(vw.c.col(co).data(), modes, cin);
          gx.array() += wco.array().conjugate().colwise() * g.c.col(co).array();
        }
        tp.accumulate(x, gx);
      }
      if (tp.needs_grad(w)) {
        MatrixXc gw(vw.c.rows(), vw.c.cols());
        for (Index co = 0; co < g.c.cols(); ++co) {
          Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
              gwco(gw.col(co).data(), modes, cin);
          gwco.array() = vx.c.array().conjugate().colwise() * g.c.col(co).array();
        }
        tp.accumulate(w, gw);
      }
    } else {
      if (tp.needs_grad(x)) {
        MatrixX gx = MatrixX::Zero(modes, cin);
        for (Index co = 0; co < g.r.cols(); ++co) {
          Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>
              wco(vw.r.col(co).data(), modes, cin);
          gx.array() += wco.array().colwise() * g.r.col(co).array();
        }
        tp.accumulate(x, gx);
      }
      if (tp.needs_grad(w)) {
        MatrixX gw(vw.r.rows(), vw.r.cols());
        for (Index co = 0; co < g.r.cols(); ++co) {
          Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
              gwco(gw.col(co).data(), modes, cin);
          gwco.array() = vx.r.array().colwise() * g.r.col(co).array();
        }
        tp.accumulate(w, gw);
      }
    }
  });
}

Var bias_add(Tape& t, Var x, Var b) {
  const Tensor& tx = t.value(x);
  const Tensor& tb = t.value(b);
  check_dtype(tx, tb, "bias_add");
  require(tb.rows() == 1 && tb.channels == tx.channels,
          "bias_add: bias must be [1, C]");
  Tensor out = tx;
  if (out.is_complex())
    out.c.rowwise() += tb.c.row(0);
  else
    out.r.rowwise() += tb.r.row(0);
  bool rg = t.needs_grad(x) || t.needs_grad(b);
  return t.emit(std::move(out), rg, [x, b](Tape& tp, const Tensor& g) {
    if (g.is_complex()) {
      tp.accumulate(x, g.c);
      tp.accumulate(b, MatrixXc(g.c.colwise().sum()));
    } else {
      tp.accumulate(x, g.r);
      tp.accumulate(b, MatrixX(g.r.colwise().sum()));
    }
  });
}

// ---------------------------------------------------------------------------
// Nonlinearities and normalization
// ---------------------------------------------------------------------------

Var gelu(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(!tx.is_complex(), "gelu: real input expected (use cgelu)");
  // cache Phi(x) = (1 + erf(x/sqrt 2))/2 for the backward pass
  auto phi = std::make_shared<MatrixX>(
      tx.r.unaryExpr([](Real v) { return 0.5 * (1.0 + std::erf(v * M_SQRT1_2)); }));
  Tensor out = tx;
  out.r = tx.r.cwiseProduct(*phi);
  return t.emit(std::move(out), t.needs_grad(x), [x, phi](Tape& tp, const Tensor& g) {
    const MatrixX& v = tp.value(x).r;
    const Real c = 1.0 / std::sqrt(2.0 * M_PI);
    MatrixX d = *phi + v.cwiseProduct(
                           (-0.5 * v.array().square()).exp().matrix()) * c;
    tp.accumulate(x, MatrixX(d.cwiseProduct(g.r)));
  });
}

Var cgelu(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(tx.is_complex(), "cgelu: complex input expected");
  Tensor out = tx;
  out.c = tx.c.unaryExpr([](Complex z) {
    return Complex(gelu_fn(z.real()), gelu_fn(z.imag()));
  });
  return t.emit(std::move(out), t.needs_grad(x), [x](Tape& tp, const Tensor& g) {
    const MatrixXc& v = tp.value(x).c;
    MatrixXc gx(v.rows(), v.cols());
    for (Index j = 0; j < v.cols(); ++j)
      for (Index i = 0; i < v.rows(); ++i) {
        const Complex z = v(i, j);
        const Complex gy = g.c(i, j);
        gx(i, j) = Complex(gelu_grad(z.real()) * gy.real(),
                           gelu_grad(z.imag()) * gy.imag());
      }
    tp.accumulate(x, gx);
  });
}

namespace {

// One-group normalization over channels per row, complex or real scalar type.
template <class Mat>
struct GnCache {
  Mat zhat;
  VectorX inv_std;
};

template <class Scalar>
Var group_norm_impl(Tape& t, Var x, Var gamma, Var beta, Real eps) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Tensor& tx = t.value(x);
  const Tensor& tg = t.value(gamma);
  const Tensor& tb = t.value(beta);
  require(tg.rows() == 1 && tg.channels == tx.channels &&
              tb.rows() == 1 && tb.channels == tx.channels,
          "group_norm: gamma/beta must be [1, C]");
  const Index n = tx.rows();
  const Index cdim = tx.channels;

  const Mat& xin = [&]() -> const Mat& {
    if constexpr (is_complex_v<Scalar>) return tx.c; else return tx.r;
  }();
  const Mat& gam = [&]() -> const Mat& {
    if constexpr (is_complex_v<Scalar>) return tg.c; else return tg.r;
  }();
  const Mat& bet = [&]() -> const Mat& {
    if constexpr (is_complex_v<Scalar>) return tb.c; else return tb.r;
  }();

  auto cache = std::make_shared<GnCache<Mat>>();
  cache->zhat.resize(n, cdim);
  cache->inv_std.resize(n);
  Mat y(n, cdim);
  for (Index i = 0; i < n; ++i) {
    Scalar mu = xin.row(i).sum() / static_cast<Real>(cdim);
    Real var = 0.0;
    for (Index j = 0; j < cdim; ++j) var += std::norm(xin(i, j) - mu);
    var /= static_cast<Real>(cdim);
    const Real s = 1.0 / std::sqrt(var + eps);
    cache->inv_std[i] = s;
    for (Index j = 0; j < cdim; ++j) cache->zhat(i, j) = (xin(i, j) - mu) * s;
    y.row(i) = cache->zhat.row(i).cwiseProduct(gam.row(0)) + bet.row(0);
  }

  Tensor out = tx;
  if constexpr (is_complex_v<Scalar>) out.c = std::move(y); else out.r = std::move(y);
  bool rg = t.needs_grad(x) || t.needs_grad(gamma) || t.needs_grad(beta);
  return t.emit(std::move(out), rg,
                [x, gamma, beta, cache, cdim](Tape& tp, const Tensor& g) {
    const Mat& gy = [&]() -> const Mat& {
      if constexpr (is_complex_v<Scalar>) return g.c; else return g.r;
    }();
    const Mat& gam = [&]() -> const Mat& {
      const Tensor& tg2 = tp.value(gamma);
      if constexpr (is_complex_v<Scalar>) return tg2.c; else return tg2.r;
    }();
    const Index n = gy.rows();

    if (tp.needs_grad(gamma)) {
      Mat gg = cache->zhat.conjugate().cwiseProduct(gy).colwise().sum();
      if constexpr (is_complex_v<Scalar>) tp.accumulate(gamma, MatrixXc(gg));
      else tp.accumulate(gamma, MatrixX(gg));
    }
    if (tp.needs_grad(beta)) {
      Mat gb = gy.colwise().sum();
      if constexpr (is_complex_v<Scalar>) tp.accumulate(beta, MatrixXc(gb));
      else tp.accumulate(beta, MatrixX(gb));
    }
    if (tp.needs_grad(x)) {
      Mat gx(n, cdim);
      for (Index i = 0; i < n; ++i) {
        // gradient through the affine map
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> gz =
            gy.row(i).cwiseProduct(gam.row(0).conjugate());
        Scalar gz_mean = gz.sum() / static_cast<Real>(cdim);
        // projection of gz on zhat (real part only: the variance is real)
        Real proj = 0.0;
        for (Index j = 0; j < cdim; ++j)
          proj += std::real(std::conj(cache->zhat(i, j)) * gz[j]);
        proj /= static_cast<Real>(cdim);
        const Real s = cache->inv_std[i];
        for (Index j = 0; j < cdim; ++j)
          gx(i, j) = s * (gz[j] - gz_mean - cache->zhat(i, j) * proj);
      }
      if constexpr (is_complex_v<Scalar>) tp.accumulate(x, MatrixXc(gx));
      else tp.accumulate(x, MatrixX(gx));
    }
  });
}

}  // namespace

Var group_norm(Tape& t, Var x, Var gamma, Var beta, Real eps) {
  const Tensor& tx = t.value(x);
  check_dtype(tx, t.value(gamma), "group_norm");
  check_dtype(tx, t.value(beta), "group_norm");
  if (tx.is_complex()) return group_norm_impl<Complex>(t, x, gamma, beta, eps);
  return group_norm_impl<Real>(t, x, gamma, beta, eps);
}

// ---------------------------------------------------------------------------
// Fourier transforms
// ---------------------------------------------------------------------------

Var fft_nd(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(!tx.dims.empty(), "fft_nd: tensor has no grid dims");
  Tensor out = Tensor::from_complex(
      tx.dims, tx.is_complex()
                   ? fftops::fft_nd(tx.c, tx.dims, false)
                   : fftops::fft_nd(MatrixXc(tx.r.cast<Complex>()), tx.dims, false));
  const bool real_in = !tx.is_complex();
  const std::vector<Index> dims = tx.dims;
  const Real n_total = static_cast<Real>(tx.rows());
  return t.emit(std::move(out), t.needs_grad(x),
                [x, dims, real_in, n_total](Tape& tp, const Tensor& g) {
    // adjoint of the unnormalized forward DFT = N * normalized inverse
    MatrixXc gx = fftops::fft_nd(g.c, dims, true) * n_total;
    if (real_in)
      tp.accumulate(x, MatrixX(gx.real()));
    else
      tp.accumulate(x, gx);
  });
}

Var ifft_nd(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(tx.is_complex(), "ifft_nd: complex input expected");
  Tensor out = Tensor::from_complex(tx.dims, fftops::fft_nd(tx.c, tx.dims, true));
  const std::vector<Index> dims = tx.dims;
  const Real n_total = static_cast<Real>(tx.rows());
  return t.emit(std::move(out), t.needs_grad(x),
                [x, dims, n_total](Tape& tp, const Tensor& g) {
    // adjoint of the 1/N inverse DFT = forward DFT / N
    tp.accumulate(x, MatrixXc(fftops::fft_nd(g.c, dims, false) / n_total));
  });
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

namespace {

// Column-at-a-time indirect copy: contiguous writes, indexed reads.
template <class Mat>
void gather_cols(const Mat& src, const std::vector<Index>& map, Mat& dst) {
  using Scalar = typename Mat::Scalar;
  const Index rows = dst.rows();
  for (Index ch = 0; ch < dst.cols(); ++ch) {
    const Scalar* s = src.col(ch).data();
    Scalar* d = dst.col(ch).data();
    for (Index i = 0; i < rows; ++i) d[i] = map[i] < 0 ? Scalar(0) : s[map[i]];
  }
}

template <class Mat>
void scatter_add_cols(const Mat& g, const std::vector<Index>& map, Mat& acc) {
  const Index rows = g.rows();
  for (Index ch = 0; ch < g.cols(); ++ch) {
    const auto* s = g.col(ch).data();
    auto* d = acc.col(ch).data();
    for (Index i = 0; i < rows; ++i)
      if (map[i] >= 0) d[map[i]] += s[i];
  }
}

}  // namespace

Var gather(Tape& t, Var x, std::vector<Index> idx, std::vector<Index> out_dims) {
  const Tensor& tx = t.value(x);
  Index out_rows = 1;
  for (Index d : out_dims) out_rows *= d;
  require(static_cast<Index>(idx.size()) == out_rows,
          "gather: index map does not match the output shape");
  auto map = std::make_shared<std::vector<Index>>(std::move(idx));
  Tensor out = tx.is_complex() ? Tensor::complex(out_dims, tx.channels)
                               : Tensor::real(out_dims, tx.channels);
  if (tx.is_complex())
    gather_cols(tx.c, *map, out.c);
  else
    gather_cols(tx.r, *map, out.r);
  return t.emit(std::move(out), t.needs_grad(x), [x, map](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    if (g.is_complex()) {
      MatrixXc gx = MatrixXc::Zero(vx.rows(), vx.channels);
      scatter_add_cols(g.c, *map, gx);
      tp.accumulate(x, gx);
    } else {
      MatrixX gx = MatrixX::Zero(vx.rows(), vx.channels);
      scatter_add_cols(g.r, *map, gx);
      tp.accumulate(x, gx);
    }
  });
}

Index trunc_bin(Index f, Index keep) { return f >= 0 ? f : 2 * keep - 1 + f; }

namespace {

// Iterate over all multi-indices of `dims`.
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

Index flat_of(const std::vector<Index>& idx, const std::vector<Index>& dims) {
  Index f = 0;
  for (size_t a = 0; a < dims.size(); ++a) f = f * dims[a] + idx[a];
  return f;
}

}  // namespace

Var mode_truncate(Tape& t, Var x, const std::vector<Index>& keep) {
  const Tensor& tx = t.value(x);
  require(keep.size() == tx.dims.size(), "mode_truncate: rank mismatch");
  std::vector<Index> out_dims(keep.size());
  for (size_t a = 0; a < keep.size(); ++a) {
    require(keep[a] >= 1 && 2 * keep[a] - 1 <= tx.dims[a],
            "mode_truncate: keep count exceeds the spectrum");
    out_dims[a] = 2 * keep[a] - 1;
  }
  Index total = 1;
  for (Index d : out_dims) total *= d;
  std::vector<Index> idx(total);
  walk(out_dims, [&](Index f, const std::vector<Index>& oi) {
    std::vector<Index> si(oi.size());
    for (size_t a = 0; a < oi.size(); ++a) {
      const Index k = keep[a];
      const Index freq = oi[a] < k ? oi[a] : oi[a] - (2 * k - 1);
      si[a] = freq >= 0 ? freq : tx.dims[a] + freq;
    }
    idx[f] = flat_of(si, tx.dims);
  });
  return gather(t, x, std::move(idx), out_dims);
}

Var mode_pad(Tape& t, Var x, const std::vector<Index>& full) {
  const Tensor& tx = t.value(x);
  require(full.size() == tx.dims.size(), "mode_pad: rank mismatch");
  std::vector<Index> keep(full.size());
  for (size_t a = 0; a < full.size(); ++a) {
    require(tx.dims[a] % 2 == 1, "mode_pad: truncated axes have odd size");
    keep[a] = (tx.dims[a] + 1) / 2;
    require(full[a] >= tx.dims[a], "mode_pad: target smaller than spectrum");
  }
  Index total = 1;
  for (Index d : full) total *= d;
  std::vector<Index> idx(total);
  walk(full, [&](Index f, const std::vector<Index>& oi) {
    std::vector<Index> si(oi.size());
    bool inside = true;
    for (size_t a = 0; a < oi.size(); ++a) {
      const Index n = full[a];
      const Index freq = 2 * oi[a] < n ? oi[a] : oi[a] - n;
      if (std::abs(freq) <= keep[a] - 1)
        si[a] = trunc_bin(freq, keep[a]);
      else
        inside = false;
    }
    idx[f] = inside ? flat_of(si, tx.dims) : -1;
  });
  return gather(t, x, std::move(idx), full);
}

Var spatial_pad(Tape& t, Var x, const std::vector<Index>& pad) {
  const Tensor& tx = t.value(x);
  require(pad.size() == tx.dims.size(), "spatial_pad: rank mismatch");
  std::vector<Index> out_dims(tx.dims.size());
  for (size_t a = 0; a < pad.size(); ++a) {
    require(pad[a] >= 0, "spatial_pad: negative pad");
    out_dims[a] = tx.dims[a] + pad[a];
  }
  Index total = 1;
  for (Index d : out_dims) total *= d;
  std::vector<Index> idx(total);
  walk(out_dims, [&](Index f, const std::vector<Index>& oi) {
    bool inside = true;
    for (size_t a = 0; a < oi.size(); ++a)
      if (oi[a] >= tx.dims[a]) inside = false;
    idx[f] = inside ? flat_of(oi, tx.dims) : -1;
  });
  return gather(t, x, std::move(idx), out_dims);
}

Var spatial_crop(Tape& t, Var x, const std::vector<Index>& out_dims) {
  const Tensor& tx = t.value(x);
  require(out_dims.size() == tx.dims.size(), "spatial_crop: rank mismatch");
  for (size_t a = 0; a < out_dims.size(); ++a)
    require(out_dims[a] <= tx.dims[a], "spatial_crop: output exceeds input");
  Index total = 1;
  for (Index d : out_dims) total *= d;
  std::vector<Index> idx(total);
  walk(out_dims, [&](Index f, const std::vector<Index>& oi) {
    idx[f] = flat_of(oi, tx.dims);
  });
  return gather(t, x, std::move(idx), out_dims);
}

// ---------------------------------------------------------------------------
// Casts and reductions
// ---------------------------------------------------------------------------

Var real_part(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(tx.is_complex(), "real_part: complex input expected");
  Tensor out = Tensor::from_real(tx.dims, tx.c.real());
  return t.emit(std::move(out), t.needs_grad(x), [x](Tape& tp, const Tensor& g) {
    tp.accumulate(x, MatrixXc(g.r.cast<Complex>()));
  });
}

Var to_complex(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(!tx.is_complex(), "to_complex: real input expected");
  Tensor out = Tensor::from_complex(tx.dims, tx.r.cast<Complex>());
  return t.emit(std::move(out), t.needs_grad(x), [x](Tape& tp, const Tensor& g) {
    tp.accumulate(x, MatrixX(g.c.real()));
  });
}

Var magnitude(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  Tensor out;
  if (tx.is_complex())
    out = Tensor::from_real(tx.dims, tx.c.cwiseAbs());
  else
    out = Tensor::from_real(tx.dims, tx.r.cwiseAbs());
  return t.emit(std::move(out), t.needs_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    if (vx.is_complex()) {
      MatrixXc gx(vx.c.rows(), vx.c.cols());
      for (Index j = 0; j < vx.c.cols(); ++j)
        for (Index i = 0; i < vx.c.rows(); ++i) {
          const Real m = std::abs(vx.c(i, j));
          gx(i, j) = m > 0.0 ? Complex(g.r(i, j) / m) * vx.c(i, j) : Complex(0);
        }
      tp.accumulate(x, gx);
    } else {
      tp.accumulate(x, MatrixX(vx.r.cwiseSign().cwiseProduct(g.r)));
    }
  });
}

Var sum_abs2(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  Real s = tx.is_complex() ? tx.c.squaredNorm() : tx.r.squaredNorm();
  return t.emit(Tensor::scalar(s), t.needs_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const Real gs = g.r(0, 0);
    if (vx.is_complex())
      tp.accumulate(x, MatrixXc(2.0 * gs * vx.c));
    else
      tp.accumulate(x, MatrixX(2.0 * gs * vx.r));
  });
}

Var sqrt_scalar(Tape& t, Var x) {
  const Tensor& tx = t.value(x);
  require(!tx.is_complex() && tx.numel() == 1, "sqrt_scalar: real scalar");
  const Real y = std::sqrt(std::max(tx.r(0, 0), 0.0));
  return t.emit(Tensor::scalar(y), t.needs_grad(x), [x, y](Tape& tp, const Tensor& g) {
    const Real denom = std::max(2.0 * y, 1e-300);
    tp.accumulate(x, MatrixX(MatrixX::Constant(1, 1, g.r(0, 0) / denom)));
  });
}

Var mse(Tape& t, Var pred, const Tensor& target) {
  check_same_shape(t.value(pred), target, "mse");
  Var diff = sub(t, pred, t.input(target));
  Var s = sum_abs2(t, diff);
  return scale(t, s, 1.0 / static_cast<Real>(target.numel()));
}

Var rel_l2(Tape& t, Var pred, const Tensor& target) {
  check_same_shape(t.value(pred), target, "rel_l2");
  const Real tn = target.is_complex() ? target.c.norm() : target.r.norm();
  if (tn <= 0.0) throw DomainError("rel_l2: degenerate zero-norm target");
  Var diff = sub(t, pred, t.input(target));
  return scale(t, sqrt_scalar(t, sum_abs2(t, diff)), 1.0 / tn);
}

}  // namespace ad
}  // namespace scaleop

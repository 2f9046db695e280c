#pragma once

#include "scaleop/common.hpp"

#include <functional>

namespace scaleop {
namespace ad {

enum class Dtype { Real, Complex };

/// Dense n-d array: `dims` index the grid/mode axes (row-major, axis 0
/// slowest) and each channel is one column. Real and complex tensors share
/// the type; exactly one of the two matrices is active. Complex gradients use
/// the conjugate-cotangent convention (grad = dL/dRe + i dL/dIm), so gradient
/// descent on the real/imag parts reads them directly.
struct Tensor {
  std::vector<Index> dims;
  Index channels = 1;
  Dtype dtype = Dtype::Real;
  MatrixX r;
  MatrixXc c;

  static Tensor real(std::vector<Index> dims, Index channels);
  static Tensor complex(std::vector<Index> dims, Index channels);
  static Tensor scalar(Real v);
  static Tensor from_real(std::vector<Index> dims, MatrixX values);
  static Tensor from_complex(std::vector<Index> dims, MatrixXc values);

  Index rows() const {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
  }
  bool is_complex() const { return dtype == Dtype::Complex; }
  bool same_shape(const Tensor& o) const {
    return dims == o.dims && channels == o.channels && dtype == o.dtype;
  }
  Real scalar_value() const;
  Index numel() const { return rows() * channels; }
  void check() const;
};

struct Var {
  Index id = -1;
  bool valid() const { return id >= 0; }
};

/// Record of one forward pass; backward() fills gradients for every node that
/// leads to a registered parameter. Tapes are single-use and single-threaded;
/// concurrent training builds one tape per instance.
class Tape {
 public:
  Var input(Tensor value);  // constant leaf
  Var param(Tensor value);  // differentiable leaf, registered

  /// Gradient of the scalar real loss w.r.t. every parameter leaf.
  void backward(Var loss);

  const Tensor& value(Var v) const { return node(v.id).value; }
  /// Gradient tensor (zero tensor when the node was never touched).
  Tensor grad(Var v) const;

  const std::vector<Index>& params() const { return params_; }
  size_t size() const { return nodes_.size(); }

  // -- internal plumbing used by the op free functions ---------------------
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::function<void(Tape&, const Tensor&)> backprop;  // receives this grad
  };
  Var emit(Tensor value, bool requires_grad,
           std::function<void(Tape&, const Tensor&)> backprop);
  bool needs_grad(Var v) const { return node(v.id).requires_grad; }
  void accumulate(Var v, const MatrixX& g);
  void accumulate(Var v, const MatrixXc& g);
  Node& node(Index id);
  const Node& node(Index id) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Index> params_;
  bool ran_backward_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. Forward value plus registered adjoint; complex nonlinearities
// act on the real and imaginary parts separately (they are not holomorphic).
// ---------------------------------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);               // elementwise, same dtype
Var scale(Tape& t, Var a, Real s);

/// Pointwise channel map: [N, Cin] x [Cin, Cout], shared over rows. This is
/// the weight-sharing spectral transform and the encoder/decoder/W paths.
Var matmul(Tape& t, Var x, Var w);

/// Per-mode channel map: weight block m of w ([M*Cin, Cout]) acts on row m.
Var mode_matmul(Tape& t, Var x, Var w);

Var bias_add(Tape& t, Var x, Var b);          // b: [1, C]
Var gelu(Tape& t, Var x);                     // real
Var cgelu(Tape& t, Var x);                    // complex, Re/Im separately
Var group_norm(Tape& t, Var x, Var gamma, Var beta, Real eps = 1e-5);

/// Unnormalized forward DFT over all dims of x (real or complex input).
Var fft_nd(Tape& t, Var x);
/// Inverse DFT with the 1/N factor.
Var ifft_nd(Tape& t, Var x);

/// y[i] = idx[i] < 0 ? 0 : x[idx[i]]; shared across channels. The adjoint is
/// the scatter-add. Truncation, padding and cropping are all gathers.
Var gather(Tape& t, Var x, std::vector<Index> idx, std::vector<Index> out_dims);

/// Keep the lowest `keep[a]` wrapped frequencies per axis (bins 0..k-1 and
/// n-k+1..n-1, giving 2k-1 per axis).
Var mode_truncate(Tape& t, Var x, const std::vector<Index>& keep);
/// Scatter truncated modes back into a full spectrum of size full[a] per axis.
Var mode_pad(Tape& t, Var x, const std::vector<Index>& full);

/// Zero-pad (amounts >= 0 appended at the high end per axis) and its inverse.
Var spatial_pad(Tape& t, Var x, const std::vector<Index>& pad);
Var spatial_crop(Tape& t, Var x, const std::vector<Index>& out_dims);

Var real_part(Tape& t, Var x);    // complex -> real
Var to_complex(Tape& t, Var x);   // real -> complex
Var magnitude(Tape& t, Var x);    // |x|, real output

Var sum_abs2(Tape& t, Var x);     // sum of squared moduli -> real scalar
Var sqrt_scalar(Tape& t, Var x);

/// Mean squared error against a fixed target.
Var mse(Tape& t, Var pred, const Tensor& target);
/// Relative L2 norm ||pred - target|| / ||target|| against a fixed target.
Var rel_l2(Tape& t, Var pred, const Tensor& target);

/// Wrapped-order index of frequency f in the truncated axis of size 2k-1.
Index trunc_bin(Index f, Index keep);

}  // namespace ad
}  // namespace scaleop

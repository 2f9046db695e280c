#include "scaleop/fft_utils.hpp"

#include <unsupported/Eigen/FFT>

namespace scaleop {
namespace fftops {

namespace {

Eigen::FFT<Real>& engine() {
  thread_local Eigen::FFT<Real> fft;  // caches kissfft plans per size
  return fft;
}

// Transform along one axis of the row-major layout, all lines, one channel
// column at a time. Lines of the innermost axis are contiguous and transform
// in place through the pointer API; other axes go through a line buffer.
void transform_axis(MatrixXc& data, const std::vector<Index>& dims, int axis,
                    bool inverse) {
  const Index n = dims[axis];
  Index inner = 1;  // product of dims after `axis` (fast stride)
  for (size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  Index outer = data.rows() / (n * inner);

  auto& fft = engine();
  if (inner == 1) {
    std::vector<Complex> out(n);
    for (Index ch = 0; ch < data.cols(); ++ch) {
      Complex* col = data.col(ch).data();
      for (Index o = 0; o < outer; ++o) {
        Complex* base = col + o * n;
        if (inverse)
          fft.inv(out.data(), base, n);
        else
          fft.fwd(out.data(), base, n);
        std::copy(out.begin(), out.end(), base);
      }
    }
    return;
  }
  std::vector<Complex> line(n), out(n);
  for (Index ch = 0; ch < data.cols(); ++ch) {
    Complex* col = data.col(ch).data();
    for (Index o = 0; o < outer; ++o) {
      for (Index i = 0; i < inner; ++i) {
        Complex* base = col + o * n * inner + i;
        for (Index j = 0; j < n; ++j) line[j] = base[j * inner];
        if (inverse)
          fft.inv(out.data(), line.data(), n);
        else
          fft.fwd(out.data(), line.data(), n);
        for (Index j = 0; j < n; ++j) base[j * inner] = out[j];
      }
    }
  }
}

}  // namespace

MatrixXc fft_nd(const MatrixXc& in, const std::vector<Index>& dims, bool inverse) {
  Index total = 1;
  for (Index d : dims) total *= d;
  require(in.rows() == total, "fft_nd: dims do not match row count");
  MatrixXc out = in;
  for (int a = 0; a < static_cast<int>(dims.size()); ++a)
    transform_axis(out, dims, a, inverse);
  return out;
}

VectorXc fft_nd(const VectorXc& in, const std::vector<Index>& dims, bool inverse) {
  MatrixXc m = in;
  return fft_nd(m, dims, inverse).col(0);
}

Index next_smooth(Index n) {
  for (Index m = n;; ++m) {
    Index r = m;
    for (Index p : {Index(2), Index(3), Index(5)})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace fftops
}  // namespace scaleop

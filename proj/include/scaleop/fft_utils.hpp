#pragma once

#include "scaleop/common.hpp"

namespace scaleop {
namespace fftops {

/// n-d complex DFT of every column of `in` (columns are channels; rows are
/// spatial points in row-major order, axis 0 slowest). Forward transform is
/// unnormalized; the inverse carries the full 1/N factor, so ifft(fft(x)) = x.
MatrixXc fft_nd(const MatrixXc& in, const std::vector<Index>& dims, bool inverse);

/// Convenience overload for a single column.
VectorXc fft_nd(const VectorXc& in, const std::vector<Index>& dims, bool inverse);

/// Smallest integer >= n whose prime factors are all in {2,3,5}. FFT sizes are
/// rounded up to such values (the generic-radix fallback is an order of
/// magnitude slower on large prime factors).
Index next_smooth(Index n);

/// Signed wavenumber of FFT bin i for size n: 0,1,...,n/2,-(n-1)/2,...,-1.
inline Index fft_freq(Index i, Index n) { return (2 * i < n) ? i : i - n; }

}  // namespace fftops
}  // namespace scaleop

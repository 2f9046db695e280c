#include "scaleop/randfield.hpp"

#include "scaleop/fft_utils.hpp"

namespace scaleop {

Field sample_grf(const GrfSpec& spec) {
  spec.validate();
  const Index n = spec.resolution;
  const Index total = n * n;
  Philox rng(spec.seed);

  VectorXc coef = VectorXc::Zero(total);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index bin = i * n + j;
      const Index pi = (n - i) % n;
      const Index pj = (n - j) % n;
      const Index partner = pi * n + pj;
      if (bin > partner) continue;  // filled by its conjugate partner

      const Real fx = static_cast<Real>(fftops::fft_freq(i, n));
      const Real fy = static_cast<Real>(fftops::fft_freq(j, n));
      const Real mag = std::sqrt(fx * fx + fy * fy);
      if (mag == 0.0) continue;  // mean-zero field
      const Real amp = std::exp(-spec.sigma * std::sqrt(mag));

      // Two normals per mode at a fixed counter, independent of fill order.
      const std::uint64_t w1 = rng.at(2 * static_cast<std::uint64_t>(bin));
      const std::uint64_t w2 = rng.at(2 * static_cast<std::uint64_t>(bin) + 1);
      const double u1 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
      const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
      const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
      const double g1 = r * std::cos(2.0 * M_PI * u2);
      const double g2 = r * std::sin(2.0 * M_PI * u2);

      if (bin == partner) {
        coef[bin] = Complex(amp * g1, 0.0);  // self-conjugate mode stays real
      } else {
        coef[bin] = amp * Complex(g1, g2) * M_SQRT1_2;
        coef[partner] = std::conj(coef[bin]);
      }
    }
  }

  // Function-space convention: field(x) = sum_xi coef(xi) exp(2 pi i xi.x),
  // i.e. the unnormalized inverse transform.
  VectorXc vals = fftops::fft_nd(coef, {n, n}, /*inverse=*/true) *
                  static_cast<Real>(total);
  Field out(Domain::unit_torus(n), 1);
  out.values.col(0) = vals.real();
  return out;
}

Field threshold_coefficient(const Field& ahat) {
  Field out = ahat;
  out.values = (ahat.values.array() > 0.0).select(12.0, MatrixX::Constant(ahat.values.rows(), ahat.values.cols(), 2.0));
  return out;
}

BoundaryTrace sample_gaussian_boundary(Real sigma, Index res, std::uint64_t seed,
                                       bool normalize) {
  require(res >= 2, "sample_gaussian_boundary: res must be >= 2");
  GrfSpec spec{sigma, res - 1, seed};
  Field grf = sample_grf(spec);

  // Wrap the periodic sample onto the vertex grid (right/top rows repeat the
  // left/bottom ones), then take its outer layer.
  Domain vertex = Domain::unit_square(res);
  Field wrapped = restrict_field(grf, vertex);
  BoundaryTrace trace = boundary_trace(wrapped);

  if (normalize) {
    Real sup = 0.0;
    for (const auto& f : trace.faces)
      sup = std::max(sup, f.values.array().abs().maxCoeff());
    if (sup > 0.0)
      for (auto& f : trace.faces) f.values /= sup;
  }
  return trace;
}

}  // namespace scaleop

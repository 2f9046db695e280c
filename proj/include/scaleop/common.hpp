#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scaleop {

using Real = double;
using Complex = std::complex<double>;
using Index = Eigen::Index;

using VectorX = Eigen::VectorXd;
using VectorXc = Eigen::VectorXcd;
using MatrixX = Eigen::MatrixXd;
using MatrixXc = Eigen::MatrixXcd;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Sub-domain not grid-aligned or out of bounds.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Tensor/field shape or signature mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (negative scale, lambda out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Linear or time-stepping solver failure (non-convergence, CFL, blowup).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Persistence format violations.
class IoError : public Error {
 public:
  using Error::Error;
};

template <class Scalar>
constexpr bool is_complex_v = false;
template <class T>
constexpr bool is_complex_v<std::complex<T>> = true;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace scaleop

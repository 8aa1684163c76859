#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace rce {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Mat2c = Eigen::Matrix2cd;

inline constexpr double pi = 3.14159265358979323846;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coincident qubits or a zero-length displacement.
struct DegenerateGeometry : Error {
  using Error::Error;
};

// A requested pattern or basis cannot be realized.
struct NoSolution : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

// Register or sample sizes beyond the supported caps.
struct CapacityExceeded : Error {
  using Error::Error;
};

namespace pauli {
inline Mat2c I() { return Mat2c::Identity(); }
inline Mat2c X() {
  Mat2c m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2c Y() {
  Mat2c m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline Mat2c Z() {
  Mat2c m;
  m << 1, 0, 0, -1;
  return m;
}
inline Mat2c H() {
  Mat2c m;
  m << 1, 1, 1, -1;
  return m / std::sqrt(2.0);
}
// exp(-i theta P) for a Pauli P.
inline Mat2c rotation(const Mat2c& p, double theta) {
  return std::cos(theta) * I() - cplx(0, 1) * std::sin(theta) * p;
}
}  // namespace pauli

inline bool is_unitary(const Mat2c& u, double tol = 1e-12) {
  return (u.adjoint() * u - Mat2c::Identity()).cwiseAbs().maxCoeff() < tol;
}

}  // namespace rce

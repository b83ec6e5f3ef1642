// Copyright 2026 The weakmeas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense complex linear algebra for one and two spin-1/2 systems.
//
// Two-spin operators use the target (x) probe ordering with |0> = spin up
// along +z, so the basis index of |t p> is 2 * t + p.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "weakmeas/errors.hpp"

namespace weakmeas {

using Complex = std::complex<double>;
using Vector3 = Eigen::Vector3d;

template <int Dim>
using Operator = Eigen::Matrix<Complex, Dim, Dim>;
using Operator2 = Operator<2>;
using Operator4 = Operator<4>;

/// Numerical acceptance thresholds for the state and operator invariants.
struct Tolerances {
  double hermitian = 1e-12;
  double trace = 1e-12;
  double min_eigenvalue = -1e-10;
  double bloch_norm = 1e-12;
  double unit_axis = 1e-12;
};

inline constexpr Complex kI{0.0, 1.0};

/// Real 3-vector for a single-spin state (norm <= 1) or measurement axis
/// (norm == 1). The type does not enforce either; use `is_state`/`is_axis`.
class BlochVector {
 public:
  BlochVector() = default;
  BlochVector(double x, double y, double z) : v_(x, y, z) {}
  explicit BlochVector(const Vector3& v) : v_(v) {}

  const Vector3& vec() const noexcept { return v_; }
  double operator[](int i) const { return v_[i]; }
  double x() const noexcept { return v_.x(); }
  double y() const noexcept { return v_.y(); }
  double z() const noexcept { return v_.z(); }

  double norm() const { return v_.norm(); }
  double dot(const BlochVector& o) const { return v_.dot(o.v_); }
  BlochVector cross(const BlochVector& o) const { return BlochVector(v_.cross(o.v_)); }

  bool is_state(const Tolerances& tol = {}) const {
    return v_.allFinite() && v_.norm() <= 1.0 + tol.bloch_norm;
  }
  bool is_axis(const Tolerances& tol = {}) const {
    return v_.allFinite() && std::abs(v_.norm() - 1.0) <= tol.unit_axis;
  }

  /// Rescaled to unit length. Throws InvalidStateError on the zero vector.
  BlochVector normalized() const {
    const double n = v_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidStateError("cannot normalize a zero or non-finite Bloch vector");
    }
    return BlochVector(v_ / n);
  }

  friend bool operator==(const BlochVector& a, const BlochVector& b) { return a.v_ == b.v_; }

 private:
  Vector3 v_ = Vector3::Zero();
};

inline std::string to_string(const BlochVector& v) {
  std::ostringstream os;
  os.precision(6);
  os << '(' << v.x() << ", " << v.y() << ", " << v.z() << ')';
  return os.str();
}

// --- Pauli algebra ---------------------------------------------------------

inline const Operator2& identity2() {
  static const Operator2 id = Operator2::Identity();
  return id;
}

/// sigma_x, sigma_y, sigma_z for mu = 0, 1, 2.
inline const Operator2& pauli(int mu) {
  static const std::array<Operator2, 3> sigma = [] {
    std::array<Operator2, 3> s;
    s[0] << 0.0, 1.0, 1.0, 0.0;
    s[1] << 0.0, -kI, kI, 0.0;
    s[2] << 1.0, 0.0, 0.0, -1.0;
    return s;
  }();
  if (mu < 0 || mu > 2) throw ParameterError("Pauli index must be 0, 1 or 2");
  return sigma[static_cast<std::size_t>(mu)];
}

/// v . sigma
inline Operator2 pauli_dot(const BlochVector& v) {
  Operator2 m;
  m << Complex(v.z(), 0.0), Complex(v.x(), -v.y()),
       Complex(v.x(), v.y()), Complex(-v.z(), 0.0);
  return m;
}

template <int Dim>
double hermiticity_defect(const Operator<Dim>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <int Dim>
bool is_hermitian(const Operator<Dim>& m, double tol = Tolerances{}.hermitian) {
  return m.allFinite() && hermiticity_defect(m) <= tol;
}

template <int Dim>
void require_hermitian(const Operator<Dim>& m, const char* what, double tol) {
  if (!is_hermitian(m, tol)) {
    std::ostringstream os;
    os << what << " is not Hermitian (max |M - M^dagger| = " << hermiticity_defect(m) << ")";
    throw NonHermitianError(os.str());
  }
}

// --- density matrices ------------------------------------------------------

/// Hermitian, unit-trace, positive-semidefinite operator.
template <int Dim>
class DensityMatrix {
  static_assert(Dim == 2 || Dim == 4, "only single spins and spin pairs are supported");

 public:
  /// Validates `m` and throws InvalidStateError when it is not a state.
  explicit DensityMatrix(const Operator<Dim>& m, const Tolerances& tol = {}) : m_(m) {
    if (!is_hermitian(m_, tol.hermitian)) {
      throw InvalidStateError("density matrix is not Hermitian");
    }
    const Complex tr = m_.trace();
    if (std::abs(tr - 1.0) > tol.trace) {
      std::ostringstream os;
      os << "density matrix trace " << tr.real() << " differs from 1";
      throw InvalidStateError(os.str());
    }
    const double lowest = min_eigenvalue();
    if (lowest < tol.min_eigenvalue) {
      std::ostringstream os;
      os << "density matrix has negative eigenvalue " << lowest;
      throw InvalidStateError(os.str());
    }
  }

  /// Wraps `m` without validation. For results of operations that preserve
  /// the state invariants by construction.
  static DensityMatrix unchecked(const Operator<Dim>& m) { return DensityMatrix(m, Unchecked{}); }

  const Operator<Dim>& matrix() const noexcept { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }

  double purity() const { return (m_ * m_).trace().real(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Operator<Dim>> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  Eigen::Matrix<double, Dim, 1> eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Operator<Dim>> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  struct Unchecked {};
  DensityMatrix(const Operator<Dim>& m, Unchecked) : m_(m) {}

  Operator<Dim> m_;
};

using DensityMatrix2 = DensityMatrix<2>;
using DensityMatrix4 = DensityMatrix<4>;

/// (I + v . sigma) / 2. Throws InvalidStateError when |v| > 1.
inline DensityMatrix2 bloch_to_density(const BlochVector& v, const Tolerances& tol = {}) {
  if (!v.is_state(tol)) {
    throw InvalidStateError("Bloch vector " + to_string(v) + " lies outside the unit ball");
  }
  return DensityMatrix2::unchecked(0.5 * (identity2() + pauli_dot(v)));
}

/// Components Tr(rho sigma_mu), read off the matrix elements.
inline BlochVector density_to_bloch(const Operator2& rho) {
  return BlochVector(2.0 * rho(1, 0).real(), 2.0 * rho(1, 0).imag(),
                     (rho(0, 0) - rho(1, 1)).real());
}

inline BlochVector density_to_bloch(const DensityMatrix2& rho) { return density_to_bloch(rho.matrix()); }

// --- tensor products and partial traces ------------------------------------

/// Kronecker product a (x) b, a acting on the target and b on the probe.
inline Operator4 tensor_product(const Operator2& a, const Operator2& b) {
  Operator4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    }
  }
  return out;
}

inline DensityMatrix4 tensor_product(const DensityMatrix2& a, const DensityMatrix2& b) {
  return DensityMatrix4::unchecked(tensor_product(a.matrix(), b.matrix()));
}

enum class Subsystem { target, probe };

/// Reduced operator on `keep`, tracing out the other spin.
inline Operator2 partial_trace(const Operator4& m, Subsystem keep) {
  Operator2 out = Operator2::Zero();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int j = 0; j < 2; ++j) {
        out(a, b) += keep == Subsystem::target ? m(2 * a + j, 2 * b + j) : m(2 * j + a, 2 * j + b);
      }
    }
  }
  return out;
}

inline DensityMatrix2 partial_trace(const DensityMatrix4& rho, Subsystem keep) {
  return DensityMatrix2::unchecked(partial_trace(rho.matrix(), keep));
}

// --- dynamics --------------------------------------------------------------

/// exp(-i H t) for a fixed Hermitian H at many times t, from one
/// eigendecomposition of H.
template <int Dim>
class HermitianPropagator {
 public:
  explicit HermitianPropagator(const Operator<Dim>& h, const Tolerances& tol = {}) {
    require_hermitian(h, "exponent", tol.hermitian);
    // Symmetrize so the solver sees an exactly self-adjoint input.
    es_.compute(0.5 * (h + h.adjoint()));
  }

  Operator<Dim> at(double t) const {
    if (t == 0.0) return Operator<Dim>::Identity();
    const auto& w = es_.eigenvalues();
    Eigen::Matrix<Complex, Dim, 1> phase;
    for (int k = 0; k < Dim; ++k) phase[k] = std::exp(-kI * (w[k] * t));
    return es_.eigenvectors() * phase.asDiagonal() * es_.eigenvectors().adjoint();
  }

 private:
  Eigen::SelfAdjointEigenSolver<Operator<Dim>> es_;
};

/// exp(-i H t) for Hermitian H. H and t share a unit convention (rad/us and
/// us here). Throws NonHermitianError.
template <int Dim>
Operator<Dim> herm_exp(const Operator<Dim>& h, double t, const Tolerances& tol = {}) {
  return HermitianPropagator<Dim>(h, tol).at(t);
}

/// U rho U^dagger
template <int Dim>
DensityMatrix<Dim> conjugate(const Operator<Dim>& u, const DensityMatrix<Dim>& rho) {
  return DensityMatrix<Dim>::unchecked(u * rho.matrix() * u.adjoint());
}

/// Tr(rho obs), real part. The observable must be Hermitian.
template <int Dim>
double expectation(const DensityMatrix<Dim>& rho, const Operator<Dim>& obs, const Tolerances& tol = {}) {
  require_hermitian(obs, "observable", tol.hermitian);
  return (rho.matrix() * obs).trace().real();
}

}  // namespace weakmeas

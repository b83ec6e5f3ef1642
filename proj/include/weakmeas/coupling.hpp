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

// Spin-spin coupling tensor and the two-spin Hamiltonian it generates.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "weakmeas/quantum_core.hpp"

namespace weakmeas {

/// Frequency units: tensor entries are multiplied by this factor to get the
/// angular frequency (rad/us) that enters exp(-i H dt) with dt in us.
inline constexpr double kUnitFrequencyScale = 1.0;
inline constexpr double kTwoPiFrequencyScale = 2.0 * std::numbers::pi;

/// Index pairs of the six independent components, in storage order
/// xx, yy, zz, xy, xz, yz.
inline constexpr std::array<std::pair<int, int>, 6> kComponentOrder{
    {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};

inline constexpr std::array<const char*, 6> kComponentNames{"xx", "yy", "zz", "xy", "xz", "yz"};

/// Symmetric 3x3 coupling g_{mu nu} in MHz. Only the six independent values
/// are stored, so the tensor is symmetric by construction.
class CouplingTensor {
 public:
  using Components = Eigen::Matrix<double, 6, 1>;

  CouplingTensor() = default;
  explicit CouplingTensor(const Components& c) : c_(c) {}

  static CouplingTensor zero() { return CouplingTensor(); }

  /// Throws ParameterError unless `g` is exactly symmetric.
  static CouplingTensor from_matrix(const Eigen::Matrix3d& g) {
    if (g != g.transpose()) throw ParameterError("coupling tensor must be symmetric");
    Components c;
    for (std::size_t j = 0; j < kComponentOrder.size(); ++j) {
      c[static_cast<int>(j)] = g(kComponentOrder[j].first, kComponentOrder[j].second);
    }
    return CouplingTensor(c);
  }

  const Components& components() const noexcept { return c_; }

  double operator()(int mu, int nu) const {
    if (mu > nu) std::swap(mu, nu);
    if (mu == nu) return c_[mu];
    return c_[mu == 0 ? (nu == 1 ? 3 : 4) : 5];
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d g;
    for (int mu = 0; mu < 3; ++mu) {
      for (int nu = 0; nu < 3; ++nu) g(mu, nu) = (*this)(mu, nu);
    }
    return g;
  }

  /// Column n_mu of the tensor.
  Vector3 column(int mu) const { return Vector3((*this)(0, mu), (*this)(1, mu), (*this)(2, mu)); }

  CouplingTensor scaled(double s) const { return CouplingTensor(c_ * s); }

  double max_abs() const { return c_.cwiseAbs().maxCoeff(); }

  friend bool operator==(const CouplingTensor& a, const CouplingTensor& b) { return a.c_ == b.c_; }

 private:
  Components c_ = Components::Zero();
};

/// Known single-spin Hamiltonians in rad/us.
struct LocalHamiltonians {
  Operator2 target = Operator2::Zero();
  Operator2 probe = Operator2::Zero();

  static LocalHamiltonians none() { return {}; }

  /// b_t . sigma (x) I + I (x) b_p . sigma style fields, in rad/us.
  static LocalHamiltonians from_fields(const BlochVector& target_field, const BlochVector& probe_field) {
    return {pauli_dot(target_field), pauli_dot(probe_field)};
  }

  bool is_zero() const { return target.isZero(0.0) && probe.isZero(0.0); }
};

/// sum_{mu nu} g_{mu nu} sigma^mu_t (x) sigma^nu_p, in the tensor's units.
inline Operator4 build_interaction(const CouplingTensor& g) {
  Operator4 h = Operator4::Zero();
  for (int mu = 0; mu < 3; ++mu) {
    for (int nu = 0; nu < 3; ++nu) {
      const double gmn = g(mu, nu);
      if (gmn != 0.0) h += gmn * tensor_product(pauli(mu), pauli(nu));
    }
  }
  return h;
}

/// H_t (x) I + I (x) H_p + scale * H_int, in rad/us.
inline Operator4 build_total_hamiltonian(const CouplingTensor& g, const LocalHamiltonians& locals,
                                         double frequency_scale = kUnitFrequencyScale,
                                         const Tolerances& tol = {}) {
  require_hermitian(locals.target, "target Hamiltonian", tol.hermitian);
  require_hermitian(locals.probe, "probe Hamiltonian", tol.hermitian);
  return tensor_product(locals.target, identity2()) + tensor_product(identity2(), locals.probe) +
         frequency_scale * build_interaction(g);
}

}  // namespace weakmeas

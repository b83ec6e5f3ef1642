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

// Forward simulation of the weak-measurement protocol and its first-order
// response model.
//
// A run prepares rho_t (x) rho_p, lets the pair evolve for a short time dt,
// reads out the reduced target state (ideal tomography) and the probe
// expectation along q~, then rotates both back through the known local
// dynamics. To first order in dt the probe signal is linear in the coupling
// tensor, weighted by the target's weak value.

#pragma once

#include <algorithm>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "weakmeas/coupling.hpp"
#include "weakmeas/quantum_core.hpp"

namespace weakmeas {

/// Guard on 1 + r_i . r_f; the weak value diverges at orthogonal post-selection.
inline constexpr double kDefaultOrthogonalityGuard = 1e-6;

using ComplexVector3 = Eigen::Vector3cd;

/// Controlled parameters of one run.
struct ProtocolRun {
  BlochVector r_i;      ///< initial target state
  BlochVector p;        ///< initial probe state
  BlochVector q_tilde;  ///< probe measurement axis (unit)
  double dt = 0.0;      ///< interaction time, us
};

/// Throws InvalidStateError or ParameterError when a run is not admissible.
inline void validate(const ProtocolRun& run, const Tolerances& tol = {}) {
  if (!run.r_i.is_state(tol)) throw InvalidStateError("initial target state " + to_string(run.r_i) + " is not a state");
  if (!run.p.is_state(tol)) throw InvalidStateError("initial probe state " + to_string(run.p) + " is not a state");
  if (!run.q_tilde.is_axis(tol)) throw InvalidStateError("measurement axis " + to_string(run.q_tilde) + " is not a unit vector");
  if (!(run.dt > 0.0) || !std::isfinite(run.dt)) throw ParameterError("interaction time must be positive");
}

struct RunOutcome {
  BlochVector r_f;       ///< post-selected target state with local dynamics undone
  BlochVector q;         ///< measurement axis with local dynamics undone
  double expectation;    ///< Tr(P(q~) rho~_p)
  DensityMatrix4 phi2;   ///< joint state after the interaction
};

/// Phi_2 = U Phi_1 U^dagger with U = exp(-i H_tot dt).
inline DensityMatrix4 evolve_pair(const DensityMatrix4& phi1, const CouplingTensor& g,
                                  const LocalHamiltonians& locals, double dt,
                                  double frequency_scale = kUnitFrequencyScale,
                                  const Tolerances& tol = {}) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("interaction time must be positive");
  const Operator4 u = herm_exp(build_total_hamiltonian(g, locals, frequency_scale, tol), dt, tol);
  return conjugate(u, phi1);
}

namespace detail {

// Read-out and local-dynamics correction given the joint propagator.
inline RunOutcome finish_run(const ProtocolRun& run, const DensityMatrix4& phi1, const Operator4& u,
                             const LocalHamiltonians& locals, const Tolerances& tol) {
  DensityMatrix4 phi2 = conjugate(u, phi1);
  const DensityMatrix2 rho_t = partial_trace(phi2, Subsystem::target);
  const DensityMatrix2 rho_p = partial_trace(phi2, Subsystem::probe);
  const double measured = expectation(rho_p, pauli_dot(run.q_tilde), tol);

  // exp(+i H dt) = herm_exp(H, -dt)
  const Operator2 undo_t = herm_exp(locals.target, -run.dt, tol);
  const Operator2 undo_p = herm_exp(locals.probe, -run.dt, tol);
  const BlochVector r_f = density_to_bloch(conjugate(undo_t, rho_t));
  const Operator2 p_q = undo_p * pauli_dot(run.q_tilde) * undo_p.adjoint();
  const BlochVector q = density_to_bloch(Operator2(0.5 * p_q));  // q_mu = Tr(P(q) sigma_mu) / 2

  return {r_f, q, std::clamp(measured, -1.0, 1.0), std::move(phi2)};
}

inline DensityMatrix4 prepare(const ProtocolRun& run, const Tolerances& tol) {
  return tensor_product(bloch_to_density(run.r_i, tol), bloch_to_density(run.p, tol));
}

}  // namespace detail

/// Runs the prepare / evolve / read out / undo-local-dynamics sequence.
inline RunOutcome run_protocol(const ProtocolRun& run, const CouplingTensor& g,
                               const LocalHamiltonians& locals,
                               double frequency_scale = kUnitFrequencyScale,
                               const Tolerances& tol = {}) {
  validate(run, tol);
  const Operator4 u = herm_exp(build_total_hamiltonian(g, locals, frequency_scale, tol), run.dt, tol);
  return detail::finish_run(run, detail::prepare(run, tol), u, locals, tol);
}

/// Adds zero-mean Gaussian tomography noise of the given spread to r_f and
/// to the measured expectation. The state stays inside the Bloch ball and the
/// expectation inside [-1, 1].
inline void perturb(RunOutcome& outcome, double spread, std::mt19937_64& rng) {
  if (spread <= 0.0) return;
  std::normal_distribution<double> noise(0.0, spread);
  Vector3 r = outcome.r_f.vec();
  for (int k = 0; k < 3; ++k) r[k] += noise(rng);
  if (r.norm() > 1.0) r.normalize();
  outcome.r_f = BlochVector(r);
  outcome.expectation = std::clamp(outcome.expectation + noise(rng), -1.0, 1.0);
}

/// Pre-/post-selection geometry that the first-order model needs.
struct ResponseGeometry {
  BlochVector r_i;
  BlochVector r_f;
  BlochVector p;
  BlochVector q;
  double dt = 0.0;  ///< us
};

inline double postselection_overlap(const BlochVector& r_i, const BlochVector& r_f) { return 1.0 + r_i.dot(r_f); }

inline void require_postselection(const BlochVector& r_i, const BlochVector& r_f, double guard) {
  const double overlap = postselection_overlap(r_i, r_f);
  if (!(overlap >= guard)) {
    std::ostringstream os;
    os << "post-selection nearly orthogonal to pre-selection (1 + r_i.r_f = " << overlap << ")";
    throw NearOrthogonalPostselectionError(os.str(), overlap);
  }
}

/// Weak value of the Pauli vector, [r_i + r_f + i (r_i x r_f)] / (1 + r_i . r_f).
inline ComplexVector3 weak_value_sigma(const BlochVector& r_i, const BlochVector& r_f,
                                       double guard = kDefaultOrthogonalityGuard) {
  require_postselection(r_i, r_f, guard);
  const double denom = postselection_overlap(r_i, r_f);
  ComplexVector3 w;
  const Vector3 re = r_i.vec() + r_f.vec();
  const Vector3 im = r_i.vec().cross(r_f.vec());
  for (int k = 0; k < 3; ++k) w[k] = Complex(re[k], im[k]) / denom;
  return w;
}

/// First-order prediction of the probe expectation:
///   q.p + sum_mu 2 dt [ ((q x n_mu).p) (r_i + r_f)_mu
///                     + (n_mu.q - (n_mu.p)(q.p)) (r_i x r_f)_mu ] / (1 + r_i.r_f)
/// with n_mu the tensor columns (scaled to angular frequency).
inline double first_order_expectation(const ResponseGeometry& geo, const CouplingTensor& g,
                                      double frequency_scale = kUnitFrequencyScale,
                                      double guard = kDefaultOrthogonalityGuard) {
  require_postselection(geo.r_i, geo.r_f, guard);
  const Vector3& p = geo.p.vec();
  const Vector3& q = geo.q.vec();
  const Vector3 sum = geo.r_i.vec() + geo.r_f.vec();
  const Vector3 twist = geo.r_i.vec().cross(geo.r_f.vec());
  const double qp = q.dot(p);
  double correction = 0.0;
  for (int mu = 0; mu < 3; ++mu) {
    const Vector3 n = frequency_scale * g.column(mu);
    correction += q.cross(n).dot(p) * sum[mu] + (n.dot(q) - n.dot(p) * qp) * twist[mu];
  }
  return qp + 2.0 * geo.dt * correction / postselection_overlap(geo.r_i, geo.r_f);
}

inline ResponseGeometry geometry_of(const ProtocolRun& run, const RunOutcome& outcome) {
  return {run.r_i, outcome.r_f, run.p, outcome.q, run.dt};
}

}  // namespace weakmeas

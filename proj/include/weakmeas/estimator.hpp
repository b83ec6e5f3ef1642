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

// Linear inversion of the first-order response model: one equation per
// experiment record, six unknown tensor components.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "weakmeas/coupling.hpp"
#include "weakmeas/protocol.hpp"

namespace weakmeas {

inline constexpr double kDefaultMaxCondition = 1e8;
inline constexpr int kUnknowns = 6;

using Row6 = Eigen::Matrix<double, 1, kUnknowns>;
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, kUnknowns>;

/// One protocol run as seen by the estimator.
struct ExperimentRecord {
  BlochVector r_i;
  BlochVector r_f;
  BlochVector p;
  BlochVector q;
  double dt = 0.0;           ///< us
  double expectation = 0.0;  ///< measured E(q . sigma_p)

  ResponseGeometry geometry() const { return {r_i, r_f, p, q, dt}; }
};

inline ExperimentRecord make_record(const ProtocolRun& run, const RunOutcome& outcome) {
  return {run.r_i, outcome.r_f, run.p, outcome.q, run.dt, outcome.expectation};
}

/// Throws RecordRejectedError naming the first violated record invariant.
inline void validate(const ExperimentRecord& rec, double guard = kDefaultOrthogonalityGuard,
                     const Tolerances& tol = {}) {
  auto reject = [](const std::string& why) { throw RecordRejectedError("record rejected: " + why); };
  if (!rec.r_i.is_state(tol) || !rec.r_f.is_state(tol) || !rec.p.is_state(tol)) reject("Bloch vector outside the unit ball");
  if (!rec.q.vec().allFinite()) reject("non-finite measurement axis");
  if (!(rec.dt > 0.0) || !std::isfinite(rec.dt)) reject("interaction time must be positive");
  if (!(std::abs(rec.expectation) <= 1.0)) reject("expectation outside [-1, 1]");
  if (!(postselection_overlap(rec.r_i, rec.r_f) >= guard)) {
    std::ostringstream os;
    os << "1 + r_i.r_f = " << postselection_overlap(rec.r_i, rec.r_f) << " below guard " << guard;
    reject(os.str());
  }
}

/// Coefficients of (g_xx, g_yy, g_zz, g_xy, g_xz, g_yz) in the scaled signal
///   zeta = (E - q.p)(1 + r_i.r_f) / (2 dt).
/// The coefficient of g_{mu nu} is (p x q)_mu (r_i + r_f)_nu
/// + (q - p (q.p))_mu (r_i x r_f)_nu; off-diagonal entries collect both
/// placements since g is symmetric.
inline Row6 build_row(const ExperimentRecord& rec, double guard = kDefaultOrthogonalityGuard) {
  validate(rec, guard);
  const Vector3& p = rec.p.vec();
  const Vector3& q = rec.q.vec();
  const Vector3 a = p.cross(q);
  const Vector3 b = q - p * q.dot(p);
  const Vector3 s = rec.r_i.vec() + rec.r_f.vec();
  const Vector3 c = rec.r_i.vec().cross(rec.r_f.vec());
  const Eigen::Matrix3d coeff = a * s.transpose() + b * c.transpose();
  Row6 row;
  for (std::size_t j = 0; j < kComponentOrder.size(); ++j) {
    const auto [mu, nu] = kComponentOrder[j];
    row[static_cast<int>(j)] = mu == nu ? coeff(mu, mu) : coeff(mu, nu) + coeff(nu, mu);
  }
  return row;
}

inline double scaled_signal(const ExperimentRecord& rec) {
  return (rec.expectation - rec.q.dot(rec.p)) * postselection_overlap(rec.r_i, rec.r_f) / (2.0 * rec.dt);
}

/// A zeta = g, one row per record.
struct LinearSystem {
  DesignMatrix a;
  Eigen::VectorXd zeta;
};

inline LinearSystem build_system(const std::vector<ExperimentRecord>& records,
                                 double guard = kDefaultOrthogonalityGuard) {
  if (records.size() < static_cast<std::size_t>(kUnknowns)) {
    std::ostringstream os;
    os << "need at least " << kUnknowns << " records, got " << records.size();
    throw InsufficientDataError(os.str());
  }
  LinearSystem sys{DesignMatrix(records.size(), kUnknowns), Eigen::VectorXd(records.size())};
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    sys.a.row(r) = build_row(records[k], guard);
    sys.zeta[r] = scaled_signal(records[k]);
  }
  return sys;
}

/// Ratio of extreme singular values; infinity for rank-deficient matrices.
inline double condition_number(const DesignMatrix& a) {
  Eigen::JacobiSVD<DesignMatrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  const double k = sv[0] / smallest;
  return std::isfinite(k) ? k : std::numeric_limits<double>::infinity();
}

struct ErrorStats {
  double mean = 0.0;  ///< MHz
  double std = 0.0;   ///< MHz, sample deviation over the six components
};

/// Mean and sample standard deviation (divisor 5) of the six component
/// differences g_est - g_true.
inline ErrorStats error_stats(const CouplingTensor& g_true, const CouplingTensor& g_est) {
  const CouplingTensor::Components d = g_est.components() - g_true.components();
  const double mean = d.sum() / 6.0;
  const double var = (d.array() - mean).square().sum() / 5.0;
  return {mean, std::sqrt(var)};
}

struct EstimationResult {
  CouplingTensor g_est;
  double condition_number = 1.0;
  double residual_norm = 0.0;
  Eigen::VectorXd residuals;  ///< A xi - zeta per record, in scaled-signal units
  std::optional<ErrorStats> error;
};

struct SolveOptions {
  double max_condition = kDefaultMaxCondition;
  double frequency_scale = kUnitFrequencyScale;
};

/// Direct solve for exactly six equations, least squares otherwise.
/// Throws IllConditionedError when the condition number exceeds the cap.
inline EstimationResult solve(const LinearSystem& sys, const SolveOptions& opts = {}) {
  if (sys.a.rows() < kUnknowns) throw InsufficientDataError("design matrix has fewer than six rows");
  const double kappa = condition_number(sys.a);
  if (!(kappa <= opts.max_condition)) {
    std::ostringstream os;
    os << "design matrix condition number " << kappa << " exceeds " << opts.max_condition;
    throw IllConditionedError(os.str(), kappa);
  }
  CouplingTensor::Components xi;
  if (sys.a.rows() == kUnknowns) {
    const Eigen::Matrix<double, kUnknowns, kUnknowns> square = sys.a;
    xi = square.partialPivLu().solve(sys.zeta);
  } else {
    xi = sys.a.colPivHouseholderQr().solve(sys.zeta);
  }
  EstimationResult out;
  out.condition_number = kappa;
  out.residuals = sys.a * xi - sys.zeta;
  out.residual_norm = out.residuals.norm();
  out.g_est = CouplingTensor(xi / opts.frequency_scale);
  return out;
}

/// build_system + solve, with error statistics when a reference is given.
inline EstimationResult estimate(const std::vector<ExperimentRecord>& records, const SolveOptions& opts = {},
                                 const std::optional<CouplingTensor>& g_true = std::nullopt) {
  EstimationResult out = solve(build_system(records), opts);
  if (g_true) out.error = error_stats(*g_true, out.g_est);
  return out;
}

}  // namespace weakmeas

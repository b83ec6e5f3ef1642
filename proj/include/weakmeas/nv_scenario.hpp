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

// NV-centre reference scenario: electron spin (target) coupled to a nearby
// 13C nuclear spin (probe) through a hyperfine tensor in MHz, with six
// hand-picked parameter sets. Vectors are stored as published (two decimals)
// and re-normalized before use.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "weakmeas/estimator.hpp"
#include "weakmeas/protocol.hpp"

namespace weakmeas::nv {

inline CouplingTensor hyperfine_tensor() {
  Eigen::Matrix3d g;
  g << 5.0, -6.3, -2.9,
      -6.3, 4.2, -2.3,
      -2.9, -2.3, 8.2;
  return CouplingTensor::from_matrix(g);
}

/// Tensor recovered in the published reproduction, for display only.
inline CouplingTensor published_estimate() {
  Eigen::Matrix3d g;
  g << 4.98, -6.29, -2.92,
      -6.29, 4.21, -2.30,
      -2.92, -2.30, 8.35;
  return CouplingTensor::from_matrix(g);
}

inline constexpr double kPublishedErrorMean = 0.022;  // MHz
inline constexpr double kPublishedErrorStd = 0.063;   // MHz

struct PublishedRow {
  std::array<double, 3> r_i;
  std::array<double, 3> p;
  std::array<double, 3> q;
  double dt;  // us
};

inline constexpr std::array<PublishedRow, 6> kPublishedRows{{
    {{0.0, 0.0, 1.0}, {0.0, 0.59, 0.81}, {-0.16, 0.0, 0.99}, 0.091},
    {{-0.48, 0.59, 0.65}, {0.0, 0.0, 1.0}, {-0.25, 0.59, -0.77}, 0.086},
    {{-0.81, 0.59, 0.0}, {-0.65, 0.59, -0.48}, {0.25, 0.59, -0.77}, 0.073},
    {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {-0.99, 0.0, -0.16}, 0.069},
    {{0.81, 0.0, -0.59}, {-0.10, 0.95, 0.29}, {0.0, 0.81, -0.59}, 0.066},
    {{0.31, 0.95, 0.0}, {-0.18, 0.95, -0.25}, {0.0, 0.81, 0.59}, 0.051},
}};

inline BlochVector to_bloch(const std::array<double, 3>& v) { return BlochVector(v[0], v[1], v[2]); }

/// The six published parameter sets, re-normalized to unit vectors, with
/// every dt multiplied by `dt_scale`.
inline std::vector<ProtocolRun> published_runs(double dt_scale = 1.0) {
  std::vector<ProtocolRun> runs;
  for (const auto& row : kPublishedRows) {
    runs.push_back({to_bloch(row.r_i).normalized(), to_bloch(row.p).normalized(), to_bloch(row.q).normalized(),
                    row.dt * dt_scale});
  }
  return runs;
}

/// Pass thresholds for the reproduction, MHz.
inline constexpr double kComponentTolerance = 0.1;
inline constexpr double kMeanTolerance = 0.1;
inline constexpr double kStdTolerance = 0.1;

struct ReproductionOptions {
  double dt_scale = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  double frequency_scale = kUnitFrequencyScale;
  double max_condition = kDefaultMaxCondition;
};

struct Reproduction {
  std::vector<ProtocolRun> runs;
  std::vector<ExperimentRecord> records;
  EstimationResult result;  ///< error is always set
  double max_component_error = 0.0;
  bool passed = false;
};

inline bool within_tolerance(double max_component_error, const ErrorStats& e) {
  return max_component_error <= kComponentTolerance && std::abs(e.mean) <= kMeanTolerance &&
         e.std <= kStdTolerance;
}

/// Simulates the published runs under the published tensor and inverts the
/// resulting records.
inline Reproduction reproduce(const ReproductionOptions& opts = {}) {
  Reproduction out;
  const CouplingTensor g = hyperfine_tensor();
  out.runs = published_runs(opts.dt_scale);
  std::mt19937_64 rng(opts.seed);
  for (const auto& run : out.runs) {
    RunOutcome outcome = run_protocol(run, g, LocalHamiltonians::none(), opts.frequency_scale);
    perturb(outcome, opts.noise, rng);
    out.records.push_back(make_record(run, outcome));
  }
  out.result = estimate(out.records, {opts.max_condition, opts.frequency_scale}, g);
  out.max_component_error = (out.result.g_est.components() - g.components()).cwiseAbs().maxCoeff();
  out.passed = within_tolerance(out.max_component_error, *out.result.error);
  return out;
}

}  // namespace weakmeas::nv

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

// Experiment design: higher-order correction curves, automatic selection of
// low-correction ("dent") interaction times, and random search over
// parameter sets scored by the conditioning of the resulting design matrix.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "weakmeas/estimator.hpp"
#include "weakmeas/protocol.hpp"

namespace weakmeas {

/// Uniform grid min, min + step, ..., up to max inclusive (us).
struct TimeGrid {
  double min = 1e-3;
  double max = 0.2;
  double step = 1e-3;

  void validate() const {
    if (!(min > 0.0) || !(max > min) || !(step > 0.0) || !std::isfinite(max) || !std::isfinite(step)) {
      std::ostringstream os;
      os << "invalid time grid " << min << ':' << max << ':' << step
         << " (need 0 < min < max and step > 0)";
      throw ParameterError(os.str());
    }
  }

  std::vector<double> times() const {
    validate();
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = min + static_cast<double>(i) * step;
    return t;
  }
};

/// |exact probe expectation - first-order prediction| against dt.
struct CorrectionCurve {
  ProtocolRun params;           ///< dt is ignored
  std::vector<double> times;    ///< us, strictly increasing
  std::vector<double> values;   ///< NaN where flagged
  std::vector<bool> flagged;    ///< post-selection too close to orthogonal
};

inline CorrectionCurve correction_curve(const ProtocolRun& params, const CouplingTensor& g,
                                        const LocalHamiltonians& locals, const std::vector<double>& times,
                                        double frequency_scale = kUnitFrequencyScale,
                                        const Tolerances& tol = {}) {
  if (times.empty()) throw ParameterError("empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
      throw ParameterError("time grid must be positive and strictly increasing");
    }
  }
  ProtocolRun run = params;
  run.dt = times.front();
  validate(run, tol);

  const HermitianPropagator<4> propagator(build_total_hamiltonian(g, locals, frequency_scale, tol), tol);
  const DensityMatrix4 phi1 = detail::prepare(run, tol);

  CorrectionCurve curve{params, times, std::vector<double>(times.size()), std::vector<bool>(times.size(), false)};
  for (std::size_t i = 0; i < times.size(); ++i) {
    run.dt = times[i];
    const RunOutcome out = detail::finish_run(run, phi1, propagator.at(run.dt), locals, tol);
    const ResponseGeometry geo = geometry_of(run, out);
    if (!(postselection_overlap(geo.r_i, geo.r_f) >= kDefaultOrthogonalityGuard)) {
      curve.values[i] = std::numeric_limits<double>::quiet_NaN();
      curve.flagged[i] = true;
      continue;
    }
    curve.values[i] = std::abs(out.expectation - first_order_expectation(geo, g, frequency_scale));
  }
  return curve;
}

inline CorrectionCurve correction_curve(const ProtocolRun& params, const CouplingTensor& g,
                                        const LocalHamiltonians& locals, const TimeGrid& grid,
                                        double frequency_scale = kUnitFrequencyScale) {
  return correction_curve(params, g, locals, grid.times(), frequency_scale);
}

struct Dent {
  std::size_t index;
  double time;   ///< us
  double value;  ///< correction at that time
};

struct DentOptions {
  double threshold = 1e-3;
  double min_time = 0.02;  ///< us; shorter times carry too little signal
};

/// Interior grid points strictly below both neighbours, below the threshold
/// and at or beyond the minimum time, sorted by correction ascending.
inline std::vector<Dent> find_dents(const CorrectionCurve& curve, const DentOptions& opts = {}) {
  if (curve.values.empty()) throw ParameterError("empty correction curve");
  std::vector<Dent> dents;
  const auto& v = curve.values;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (curve.times[i] < opts.min_time) continue;
    if (!(v[i] < v[i - 1]) || !(v[i] < v[i + 1])) continue;  // false on NaN neighbours
    if (!(v[i] < opts.threshold)) continue;
    dents.push_back({i, curve.times[i], v[i]});
  }
  std::stable_sort(dents.begin(), dents.end(), [](const Dent& a, const Dent& b) { return a.value < b.value; });
  return dents;
}

/// All interior local minima regardless of threshold or minimum time.
inline std::vector<Dent> local_minima(const CorrectionCurve& curve) {
  return find_dents(curve, {std::numeric_limits<double>::infinity(), 0.0});
}

struct DesignScore {
  double max_correction = 0.0;  ///< worst correction over the runs at their chosen dt
  double condition_number = std::numeric_limits<double>::infinity();
};

struct DesignCandidate {
  std::vector<ProtocolRun> runs;
  DesignScore score;
};

struct DesignOptions {
  int runs_per_design = kUnknowns;
  TimeGrid grid{};
  DentOptions dents{};
  int max_attempts_per_run = 64;
  /// Fraction of draws that use random signed coordinate axes instead of
  /// uniform directions on the sphere.
  double axis_aligned_fraction = 0.0;
  double frequency_scale = kUnitFrequencyScale;
  double max_condition = kDefaultMaxCondition;
  LocalHamiltonians locals{};
};

/// Records a design would produce under `g`, by exact simulation.
inline std::vector<ExperimentRecord> simulate_records(const std::vector<ProtocolRun>& runs, const CouplingTensor& g,
                                                      const LocalHamiltonians& locals = {},
                                                      double frequency_scale = kUnitFrequencyScale) {
  std::vector<ExperimentRecord> records;
  records.reserve(runs.size());
  for (const auto& run : runs) records.push_back(make_record(run, run_protocol(run, g, locals, frequency_scale)));
  return records;
}

/// Condition number of the design matrix the runs would produce under `g`;
/// infinity when a record is rejected.
inline double design_condition_number(const std::vector<ProtocolRun>& runs, const CouplingTensor& g,
                                      const LocalHamiltonians& locals = {},
                                      double frequency_scale = kUnitFrequencyScale) {
  try {
    const auto records = simulate_records(runs, g, locals, frequency_scale);
    DesignMatrix a(static_cast<Eigen::Index>(records.size()), kUnknowns);
    for (std::size_t k = 0; k < records.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = build_row(records[k]);
    return condition_number(a);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

namespace detail {

inline BlochVector random_direction(std::mt19937_64& rng, double axis_aligned_fraction) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (axis_aligned_fraction > 0.0 && unit(rng) < axis_aligned_fraction) {
    std::uniform_int_distribution<int> axis(0, 5);
    const int a = axis(rng);
    Vector3 v = Vector3::Zero();
    v[a % 3] = a < 3 ? 1.0 : -1.0;
    return BlochVector(v);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector3 v;
  do {
    v = Vector3(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-12);
  return BlochVector(v.normalized());
}

}  // namespace detail

/// Random search over parameter sets. Each run draws (r_i, p, q~) and takes
/// the deepest dent of its correction curve under `g_prior`; a run with no
/// qualifying dent is redrawn, and after `max_attempts_per_run` failures the
/// curve minimum beyond the minimum time is used. Candidates are sorted with
/// well-conditioned designs first; the result depends only on the arguments.
inline std::vector<DesignCandidate> sample_designs(std::uint64_t seed, const CouplingTensor& g_prior, int n,
                                                   const DesignOptions& opts = {}) {
  if (n < 1) throw ParameterError("number of candidates must be at least 1");
  if (opts.runs_per_design < kUnknowns) throw ParameterError("a design needs at least six runs");
  const std::vector<double> times = opts.grid.times();
  std::mt19937_64 rng(seed);

  std::vector<DesignCandidate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    DesignCandidate cand;
    for (int r = 0; r < opts.runs_per_design; ++r) {
      ProtocolRun best{};
      double best_value = std::numeric_limits<double>::infinity();
      for (int attempt = 0; attempt < opts.max_attempts_per_run; ++attempt) {
        ProtocolRun run{detail::random_direction(rng, opts.axis_aligned_fraction),
                        detail::random_direction(rng, opts.axis_aligned_fraction),
                        detail::random_direction(rng, opts.axis_aligned_fraction), times.front()};
        const CorrectionCurve curve = correction_curve(run, g_prior, opts.locals, times, opts.frequency_scale);
        const auto dents = find_dents(curve, opts.dents);
        if (!dents.empty()) {
          run.dt = dents.front().time;
          best = run;
          best_value = dents.front().value;
          break;
        }
        for (std::size_t i = 0; i < times.size(); ++i) {
          if (times[i] >= opts.dents.min_time && curve.values[i] < best_value) {
            best_value = curve.values[i];
            best = run;
            best.dt = times[i];
          }
        }
      }
      if (!std::isfinite(best_value)) throw ParameterError("time grid has no point beyond the minimum dent time");
      cand.runs.push_back(best);
      cand.score.max_correction = std::max(cand.score.max_correction, best_value);
    }
    cand.score.condition_number = design_condition_number(cand.runs, g_prior, opts.locals, opts.frequency_scale);
    out.push_back(std::move(cand));
  }

  auto key = [&](const DesignCandidate& d) {
    const double k = d.score.condition_number;
    return std::isfinite(k) && k <= opts.max_condition ? k : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(out.begin(), out.end(), [&](const DesignCandidate& a, const DesignCandidate& b) {
    const double ka = key(a);
    const double kb = key(b);
    if (ka != kb) return ka < kb;
    return a.score.max_correction < b.score.max_correction;
  });
  return out;
}

}  // namespace weakmeas

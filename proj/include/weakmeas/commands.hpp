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

// Subcommand implementations behind the weakmeas executable. Each command
// writes its primary output to `out` (or a file), diagnostics to `err`, and
// returns a process exit code.

#pragma once

#include <chrono>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "weakmeas/design.hpp"
#include "weakmeas/estimator.hpp"
#include "weakmeas/io.hpp"
#include "weakmeas/nv_scenario.hpp"

namespace weakmeas::cli {

enum ExitCode : int {
  kSuccess = 0,
  kAcceptanceFail = 1,
  kParseFailure = 2,
  kInvalidData = 3,
  kIllConditioned = 4,
};

/// Command-line overrides; unset fields keep the config's value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<std::string> grid;
  std::optional<double> threshold;
  bool two_pi = false;
  std::optional<double> dt_scale;
};

namespace detail {

inline void apply(const Overrides& ov, io::ScenarioOptions& o) {
  if (ov.seed) o.seed = *ov.seed;
  if (ov.noise) o.noise = *ov.noise;
  if (ov.grid) o.grid = io::detail::grid_from_string(*ov.grid);
  if (ov.threshold) o.threshold = *ov.threshold;
  if (ov.two_pi) o.two_pi = true;
  if (ov.dt_scale) o.dt_scale = *ov.dt_scale;
}

struct LoadedConfig {
  io::ScenarioConfig config;
  std::string hash;
};

inline LoadedConfig load_config(const std::string& path, const Overrides& ov) {
  const std::string text = io::read_file(path);
  LoadedConfig out{io::parse_config(text), io::content_hash(text)};
  apply(ov, out.config.options);
  if (!(out.config.options.dt_scale > 0.0)) throw ParseError("dt_scale must be positive", 0, 0);
  if (out.config.options.noise < 0.0) throw ParseError("noise spread must be non-negative", 0, 0);
  return out;
}

/// Runs as they will be executed: normalized if requested, dt scaled.
inline ProtocolRun effective_run(const io::ScenarioConfig& cfg, std::size_t k) {
  ProtocolRun run = cfg.runs.at(k);
  if (cfg.options.normalize) {
    run.r_i = run.r_i.normalized();
    run.p = run.p.normalized();
    run.q_tilde = run.q_tilde.normalized();
  }
  run.dt *= cfg.options.dt_scale;
  return run;
}

inline void emit(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
  if (path) {
    io::write_file(*path, text);
  } else {
    out << text;
  }
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseFailure;
  } catch (const IllConditionedError& e) {
    err << "ill-conditioned design: condition number " << std::setprecision(6) << e.condition_number() << '\n';
    return kIllConditioned;
  } catch (const Error& e) {
    err << "invalid data: " << e.what() << '\n';
    return kInvalidData;
  }
}

inline std::string format_matrix(const CouplingTensor& g) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  const Eigen::Matrix3d m = g.matrix();
  for (int r = 0; r < 3; ++r) {
    os << "  [";
    for (int c = 0; c < 3; ++c) os << std::setw(10) << m(r, c);
    os << " ]\n";
  }
  return os.str();
}

}  // namespace detail

struct SimulateArgs {
  std::string config_path;
  std::optional<std::string> out_path;
  Overrides overrides;
};

/// Forward-simulates every configured run and writes a record file.
inline int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto loaded = detail::load_config(args.config_path, args.overrides);
    const auto& cfg = loaded.config;
    std::mt19937_64 rng(cfg.options.seed);
    std::vector<ExperimentRecord> records;
    for (std::size_t k = 0; k < cfg.runs.size(); ++k) {
      try {
        const ProtocolRun run = detail::effective_run(cfg, k);
        RunOutcome outcome = run_protocol(run, cfg.g_true, cfg.locals(), cfg.options.frequency_scale());
        perturb(outcome, cfg.options.noise, rng);
        records.push_back(make_record(run, outcome));
      } catch (const Error& e) {
        throw InvalidStateError("run " + std::to_string(k) + ": " + e.what());
      }
    }
    detail::emit(io::write_records(records), args.out_path, out);
    return kSuccess;
  });
}

struct EstimateArgs {
  std::string records_path;
  std::optional<std::string> config_path;  ///< supplies g_true for error statistics
  std::optional<std::string> out_path;
  Overrides overrides;
};

inline int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const std::string text = io::read_file(args.records_path);
    const auto records = io::parse_records(text);
    std::optional<CouplingTensor> g_true;
    io::ScenarioOptions options;
    std::string hash = io::content_hash(text);
    if (args.config_path) {
      const auto loaded = detail::load_config(*args.config_path, args.overrides);
      g_true = loaded.config.g_true;
      options = loaded.config.options;
      hash = loaded.hash;
    } else {
      detail::apply(args.overrides, options);
    }
    const EstimationResult result =
        estimate(records, {options.max_condition, options.frequency_scale()}, g_true);
    const io::ResultReport report = io::make_report(result, {hash, options.seed, io::kToolVersion});
    detail::emit(io::write_report(report), args.out_path, out);
    err << io::summary_line(report) << '\n';
    return kSuccess;
  });
}

struct CurveArgs {
  std::string config_path;
  std::size_t run_index = 0;
  std::optional<std::string> out_path;
  Overrides overrides;
};

/// CSV of the higher-order correction for one configured run, dents marked.
inline int cmd_curve(const CurveArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto loaded = detail::load_config(args.config_path, args.overrides);
    const auto& cfg = loaded.config;
    if (args.run_index >= cfg.runs.size()) {
      throw ParameterError("run index " + std::to_string(args.run_index) + " out of range (config has " +
                           std::to_string(cfg.runs.size()) + " runs)");
    }
    const ProtocolRun run = detail::effective_run(cfg, args.run_index);
    const CorrectionCurve curve =
        correction_curve(run, cfg.g_true, cfg.locals(), cfg.options.grid, cfg.options.frequency_scale());
    DentOptions dent_opts;
    dent_opts.threshold = cfg.options.threshold;
    const auto dents = find_dents(curve, dent_opts);
    detail::emit(io::curve_csv(curve, &dents), args.out_path, out);
    for (const auto& d : dents) err << "dent at dt = " << d.time << " us, delta = " << d.value << '\n';
    return kSuccess;
  });
}

struct DesignArgs {
  std::string config_path;  ///< g_true is used as the prior
  int candidates = 200;
  std::optional<std::string> out_path;
  Overrides overrides;
};

/// Searches for a well-conditioned design under the config's tensor and
/// writes a config holding the best candidate's runs.
inline int cmd_design(const DesignArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (args.candidates < 1) throw ParseError("candidate count must be at least 1", 0, 0);
    auto loaded = detail::load_config(args.config_path, args.overrides);
    auto& cfg = loaded.config;
    DesignOptions opts;
    opts.grid = cfg.options.grid;
    opts.dents.threshold = cfg.options.threshold;
    opts.frequency_scale = cfg.options.frequency_scale();
    opts.max_condition = cfg.options.max_condition;
    opts.locals = cfg.locals();
    const auto designs = sample_designs(cfg.options.seed, cfg.g_true, args.candidates, opts);
    const DesignCandidate& best = designs.front();
    if (!(best.score.condition_number <= cfg.options.max_condition)) {
      throw IllConditionedError("no candidate design is well conditioned", best.score.condition_number);
    }
    cfg.runs = best.runs;
    cfg.options.dt_scale = 1.0;
    cfg.options.normalize = false;
    detail::emit(io::write_config(cfg), args.out_path, out);
    err << "best design: condition number " << best.score.condition_number << ", max correction "
        << best.score.max_correction << '\n';
    return kSuccess;
  });
}

struct ReproduceArgs {
  std::optional<std::string> out_path;
  Overrides overrides;
};

/// Simulate and invert the NV-centre scenario; exit 0 on PASS, 1 on FAIL.
inline int cmd_reproduce_nv(const ReproduceArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    nv::ReproductionOptions opts;
    const auto& ov = args.overrides;
    if (ov.seed) opts.seed = *ov.seed;
    if (ov.noise) opts.noise = *ov.noise;
    if (ov.dt_scale) opts.dt_scale = *ov.dt_scale;
    if (ov.two_pi) opts.frequency_scale = kTwoPiFrequencyScale;
    if (!(opts.dt_scale > 0.0) || opts.noise < 0.0) throw ParseError("dt-scale must be positive and noise non-negative", 0, 0);

    const auto start = std::chrono::steady_clock::now();
    const nv::Reproduction rep = nv::reproduce(opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    io::ScenarioConfig embedded{nv::hyperfine_tensor(), {}, {}, rep.runs, {}};
    const io::ResultReport report =
        io::make_report(rep.result, {io::content_hash(io::write_config(embedded)), opts.seed, io::kToolVersion});
    if (args.out_path) io::write_file(*args.out_path, io::write_report(report));

    const CouplingTensor g = nv::hyperfine_tensor();
    out << "true tensor [MHz]:\n" << detail::format_matrix(g);
    out << "estimated tensor [MHz]:\n" << detail::format_matrix(rep.result.g_est);
    out << "published estimate [MHz]:\n" << detail::format_matrix(nv::published_estimate());
    out << std::setprecision(6);
    out << "component  true      estimate  |diff|\n";
    for (std::size_t j = 0; j < kComponentNames.size(); ++j) {
      const int i = static_cast<int>(j);
      const double t = g.components()[i];
      const double e = rep.result.g_est.components()[i];
      out << "  " << kComponentNames[j] << "       " << std::setw(8) << t << "  " << std::setw(8) << e << "  "
          << std::abs(e - t) << '\n';
    }
    out << "error: " << rep.result.error->mean << " +/- " << rep.result.error->std << " MHz (published "
        << nv::kPublishedErrorMean << " +/- " << nv::kPublishedErrorStd << ")\n";
    out << "condition number: " << rep.result.condition_number << ", runtime " << seconds << " s\n";
    out << io::summary_line(report) << '\n';
    out << (rep.passed ? "PASS" : "FAIL") << " (|diff| <= " << nv::kComponentTolerance
        << ", |mean| <= " << nv::kMeanTolerance << ", std <= " << nv::kStdTolerance << " MHz)\n";
    return rep.passed ? kSuccess : kAcceptanceFail;
  });
}

}  // namespace weakmeas::cli

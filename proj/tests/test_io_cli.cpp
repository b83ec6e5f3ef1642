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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "weakmeas/commands.hpp"
#include "weakmeas/io.hpp"

namespace weakmeas {
namespace {

namespace fs = std::filesystem;
using testing::Rng;

const std::string kScenarios = WEAKMEAS_SCENARIO_DIR;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("weakmeas_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string write_temp(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto path = dir.file(name);
  io::write_file(path, text);
  return path;
}

// --- formats -------------------------------------------------------------------

TEST(ConfigFormat, ParsesScenario) {
  const auto cfg = io::parse_config(io::read_file(kScenarios + "/nv_published.json"));
  EXPECT_EQ(cfg.runs.size(), 6u);
  EXPECT_DOUBLE_EQ(cfg.g_true(0, 1), -6.3);
  EXPECT_DOUBLE_EQ(cfg.runs[2].dt, 0.073);
  EXPECT_TRUE(cfg.options.normalize);
  EXPECT_EQ(cfg.options.seed, 1u);
  EXPECT_TRUE(cfg.locals().is_zero());
}

TEST(ConfigFormat, RejectsUnknownKeys) {
  const std::string text = R"({"g_true": {"xx":0,"yy":0,"zz":0,"xy":0,"xz":0,"yz":0}, "runs": [], "extra": 1})";
  EXPECT_THROW(io::parse_config(text), ParseError);
  const std::string nested =
      R"({"g_true": {"xx":0,"yy":0,"zz":0,"xy":0,"xz":0,"yz":0}, "runs": [{"r_i":[0,0,1],"p":[0,0,1],"q_tilde":[1,0,0],"dt_us":0.1,"dt":1}]})";
  EXPECT_THROW(io::parse_config(nested), ParseError);
  const std::string missing = R"({"g_true": {"xx":0,"yy":0,"zz":0,"xy":0,"xz":0}, "runs": []})";
  EXPECT_THROW(io::parse_config(missing), ParseError);
}

TEST(ConfigFormat, SyntaxErrorsCarryLineAndColumn) {
  const std::string text = "{\n  \"g_true\": {\n    \"xx\": 1,,\n  }\n}\n";
  try {
    io::parse_config(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 13);
  }
}

TEST(ConfigFormat, GridSpec) {
  const auto g = io::detail::grid_from_string("0.001:0.2:0.001");
  EXPECT_DOUBLE_EQ(g.max, 0.2);
  EXPECT_THROW(io::detail::grid_from_string("0.2:0.001:0.001"), ParseError);
  EXPECT_THROW(io::detail::grid_from_string("0.1:0.1:0.001"), ParseError);
  EXPECT_THROW(io::detail::grid_from_string("0.1:0.2"), ParseError);
  EXPECT_THROW(io::detail::grid_from_string("a:0.2:0.1"), ParseError);
}

TEST(ConfigFormat, WriteThenParse) {
  auto cfg = io::parse_config(io::read_file(kScenarios + "/with_local_fields.json"));
  cfg.options.two_pi = true;
  const auto again = io::parse_config(io::write_config(cfg));
  EXPECT_EQ(again.g_true, cfg.g_true);
  EXPECT_EQ(again.target_field, cfg.target_field);
  EXPECT_EQ(again.runs.size(), cfg.runs.size());
  EXPECT_EQ(again.runs.back().q_tilde, cfg.runs.back().q_tilde);
  EXPECT_TRUE(again.options.two_pi);
}

TEST(RecordFormat, RoundTripIsLossless) {
  Rng rng(301);
  std::vector<ExperimentRecord> recs;
  for (int k = 0; k < 50; ++k) {
    recs.push_back({testing::random_state(rng), testing::random_state(rng), testing::random_state(rng),
                    testing::random_unit(rng), testing::uniform(rng, 1e-4, 1.0), testing::uniform(rng, -1, 1)});
  }
  const auto parsed = io::parse_records(io::write_records(recs));
  ASSERT_EQ(parsed.size(), recs.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(parsed[k].r_i, recs[k].r_i);
    EXPECT_EQ(parsed[k].r_f, recs[k].r_f);
    EXPECT_EQ(parsed[k].p, recs[k].p);
    EXPECT_EQ(parsed[k].q, recs[k].q);
    EXPECT_EQ(parsed[k].dt, recs[k].dt);
    EXPECT_EQ(parsed[k].expectation, recs[k].expectation);
  }
  EXPECT_THROW(io::parse_records(R"({"format":"other","version":1,"records":[]})"), ParseError);
}

TEST(ReportFormat, RoundTripIsLossless) {
  Rng rng(303);
  io::ResultReport r;
  r.g_est = testing::random_tensor(rng);
  r.error = ErrorStats{testing::uniform(rng, -1, 1), testing::uniform(rng, 0, 1)};
  r.condition_number = 12.345678901234567;
  r.residual_norm = 1.0 / 3.0;
  r.residuals = {1e-17, -2.5, 1.0 / 7.0};
  r.provenance = {"fnv1a64:0123456789abcdef", 42, io::kToolVersion};
  const auto back = io::parse_report(io::write_report(r));
  EXPECT_EQ(back.g_est, r.g_est);
  ASSERT_TRUE(back.error.has_value());
  EXPECT_EQ(back.error->mean, r.error->mean);
  EXPECT_EQ(back.error->std, r.error->std);
  EXPECT_EQ(back.condition_number, r.condition_number);
  EXPECT_EQ(back.residual_norm, r.residual_norm);
  EXPECT_EQ(back.residuals, r.residuals);
  EXPECT_EQ(back.provenance.config_hash, r.provenance.config_hash);
  EXPECT_EQ(back.provenance.seed, 42u);
  r.error.reset();
  EXPECT_FALSE(io::parse_report(io::write_report(r)).error.has_value());
}

TEST(CurveCsv, Layout) {
  CorrectionCurve c;
  c.times = {0.001, 0.002, 0.003};
  c.values = {1.0 / 3.0, 1e-7, 0.5};
  c.flagged = {false, false, false};
  const std::vector<Dent> dents{{1, 0.002, 1e-7}};
  EXPECT_EQ(io::curve_csv(c, &dents),
            "dt_us,delta,dent\n0.001,0.333333333333,0\n0.002,1e-07,1\n0.003,0.5,0\n");
}

// --- commands ------------------------------------------------------------------

TEST(SimulateCommand, PublishedScenarioRecords) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/nv_published.json", dir.file("r.json"), {}}, out, err), cli::kSuccess)
      << err.str();
  const auto recs = io::parse_records(io::read_file(dir.file("r.json")));
  ASSERT_EQ(recs.size(), 6u);
  const double dts[] = {0.091, 0.086, 0.073, 0.069, 0.066, 0.051};
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_DOUBLE_EQ(recs[k].dt, dts[k]);
    EXPECT_NEAR(recs[k].r_i.norm(), 1.0, 1e-12);
  }
}

TEST(SimulateCommand, ZeroCouplingGivesInnerProducts) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/zero_coupling.json", std::nullopt, {}}, out, err), cli::kSuccess);
  const auto recs = io::parse_records(out.str());
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& r : recs) EXPECT_NEAR(r.expectation, r.q.dot(r.p), 1e-12);
}

TEST(SimulateCommand, DeterministicWithSeedAndNoise) {
  cli::Overrides ov;
  ov.noise = 0.01;
  ov.seed = 77;
  std::ostringstream a, b, c, err;
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/nv_published.json", std::nullopt, ov}, a, err), cli::kSuccess);
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/nv_published.json", std::nullopt, ov}, b, err), cli::kSuccess);
  EXPECT_EQ(a.str(), b.str());
  ov.seed = 78;
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/nv_published.json", std::nullopt, ov}, c, err), cli::kSuccess);
  EXPECT_NE(a.str(), c.str());
}

TEST(SimulateCommand, ErrorExitCodes) {
  TempDir dir;
  std::ostringstream out, err;
  const auto broken = write_temp(dir, "broken.json", "{\"g_true\": ");
  EXPECT_EQ(cli::cmd_simulate({broken, std::nullopt, {}}, out, err), cli::kParseFailure);
  EXPECT_NE(err.str().find("line"), std::string::npos);

  auto cfg = io::parse_config(io::read_file(kScenarios + "/zero_coupling.json"));
  cfg.runs[1].r_i = BlochVector(0, 0, 1.5);
  const auto invalid = write_temp(dir, "invalid.json", io::write_config(cfg));
  std::ostringstream err2;
  EXPECT_EQ(cli::cmd_simulate({invalid, std::nullopt, {}}, out, err2), cli::kInvalidData);
  EXPECT_NE(err2.str().find("run 1"), std::string::npos) << err2.str();

  std::ostringstream err3;
  EXPECT_EQ(cli::cmd_simulate({dir.file("missing.json"), std::nullopt, {}}, out, err3), cli::kParseFailure);
}

TEST(SimulateCommand, LocalFieldsAreUndoneBeforeInversion) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate({kScenarios + "/with_local_fields.json", dir.file("r.json"), {}}, out, err),
            cli::kSuccess);
  const auto recs = io::parse_records(io::read_file(dir.file("r.json")));
  const auto cfg = io::parse_config(io::read_file(kScenarios + "/with_local_fields.json"));
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_NEAR(recs[k].q.norm(), 1.0, 1e-10);
    EXPECT_GT((recs[k].q.vec() - cfg.runs[k].q_tilde.vec()).norm(), 1e-4);  // axis was rotated back
  }
  // Without local fields nothing is rotated back.
  auto bare = cfg;
  bare.target_field = BlochVector(0, 0, 0);
  bare.probe_field = BlochVector(0, 0, 0);
  const auto bare_path = write_temp(dir, "bare.json", io::write_config(bare));
  ASSERT_EQ(cli::cmd_simulate({bare_path, dir.file("b.json"), {}}, out, err), cli::kSuccess);
  const auto plain = io::parse_records(io::read_file(dir.file("b.json")));
  for (std::size_t k = 0; k < plain.size(); ++k) EXPECT_LT((plain[k].q.vec() - bare.runs[k].q_tilde.vec()).norm(), 1e-12);
}

TEST(EstimateCommand, ClosedLoopRecordsRecoverExactly) {
  Rng rng(307);
  const auto g = testing::random_tensor(rng, 5.0);
  std::vector<ExperimentRecord> recs;
  while (recs.size() < 8) {
    ExperimentRecord rec{testing::random_unit(rng), testing::random_unit(rng), testing::random_unit(rng),
                         testing::random_unit(rng), 0.004, 0.0};
    if (1.0 + rec.r_i.dot(rec.r_f) < 0.2) continue;
    rec.expectation = first_order_expectation(rec.geometry(), g);
    if (std::abs(rec.expectation) <= 1.0) recs.push_back(rec);
  }
  TempDir dir;
  const auto path = write_temp(dir, "recs.json", io::write_records(recs));
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_estimate({path, std::nullopt, std::nullopt, {}}, out, err), cli::kSuccess) << err.str();
  const auto report = io::parse_report(out.str());
  EXPECT_LT((report.g_est.components() - g.components()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(report.residual_norm, 1e-9);
  EXPECT_FALSE(report.error.has_value());
  EXPECT_EQ(report.residuals.size(), 8u);
  EXPECT_EQ(report.provenance.tool_version, io::kToolVersion);
}

TEST(EstimateCommand, SimulateOutputIsAcceptedWithReference) {
  TempDir dir;
  std::ostringstream out, err;
  const std::string cfg = kScenarios + "/nv_published.json";
  ASSERT_EQ(cli::cmd_simulate({cfg, dir.file("r.json"), {}}, out, err), cli::kSuccess);
  ASSERT_EQ(cli::cmd_estimate({dir.file("r.json"), cfg, dir.file("report.json"), {}}, out, err), cli::kSuccess);
  const auto report = io::parse_report(io::read_file(dir.file("report.json")));
  ASSERT_TRUE(report.error.has_value());
  EXPECT_EQ(report.provenance.config_hash, io::content_hash(io::read_file(cfg)));
  EXPECT_EQ(report.provenance.seed, 1u);
  EXPECT_NE(err.str().find("g_est"), std::string::npos);
}

TEST(EstimateCommand, ErrorExitCodes) {
  TempDir dir;
  Rng rng(311);
  std::vector<ExperimentRecord> five;
  for (int k = 0; k < 5; ++k) {
    five.push_back({testing::random_unit(rng), {0, 0, 1}, testing::random_unit(rng), testing::random_unit(rng), 0.01, 0.0});
    five.back().r_f = five.back().r_i;
  }
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_estimate({write_temp(dir, "five.json", io::write_records(five)), std::nullopt, std::nullopt, {}},
                              out, err),
            cli::kInvalidData);

  auto six = five;
  six.push_back(five.front());
  for (auto& r : six) r = five.front();  // identical rows
  std::ostringstream err2;
  EXPECT_EQ(cli::cmd_estimate({write_temp(dir, "six.json", io::write_records(six)), std::nullopt, std::nullopt, {}},
                              out, err2),
            cli::kIllConditioned);
  EXPECT_NE(err2.str().find("condition number"), std::string::npos);
}

TEST(CurveCommand, PublishedRowCsv) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_curve({kScenarios + "/nv_published.json", 0, std::nullopt, {}}, out, err), cli::kSuccess);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "dt_us,delta,dent");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
  }
  EXPECT_EQ(rows, 200);
  EXPECT_EQ(out.str().find('\r'), std::string::npos);
}

TEST(CurveCommand, ZeroCouplingIsFlat) {
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_curve({kScenarios + "/zero_coupling.json", 2, std::nullopt, {}}, out, err), cli::kSuccess);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    EXPECT_LT(std::stod(line.substr(a + 1, b - a - 1)), 1e-12);
  }
}

TEST(CurveCommand, ErrorExitCodes) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_curve({kScenarios + "/zero_coupling.json", 3, std::nullopt, {}}, out, err), cli::kInvalidData);
  cli::Overrides reversed;
  reversed.grid = "0.2:0.001:0.001";
  EXPECT_EQ(cli::cmd_curve({kScenarios + "/zero_coupling.json", 0, std::nullopt, reversed}, out, err),
            cli::kParseFailure);
  cli::Overrides duplicated;
  duplicated.grid = "0.1:0.1:0.001";
  EXPECT_EQ(cli::cmd_curve({kScenarios + "/zero_coupling.json", 0, std::nullopt, duplicated}, out, err),
            cli::kParseFailure);
}

TEST(DesignCommand, WritesUsableConfig) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_design({kScenarios + "/nv_published.json", 5, dir.file("design.json"), {}}, out, err),
            cli::kSuccess)
      << err.str();
  const auto cfg = io::parse_config(io::read_file(dir.file("design.json")));
  ASSERT_EQ(cfg.runs.size(), 6u);
  ASSERT_EQ(cli::cmd_simulate({dir.file("design.json"), dir.file("r.json"), {}}, out, err), cli::kSuccess);
  ASSERT_EQ(cli::cmd_estimate({dir.file("r.json"), dir.file("design.json"), std::nullopt, {}}, out, err),
            cli::kSuccess);
}

TEST(ReproduceCommand, ReportsVerdictAndTables) {
  std::ostringstream out, err;
  const int code = cli::cmd_reproduce_nv({}, out, err);
  const bool passed = out.str().find("\nPASS") != std::string::npos;
  const bool failed = out.str().find("\nFAIL") != std::string::npos;
  EXPECT_NE(passed, failed);
  EXPECT_EQ(code, passed ? cli::kSuccess : cli::kAcceptanceFail);
  EXPECT_NE(out.str().find("published estimate"), std::string::npos);
  EXPECT_EQ(nv::reproduce().passed, passed);
}

TEST(ReproduceCommand, NoiseIsSeeded) {
  cli::Overrides ov;
  ov.noise = 0.05;
  ov.seed = 5;
  TempDir dir;
  std::ostringstream a, b, err;
  cli::cmd_reproduce_nv({dir.file("a.json"), ov}, a, err);
  cli::cmd_reproduce_nv({dir.file("b.json"), ov}, b, err);
  EXPECT_EQ(io::read_file(dir.file("a.json")), io::read_file(dir.file("b.json")));
}

// --- executable ----------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WEAKMEAS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Executable, ExitCodeContract) {
  EXPECT_EQ(run_cli("simulate --config " + kScenarios + "/zero_coupling.json"), 0);
  EXPECT_EQ(run_cli("curve --config " + kScenarios + "/zero_coupling.json --run 9"), 3);
  EXPECT_EQ(run_cli("curve --config " + kScenarios + "/zero_coupling.json --grid 0.2:0.1:0.01"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("simulate"), 2);
}

}  // namespace
}  // namespace weakmeas

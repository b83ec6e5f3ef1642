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

// File formats: scenario configs, record files and result reports, all JSON.
// Unknown keys are rejected everywhere. Doubles are written in shortest
// round-trip form, so files reload bit-exactly.

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "weakmeas/design.hpp"
#include "weakmeas/estimator.hpp"
#include "weakmeas/protocol.hpp"

namespace weakmeas::io {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kRecordsFormat = "weakmeas-records";
inline constexpr const char* kReportFormat = "weakmeas-report";

struct ScenarioOptions {
  double noise = 0.0;
  double threshold = DentOptions{}.threshold;
  TimeGrid grid{};
  std::uint64_t seed = 0;
  double max_condition = kDefaultMaxCondition;
  bool two_pi = false;
  double dt_scale = 1.0;
  /// Re-normalize r_i, p and q~ to unit length before use (for rounded inputs).
  bool normalize = false;

  double frequency_scale() const { return two_pi ? kTwoPiFrequencyScale : kUnitFrequencyScale; }
};

struct ScenarioConfig {
  CouplingTensor g_true;
  BlochVector target_field;  ///< H_t = b . sigma, rad/us
  BlochVector probe_field;
  std::vector<ProtocolRun> runs;
  ScenarioOptions options;

  LocalHamiltonians locals() const { return LocalHamiltonians::from_fields(target_field, probe_field); }
};

struct ReportProvenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
};

struct ResultReport {
  CouplingTensor g_est;
  std::optional<ErrorStats> error;
  double condition_number = 1.0;
  double residual_norm = 0.0;
  std::vector<double> residuals;
  ReportProvenance provenance;
};

/// 64-bit FNV-1a, hex encoded.
inline std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what, 0, 0);
}

inline json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    int column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream os;
    os << "syntax error at line " << line << ", column " << column << ": " << e.what();
    throw ParseError(os.str(), line, column);
  }
}

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) schema_error(where, "unknown key '" + key + "'");
  }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing key '") + key + "'");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) schema_error(where, "expected a number");
  return v.get<double>();
}

inline BlochVector vector3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) schema_error(where, "expected an array of three numbers");
  return BlochVector(number(v[0], where + "/0"), number(v[1], where + "/1"), number(v[2], where + "/2"));
}

inline json to_json(const BlochVector& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_json(const CouplingTensor& g) {
  json out = json::object();
  for (std::size_t j = 0; j < kComponentNames.size(); ++j) out[kComponentNames[j]] = g.components()[static_cast<int>(j)];
  return out;
}

inline CouplingTensor tensor(const json& v, const std::string& where) {
  check_keys(v, where, {"xx", "yy", "zz", "xy", "xz", "yz"});
  CouplingTensor::Components c;
  for (std::size_t j = 0; j < kComponentNames.size(); ++j) {
    c[static_cast<int>(j)] = number(require(v, where, kComponentNames[j]), where + "/" + kComponentNames[j]);
  }
  return CouplingTensor(c);
}

inline json matrix_json(const CouplingTensor& g) {
  const Eigen::Matrix3d m = g.matrix();
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

/// "MIN:MAX:STEP"
inline TimeGrid grid_from_string(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ParseError("grid '" + spec + "': expected MIN:MAX:STEP", 0, 0);
    parts.push_back(v);
  }
  if (parts.size() != 3) throw ParseError("grid '" + spec + "': expected MIN:MAX:STEP", 0, 0);
  TimeGrid g{parts[0], parts[1], parts[2]};
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw ParseError(e.what(), 0, 0);
  }
  return g;
}

inline std::string grid_to_string(const TimeGrid& g) {
  std::ostringstream os;
  os << std::setprecision(17) << g.min << ':' << g.max << ':' << g.step;
  return os.str();
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

/// Throws ParseError on syntax errors (with line and column) and on schema
/// violations (with the JSON path). Physical validity of the runs is checked
/// later, when they are used.
inline ScenarioConfig parse_config(const std::string& text) {
  using namespace detail;
  const json doc = parse_text(text);
  check_keys(doc, "config", {"g_true", "locals", "runs", "options"});
  ScenarioConfig cfg;
  cfg.g_true = tensor(require(doc, "config", "g_true"), "config/g_true");
  if (auto it = doc.find("locals"); it != doc.end()) {
    check_keys(*it, "config/locals", {"target_field", "probe_field"});
    if (it->contains("target_field")) cfg.target_field = vector3((*it)["target_field"], "config/locals/target_field");
    if (it->contains("probe_field")) cfg.probe_field = vector3((*it)["probe_field"], "config/locals/probe_field");
  }
  const json& runs = require(doc, "config", "runs");
  if (!runs.is_array()) schema_error("config/runs", "expected an array");
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::string where = "config/runs/" + std::to_string(k);
    check_keys(runs[k], where, {"r_i", "p", "q_tilde", "dt_us"});
    cfg.runs.push_back({vector3(require(runs[k], where, "r_i"), where + "/r_i"),
                        vector3(require(runs[k], where, "p"), where + "/p"),
                        vector3(require(runs[k], where, "q_tilde"), where + "/q_tilde"),
                        number(require(runs[k], where, "dt_us"), where + "/dt_us")});
  }
  if (auto it = doc.find("options"); it != doc.end()) {
    const std::string where = "config/options";
    check_keys(*it, where, {"noise", "threshold", "grid", "seed", "kappa_max", "two_pi", "dt_scale", "normalize"});
    auto& o = cfg.options;
    if (it->contains("noise")) o.noise = number((*it)["noise"], where + "/noise");
    if (it->contains("threshold")) o.threshold = number((*it)["threshold"], where + "/threshold");
    if (it->contains("kappa_max")) o.max_condition = number((*it)["kappa_max"], where + "/kappa_max");
    if (it->contains("dt_scale")) o.dt_scale = number((*it)["dt_scale"], where + "/dt_scale");
    if (it->contains("grid")) {
      if (!(*it)["grid"].is_string()) schema_error(where + "/grid", "expected \"MIN:MAX:STEP\"");
      o.grid = grid_from_string((*it)["grid"].get<std::string>());
    }
    if (it->contains("seed")) {
      if (!(*it)["seed"].is_number_unsigned()) schema_error(where + "/seed", "expected a non-negative integer");
      o.seed = (*it)["seed"].get<std::uint64_t>();
    }
    if (it->contains("two_pi")) {
      if (!(*it)["two_pi"].is_boolean()) schema_error(where + "/two_pi", "expected a boolean");
      o.two_pi = (*it)["two_pi"].get<bool>();
    }
    if (it->contains("normalize")) {
      if (!(*it)["normalize"].is_boolean()) schema_error(where + "/normalize", "expected a boolean");
      o.normalize = (*it)["normalize"].get<bool>();
    }
  }
  return cfg;
}

inline std::string write_config(const ScenarioConfig& cfg) {
  using namespace detail;
  json doc;
  doc["g_true"] = to_json(cfg.g_true);
  doc["locals"] = {{"target_field", to_json(cfg.target_field)}, {"probe_field", to_json(cfg.probe_field)}};
  json runs = json::array();
  for (const auto& r : cfg.runs) {
    runs.push_back({{"r_i", to_json(r.r_i)}, {"p", to_json(r.p)}, {"q_tilde", to_json(r.q_tilde)}, {"dt_us", r.dt}});
  }
  doc["runs"] = runs;
  const auto& o = cfg.options;
  doc["options"] = {{"noise", o.noise},         {"threshold", o.threshold},     {"grid", grid_to_string(o.grid)},
                    {"seed", o.seed},           {"kappa_max", o.max_condition}, {"two_pi", o.two_pi},
                    {"dt_scale", o.dt_scale},   {"normalize", o.normalize}};
  return doc.dump(2) + "\n";
}

inline std::string write_records(const std::vector<ExperimentRecord>& records) {
  using namespace detail;
  json list = json::array();
  for (const auto& r : records) {
    list.push_back({{"r_i", to_json(r.r_i)},
                    {"r_f", to_json(r.r_f)},
                    {"p", to_json(r.p)},
                    {"q", to_json(r.q)},
                    {"dt_us", r.dt},
                    {"expectation", r.expectation}});
  }
  json doc = {{"format", kRecordsFormat}, {"version", 1}, {"records", list}};
  return doc.dump(2) + "\n";
}

inline std::vector<ExperimentRecord> parse_records(const std::string& text) {
  using namespace detail;
  const json doc = parse_text(text);
  check_keys(doc, "records file", {"format", "version", "records"});
  if (require(doc, "records file", "format") != kRecordsFormat) schema_error("records file/format", "not a record file");
  if (require(doc, "records file", "version") != 1) schema_error("records file/version", "unsupported version");
  const json& list = require(doc, "records file", "records");
  if (!list.is_array()) schema_error("records file/records", "expected an array");
  std::vector<ExperimentRecord> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string where = "records/" + std::to_string(k);
    check_keys(list[k], where, {"r_i", "r_f", "p", "q", "dt_us", "expectation"});
    out.push_back({vector3(require(list[k], where, "r_i"), where + "/r_i"),
                   vector3(require(list[k], where, "r_f"), where + "/r_f"),
                   vector3(require(list[k], where, "p"), where + "/p"),
                   vector3(require(list[k], where, "q"), where + "/q"),
                   number(require(list[k], where, "dt_us"), where + "/dt_us"),
                   number(require(list[k], where, "expectation"), where + "/expectation")});
  }
  return out;
}

inline ResultReport make_report(const EstimationResult& r, ReportProvenance provenance) {
  return {r.g_est, r.error, r.condition_number, r.residual_norm,
          std::vector<double>(r.residuals.data(), r.residuals.data() + r.residuals.size()), std::move(provenance)};
}

inline std::string write_report(const ResultReport& r) {
  using namespace detail;
  json doc;
  doc["format"] = kReportFormat;
  doc["g_est"] = {{"components_mhz", to_json(r.g_est)}, {"matrix_mhz", matrix_json(r.g_est)}};
  doc["error"] = r.error ? json{{"mean_mhz", r.error->mean}, {"std_mhz", r.error->std}} : json(nullptr);
  doc["condition_number"] = r.condition_number;
  doc["residual_norm"] = r.residual_norm;
  doc["residuals"] = r.residuals;
  doc["provenance"] = {{"config_hash", r.provenance.config_hash},
                       {"seed", r.provenance.seed},
                       {"tool_version", r.provenance.tool_version}};
  return doc.dump(2) + "\n";
}

inline ResultReport parse_report(const std::string& text) {
  using namespace detail;
  const json doc = parse_text(text);
  check_keys(doc, "report", {"format", "g_est", "error", "condition_number", "residual_norm", "residuals", "provenance"});
  if (require(doc, "report", "format") != kReportFormat) schema_error("report/format", "not a report");
  ResultReport r;
  const json& g = require(doc, "report", "g_est");
  check_keys(g, "report/g_est", {"components_mhz", "matrix_mhz"});
  r.g_est = tensor(require(g, "report/g_est", "components_mhz"), "report/g_est/components_mhz");
  const json& e = require(doc, "report", "error");
  if (!e.is_null()) {
    check_keys(e, "report/error", {"mean_mhz", "std_mhz"});
    r.error = ErrorStats{number(require(e, "report/error", "mean_mhz"), "report/error/mean_mhz"),
                         number(require(e, "report/error", "std_mhz"), "report/error/std_mhz")};
  }
  r.condition_number = number(require(doc, "report", "condition_number"), "report/condition_number");
  r.residual_norm = number(require(doc, "report", "residual_norm"), "report/residual_norm");
  const json& res = require(doc, "report", "residuals");
  if (!res.is_array()) schema_error("report/residuals", "expected an array");
  for (std::size_t k = 0; k < res.size(); ++k) r.residuals.push_back(number(res[k], "report/residuals"));
  const json& p = require(doc, "report", "provenance");
  check_keys(p, "report/provenance", {"config_hash", "seed", "tool_version"});
  r.provenance.config_hash = require(p, "report/provenance", "config_hash").get<std::string>();
  r.provenance.seed = require(p, "report/provenance", "seed").get<std::uint64_t>();
  r.provenance.tool_version = require(p, "report/provenance", "tool_version").get<std::string>();
  return r;
}

/// One-line summary, e.g. for terminals and logs.
inline std::string summary_line(const ResultReport& r) {
  std::ostringstream os;
  os << std::setprecision(6) << "g_est [MHz] xx=" << r.g_est(0, 0) << " yy=" << r.g_est(1, 1)
     << " zz=" << r.g_est(2, 2) << " xy=" << r.g_est(0, 1) << " xz=" << r.g_est(0, 2) << " yz=" << r.g_est(1, 2)
     << " | kappa=" << r.condition_number;
  if (r.error) os << " | error=" << r.error->mean << " +/- " << r.error->std << " MHz";
  return os.str();
}

/// Two or three column CSV: dt_us,delta[,dent]. 12 significant digits,
/// LF endings, classic locale.
inline std::string curve_csv(const CorrectionCurve& c, const std::vector<Dent>* dents = nullptr) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12);
  os << "dt_us,delta" << (dents ? ",dent" : "") << '\n';
  std::vector<bool> mark(c.times.size(), false);
  if (dents) {
    for (const auto& d : *dents) mark[d.index] = true;
  }
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    os << c.times[i] << ',';
    if (c.flagged[i]) {
      os << "nan";
    } else {
      os << c.values[i];
    }
    if (dents) os << ',' << (mark[i] ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

}  // namespace weakmeas::io

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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "weakmeas/commands.hpp"

namespace {

using namespace weakmeas::cli;

void add_common(CLI::App* sub, std::optional<std::string>& out, Overrides& ov) {
  sub->add_option("--out", out, "Output path (default: stdout)");
  sub->add_option("--seed", ov.seed, "Seed for every random draw");
  sub->add_option("--noise", ov.noise, "Gaussian tomography noise spread");
  sub->add_option("--grid", ov.grid, "Time grid MIN:MAX:STEP in us");
  sub->add_option("--threshold", ov.threshold, "Dent threshold on the correction");
  sub->add_flag("--two-pi", ov.two_pi, "Treat tensor entries as MHz and multiply by 2 pi");
  sub->add_option("--dt-scale", ov.dt_scale, "Multiply every interaction time");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-measurement estimation of two-spin coupling tensors"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Forward-simulate the configured runs into a record file");
  simulate->add_option("--config", sim.config_path, "Scenario config")->required();
  add_common(simulate, sim.out_path, sim.overrides);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Recover the coupling tensor from a record file");
  estimate->add_option("--records", est.records_path, "Record file")->required();
  estimate->add_option("--config", est.config_path, "Scenario config holding the reference tensor");
  add_common(estimate, est.out_path, est.overrides);

  CurveArgs crv;
  auto* curve = app.add_subcommand("curve", "Emit the higher-order correction curve of one run as CSV");
  curve->add_option("--config", crv.config_path, "Scenario config")->required();
  curve->add_option("--run", crv.run_index, "Zero-based run index");
  add_common(curve, crv.out_path, crv.overrides);

  DesignArgs dsg;
  auto* design = app.add_subcommand("design", "Search for a well-conditioned set of runs");
  design->add_option("--config", dsg.config_path, "Scenario config; its tensor is the prior")->required();
  design->add_option("-n,--candidates", dsg.candidates, "Number of candidate designs");
  add_common(design, dsg.out_path, dsg.overrides);

  ReproduceArgs rep;
  auto* reproduce = app.add_subcommand("reproduce-nv", "Run the NV-centre hyperfine reproduction");
  add_common(reproduce, rep.out_path, rep.overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kParseFailure;
  }

  if (*simulate) return cmd_simulate(sim, std::cout, std::cerr);
  if (*estimate) return cmd_estimate(est, std::cout, std::cerr);
  if (*curve) return cmd_curve(crv, std::cout, std::cerr);
  if (*design) return cmd_design(dsg, std::cout, std::cerr);
  return cmd_reproduce_nv(rep, std::cout, std::cerr);
}

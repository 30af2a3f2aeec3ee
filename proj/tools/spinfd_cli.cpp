/*
 Copyright 2026 The spinfd Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end for the benchmark runner.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinfd/bench.hpp"
#include "spinfd/errors.hpp"
#include "spinfd/spinner.hpp"

namespace {

using spinfd::ExperimentKind;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string out;
  std::int64_t seed_offset = 0;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--preset", f.preset, "Named preset shipped with the tool");
  cmd->add_option("--out", f.out, "Output CSV path (default: config output, else stdout)");
  cmd->add_option("--seed-offset", f.seed_offset, "Added to every seed");
  cmd->add_option("--jobs", f.jobs, "Concurrent sweep cells")->check(CLI::PositiveNumber);
}

spinfd::ExperimentConfig resolve(const CommonFlags& f) {
  if (f.config.empty() == f.preset.empty()) throw spinfd::ConfigError("give exactly one of --config or --preset");
  auto c = f.config.empty() ? spinfd::load_preset(f.preset) : spinfd::load_config(f.config);
  return spinfd::with_seed_offset(std::move(c), f.seed_offset);
}

int run_experiment(const CommonFlags& f, const std::set<ExperimentKind>& allowed, const std::string& cmd) {
  const auto cfg = resolve(f);
  if (!allowed.count(cfg.experiment))
    throw spinfd::ConfigError("experiment '" + spinfd::to_string(cfg.experiment) + "' does not belong to '" + cmd + "'");
  const auto records = spinfd::run(cfg, f.jobs);
  const std::string path = !f.out.empty() ? f.out : cfg.output;
  if (path.empty() || path == "-") {
    spinfd::write_csv(std::cout, records);
  } else {
    std::ofstream os(path);
    if (!os) throw spinfd::ConfigError("cannot write '" + path + "'");
    spinfd::write_csv(os, records);
  }
  long failed = 0;
  for (const auto& r : records)
    if (r.status.rfind("error", 0) == 0) ++failed;
  if (failed) {
    std::cerr << failed << " sweep cell(s) failed\n";
    return kExitPartial;
  }
  return kExitOk;
}

int spinner_verify(const std::string& descriptor, const std::string& kind, long n, int k, std::uint64_t seed) {
  nlohmann::json d;
  if (!descriptor.empty()) {
    std::ifstream in(descriptor);
    if (!in) throw spinfd::ConfigError("cannot open '" + descriptor + "'");
    try {
      in >> d;
    } catch (const nlohmann::json::exception& e) {
      throw spinfd::ConfigError(e.what());
    }
  } else {
    d = {{"kind", kind}, {"n_or_p", n}, {"k", k}, {"seed", seed}};
  }
  const spinfd::Spinner s = [&] {
    try {
      return spinfd::from_descriptor(d);
    } catch (const std::exception& e) {
      throw spinfd::ConfigError(e.what());
    }
  }();
  const auto rep = spinfd::verify_balanced(s.dense());
  const Eigen::MatrixXd M = s.dense();
  const double gram_err =
      (M * M.transpose() - double(s.n()) * Eigen::MatrixXd::Identity(s.n(), s.n())).cwiseAbs().maxCoeff();
  nlohmann::json out = {{"descriptor", spinfd::to_descriptor(s)},
                        {"n", s.n()},
                        {"alpha", rep.alpha_achieved},
                        {"beta", rep.beta_achieved},
                        {"max_abs_entry", rep.max_abs_entry},
                        {"invertible", rep.invertible},
                        {"gram_max_error", gram_err}};
  std::cout << out.dump(2) << '\n';
  return rep.invertible ? kExitOk : kExitPartial;
}

int summarize(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw spinfd::ConfigError("cannot open '" + in_path + "'");
  const auto rows = spinfd::summarize(spinfd::read_csv(in));
  const std::string text = spinfd::summary_csv(rows);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream os(out_path);
    if (!os) throw spinfd::ConfigError("cannot write '" + out_path + "'");
    os << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured finite-difference benchmarks"};
  app.require_subcommand(1);

  auto* spinner = app.add_subcommand("spinner", "Spinner utilities")->require_subcommand(1);
  auto* verify = spinner->add_subcommand("verify", "Check a spinner's balance parameters");
  std::string descriptor, kind = "hadamard";
  long n = 8;
  int k = 1;
  std::uint64_t seed = 0;
  verify->add_option("--config", descriptor, "JSON spinner descriptor");
  verify->add_option("--kind", kind, "hadamard, hadamard_random, quadratic_residue, ...");
  verify->add_option("--n", n, "Order (Hadamard) or prime p (quadratic residue)");
  verify->add_option("--k", k, "Multispinner chain length");
  verify->add_option("--seed", seed, "Sign seed for randomized kinds");

  CommonFlags grad_f, traj_f, sweep_f, qn_f;
  auto* grad = app.add_subcommand("grad", "Gradient estimator experiments")->require_subcommand(1);
  add_common(grad->add_subcommand("bench", "Gradient accuracy / concentration bound"), grad_f);
  auto* traj = app.add_subcommand("trajopt", "Trajectory optimization")->require_subcommand(1);
  add_common(traj->add_subcommand("run", "iLQR convergence or timing runs"), traj_f);
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps")->require_subcommand(1);
  add_common(sweep->add_subcommand("delta", "Finite-difference step sweep"), sweep_f);
  auto* qn = app.add_subcommand("qn", "Bound-constrained quasi-Newton")->require_subcommand(1);
  add_common(qn->add_subcommand("run", "Minimize a synthetic objective"), qn_f);

  auto* report = app.add_subcommand("report", "Result post-processing")->require_subcommand(1);
  auto* summ = report->add_subcommand("summarize", "Per-estimator medians and IQR of final costs");
  std::string in_csv, summary_out;
  summ->add_option("input", in_csv, "Experiment CSV")->required();
  summ->add_option("--out", summary_out, "Summary CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (verify->parsed()) return spinner_verify(descriptor, kind, n, k, seed);
    if (grad->parsed())
      return run_experiment(grad_f, {ExperimentKind::GradAccuracy, ExperimentKind::TheoremBound}, "grad bench");
    if (traj->parsed())
      return run_experiment(traj_f, {ExperimentKind::TrajOpt, ExperimentKind::Timing}, "trajopt run");
    if (sweep->parsed()) return run_experiment(sweep_f, {ExperimentKind::StepSizeSweep}, "sweep delta");
    if (qn->parsed()) return run_experiment(qn_f, {ExperimentKind::QuasiNewton}, "qn run");
    if (summ->parsed()) return summarize(in_csv, summary_out);
  } catch (const spinfd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

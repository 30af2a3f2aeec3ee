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

#include "spinfd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "spinfd/boxed_qn.hpp"
#include "spinfd/control_suite.hpp"
#include "spinfd/errors.hpp"
#include "spinfd/ilqr.hpp"
#include "spinfd/objectives.hpp"
#include "spinfd/rng.hpp"
#include "spinfd/spinner.hpp"

namespace spinfd {

namespace {

using nlohmann::json;

const std::pair<ExperimentKind, const char*> kExperimentNames[] = {
    {ExperimentKind::GradAccuracy, "grad_accuracy"},   {ExperimentKind::TheoremBound, "theorem_bound"},
    {ExperimentKind::TrajOpt, "traj_opt"},             {ExperimentKind::StepSizeSweep, "step_size_sweep"},
    {ExperimentKind::Timing, "timing"},                {ExperimentKind::QuasiNewton, "quasi_newton"},
};

// Stream tags for derive_seed so each consumer of a cell seed is independent.
constexpr std::uint64_t kNoiseTag = 0x401E;
constexpr std::uint64_t kSolverTag = 0x5EED;
constexpr std::uint64_t kObjectiveTag = 0x0B1E;
constexpr std::uint64_t kPointTag = 0xA11;
constexpr std::uint64_t kDirectionTag = 0xD12;
constexpr std::uint64_t kEtaTag = 0xE7A;

bool control_environment(const json& env) {
  const std::string name = env.value("name", std::string("car_parking"));
  return name == "car_parking" || name == "cartpole" || name == "acrobot" || name == "linear";
}

std::string clean_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

struct Cell {
  std::size_t estimator;
  std::size_t delta;
  std::size_t seed;
};

class CellRunner {
 public:
  explicit CellRunner(const ExperimentConfig& c) : cfg_(c), hash_(c.config_hash()) {
    env_label_ = c.environment.value("name", std::string(control_environment(c.environment) ? "car_parking" : "quadratic"));
  }

  std::vector<ExperimentRecord> operator()(const Cell& cell) const {
    switch (cfg_.experiment) {
      case ExperimentKind::GradAccuracy: return grad_accuracy(cell);
      case ExperimentKind::TheoremBound: return theorem_bound(cell);
      case ExperimentKind::TrajOpt: return trajopt(cell, false);
      case ExperimentKind::StepSizeSweep: return trajopt(cell, true);
      case ExperimentKind::Timing: return timing(cell);
      case ExperimentKind::QuasiNewton: return quasi_newton(cell);
    }
    return {};
  }

  ExperimentRecord base(const Cell& cell) const {
    ExperimentRecord r;
    r.experiment = to_string(cfg_.experiment);
    r.estimator = cfg_.estimators[cell.estimator].label();
    r.environment = env_label_;
    r.seed = cfg_.seeds[cell.seed];
    r.delta = cfg_.deltas[cell.delta];
    r.noise_sigma = cfg_.noise.magnitude();
    r.config_hash = hash_;
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  std::string hash_;
  std::string env_label_;

  NoiseModel cell_noise(std::uint64_t seed, std::uint64_t trial) const {
    return cfg_.noise.reseeded(derive_seed(seed, kNoiseTag, trial));
  }

  // Adversarial draws for the gradient experiments: a fresh vector per trial
  // with the configured norm (or a sign vector at the configured cap).
  std::optional<Eigen::VectorXd> adversarial_draw(std::uint64_t seed, std::uint64_t trial, Eigen::Index len) const {
    Rng rng(derive_seed(seed, kEtaTag, trial));
    if (cfg_.options.contains("adversarial_norm")) {
      Eigen::VectorXd eta = rng.normal_vector(len);
      return eta * (cfg_.options.at("adversarial_norm").get<double>() / eta.norm());
    }
    if (cfg_.options.contains("adversarial_linf")) {
      return rng.sign_vector(len) * cfg_.options.at("adversarial_linf").get<double>();
    }
    return std::nullopt;
  }

  std::vector<ExperimentRecord> grad_accuracy(const Cell& cell) const {
    const std::uint64_t seed = cfg_.seeds[cell.seed];
    const double delta = cfg_.deltas[cell.delta];
    const Objective obj = objective_from_json(cfg_.environment, derive_seed(seed, kObjectiveTag));
    const Eigen::Index d = obj.bb.dim();
    const DirectionPlan plan(cfg_.estimators[cell.estimator], d, derive_seed(seed, kDirectionTag));
    std::vector<ExperimentRecord> out;
    for (int k = 0; k < cfg_.iterations; ++k) {
      Rng rng(derive_seed(seed, kPointTag, k));
      Eigen::VectorXd x0 = rng.normal_vector(d) * 0.5;
      if (obj.bounds.lower.allFinite()) x0 = obj.bounds.project(x0);
      const Directions dirs = plan.draw(derive_seed(seed, kDirectionTag, k + 1));
      NoiseModel noise = cell_noise(seed, k);
      if (auto eta = adversarial_draw(seed, k, dirs.count())) noise = NoiseModel::adversarial(*eta);
      const auto est = estimate(obj.bb, x0, delta, dirs, noise);
      ExperimentRecord r = base(cell);
      r.iteration = k;
      r.noise_sigma = noise.magnitude();
      r.cost_or_error = (est.gradient - obj.gradient(x0)).norm();
      r.evaluations = est.evaluations_used;
      r.wall_nanos = cfg_.record_wall_time ? est.wall_nanos : 0;
      out.push_back(r);
    }
    return out;
  }

  // Fraction of trials with ||z - grad f||_inf > 1/sqrt(g) on a linear objective,
  // HD spinner of order n, adversarial sign noise at the configured cap.
  std::vector<ExperimentRecord> theorem_bound(const Cell& cell) const {
    const std::uint64_t seed = cfg_.seeds[cell.seed];
    const double delta = cfg_.deltas[cell.delta];
    const int n = cfg_.options.value("n", 256);
    const double g = cfg_.options.value("g", 4.0);
    if (!is_power_of_two(n) || n < 2) throw ConfigError("theorem_bound needs n a power of two");
    const double cap = cfg_.options.value("eta_linf", std::sqrt(n / std::log(double(n))) / g);
    const Objective obj = make_linear_objective(n, derive_seed(seed, kObjectiveTag));
    const DirectionPlan plan(cfg_.estimators[cell.estimator], n, derive_seed(seed, kDirectionTag));
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd grad = obj.gradient(x0);
    long failures = 0, evals = 0, wall = 0;
    for (int k = 0; k < cfg_.iterations; ++k) {
      const Directions dirs = plan.draw(derive_seed(seed, kDirectionTag, k + 1));
      Rng rng(derive_seed(seed, kEtaTag, k));
      const NoiseModel noise = NoiseModel::adversarial(rng.sign_vector(dirs.count()) * cap);
      const auto est = estimate(obj.bb, x0, delta, dirs, noise);
      if ((est.gradient - grad).lpNorm<Eigen::Infinity>() > 1.0 / std::sqrt(g)) ++failures;
      evals += est.evaluations_used;
      wall += est.wall_nanos;
    }
    ExperimentRecord r = base(cell);
    r.noise_sigma = cap;
    r.iteration = cfg_.iterations;
    r.cost_or_error = double(failures) / cfg_.iterations;
    r.evaluations = evals;
    r.wall_nanos = cfg_.record_wall_time ? wall : 0;
    return {r};
  }

  ilqr::SolveOptions solve_options(std::uint64_t seed, double delta) const {
    ilqr::SolveOptions o;
    const json& j = cfg_.options.contains("ilqr") ? cfg_.options.at("ilqr") : json::object();
    o.max_iterations = cfg_.iterations;
    o.delta = delta;
    o.noise = cell_noise(seed, 0);
    o.rollout_noise = j.value("rollout_noise", false);
    o.tolerance = j.value("tolerance", 0.0);
    o.patience = j.value("patience", o.patience);
    o.reg_init = j.value("reg_init", o.reg_init);
    o.reg_min = j.value("reg_min", o.reg_min);
    o.reg_max = j.value("reg_max", o.reg_max);
    o.line_search_steps = j.value("line_search_steps", o.line_search_steps);
    o.armijo = j.value("armijo", o.armijo);
    o.seed = derive_seed(seed, kSolverTag);
    return o;
  }

  ilqr::SolveResult solve_cell(const Cell& cell, ilqr::SolveOptions o) const {
    const Environment env = environment_from_json(cfg_.environment);
    const Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(env.horizon, env.m);
    return ilqr::solve(env, u0, cfg_.estimators[cell.estimator], o);
  }

  std::vector<ExperimentRecord> trajopt(const Cell& cell, bool final_only) const {
    const std::uint64_t seed = cfg_.seeds[cell.seed];
    const auto res = solve_cell(cell, solve_options(seed, cfg_.deltas[cell.delta]));
    const auto& rep = res.report;
    std::vector<ExperimentRecord> out;
    // A solver that stops early repeats its last cost so every cell has the same rows.
    for (int i = 0; i < cfg_.iterations; ++i) {
      const bool real = i < static_cast<int>(rep.cost_per_iteration.size());
      const std::size_t idx = real ? i : rep.cost_per_iteration.size() - 1;
      if (final_only && i + 1 != cfg_.iterations) continue;
      ExperimentRecord r = base(cell);
      r.iteration = i + 1;
      r.cost_or_error = rep.cost_per_iteration[idx];
      r.evaluations = rep.evaluations_per_iteration[idx];
      r.wall_nanos = cfg_.record_wall_time ? rep.wall_nanos_per_iteration[idx] : 0;
      if (!real) r.status = "stopped: " + clean_field(rep.stop_reason);
      out.push_back(r);
    }
    return out;
  }

  // Run until the convergence test fires; one row with the totals. With
  // options.target_cost the row instead reports the first iteration at or
  // below the target, since under noise the relative test also fires on plateaus.
  std::vector<ExperimentRecord> timing(const Cell& cell) const {
    const std::uint64_t seed = cfg_.seeds[cell.seed];
    auto o = solve_options(seed, cfg_.deltas[cell.delta]);
    const json& j = cfg_.options.contains("ilqr") ? cfg_.options.at("ilqr") : json::object();
    if (cfg_.options.contains("target_cost")) {
      const double target = cfg_.options.at("target_cost").get<double>();
      o.tolerance = 0.0;
      const auto res = solve_cell(cell, o);
      const auto& c = res.report.cost_per_iteration;
      std::size_t idx = 0;
      while (idx < c.size() && c[idx] > target) ++idx;
      const bool reached = idx < c.size();
      if (!reached) idx = c.size() - 1;
      ExperimentRecord r = base(cell);
      r.iteration = static_cast<int>(idx) + 1;
      r.cost_or_error = c[idx];
      r.evaluations = res.report.evaluations_per_iteration[idx];
      r.wall_nanos = cfg_.record_wall_time ? res.report.wall_nanos_per_iteration[idx] : 0;
      if (!reached) r.status = "target not reached";
      return {r};
    }
    o.tolerance = j.value("tolerance", 1e-4);
    const auto res = solve_cell(cell, o);
    ExperimentRecord r = base(cell);
    r.iteration = res.report.iterations;
    r.cost_or_error = res.report.cost_per_iteration.back();
    r.evaluations = res.report.evaluations;
    r.wall_nanos = cfg_.record_wall_time ? res.report.wall_nanos_total : 0;
    if (!res.report.converged) r.status = "not converged";
    return {r};
  }

  std::vector<ExperimentRecord> quasi_newton(const Cell& cell) const {
    const std::uint64_t seed = cfg_.seeds[cell.seed];
    const Objective obj = objective_from_json(cfg_.environment, derive_seed(seed, kObjectiveTag));
    MinimizeOptions o;
    const json& j = cfg_.options.contains("qn") ? cfg_.options.at("qn") : json::object();
    o.max_iterations = cfg_.iterations;
    o.max_evaluations = cfg_.max_evaluations;
    o.memory = j.value("memory", o.memory);
    o.level_tolerance_scale = j.value("level_tolerance_scale", o.level_tolerance_scale);
    o.stall_retries = j.value("stall_retries", o.stall_retries);
    if (j.contains("delta_schedule")) o.delta_schedule = j.at("delta_schedule").get<std::vector<double>>();
    o.noise = cell_noise(seed, 0);
    o.seed = derive_seed(seed, kSolverTag);
    const auto t0 = std::chrono::steady_clock::now();
    const int starts = j.value("starts", 0);
    OptimizeReport rep;
    if (starts > 0) {
      rep = multi_start(obj.bb, obj.bounds, starts, cfg_.estimators[cell.estimator], o, o.seed).best;
    } else {
      Eigen::VectorXd x0 = 0.5 * (obj.bounds.lower + obj.bounds.upper);
      if (j.value("start", std::string("center")) == "random") {
        Rng rng(derive_seed(seed, kPointTag));
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform(obj.bounds.lower[i], obj.bounds.upper[i]);
      }
      rep = minimize(obj.bb, x0, obj.bounds, cfg_.estimators[cell.estimator], o);
    }
    const long wall = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    std::vector<ExperimentRecord> out;
    for (std::size_t k = 0; k < rep.trace.size(); ++k) {
      ExperimentRecord r = base(cell);
      r.iteration = static_cast<int>(k) + 1;
      r.cost_or_error = rep.trace[k];
      r.evaluations = rep.evaluations;
      r.wall_nanos = cfg_.record_wall_time ? wall : 0;
      out.push_back(r);
    }
    // Final row: noiseless objective at the best point, minus the optimum when known.
    ExperimentRecord r = base(cell);
    r.iteration = static_cast<int>(rep.trace.size()) + 1;
    const double f = obj.bb.eval(rep.best_x);
    r.cost_or_error = std::isnan(obj.f_star) ? f : f - obj.f_star;
    r.evaluations = rep.evaluations;
    r.wall_nanos = cfg_.record_wall_time ? wall : 0;
    r.status = rep.feasible ? "final" : "final: infeasible iterate";
    out.push_back(r);
    return out;
  }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_experiment(const std::string& s) {
  for (const auto& [kind, name] : kExperimentNames)
    if (s == name) return kind;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string ExperimentConfig::config_hash() const {
  json j = config_to_json(*this);
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  const int version = get_or(j, "schema_version", kSchemaVersion);
  if (version != kSchemaVersion) throw ConfigError("unsupported schema_version " + std::to_string(version));
  if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment'");
  try {
    c.experiment = parse_experiment(j.at("experiment").get<std::string>());
    c.environment = get_or(j, "environment", json::object());
    if (c.environment.is_string()) c.environment = json{{"name", c.environment}};
    if (!j.contains("estimators") || !j.at("estimators").is_array() || j.at("estimators").empty())
      throw ConfigError("config needs a nonempty 'estimators' list");
    for (const auto& e : j.at("estimators")) c.estimators.push_back(e.get<EstimatorConfig>());
    if (j.contains("noise")) c.noise = j.at("noise").get<NoiseModel>();
    if (j.contains("deltas")) {
      c.deltas = j.at("deltas").get<std::vector<double>>();
    } else if (j.contains("delta")) {
      c.deltas = {j.at("delta").get<double>()};
    }
    c.seeds = get_or(j, "seeds", std::vector<std::uint64_t>{});
    c.iterations = get_or(j, "iterations", c.iterations);
    c.max_evaluations = get_or(j, "max_evaluations", c.max_evaluations);
    c.record_wall_time = get_or(j, "record_wall_time", false);
    c.options = get_or(j, "options", json::object());
    c.output = get_or(j, "output", std::string());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (c.seeds.empty()) throw ConfigError("config needs a nonempty 'seeds' list");
  if (c.deltas.empty()) throw ConfigError("config needs at least one delta");
  for (double d : c.deltas)
    if (!(d > 0) || !std::isfinite(d)) throw ConfigError("deltas must be positive");
  if (c.iterations < 1) throw ConfigError("iterations must be >= 1");
  // Construct what the cells will construct so bad configs fail before running.
  try {
    if (c.experiment == ExperimentKind::TrajOpt || c.experiment == ExperimentKind::StepSizeSweep ||
        c.experiment == ExperimentKind::Timing) {
      if (!control_environment(c.environment)) throw ConfigError("trajectory experiments need a control environment");
      const Environment env = environment_from_json(c.environment);
      for (const auto& e : c.estimators) DirectionPlan(e, env.n + env.m, 0);
    } else if (c.experiment != ExperimentKind::TheoremBound) {
      const Objective o = objective_from_json(c.environment, 0);
      for (const auto& e : c.estimators) DirectionPlan(e, o.bb.dim(), 0);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json est = json::array();
  for (const auto& e : c.estimators) est.push_back(e);
  return json{{"schema_version", kSchemaVersion},
              {"experiment", to_string(c.experiment)},
              {"environment", c.environment},
              {"estimators", est},
              {"noise", c.noise},
              {"deltas", c.deltas},
              {"seeds", c.seeds},
              {"iterations", c.iterations},
              {"max_evaluations", c.max_evaluations},
              {"record_wall_time", c.record_wall_time},
              {"options", c.options},
              {"output", c.output}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_preset(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(SPINFD_PRESET_DIR) / (name + ".json");
  if (!std::filesystem::exists(p)) throw ConfigError("unknown preset '" + name + "'");
  return load_config(p.string());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(SPINFD_PRESET_DIR))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

ExperimentConfig with_seed_offset(ExperimentConfig c, std::int64_t offset) {
  for (auto& s : c.seeds) s += static_cast<std::uint64_t>(offset);
  return c;
}

std::vector<ExperimentRecord> run(const ExperimentConfig& config, int jobs) {
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < config.estimators.size(); ++e)
    for (std::size_t d = 0; d < config.deltas.size(); ++d)
      for (std::size_t s = 0; s < config.seeds.size(); ++s) cells.push_back({e, d, s});
  const CellRunner runner(config);
  std::vector<std::vector<ExperimentRecord>> results(cells.size());
  auto run_cell = [&](std::size_t i) {
    try {
      results[i] = runner(cells[i]);
    } catch (const std::exception& ex) {
      ExperimentRecord r = runner.base(cells[i]);
      r.cost_or_error = std::numeric_limits<double>::quiet_NaN();
      r.status = "error: " + clean_field(ex.what());
      results[i] = {r};
    }
  };
  const int w = std::clamp(jobs, 1, static_cast<int>(cells.size()));
  if (w == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < cells.size();) run_cell(i);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<ExperimentRecord> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_header() {
  return "experiment,estimator,environment,seed,delta,noise_sigma,iteration,cost_or_error,evaluations,"
         "wall_nanos,status,config_hash";
}

std::string to_csv_row(const ExperimentRecord& r) {
  std::ostringstream os;
  os << clean_field(r.experiment) << ',' << clean_field(r.estimator) << ',' << clean_field(r.environment)
     << ',' << r.seed << ',' << format_double(r.delta) << ',' << format_double(r.noise_sigma) << ','
     << r.iteration << ',' << format_double(r.cost_or_error) << ',' << r.evaluations << ',' << r.wall_nanos
     << ',' << clean_field(r.status) << ',' << clean_field(r.config_hash);
  return os.str();
}

void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

std::vector<ExperimentRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header()) throw ConfigError("CSV header does not match the record schema");
  std::vector<ExperimentRecord> out;
  int lineno = 1;
  auto num = [&](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("bad number '" + s + "' on CSV line " + std::to_string(lineno));
    return v;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();  // getline drops a trailing empty field
    if (f.size() != 12) throw ConfigError("CSV line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    ExperimentRecord r;
    r.experiment = f[0];
    r.estimator = f[1];
    r.environment = f[2];
    try {
      r.seed = std::stoull(f[3]);
      r.iteration = std::stoi(f[6]);
      r.evaluations = std::stol(f[8]);
      r.wall_nanos = std::stol(f[9]);
    } catch (const std::exception&) {
      throw ConfigError("bad integer on CSV line " + std::to_string(lineno));
    }
    r.delta = num(f[4]);
    r.noise_sigma = num(f[5]);
    r.cost_or_error = num(f[7]);
    r.status = f[10];
    r.config_hash = f[11];
    out.push_back(r);
  }
  return out;
}

double lower_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  return v[idx];
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw DomainError("nothing to summarize");
  for (const auto& r : records)
    if (r.experiment != records.front().experiment) throw DomainError("records mix experiment types");
  using CellKey = std::tuple<std::string, double, std::string, std::uint64_t>;
  std::map<CellKey, const ExperimentRecord*> finals;
  std::vector<CellKey> order;
  for (const auto& r : records) {
    if (r.status.rfind("error", 0) == 0) continue;
    const CellKey key{r.estimator, r.delta, r.environment, r.seed};
    auto it = finals.find(key);
    if (it == finals.end()) {
      finals.emplace(key, &r);
      order.push_back(key);
    } else if (r.iteration >= it->second->iteration) {
      it->second = &r;
    }
  }
  std::vector<std::pair<std::string, double>> groups;
  std::map<std::pair<std::string, double>, std::vector<const ExperimentRecord*>> members;
  for (const auto& key : order) {
    const std::pair<std::string, double> g{std::get<0>(key), std::get<1>(key)};
    if (!members.count(g)) groups.push_back(g);
    members[g].push_back(finals.at(key));
  }
  std::vector<SummaryRow> out;
  for (const auto& g : groups) {
    const auto& rows = members.at(g);
    std::vector<double> v;
    double wall = 0, evals = 0;
    for (const auto* r : rows) {
      v.push_back(r->cost_or_error);
      wall += r->wall_nanos;
      evals += r->evaluations;
    }
    SummaryRow s;
    s.estimator = g.first;
    s.delta = g.second;
    s.cells = static_cast<long>(rows.size());
    s.median_final = lower_quantile(v, 0.5);
    s.q1 = lower_quantile(v, 0.25);
    s.q3 = lower_quantile(v, 0.75);
    s.iqr = s.q3 - s.q1;
    s.mean_wall_nanos = wall / rows.size();
    s.mean_evaluations = evals / rows.size();
    out.push_back(s);
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "estimator,delta,cells,median_final,q1,q3,iqr,mean_wall_nanos,mean_evaluations\n";
  for (const auto& s : rows)
    os << s.estimator << ',' << format_double(s.delta) << ',' << s.cells << ',' << format_double(s.median_final)
       << ',' << format_double(s.q1) << ',' << format_double(s.q3) << ',' << format_double(s.iqr) << ','
       << format_double(s.mean_wall_nanos) << ',' << format_double(s.mean_evaluations) << '\n';
  return os.str();
}

}  // namespace spinfd

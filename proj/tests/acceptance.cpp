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
// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spinfd/bench.hpp"
#include "spinfd/boxed_qn.hpp"
#include "spinfd/control_suite.hpp"
#include "spinfd/fast_transform.hpp"
#include "spinfd/gait.hpp"
#include "spinfd/grad_estimate.hpp"
#include "spinfd/ilqr.hpp"
#include "spinfd/objectives.hpp"
#include "spinfd/rng.hpp"
#include "spinfd/spinner.hpp"

using namespace spinfd;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

// Cost per iteration (index 0 is iteration 1) for each (estimator, seed).
using Curves = std::map<std::pair<std::string, std::uint64_t>, std::vector<double>>;

Curves curves(const std::vector<ExperimentRecord>& rows, double delta = -1) {
  Curves out;
  for (const auto& r : rows) {
    if (delta > 0 && r.delta != delta) continue;
    auto& c = out[{r.estimator, r.seed}];
    if (static_cast<int>(c.size()) < r.iteration) c.resize(r.iteration, NAN);
    c[r.iteration - 1] = r.cost_or_error;
  }
  return out;
}

double median(std::vector<double> v) { return lower_quantile(std::move(v), 0.5); }

ExperimentConfig only(ExperimentConfig c, const std::vector<std::string>& labels) {
  std::vector<EstimatorConfig> keep;
  for (const auto& e : c.estimators)
    if (std::find(labels.begin(), labels.end(), e.label()) != labels.end()) keep.push_back(e);
  c.estimators = keep;
  return c;
}

std::vector<Spinner> spinner_family() {
  std::vector<Spinner> out;
  for (int l = 1; l <= 10; ++l) {
    const Spinner h = build_hadamard(l);
    out.push_back(h);
    out.push_back(randomize(h, 100 + l));
    for (int k = 2; k <= 3; ++k) out.push_back(build_multispinner(BaseKind::Hadamard, h.n(), k, 200 + l));
  }
  for (int p : {3, 7, 11, 19, 23}) {
    const Spinner q = build_quadratic_residue(p);
    out.push_back(q);
    out.push_back(randomize(q, 300 + p));
    for (int k = 2; k <= 3; ++k) out.push_back(build_multispinner(BaseKind::QuadraticResidue, p + 1, k, 400 + p));
  }
  return out;
}

Outcome c1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_gram = 0.0, worst_ab = 0.0;
  for (const Spinner& s : spinner_family()) {
    const Eigen::MatrixXd M = s.dense();
    // Lower triangle of M M^T - n I; the Gram matrix is symmetric.
    Eigen::MatrixXd G = -double(s.n()) * Eigen::MatrixXd::Identity(s.n(), s.n());
    G.selfadjointView<Eigen::Lower>().rankUpdate(M);
    worst_gram = std::max(worst_gram, G.triangularView<Eigen::Lower>().toDenseMatrix().cwiseAbs().maxCoeff());
    if (s.chain_length() == 1) {
      const auto rep = verify_balanced(M);
      worst_ab = std::max({worst_ab, std::abs(rep.alpha_achieved - 1.0), std::abs(rep.beta_achieved - 1.0)});
    }
  }
  const double secs = seconds_since(t0);
  return {worst_gram <= 1e-10 && worst_ab == 0.0 && secs < 5.0,
          fmt("max |MM^T - nI| = %.2e, max |alpha-1|,|beta-1| = %.2e, %.2f s", worst_gram, worst_ab, secs)};
}

Outcome c2() {
  long pairs = 0, bad = 0;
  for (int p : {3, 7, 11, 19, 23}) {
    const Eigen::MatrixXi Q = residue_tournament_matrix(p);
    const Eigen::MatrixXi C = Q.transpose() * Q;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (i != j) {
          ++pairs;
          if (C(i, j) != -1) ++bad;
        }
  }
  return {bad == 0, fmt("%ld column pairs, %ld with inner product != -1", pairs, bad)};
}

Outcome c3() {
  Rng rng(3);
  double worst = 0.0;
  for (int l = 1; l <= 10; ++l) {
    const Eigen::Index n = Eigen::Index{1} << l;
    const Spinner variants[] = {build_hadamard(l), randomize(build_hadamard(l), l),
                                build_multispinner(BaseKind::Hadamard, n, 2, l),
                                build_multispinner(BaseKind::Hadamard, n, 3, l)};
    for (const Spinner& s : variants) {
      const Eigen::MatrixXd M = s.dense();
      for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd v = rng.normal_vector(n);
        worst = std::max(worst, rel_err(apply(s, v), naive_matvec(M, v)));
        worst = std::max(worst, rel_err(apply_transpose(s, v), naive_matvec(M.transpose(), v)));
        worst = std::max(worst, rel_err(apply_inverse(s, apply(s, v)), v));
        if (s.chain_length() == 1 && s.sign_diagonals().empty())
          worst = std::max(worst, rel_err(fwht(v), naive_matvec(M, v)));
      }
    }
  }
  for (int p : {3, 7, 11, 19, 23}) {
    const Spinner s = randomize(build_quadratic_residue(p), p);
    const Eigen::MatrixXd M = s.dense();
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd v = rng.normal_vector(p + 1);
      worst = std::max(worst, rel_err(apply(s, v), naive_matvec(M, v)));
      worst = std::max(worst, rel_err(apply_transpose(s, v), naive_matvec(M.transpose(), v)));
    }
  }

  auto time_it = [](auto&& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    return seconds_since(t0) / reps;
  };
  Eigen::VectorXd small = rng.normal_vector(1 << 10), big = rng.normal_vector(1 << 16);
  double sink = 0.0;
  const double fwht_ratio = time_it([&] { sink += fwht(big)[0]; }, 40) / time_it([&] { sink += fwht(small)[0]; }, 2000);
  const Eigen::MatrixXd m_small = Eigen::MatrixXd::Ones(256, 256), m_big = Eigen::MatrixXd::Ones(1024, 1024);
  const Eigen::VectorXd v_small = rng.normal_vector(256), v_big = rng.normal_vector(1024);
  const double naive_ratio = time_it([&] { sink += naive_matvec(m_big, v_big)[0]; }, 20) /
                             time_it([&] { sink += naive_matvec(m_small, v_small)[0]; }, 200);
  const double nlogn = (65536.0 * 16) / (1024.0 * 10);
  const bool scaling = fwht_ratio <= 1.5 * nlogn && naive_ratio >= 0.5 * 16 && std::isfinite(sink);
  return {worst <= 1e-10 && scaling,
          fmt("max rel err %.2e; fwht 2^16/2^10 time ratio %.1f (limit %.1f), naive 1024/256 ratio %.1f (min 8)",
              worst, fwht_ratio, 1.5 * nlogn, naive_ratio)};
}

Outcome c4() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4);
  double worst_struct = 0.0, worst_std = 0.0;
  const double Delta = 1.0;
  int trials = 0;
  for (int n : {8, 64, 256}) {
    const Eigen::VectorXd c = rng.normal_vector(n);
    const Blackbox f(n, [c](const Eigen::VectorXd& x) { return c.dot(x); });
    const Eigen::VectorXd x0 = rng.normal_vector(n);
    const Spinner spinners[] = {build_hadamard(static_cast<int>(std::log2(n))), randomize(build_hadamard(static_cast<int>(std::log2(n))), n)};
    for (int t = 0; t < 1000; ++t, ++trials) {
      Eigen::VectorXd eta = rng.normal_vector(n);
      eta *= Delta / eta.norm();
      const NoiseModel noise = NoiseModel::adversarial(eta);
      for (const Spinner& s : spinners) {
        const double err = (estimate_structured(f, x0, 1.0, s, noise).gradient - c).norm();
        worst_struct = std::max(worst_struct, std::abs(err - Delta / std::sqrt(double(n))));
      }
      const double err_std = (estimate_standard(f, x0, 1.0, noise).gradient - c).norm();
      worst_std = std::max(worst_std, std::abs(err_std - Delta));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_struct <= 1e-10 && worst_std <= 1e-10 && secs < 10.0,
          fmt("%d trials per estimator; max |err - D/sqrt(n)| = %.2e, max |err_std - D| = %.2e, %.2f s", trials,
              worst_struct, worst_std, secs)};
}

Outcome c5() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_preset("theorem_bound");
  const auto rows = run(cfg);
  const double n = cfg.options.value("n", 256), g = cfg.options.value("g", 4.0);
  const double bound = 2 * n * std::exp(-g * std::log(n) / 2);
  const double frac = rows.at(0).cost_or_error;
  const double secs = seconds_since(t0);
  return {rows.at(0).status == "ok" && frac <= bound && secs < 60.0,
          fmt("failure fraction %.4g over %d draws, bound %.4g, cap %.4f, %.1f s", frac, cfg.iterations, bound,
              rows.at(0).noise_sigma, secs)};
}

Outcome c6() {
  Eigen::MatrixXd A(3, 3), B(3, 2);
  A << 1.0, 0.1, 0.0, 0.0, 1.0, 0.1, 0.05, 0.0, 0.98;
  B << 0.0, 0.0, 0.1, 0.0, 0.0, 0.1;
  const Eigen::MatrixXd Q = Eigen::Vector3d(1.0, 0.5, 0.2).asDiagonal();
  const Eigen::MatrixXd R = Eigen::Vector2d(0.1, 0.3).asDiagonal();
  const Environment lqr = make_linear(A, B, Q, R, 10.0 * Q, Eigen::Vector3d(1.0, -2.0, 0.5), 50);
  Eigen::MatrixXd P = lqr.cost.Qf;
  for (int t = 0; t < lqr.horizon; ++t) {
    const Eigen::MatrixXd K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    P = Q + A.transpose() * P * (A - B * K);
  }
  const double oracle = 0.5 * lqr.start.dot(P * lqr.start);
  ilqr::SolveOptions o;
  o.max_iterations = 2;
  o.delta = 1e-3;
  o.tolerance = 0.0;
  const auto r = ilqr::solve(lqr, Eigen::MatrixXd::Zero(50, 2), parse_estimator("hadamard"), o);
  const double gap = std::abs(r.trajectory.total_cost - oracle) / oracle;

  bool monotone = true;
  for (const Environment& env : {make_car_parking(), make_cartpole(), make_acrobot()}) {
    for (const char* label : {"standard", "hadamard"}) {
      ilqr::SolveOptions m;
      m.max_iterations = 40;
      m.delta = 1e-4;
      m.tolerance = 0.0;
      const auto s = ilqr::solve(env, Eigen::MatrixXd::Zero(env.horizon, env.m), parse_estimator(label), m);
      const auto& c = s.report.cost_per_iteration;
      monotone = monotone && c.front() <= s.report.initial_cost;
      for (std::size_t i = 1; i < c.size(); ++i) monotone = monotone && c[i] <= c[i - 1];
    }
  }
  return {gap <= 1e-8 && monotone,
          fmt("LQR relative gap %.2e after %d iterations; noiseless monotone on car/cartpole/acrobot: %s", gap,
              r.report.iterations, monotone ? "yes" : "no")};
}

Outcome c7() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = only(load_preset("fig3"), {"standard", "hadamard_random"});
  const Curves cv = curves(run(cfg));
  std::vector<double> std_final, hd_final;
  int fast = 0;
  for (std::uint64_t s : cfg.seeds) {
    const auto& sc = cv.at({"standard", s});
    const auto& hc = cv.at({"hadamard_random", s});
    std_final.push_back(sc.back());
    hd_final.push_back(hc.back());
    const auto hit = std::find_if(hc.begin(), hc.end(), [&](double v) { return v <= sc.back(); });
    if (hit != hc.end() && hit - hc.begin() + 1 <= 25) ++fast;
  }
  const double ms = median(std_final), mh = median(hd_final), secs = seconds_since(t0);
  return {mh <= ms && fast >= 8 && secs < 300,
          fmt("median cost at iteration %d: HD %.4g vs standard %.4g; HD reaches the standard final cost within 25 "
              "iterations in %d/10 seeds; %.0f s",
              cfg.iterations, mh, ms, fast, secs)};
}

// Seeds whose iteration-30 cost is within 5% of the estimator's own noiseless cost.
std::map<std::string, int> near_noiseless(const std::string& preset, std::map<std::string, double>& refs) {
  const ExperimentConfig cfg = load_preset(preset);
  ExperimentConfig quiet = cfg;
  quiet.noise = NoiseModel::none();
  quiet.iterations = 60;
  quiet.seeds = {0};
  for (const auto& [key, c] : curves(run(quiet))) refs[key.first] = c.back();
  std::map<std::string, int> hits;
  for (const auto& [key, c] : curves(run(cfg))) {
    int& h = hits[key.first];
    if (c.at(29) <= 1.05 * refs.at(key.first)) ++h;
  }
  return hits;
}

Outcome c8() {
  bool pass = true;
  std::ostringstream detail;
  for (const char* preset : {"fig5", "fig6"}) {
    std::map<std::string, double> refs;
    const auto hits = near_noiseless(preset, refs);
    detail << preset << ":";
    for (const auto& [label, n] : hits) {
      detail << ' ' << label << ' ' << n << "/10";
      if (label == "hadamard" || label == "hadamard_random") pass = pass && n >= 8;
      if (label == "standard") pass = pass && 10 - n >= 8;
    }
    detail << "; ";
  }
  detail << "(criterion applies to the Hadamard estimators; others informational)";
  return {pass, detail.str()};
}

Outcome c9() {
  const ExperimentConfig cfg = load_preset("fig4_right");
  const auto summary = summarize(run(cfg));
  std::map<double, std::map<std::string, double>> iqr;
  for (const auto& s : summary) iqr[s.delta][s.estimator] = s.iqr;
  bool pass = true;
  std::ostringstream detail;
  for (const auto& [delta, m] : iqr) {
    const bool ok = m.at("hadamard_random") <= m.at("standard");
    pass = pass && ok;
    detail << fmt("d=%.0e HD %.3g vs std %.3g%s; ", delta, m.at("hadamard_random"), m.at("standard"), ok ? "" : " (!)");
  }
  return {pass, "IQR of iteration-50 cost: " + detail.str()};
}

Outcome c10() {
  const ExperimentConfig cfg = load_preset("qn_quadratic");
  const double sigma = cfg.noise.sigma;
  int within = 0, cells = 0;
  bool feasible = true;
  for (const auto& r : run(cfg)) {
    if (r.status.rfind("final", 0) != 0) continue;
    ++cells;
    feasible = feasible && r.status == "final";
    if (r.cost_or_error <= 10 * sigma) ++within;
  }
  double worst = 0.0;
  for (const Objective& obj : {make_quadratic_objective(8, 3), make_rosenbrock_objective(8)}) {
    MinimizeOptions o;
    o.delta_schedule = {1e-6};
    const Eigen::VectorXd x0 = obj.bounds.project(Eigen::VectorXd::Constant(8, -0.5));
    const double fd = minimize(obj.bb, x0, obj.bounds, parse_estimator("hadamard"), o).best_f;
    o.gradient = obj.gradient;
    const double exact = minimize(obj.bb, x0, obj.bounds, parse_estimator("hadamard"), o).best_f;
    worst = std::max(worst, std::abs(fd - exact));
  }
  return {within >= 9 && cells == 10 && feasible && worst <= 1e-3,
          fmt("noisy quadratic within 10 sigma in %d/%d seeds; iterates feasible: %s; noiseless vs analytic gradient "
              "max gap %.2e",
              within, cells, feasible ? "yes" : "no", worst)};
}

Outcome c11() {
  Rng rng(11);
  const BoxBounds box = gait_bounds();
  long violations = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Eigen::VectorXd x(7);
    for (int k = 0; k < 7; ++k) x[k] = rng.uniform(box.lower[k], box.upper[k]);
    const GaitParams p = GaitParams::from_vector(x);
    const double t = rng.uniform(0.0, 2000.0);
    const auto a = gait_signals(p, t), b = gait_signals(p, t + 2 * std::numbers::pi / p.v);
    for (int k = 0; k < 8; ++k) violations += std::abs(a[k] - b[k]) > 1e-9;
    for (const auto& leg : leg_signals(p, t))
      violations += std::abs(leg.swing) > p.A_s || std::abs(leg.extension) > p.A_v;

    const EpisodeMetrics m{rng.uniform(-1, 1), rng.uniform(0, 2), rng.uniform(0, 1), rng.uniform(0, 1),
                           rng.uniform(-1, 1)};
    const RunningCoeffs rc{rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    const TurningCoeffs tc{rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    const double h = rng.uniform(0.01, 1.0);
    const double base = reward_running(m, rc), tbase = reward_turning(m, tc);
    auto moved = [&](double EpisodeMetrics::*field) {
      EpisodeMetrics q = m;
      q.*field += h;
      return q;
    };
    auto off = [&](double got, double want) { return std::abs(got - want) > 1e-12 * (1 + std::abs(want)); };
    violations += off(reward_running(moved(&EpisodeMetrics::d_forward), rc) - base, rc.alpha * h);
    violations += off(reward_running(moved(&EpisodeMetrics::E), rc) - base, -rc.beta * h);
    violations += off(reward_running(moved(&EpisodeMetrics::drift), rc) - base, -rc.gamma * h);
    violations += off(reward_running(moved(&EpisodeMetrics::shake), rc) - base, -rc.xi * h);
    violations += off(reward_turning(moved(&EpisodeMetrics::r), tc) - tbase, tc.rho * h);
    violations += off(reward_turning(moved(&EpisodeMetrics::E), tc) - tbase, -tc.beta * h);
    violations += off(reward_turning(moved(&EpisodeMetrics::shake), tc) - tbase, -tc.xi * h);
  }
  return {violations == 0, fmt("%d random draws, %ld violations", draws, violations)};
}

Outcome c12() {
  std::ostringstream detail;
  bool pass = true;
  for (const auto& name : preset_names()) {
    const ExperimentConfig cfg = load_preset(name);
    std::ostringstream a, b;
    write_csv(a, run(cfg));
    write_csv(b, run(cfg));
    const bool same = a.str() == b.str();
    pass = pass && same;
    detail << name << (same ? " ok" : " DIFFERS") << "; ";
  }
  return {pass, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= 12; ++i) selected.push_back(i);

  bool all = true;
  for (int id : selected) {
    if (id < 1 || id > 12) {
      std::printf("criterion %d: unknown\n", id);
      return 2;
    }
    Outcome o{false, ""};
    try {
      o = criteria[id - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

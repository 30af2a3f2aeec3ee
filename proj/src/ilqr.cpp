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

#include "spinfd/ilqr.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "spinfd/errors.hpp"
#include "spinfd/rng.hpp"

namespace spinfd::ilqr {
namespace {

using Clock = std::chrono::steady_clock;

long nanos_since(Clock::time_point start) {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

void finish_costs(const Environment& env, Trajectory& traj) {
  const int T = traj.horizon();
  traj.stage_costs.resize(T);
  for (int t = 0; t < T; ++t) {
    traj.stage_costs[t] =
        stage_cost(env, traj.states.row(t).transpose(), traj.controls.row(t).transpose(), t).value;
  }
  traj.terminal_cost = terminal_cost(env, traj.states.row(T).transpose()).value;
  traj.total_cost = traj.stage_costs.sum() + traj.terminal_cost;
}

std::uint64_t noise_stream(const NoiseModel& noise, std::uint64_t seed) {
  return mix_seed(noise.seed ^ mix_seed(seed ^ 0x4E4F495345ULL));
}

}  // namespace

Trajectory rollout(const Environment& env, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                   const std::optional<NoiseModel>& noise) {
  const auto T = controls.rows();
  Trajectory traj;
  traj.states.resize(T + 1, env.n);
  traj.controls.resize(T, env.m);
  traj.states.row(0) = x0.transpose();
  std::optional<VectorBlackbox> noisy;
  if (noise && noise->perturbs_values()) noisy.emplace(noisy_dynamics(env, *noise));
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::VectorXd u = clamp_controls(env, controls.row(t).transpose());
    const Eigen::VectorXd x = traj.states.row(t).transpose();
    traj.controls.row(t) = u.transpose();
    Eigen::VectorXd z(env.n + env.m);
    z << x, u;
    const Eigen::VectorXd next = noisy ? noisy->eval(z) : step(env, x, u);
    if (!next.allFinite()) throw RolloutDiverged("rollout diverged at t=" + std::to_string(t));
    traj.states.row(t + 1) = next.transpose();
  }
  finish_costs(env, traj);
  return traj;
}

bool is_consistent(const Environment& env, const Trajectory& traj, double tol) {
  const int T = traj.horizon();
  if (traj.states.rows() != T + 1 || traj.stage_costs.size() != T) return false;
  double total = traj.terminal_cost;
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd next =
        step(env, traj.states.row(t).transpose(), traj.controls.row(t).transpose());
    if ((next - traj.states.row(t + 1).transpose()).cwiseAbs().maxCoeff() > tol) return false;
    total += traj.stage_costs[t];
  }
  return std::abs(total - traj.total_cost) <= tol * std::max(1.0, std::abs(total));
}

Linearization linearize(const Environment& env, const Trajectory& traj, const DirectionPlan& plan,
                        double delta, const NoiseModel& noise, std::uint64_t seed, int iteration,
                        int workers) {
  const auto start = Clock::now();
  const int T = traj.horizon();
  const VectorBlackbox dyn = dynamics_blackbox(env, /*clamp=*/false);
  const std::uint64_t noise_base = noise_stream(noise, seed);

  Linearization lin;
  lin.A.resize(static_cast<std::size_t>(T));
  lin.B.resize(static_cast<std::size_t>(T));
  std::vector<long> evals(static_cast<std::size_t>(T), 0);

  const auto one = [&](int t) {
    const auto it = static_cast<std::uint64_t>(iteration) + 1;
    const auto ts = static_cast<std::uint64_t>(t);
    const Directions dirs = plan.draw(derive_seed(seed, it, ts));
    const NoiseModel step_noise = noise.reseeded(derive_seed(noise_base, it, ts));
    JacobianEstimate jac;
    try {
      jac = estimate_jacobian(dyn, traj.states.row(t).transpose(), traj.controls.row(t).transpose(),
                              delta, dirs, step_noise);
    } catch (const std::exception& e) {
      throw EvaluationError(t, std::string("linearization: ") + e.what());
    }
    lin.A[static_cast<std::size_t>(t)] = std::move(jac.A);
    lin.B[static_cast<std::size_t>(t)] = std::move(jac.B);
    evals[static_cast<std::size_t>(t)] = jac.evaluations_used;
  };

  if (workers <= 1) {
    for (int t = 0; t < T; ++t) one(t);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int t = w; t < T; t += workers) one(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (long e : evals) lin.evaluations += e;
  lin.wall_nanos = nanos_since(start);
  return lin;
}

Gains backward_pass(const Environment& env, const Trajectory& traj, const Linearization& lin,
                    double regularization) {
  const int T = traj.horizon();
  const Eigen::Index n = env.n;
  const Eigen::Index m = env.m;
  if (static_cast<int>(lin.A.size()) != T || static_cast<int>(lin.B.size()) != T) {
    throw DimensionMismatch("backward_pass: linearization length does not match horizon");
  }

  Gains g;
  g.k.resize(static_cast<std::size_t>(T));
  g.K.resize(static_cast<std::size_t>(T));

  const CostExpansion term = terminal_cost(env, traj.states.row(T).transpose());
  Eigen::VectorXd Vx = term.gradient_x;
  Eigen::MatrixXd Vxx = term.hessian_xx;

  for (int t = T - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Eigen::VectorXd x = traj.states.row(t).transpose();
    const Eigen::VectorXd u = traj.controls.row(t).transpose();
    const CostExpansion c = stage_cost(env, x, u, t);
    const Eigen::MatrixXd& A = lin.A[ts];
    const Eigen::MatrixXd& B = lin.B[ts];

    const Eigen::VectorXd Qx = c.gradient_x + A.transpose() * Vx;
    const Eigen::VectorXd Qu = c.gradient_u + B.transpose() * Vx;
    const Eigen::MatrixXd Qxx = c.hessian_xx + A.transpose() * Vxx * A;
    Eigen::MatrixXd Quu = c.hessian_uu + B.transpose() * Vxx * B;
    Quu = 0.5 * (Quu + Quu.transpose()).eval();
    const Eigen::MatrixXd Qux = c.hessian_ux + B.transpose() * Vxx * A;

    const Eigen::MatrixXd Quu_reg = Quu + regularization * Eigen::MatrixXd::Identity(m, m);
    Eigen::LLT<Eigen::MatrixXd> llt(Quu_reg);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite(ts);

    Eigen::VectorXd k = -llt.solve(Qu);
    Eigen::MatrixXd K = -llt.solve(Qux);

    // Project onto the control box: coordinates pushed past a bound are held
    // there with no feedback; the free block is re-solved given them.
    std::vector<Eigen::Index> clamped, free;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double target = u[j] + k[j];
      (target > env.u_upper[j] || target < env.u_lower[j] ? clamped : free).push_back(j);
    }
    if (!clamped.empty()) {
      for (Eigen::Index j : clamped) {
        k[j] = std::clamp(u[j] + k[j], env.u_lower[j], env.u_upper[j]) - u[j];
        K.row(j).setZero();
      }
      if (!free.empty()) {
        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd Qff(nf, nf);
        Eigen::VectorXd rhs(nf);
        Eigen::MatrixXd Qfx(nf, n);
        for (Eigen::Index a = 0; a < nf; ++a) {
          const Eigen::Index fa = free[static_cast<std::size_t>(a)];
          double r = Qu[fa];
          for (Eigen::Index cj : clamped) r += Quu(fa, cj) * k[cj];
          rhs[a] = r;
          Qfx.row(a) = Qux.row(fa);
          for (Eigen::Index b = 0; b < nf; ++b) Qff(a, b) = Quu_reg(fa, free[static_cast<std::size_t>(b)]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt_free(Qff);
        if (llt_free.info() != Eigen::Success) throw NotPositiveDefinite(ts);
        const Eigen::VectorXd kf = -llt_free.solve(rhs);
        const Eigen::MatrixXd Kf = -llt_free.solve(Qfx);
        for (Eigen::Index a = 0; a < nf; ++a) {
          const Eigen::Index fa = free[static_cast<std::size_t>(a)];
          k[fa] = kf[a];
          K.row(fa) = Kf.row(a);
        }
      }
    }

    g.dV1 += k.dot(Qu);
    g.dV2 += 0.5 * k.dot(Quu * k);

    Vx = Qx + K.transpose() * Quu * k + K.transpose() * Qu + Qux.transpose() * k;
    Vxx = Qxx + K.transpose() * Quu * K + K.transpose() * Qux + Qux.transpose() * K;
    Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();

    g.k[ts] = std::move(k);
    g.K[ts] = std::move(K);
  }
  return g;
}

Trajectory forward_pass(const Environment& env, const Trajectory& traj, const Gains& gains,
                        double alpha, const std::optional<NoiseModel>& rollout_noise) {
  const int T = traj.horizon();
  Trajectory out;
  out.states.resize(T + 1, env.n);
  out.controls.resize(T, env.m);
  out.states.row(0) = traj.states.row(0);
  std::optional<VectorBlackbox> noisy;
  if (rollout_noise && rollout_noise->perturbs_values()) noisy.emplace(noisy_dynamics(env, *rollout_noise));

  for (int t = 0; t < T; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const Eigen::VectorXd x = out.states.row(t).transpose();
    const Eigen::VectorXd dx = x - traj.states.row(t).transpose();
    Eigen::VectorXd u = traj.controls.row(t).transpose();
    if (alpha != 0.0) u += alpha * gains.k[ts];
    u += gains.K[ts] * dx;
    u = clamp_controls(env, u);
    out.controls.row(t) = u.transpose();
    Eigen::VectorXd next;
    if (noisy) {
      Eigen::VectorXd z(env.n + env.m);
      z << x, u;
      next = noisy->eval(z);
    } else {
      next = step(env, x, u);
    }
    if (!next.allFinite()) throw RolloutDiverged("forward pass diverged at t=" + std::to_string(t));
    out.states.row(t + 1) = next.transpose();
  }
  finish_costs(env, out);
  return out;
}

SolveResult solve(const Environment& env, const Eigen::MatrixXd& initial_controls,
                  const EstimatorConfig& estimator, const SolveOptions& options) {
  const auto start = Clock::now();
  if (options.max_iterations < 1) throw DomainError("solve: max_iterations must be >= 1");
  if (!(options.delta > 0.0)) throw DomainError("solve: delta must be positive");
  if (initial_controls.rows() != env.horizon || initial_controls.cols() != env.m) {
    throw DimensionMismatch("solve: initial controls must be horizon x m");
  }

  const DirectionPlan plan(estimator, env.n + env.m, options.seed);
  std::optional<NoiseModel> rollout_noise;
  std::uint64_t rollout_draw = 0;
  const auto next_rollout_noise = [&]() -> std::optional<NoiseModel> {
    if (!options.rollout_noise) return std::nullopt;
    return options.noise.reseeded(derive_seed(noise_stream(options.noise, options.seed), 0, ++rollout_draw));
  };

  SolveResult result;
  auto& report = result.report;
  report.estimator_descriptor = {
      {"estimator", estimator.label()},
      {"padded_dim", plan.padded_dim()},
      {"delta", options.delta},
      {"noise", options.noise},
      {"rollout_noise", options.rollout_noise},
      {"seed", options.seed},
  };
  if (estimator.kind == EstimatorKind::GaussianUnstructuredFresh) {
    report.estimator_descriptor["interpretation"] = "fresh Gaussian matrix per linearization";
  } else if (estimator.kind == EstimatorKind::GaussianUnstructuredFixed) {
    report.estimator_descriptor["interpretation"] = "one Gaussian matrix for the whole solve";
  }

  Trajectory traj = rollout(env, env.start, initial_controls, next_rollout_noise());
  report.initial_cost = traj.total_cost;
  report.evaluations = env.horizon;

  double reg = std::max(options.reg_init, options.reg_min);
  int quiet = 0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Linearization lin =
        linearize(env, traj, plan, options.delta, options.noise, options.seed, iter, options.workers);
    report.wall_nanos_linearization += lin.wall_nanos;
    report.evaluations += lin.evaluations;

    std::optional<Gains> gains;
    while (!gains) {
      try {
        gains = backward_pass(env, traj, lin, reg);
      } catch (const NotPositiveDefinite&) {
        if (reg >= options.reg_max) break;
        reg = std::min(reg * 10.0, options.reg_max);
      }
    }
    if (!gains) {
      // This linearization is unusable at any regularization; a fresh one
      // (new directions and noise) gets the next iteration.
      ++report.failed_iterations;
      reg = std::max(options.reg_init, options.reg_min);
      report.cost_per_iteration.push_back(traj.total_cost);
      report.evaluations_per_iteration.push_back(report.evaluations);
      report.wall_nanos_per_iteration.push_back(nanos_since(start));
      report.iterations = iter + 1;
      quiet = options.tolerance > 0.0 ? quiet + 1 : 0;
      if (quiet >= options.patience) {
        report.stop_reason = "no usable linearization";
        break;
      }
      continue;
    }

    bool accepted = false;
    double alpha = 1.0;
    double improvement = 0.0;
    for (int ls = 0; ls < options.line_search_steps; ++ls, alpha *= 0.5) {
      Trajectory candidate;
      try {
        candidate = forward_pass(env, traj, *gains, alpha, next_rollout_noise());
      } catch (const RolloutDiverged&) {
        continue;
      }
      report.evaluations += env.horizon;
      const double actual = traj.total_cost - candidate.total_cost;
      const double expected = gains->expected_reduction(alpha);
      const bool ok = expected > 0.0 ? actual > options.armijo * expected : actual > 0.0;
      if (ok) {
        improvement = actual;
        traj = std::move(candidate);
        accepted = true;
        break;
      }
    }

    if (accepted) {
      reg = std::max(reg / 2.0, options.reg_min);
    } else {
      ++report.failed_iterations;
      // Past the ceiling the regularized steps are useless; restart the schedule.
      reg = reg >= options.reg_max ? std::max(options.reg_init, options.reg_min) : std::min(reg * 10.0, options.reg_max);
    }
    report.cost_per_iteration.push_back(traj.total_cost);
    report.evaluations_per_iteration.push_back(report.evaluations);
    report.wall_nanos_per_iteration.push_back(nanos_since(start));
    report.iterations = iter + 1;

    const double rel = improvement / std::max(std::abs(traj.total_cost), 1e-300);
    quiet = rel < options.tolerance ? quiet + 1 : 0;
    if (quiet >= options.patience) {
      report.converged = true;
      report.stop_reason = "relative improvement below tolerance";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max iterations";
  report.wall_nanos_total = nanos_since(start);
  result.trajectory = std::move(traj);
  return result;
}

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = nlohmann::json{
      {"cost_per_iteration", r.cost_per_iteration},
      {"iterations", r.iterations},
      {"converged", r.converged},
      {"stop_reason", r.stop_reason},
      {"initial_cost", r.initial_cost},
      {"wall_nanos_total", r.wall_nanos_total},
      {"wall_nanos_linearization", r.wall_nanos_linearization},
      {"evaluations", r.evaluations},
      {"failed_iterations", r.failed_iterations},
      {"estimator", r.estimator_descriptor},
  };
}

}  // namespace spinfd::ilqr

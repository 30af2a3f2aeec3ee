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

#include "spinfd/boxed_qn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "spinfd/errors.hpp"
#include "spinfd/rng.hpp"

namespace spinfd {

BoxBounds::BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw DimensionMismatch("box bounds have different lengths");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      throw DomainError("box bound " + std::to_string(i) + " is empty or NaN");
  }
}

BoxBounds BoxBounds::unbounded(Eigen::Index d) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(d, -inf), Eigen::VectorXd::Constant(d, inf)};
}

BoxBounds BoxBounds::uniform(Eigen::Index d, double lo, double hi) {
  return {Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi)};
}

Eigen::VectorXd BoxBounds::project(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DimensionMismatch("point does not match box dimension");
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool BoxBounds::contains(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

double BoxBounds::width_scale() const {
  double sum = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double w = upper[i] - lower[i];
    if (std::isfinite(w) && w > 0) {
      sum += w;
      ++n;
    }
  }
  return n ? sum / n : 1.0;
}

std::vector<double> default_delta_schedule(const BoxBounds& bounds) {
  std::vector<double> s;
  double d = 0.1 * bounds.width_scale();
  for (int k = 0; k < 8; ++k, d *= 0.5) s.push_back(d);
  return s;
}

namespace {

struct Memory {
  std::deque<Eigen::VectorXd> s, y;
  std::size_t cap;

  void push(const Eigen::VectorXd& si, const Eigen::VectorXd& yi) {
    // Curvature guard; noisy differences routinely violate it.
    if (si.dot(yi) <= 1e-12 * si.norm() * yi.norm()) return;
    s.push_back(si);
    y.push_back(yi);
    if (s.size() > cap) {
      s.pop_front();
      y.pop_front();
    }
  }
  void clear() {
    s.clear();
    y.clear();
  }

  // Two-loop recursion: returns H g.
  Eigen::VectorXd apply(const Eigen::VectorXd& g, const std::vector<bool>& active) const {
    auto mask = [&](Eigen::VectorXd v) {
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (active[i]) v[i] = 0.0;
      return v;
    };
    Eigen::VectorXd q = mask(g);
    const std::size_t m = s.size();
    std::vector<double> alpha(m), rho(m);
    for (std::size_t k = m; k-- > 0;) {
      const Eigen::VectorXd sk = mask(s[k]), yk = mask(y[k]);
      const double sy = sk.dot(yk);
      rho[k] = sy > 0 ? 1.0 / sy : 0.0;
      alpha[k] = rho[k] * sk.dot(q);
      q -= alpha[k] * yk;
    }
    double gamma = 1.0;
    if (m) {
      const Eigen::VectorXd sk = mask(s.back()), yk = mask(y.back());
      const double yy = yk.squaredNorm();
      if (yy > 0 && sk.dot(yk) > 0) gamma = sk.dot(yk) / yy;
    }
    Eigen::VectorXd r = gamma * q;
    for (std::size_t k = 0; k < m; ++k) {
      const Eigen::VectorXd sk = mask(s[k]), yk = mask(y[k]);
      const double beta = rho[k] * yk.dot(r);
      r += sk * (alpha[k] - beta);
    }
    return mask(r);
  }
};

}  // namespace

OptimizeReport minimize(const Blackbox& bb, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                        const EstimatorConfig& estimator, const MinimizeOptions& options) {
  const Eigen::Index d = bb.dim();
  if (x0.size() != d || bounds.dim() != d) throw DimensionMismatch("start point, box and blackbox disagree");
  if (!x0.allFinite()) throw DomainError("start point is not finite");
  if (options.memory < 1) throw DomainError("L-BFGS memory must be positive");
  const std::vector<double> schedule =
      options.delta_schedule.empty() ? default_delta_schedule(bounds) : options.delta_schedule;
  for (double delta : schedule)
    if (!(delta > 0) || !std::isfinite(delta)) throw DomainError("delta schedule must be positive");

  const DirectionPlan plan(estimator, d, options.seed);
  NoiseSampler value_noise(options.noise.reseeded(derive_seed(options.seed, 0x51ED, 0)));
  const std::uint64_t start_count = bb.eval_count();
  const bool noisy_values = options.noise.perturbs_values();
  const std::uint64_t grad_stream = derive_seed(options.seed, 0x6AAD, 0);
  std::uint64_t grad_calls = 0;

  OptimizeReport rep;
  rep.deltas = schedule;
  auto used = [&] { return static_cast<long>(bb.eval_count() - start_count); };
  auto budget_left = [&](long need) {
    return options.max_evaluations <= 0 || used() + need <= options.max_evaluations;
  };
  auto f_at = [&](const Eigen::VectorXd& x) {
    double v = bb.eval(x);
    if (noisy_values) v += value_noise.scalar();
    return v;
  };
  auto grad_at = [&](const Eigen::VectorXd& x, double delta) -> Eigen::VectorXd {
    if (options.gradient) return options.gradient(x);
    ++grad_calls;
    const Directions dirs = plan.draw(derive_seed(grad_stream, grad_calls));
    const NoiseModel nm = options.noise.reseeded(derive_seed(options.seed, 0x6E01, grad_calls));
    return estimate(bb, x, delta, dirs, nm).gradient;
  };
  const long grad_cost = options.gradient ? 0 : static_cast<long>(plan.draw(0).count()) + 1;
  const EstimatorKind kind = estimator.kind;
  const bool random_gradient =
      !options.gradient && (noisy_values || !(kind == EstimatorKind::Standard || kind == EstimatorKind::Hadamard ||
                                              kind == EstimatorKind::QuadraticResidue ||
                                              kind == EstimatorKind::GaussianUnstructuredFixed));

  Eigen::VectorXd x = bounds.project(x0);
  if (!budget_left(1)) throw DomainError("evaluation budget cannot cover a single evaluation");
  double fx = f_at(x);
  rep.best_x = x;
  rep.best_f = fx;
  double step_scale = bounds.width_scale();

  Memory mem{{}, {}, static_cast<std::size_t>(options.memory)};
  bool out_of_budget = false;

  for (double delta : schedule) {
    if (out_of_budget || rep.iterations >= options.max_iterations) break;
    if (!budget_left(grad_cost)) {
      out_of_budget = true;
      break;
    }
    // The estimator's bias depends on delta, so pairs from a coarser level are stale.
    mem.clear();
    // Each level restarts from the best point seen so far.
    if (rep.best_f < fx) {
      x = rep.best_x;
      fx = rep.best_f;
    }
    Eigen::VectorXd g = grad_at(x, delta);
    int retries_left = random_gradient ? options.stall_retries : 0;
    while (rep.iterations < options.max_iterations) {
      std::vector<bool> active(d);
      for (Eigen::Index i = 0; i < d; ++i)
        active[i] = (x[i] <= bounds.lower[i] && g[i] > 0) || (x[i] >= bounds.upper[i] && g[i] < 0);
      const Eigen::VectorXd pg = x - bounds.project(x - g);
      if (!pg.allFinite()) break;
      if (pg.lpNorm<Eigen::Infinity>() <= options.level_tolerance_scale * delta) break;

      Eigen::VectorXd p = -mem.apply(g, active);
      double slope = g.dot(p);
      if (!(slope < 0) || !p.allFinite()) {
        mem.clear();
        p = -mem.apply(g, active);
        slope = g.dot(p);
      }
      if (!(slope < 0)) break;
      double alpha = 1.0;
      if (mem.s.empty()) alpha = std::min(1.0, step_scale / std::max(p.lpNorm<Eigen::Infinity>(), 1e-300));

      bool accepted = false;
      Eigen::VectorXd xn;
      double fn = 0.0;
      for (int b = 0; b <= options.max_backtracks; ++b, alpha *= 0.5) {
        if (!budget_left(1)) {
          out_of_budget = true;
          break;
        }
        xn = bounds.project(x + alpha * p);
        if ((xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;
        fn = f_at(xn);
        if (std::isfinite(fn) && fn < rep.best_f) {
          rep.best_f = fn;
          rep.best_x = xn;
        }
        if (std::isfinite(fn) && fn <= fx + options.armijo * g.dot(xn - x)) {
          accepted = true;
          break;
        }
      }
      ++rep.iterations;
      if (!accepted) {
        rep.trace.push_back(rep.best_f);
        if (!out_of_budget && retries_left > 0 && budget_left(grad_cost)) {
          --retries_left;
          mem.clear();
          g = grad_at(x, delta);
          continue;
        }
        if (!out_of_budget) rep.stalled = true;
        break;
      }
      if (!bounds.contains(xn)) rep.feasible = false;
      if (!budget_left(grad_cost)) {
        x = xn;
        fx = fn;
        rep.trace.push_back(rep.best_f);
        out_of_budget = true;
        break;
      }
      const Eigen::VectorXd gn = grad_at(xn, delta);
      mem.push(xn - x, gn - g);
      x = xn;
      fx = fn;
      g = gn;
      rep.trace.push_back(rep.best_f);
    }
    rep.level_best.push_back(rep.best_f);
    step_scale = std::max(delta, 1e-12);
    if (out_of_budget) break;
  }
  rep.evaluations = used();
  return rep;
}

MultiStartReport multi_start(const Blackbox& bb, const BoxBounds& bounds, int num_starts,
                             const EstimatorConfig& estimator, const MinimizeOptions& options,
                             std::uint64_t seed, int workers) {
  if (num_starts < 1) throw DomainError("need at least one start");
  if (!(bounds.lower.allFinite() && bounds.upper.allFinite()))
    throw DomainError("multi-start needs a finite box");
  MultiStartReport out;
  Rng rng(seed);
  for (int i = 0; i < num_starts; ++i) {
    Eigen::VectorXd s(bounds.dim());
    for (Eigen::Index k = 0; k < s.size(); ++k) s[k] = rng.uniform(bounds.lower[k], bounds.upper[k]);
    out.starts.push_back(s);
  }
  std::vector<OptimizeReport> reports(num_starts);
  auto run_one = [&](int i) {
    MinimizeOptions o = options;
    o.seed = derive_seed(seed, static_cast<std::uint64_t>(i) + 1);
    reports[i] = minimize(bb, out.starts[i], bounds, estimator, o);
  };
  const int w = bb.concurrent_safe() ? std::clamp(workers, 1, num_starts) : 1;
  if (w == 1) {
    for (int i = 0; i < num_starts; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t)
      pool.emplace_back([&] {
        for (int i; (i = next++) < num_starts;) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  for (int i = 0; i < num_starts; ++i) out.ranked.emplace_back(i, std::move(reports[i]));
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.best_f < b.second.best_f; });
  out.best = out.ranked.front().second;
  return out;
}

void to_json(nlohmann::json& j, const OptimizeReport& r) {
  j = nlohmann::json{{"best_x", std::vector<double>(r.best_x.data(), r.best_x.data() + r.best_x.size())},
                     {"best_f", r.best_f},
                     {"trace", r.trace},
                     {"level_best", r.level_best},
                     {"deltas", r.deltas},
                     {"evaluations", r.evaluations},
                     {"iterations", r.iterations},
                     {"stalled", r.stalled},
                     {"feasible", r.feasible}};
}

}  // namespace spinfd

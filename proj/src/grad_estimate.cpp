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

#include "spinfd/grad_estimate.hpp"

#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "spinfd/errors.hpp"
#include "spinfd/fast_transform.hpp"
#include "spinfd/rng.hpp"

namespace spinfd {
namespace {

using Clock = std::chrono::steady_clock;

long nanos_since(Clock::time_point start) {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd checked_eval(const VectorFn& f, const Eigen::VectorXd& x, long index) {
  Eigen::VectorXd y;
  try {
    y = f(x);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(index, e.what());
  }
  if (!y.allFinite()) throw EvaluationError(index, "non-finite blackbox value");
  return y;
}

struct Measurements {
  Eigen::MatrixXd m;  // count x outputs
  long evaluations = 0;
};

// Finite-difference measurements along `count` directions. Noise for the base
// point and for every direction comes from its own derived stream, so the
// result does not depend on evaluation order or worker count.
template <typename RowFn>
Measurements measure_impl(const VectorFn& f, Eigen::Index outputs, const Eigen::VectorXd& x0,
                          double delta, Eigen::Index count, RowFn&& row_of,
                          const NoiseModel& noise, const EstimateOptions& opts, bool parallel_ok) {
  if (!(delta > 0.0)) throw DomainError("finite-difference step must be positive");
  if (noise.kind == NoiseKind::Adversarial && noise.eta.size() != count) {
    throw DimensionMismatch("adversarial noise length " + std::to_string(noise.eta.size()) +
                            " vs " + std::to_string(count) + " measurements");
  }
  const Eigen::Index d = x0.size();
  const auto noisy = [&](const Eigen::VectorXd& x, long index, std::uint64_t stream,
                         std::uint64_t sub) {
    Eigen::VectorXd y = checked_eval(f, x, index);
    if (noise.perturbs_values()) {
      NoiseSampler sampler(noise.reseeded(derive_seed(noise.seed, stream, sub)));
      y += outputs == 1 ? Eigen::VectorXd::Constant(1, sampler.scalar()) : sampler.vector(outputs);
    }
    return y;
  };

  Measurements out;
  out.m.resize(count, outputs);
  const Eigen::VectorXd base = noisy(x0, -1, 0, 0);

  const auto one = [&](Eigen::Index i) {
    const Eigen::VectorXd dir = row_of(i);
    const Eigen::VectorXd xi = x0 + delta * dir.head(d);
    const Eigen::VectorXd fi = noisy(xi, static_cast<long>(i), static_cast<std::uint64_t>(i) + 1, 0);
    const Eigen::VectorXd f0 =
        opts.fresh_base ? noisy(x0, -1, static_cast<std::uint64_t>(i) + 1, 1) : base;
    out.m.row(i) = ((fi - f0) / delta).transpose();
  };

  const int workers = parallel_ok ? std::max(1, opts.workers) : 1;
  if (workers == 1 || count < 2) {
    for (Eigen::Index i = 0; i < count; ++i) one(i);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (Eigen::Index i = w; i < count; i += workers) one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  if (noise.kind == NoiseKind::Adversarial) out.m.colwise() += noise.eta;
  out.evaluations = 1 + static_cast<long>(count) * (opts.fresh_base ? 2 : 1);
  return out;
}

VectorFn scalar_as_vector(const Blackbox& bb) {
  return [&bb](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, bb.eval(x)); };
}

EstimatorKind kind_of(const Directions& dirs) {
  switch (dirs.mode()) {
    case Directions::Mode::Identity: return EstimatorKind::Standard;
    case Directions::Mode::Dense: return EstimatorKind::Linsolve;
    case Directions::Mode::MonteCarlo: return EstimatorKind::GaussianMC;
    case Directions::Mode::Orthogonal: break;
  }
  switch (dirs.spinner().kind()) {
    case SpinnerKind::HadamardDeterministic: return EstimatorKind::Hadamard;
    case SpinnerKind::HadamardRandom: return EstimatorKind::HadamardRandom;
    case SpinnerKind::QuadraticResidue: return EstimatorKind::QuadraticResidue;
    case SpinnerKind::QuadraticResidueRandom: return EstimatorKind::QuadraticResidueRandom;
    case SpinnerKind::MultiSpinner: return EstimatorKind::MultiSpinner;
    case SpinnerKind::Explicit: return EstimatorKind::Linsolve;
  }
  return EstimatorKind::Linsolve;
}

Eigen::MatrixXd gaussian_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Blackboxes

Blackbox::Blackbox(Eigen::Index dim, Function f, bool concurrent_safe)
    : dim_(dim),
      f_(std::move(f)),
      concurrent_safe_(concurrent_safe),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (dim < 1) throw DomainError("blackbox dimension must be positive");
}

double Blackbox::eval(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DimensionMismatch("blackbox input has wrong length");
  counter_->fetch_add(1);
  return f_(x);
}

VectorBlackbox::VectorBlackbox(Eigen::Index input_dim, Eigen::Index output_dim, Function f,
                               bool concurrent_safe)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      f_(std::move(f)),
      concurrent_safe_(concurrent_safe),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (input_dim < 1 || output_dim < 1) throw DomainError("blackbox dimensions must be positive");
}

Eigen::VectorXd VectorBlackbox::eval(const Eigen::VectorXd& z) const {
  if (z.size() != input_dim_) throw DimensionMismatch("blackbox input has wrong length");
  counter_->fetch_add(1);
  Eigen::VectorXd y = f_(z);
  if (y.size() != output_dim_) throw DimensionMismatch("blackbox output has wrong length");
  return y;
}

// ---------------------------------------------------------------------------
// Estimator descriptors

std::string EstimatorConfig::label() const {
  switch (kind) {
    case EstimatorKind::Standard: return "standard";
    case EstimatorKind::Hadamard: return "hadamard";
    case EstimatorKind::HadamardRandom: return "hadamard_random";
    case EstimatorKind::QuadraticResidue: return "quadratic_residue";
    case EstimatorKind::QuadraticResidueRandom: return "quadratic_residue_random";
    case EstimatorKind::MultiSpinner:
      return std::string(multispinner_base == BaseKind::Hadamard ? "multispinner_k"
                                                                 : "multispinner_qr_k") +
             std::to_string(chain_length);
    case EstimatorKind::GaussianMC:
      return num_samples > 0 ? "gaussian_mc_" + std::to_string(num_samples) : "gaussian_mc";
    case EstimatorKind::GaussianUnstructuredFresh: return "gaussian_unstructured_1";
    case EstimatorKind::GaussianUnstructuredFixed: return "gaussian_unstructured_2";
    case EstimatorKind::Linsolve: return "linsolve";
  }
  return "unknown";
}

EstimatorConfig parse_estimator(const std::string& label) {
  EstimatorConfig c;
  const auto starts = [&](const std::string& prefix) { return label.rfind(prefix, 0) == 0; };
  const auto suffix_int = [&](const std::string& prefix) {
    try {
      return std::stoi(label.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ConfigError("bad estimator label '" + label + "'");
    }
  };
  if (label == "standard") {
    c.kind = EstimatorKind::Standard;
  } else if (label == "hadamard") {
    c.kind = EstimatorKind::Hadamard;
  } else if (label == "hadamard_random") {
    c.kind = EstimatorKind::HadamardRandom;
  } else if (label == "quadratic_residue") {
    c.kind = EstimatorKind::QuadraticResidue;
  } else if (label == "quadratic_residue_random") {
    c.kind = EstimatorKind::QuadraticResidueRandom;
  } else if (starts("multispinner_qr_k")) {
    c.kind = EstimatorKind::MultiSpinner;
    c.multispinner_base = BaseKind::QuadraticResidue;
    c.chain_length = suffix_int("multispinner_qr_k");
  } else if (starts("multispinner_k")) {
    c.kind = EstimatorKind::MultiSpinner;
    c.chain_length = suffix_int("multispinner_k");
  } else if (label == "gaussian_mc") {
    c.kind = EstimatorKind::GaussianMC;
  } else if (starts("gaussian_mc_")) {
    c.kind = EstimatorKind::GaussianMC;
    c.num_samples = suffix_int("gaussian_mc_");
  } else if (label == "gaussian_unstructured_1") {
    c.kind = EstimatorKind::GaussianUnstructuredFresh;
  } else if (label == "gaussian_unstructured_2") {
    c.kind = EstimatorKind::GaussianUnstructuredFixed;
  } else {
    throw ConfigError("unknown estimator '" + label + "'");
  }
  if (c.kind == EstimatorKind::MultiSpinner && c.chain_length < 1) {
    throw ConfigError("multispinner chain length must be >= 1");
  }
  return c;
}

void to_json(nlohmann::json& j, const EstimatorConfig& c) { j = c.label(); }

void from_json(const nlohmann::json& j, EstimatorConfig& c) {
  if (j.is_string()) {
    c = parse_estimator(j.get<std::string>());
    return;
  }
  c = parse_estimator(j.at("kind").get<std::string>());
  if (c.kind == EstimatorKind::MultiSpinner || j.contains("k")) {
    c.kind = EstimatorKind::MultiSpinner;
    c.chain_length = j.value("k", c.chain_length);
    if (j.value("base", std::string("hadamard")) == "quadratic_residue") {
      c.multispinner_base = BaseKind::QuadraticResidue;
    }
  }
  c.num_samples = j.value("num_samples", c.num_samples);
}

// ---------------------------------------------------------------------------
// Direction sets

Directions Directions::identity(Eigen::Index d) {
  Directions dirs;
  dirs.mode_ = Mode::Identity;
  dirs.dim_ = d;
  return dirs;
}

Directions Directions::orthogonal(Spinner s) {
  if (!s.is_orthogonal()) return dense(s.explicit_rows());
  Directions dirs;
  dirs.mode_ = Mode::Orthogonal;
  dirs.dim_ = s.n();
  dirs.spinner_ = std::move(s);
  return dirs;
}

Directions Directions::dense(Eigen::MatrixXd rows) {
  if (rows.rows() != rows.cols()) throw DimensionMismatch("direction matrix must be square");
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(rows).singularValues();
  if (sv.maxCoeff() <= 0.0 || sv.minCoeff() / sv.maxCoeff() < 1e-12) {
    throw SingularMatrixError("direction matrix is numerically singular");
  }
  Directions dirs;
  dirs.mode_ = Mode::Dense;
  dirs.dim_ = rows.cols();
  dirs.rows_ = std::move(rows);
  return dirs;
}

Directions Directions::monte_carlo(Eigen::MatrixXd rows) {
  if (rows.rows() < 1) throw DomainError("Monte-Carlo estimator needs at least one sample");
  Directions dirs;
  dirs.mode_ = Mode::MonteCarlo;
  dirs.dim_ = rows.cols();
  dirs.rows_ = std::move(rows);
  return dirs;
}

Eigen::Index Directions::count() const {
  switch (mode_) {
    case Mode::Identity:
    case Mode::Orthogonal: return dim_;
    case Mode::Dense:
    case Mode::MonteCarlo: return rows_.rows();
  }
  return 0;
}

Eigen::Index Directions::width() const { return dim_; }

Eigen::VectorXd Directions::row(Eigen::Index i) const {
  switch (mode_) {
    case Mode::Identity: return Eigen::VectorXd::Unit(dim_, i);
    case Mode::Orthogonal: return spinner_.row(i);
    case Mode::Dense:
    case Mode::MonteCarlo: return rows_.row(i).transpose();
  }
  return {};
}

Eigen::MatrixXd Directions::reconstruct(const Eigen::MatrixXd& measurements) const {
  if (measurements.rows() != count()) {
    throw DimensionMismatch("measurement count does not match direction count");
  }
  switch (mode_) {
    case Mode::Identity: return measurements;
    case Mode::Orthogonal: {
      Eigen::MatrixXd z(dim_, measurements.cols());
      for (Eigen::Index c = 0; c < measurements.cols(); ++c) {
        z.col(c) = apply_inverse(spinner_, measurements.col(c));
      }
      return z;
    }
    case Mode::Dense: return rows_.partialPivLu().solve(measurements);
    case Mode::MonteCarlo:
      return rows_.transpose() * measurements / static_cast<double>(rows_.rows());
  }
  return {};
}

DirectionPlan::DirectionPlan(EstimatorConfig config, Eigen::Index dim, std::uint64_t plan_seed,
                             Eigen::Index cap)
    : config_(config), dim_(dim), padded_(dim) {
  if (dim < 1) throw DomainError("direction plan needs a positive dimension");
  switch (config_.kind) {
    case EstimatorKind::Hadamard:
    case EstimatorKind::HadamardRandom:
      padded_ = smallest_spinner_dimension(BaseKind::Hadamard, dim, cap);
      base_ = build_hadamard(std::countr_zero(static_cast<std::uint64_t>(padded_)), cap);
      break;
    case EstimatorKind::QuadraticResidue:
    case EstimatorKind::QuadraticResidueRandom:
      padded_ = smallest_spinner_dimension(BaseKind::QuadraticResidue, dim, cap);
      base_ = build_quadratic_residue(padded_ - 1, cap);
      break;
    case EstimatorKind::MultiSpinner:
      if (config_.chain_length < 1) throw ConfigError("multispinner chain length must be >= 1");
      padded_ = smallest_spinner_dimension(config_.multispinner_base, dim, cap);
      break;
    case EstimatorKind::GaussianUnstructuredFixed:
      fixed_ = gaussian_rows(dim, dim, derive_seed(plan_seed, 0x6A55));
      break;
    case EstimatorKind::Linsolve:
      throw ConfigError("linsolve needs an explicit matrix; use estimate_linsolve");
    default: break;
  }
}

Directions DirectionPlan::draw(std::uint64_t call_seed) const {
  switch (config_.kind) {
    case EstimatorKind::Standard: return Directions::identity(dim_);
    case EstimatorKind::Hadamard:
    case EstimatorKind::QuadraticResidue: return Directions::orthogonal(base_);
    case EstimatorKind::HadamardRandom:
    case EstimatorKind::QuadraticResidueRandom:
      return Directions::orthogonal(randomize(base_, call_seed));
    case EstimatorKind::MultiSpinner:
      return Directions::orthogonal(
          build_multispinner(config_.multispinner_base, padded_, config_.chain_length, call_seed));
    case EstimatorKind::GaussianMC: {
      const Eigen::Index samples = config_.num_samples > 0 ? config_.num_samples : dim_;
      return Directions::monte_carlo(gaussian_rows(samples, dim_, call_seed));
    }
    case EstimatorKind::GaussianUnstructuredFresh:
      return Directions::dense(gaussian_rows(dim_, dim_, call_seed));
    case EstimatorKind::GaussianUnstructuredFixed: return Directions::dense(fixed_);
    case EstimatorKind::Linsolve: break;
  }
  throw ConfigError("cannot draw directions for " + config_.label());
}

// ---------------------------------------------------------------------------
// Estimators

Eigen::VectorXd measure(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                        const Eigen::Ref<const Eigen::MatrixXd>& directions,
                        const NoiseModel& noise, const EstimateOptions& opts) {
  if (x0.size() != bb.dim()) throw DimensionMismatch("x0 length does not match blackbox");
  if (directions.cols() < bb.dim()) throw DimensionMismatch("directions shorter than blackbox dimension");
  const Eigen::MatrixXd dirs = directions;
  const auto r = measure_impl(
      scalar_as_vector(bb), 1, x0, delta, dirs.rows(),
      [&](Eigen::Index i) -> Eigen::VectorXd { return dirs.row(i).transpose(); }, noise, opts,
      bb.concurrent_safe());
  return r.m.col(0);
}

GradientEstimate estimate(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                          const Directions& directions, const NoiseModel& noise,
                          const EstimateOptions& opts) {
  const auto start = Clock::now();
  if (x0.size() != bb.dim()) throw DimensionMismatch("x0 length does not match blackbox");
  if (directions.width() < bb.dim()) {
    throw DimensionMismatch("direction width " + std::to_string(directions.width()) +
                            " below blackbox dimension " + std::to_string(bb.dim()));
  }
  const auto r = measure_impl(
      scalar_as_vector(bb), 1, x0, delta, directions.count(),
      [&](Eigen::Index i) { return directions.row(i); }, noise, opts, bb.concurrent_safe());
  const Eigen::VectorXd z = directions.reconstruct(r.m).col(0);

  GradientEstimate est;
  est.gradient = z.head(bb.dim());
  est.padding_residual = z.tail(z.size() - bb.dim());
  est.estimator_kind = kind_of(directions);
  est.delta = delta;
  est.evaluations_used = r.evaluations;
  est.wall_nanos = nanos_since(start);
  return est;
}

GradientEstimate estimate_standard(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                   const NoiseModel& noise, const EstimateOptions& opts) {
  return estimate(bb, x0, delta, Directions::identity(bb.dim()), noise, opts);
}

GradientEstimate estimate_structured(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                     const Spinner& spinner, const NoiseModel& noise,
                                     const EstimateOptions& opts) {
  return estimate(bb, x0, delta, Directions::orthogonal(spinner), noise, opts);
}

GradientEstimate estimate_gaussian_mc(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                      int num_samples, std::uint64_t rng_seed,
                                      const NoiseModel& noise, const EstimateOptions& opts) {
  if (num_samples < 1) throw DomainError("Gaussian Monte-Carlo needs num_samples >= 1");
  return estimate(bb, x0, delta, Directions::monte_carlo(gaussian_rows(num_samples, bb.dim(), rng_seed)),
                  noise, opts);
}

GradientEstimate estimate_linsolve(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                   const Eigen::MatrixXd& explicit_matrix, const NoiseModel& noise,
                                   const EstimateOptions& opts) {
  return estimate(bb, x0, delta, Directions::dense(explicit_matrix), noise, opts);
}

JacobianEstimate estimate_jacobian(const VectorBlackbox& dyn, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& u0, double delta,
                                   const Directions& directions, const NoiseModel& noise,
                                   const EstimateOptions& opts) {
  const auto start = Clock::now();
  const Eigen::Index n = x0.size();
  const Eigen::Index m = u0.size();
  if (n + m != dyn.input_dim()) throw DimensionMismatch("(x, u) length does not match dynamics input");
  if (directions.width() < n + m) throw DimensionMismatch("directions narrower than (x, u)");

  Eigen::VectorXd z0(n + m);
  z0 << x0, u0;
  const VectorFn f = [&dyn](const Eigen::VectorXd& z) { return dyn.eval(z); };
  const auto r = measure_impl(
      f, dyn.output_dim(), z0, delta, directions.count(),
      [&](Eigen::Index i) { return directions.row(i); }, noise, opts, dyn.concurrent_safe());
  // width x outputs: column c is the gradient of output c.
  const Eigen::MatrixXd jt = directions.reconstruct(r.m);

  JacobianEstimate est;
  est.A = jt.topRows(n).transpose();
  est.B = jt.middleRows(n, m).transpose();
  est.evaluations_used = r.evaluations;
  est.wall_nanos = nanos_since(start);
  return est;
}

Eigen::MatrixXd central_difference_jacobian(const VectorBlackbox& dyn, const Eigen::VectorXd& z,
                                            double h) {
  Eigen::MatrixXd j(dyn.output_dim(), z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    j.col(i) = (dyn.eval(zp) - dyn.eval(zm)) / (2.0 * h);
  }
  return j;
}

}  // namespace spinfd

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

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinfd/noise.hpp"
#include "spinfd/spinner.hpp"

namespace spinfd {

/// Scalar objective with an evaluation counter. Copies share the counter.
class Blackbox {
 public:
  using Function = std::function<double(const Eigen::VectorXd&)>;

  Blackbox(Eigen::Index dim, Function f, bool concurrent_safe = false);

  double eval(const Eigen::VectorXd& x) const;
  Eigen::Index dim() const { return dim_; }
  std::uint64_t eval_count() const { return counter_->load(); }
  bool concurrent_safe() const { return concurrent_safe_; }

 private:
  Eigen::Index dim_;
  Function f_;
  bool concurrent_safe_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Vector-valued blackbox, e.g. one step of a dynamical system on (x, u).
class VectorBlackbox {
 public:
  using Function = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  VectorBlackbox(Eigen::Index input_dim, Eigen::Index output_dim, Function f,
                 bool concurrent_safe = false);

  Eigen::VectorXd eval(const Eigen::VectorXd& z) const;
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return output_dim_; }
  std::uint64_t eval_count() const { return counter_->load(); }
  bool concurrent_safe() const { return concurrent_safe_; }

 private:
  Eigen::Index input_dim_;
  Eigen::Index output_dim_;
  Function f_;
  bool concurrent_safe_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

enum class EstimatorKind {
  Standard,
  Hadamard,
  HadamardRandom,
  QuadraticResidue,
  QuadraticResidueRandom,
  MultiSpinner,
  GaussianMC,
  GaussianUnstructuredFresh,
  GaussianUnstructuredFixed,
  Linsolve,
};

/// Serializable choice of perturbation directions.
struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Standard;
  BaseKind multispinner_base = BaseKind::Hadamard;
  int chain_length = 2;
  /// Gaussian Monte-Carlo sample count; 0 means one sample per coordinate.
  int num_samples = 0;

  /// Stable label used in CSV output, e.g. "hadamard_random" or "multispinner_k2".
  std::string label() const;
};

void to_json(nlohmann::json& j, const EstimatorConfig& c);
void from_json(const nlohmann::json& j, EstimatorConfig& c);
EstimatorConfig parse_estimator(const std::string& label);

/// Concrete direction set for one estimate.
class Directions {
 public:
  enum class Mode { Identity, Orthogonal, Dense, MonteCarlo };

  static Directions identity(Eigen::Index d);
  static Directions orthogonal(Spinner s);
  /// Square direction matrix solved by LU with partial pivoting.
  static Directions dense(Eigen::MatrixXd rows);
  /// Rows g_i; reconstruction is the Monte-Carlo mean (1/N) sum m_i g_i.
  static Directions monte_carlo(Eigen::MatrixXd rows);

  Mode mode() const { return mode_; }
  Eigen::Index count() const;
  /// Length of each direction (>= the blackbox dimension; extra entries are padding).
  Eigen::Index width() const;
  Eigen::VectorXd row(Eigen::Index i) const;
  const Spinner& spinner() const { return spinner_; }

  /// Solve the direction system for every column of `measurements`
  /// (count() x outputs); returns width() x outputs.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& measurements) const;

 private:
  Mode mode_ = Mode::Identity;
  Eigen::Index dim_ = 0;
  Spinner spinner_;
  Eigen::MatrixXd rows_;
};

/// Builds the Directions for each estimate of a run. Randomized kinds draw
/// fresh signs / Gaussian rows from the per-call seed; GaussianUnstructuredFixed
/// draws one matrix from the plan seed and reuses it.
class DirectionPlan {
 public:
  DirectionPlan(EstimatorConfig config, Eigen::Index dim, std::uint64_t plan_seed,
                Eigen::Index cap = kDefaultDimensionCap);

  Directions draw(std::uint64_t call_seed) const;
  Eigen::Index padded_dim() const { return padded_; }
  const EstimatorConfig& config() const { return config_; }

 private:
  EstimatorConfig config_;
  Eigen::Index dim_;
  Eigen::Index padded_;
  Spinner base_;
  Eigen::MatrixXd fixed_;
};

struct EstimateOptions {
  /// Re-evaluate the base point for every direction instead of sharing one value.
  bool fresh_base = false;
  /// Concurrent evaluations; used only when the blackbox is concurrent-safe.
  int workers = 1;
};

struct GradientEstimate {
  Eigen::VectorXd gradient;
  EstimatorKind estimator_kind = EstimatorKind::Standard;
  double delta = 0.0;
  long evaluations_used = 0;
  long wall_nanos = 0;
  /// Reconstructed components along padding coordinates (stripped from gradient).
  Eigen::VectorXd padding_residual;
};

struct JacobianEstimate {
  Eigen::MatrixXd A;  ///< d f / d x
  Eigen::MatrixXd B;  ///< d f / d u
  long evaluations_used = 0;
  long wall_nanos = 0;
};

/// m_i = [f~(x0 + delta d_i) - f~(x0)] / delta over the rows of `directions`
/// (only the first bb.dim() entries of each row move x0).
Eigen::VectorXd measure(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                        const Eigen::Ref<const Eigen::MatrixXd>& directions,
                        const NoiseModel& noise, const EstimateOptions& opts = {});

GradientEstimate estimate(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                          const Directions& directions, const NoiseModel& noise,
                          const EstimateOptions& opts = {});

GradientEstimate estimate_standard(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                   const NoiseModel& noise, const EstimateOptions& opts = {});

/// z = M^{-1} m = (1/n) M^T m; x0 is zero-padded to the spinner order.
GradientEstimate estimate_structured(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                     const Spinner& spinner, const NoiseModel& noise,
                                     const EstimateOptions& opts = {});

/// Mean of m_i g_i over num_samples standard Gaussian directions.
GradientEstimate estimate_gaussian_mc(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                      int num_samples, std::uint64_t rng_seed,
                                      const NoiseModel& noise, const EstimateOptions& opts = {});

/// Dense solve of M z = m for an arbitrary square direction matrix.
GradientEstimate estimate_linsolve(const Blackbox& bb, const Eigen::VectorXd& x0, double delta,
                                   const Eigen::MatrixXd& explicit_matrix, const NoiseModel& noise,
                                   const EstimateOptions& opts = {});

/// Jacobians of z = (x, u) -> x' from one shared set of count()+1 evaluations.
JacobianEstimate estimate_jacobian(const VectorBlackbox& dyn, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& u0, double delta,
                                   const Directions& directions, const NoiseModel& noise,
                                   const EstimateOptions& opts = {});

/// Central differences; a testing oracle only.
Eigen::MatrixXd central_difference_jacobian(const VectorBlackbox& dyn, const Eigen::VectorXd& z,
                                            double h);

}  // namespace spinfd

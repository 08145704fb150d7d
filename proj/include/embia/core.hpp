#pragma once

#include "embia/numeric.hpp"
#include "embia/params.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace embia {

// n x G matrix of membership probabilities. Every entry is in [0, 1] and
// every row sums to one.
class Responsibilities {
 public:
  static constexpr double kRowTolerance = 1e-12;

  Responsibilities() = default;
  // Throws std::invalid_argument if the invariants do not hold.
  explicit Responsibilities(Matrix values);

  // One-hot matrix from 0-based labels.
  static Responsibilities from_labels(const std::vector<int>& labels, int groups);

  const Matrix& values() const { return values_; }
  Index n() const { return values_.rows(); }
  Index groups() const { return values_.cols(); }

  bool is_hard() const;
  Vector column_sums() const { return values_.colwise().sum().transpose(); }
  // Row-wise argmax; ties go to the lowest index.
  std::vector<int> hard_labels() const;

  bool operator==(const Responsibilities& other) const {
    return values_ == other.values_;
  }

 private:
  Matrix values_;
};

struct ConvergenceConfig {
  double epsilon = 1e-5;
  int max_iter = 10000;

  void validate() const;

  static ConvergenceConfig gaussian() { return {1e-5, 10000}; }
  static ConvergenceConfig latent_class() { return {1e-9, 10000}; }
  static ConvergenceConfig blockmodel() { return {1e-5, 10000}; }
};

// Diagnostics attached to a fit. None of these abort a fit.
struct FitFlags {
  bool boundary_adjacent = false;   // covariance ridge was applied
  bool spurious_candidate = false;  // some n * tau_g < m + 1
  bool inner_nonconverged = false;  // a variational sweep loop hit its cap

  void merge(const FitFlags& other) {
    boundary_adjacent |= other.boundary_adjacent;
    spurious_candidate |= other.spurious_candidate;
    inner_nonconverged |= other.inner_nonconverged;
  }
};

struct FitResult {
  double objective = kNegInf;
  std::vector<double> trace;
  Responsibilities responsibilities;
  ModelParams params;
  int iterations = 0;
  bool converged = false;
  FitFlags flags;
};

struct EStepResult {
  Responsibilities resp;
  double objective = kNegInf;
};

// Raised when an M-step receives a hard assignment leaving a component empty.
class EmptyCluster : public std::runtime_error {
 public:
  explicit EmptyCluster(int component);
  int component() const { return component_; }

 private:
  int component_;
};

class SingularCovariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mixture family bound to its data. Implementations are immutable after
// construction and may be shared across threads.
class MixtureFamily {
 public:
  virtual ~MixtureFamily() = default;

  virtual std::string_view name() const = 0;
  virtual Index observations() const = 0;

  virtual ModelParams m_step(const Responsibilities& z, FitFlags& flags) const = 0;

  // Tempered E-step: responsibilities proportional to
  // [tau_g P(x_i | theta_g)]^nu. nu = 1 is the ordinary E-step. `current`
  // seeds families whose E-step is itself iterative. The returned objective
  // is the untempered one at `params`.
  virtual EStepResult e_step(const ModelParams& params,
                             const Responsibilities& current, double nu,
                             FitFlags& flags) const = 0;

  // sum_i sum_g z_ig [log tau_g + log P(x_i | theta_g)] for a hard z.
  virtual double complete_data_loglik(const Responsibilities& hard_z,
                                      const ModelParams& params) const = 0;

  virtual int param_count(int groups) const = 0;

  // Post-fit diagnostics (e.g. spurious-solution detection).
  virtual void finalize_flags(const ModelParams&, FitFlags&) const {}
};

// Families whose observations are conditionally independent given the
// labels (Gaussian mixtures, latent class analysis). The E-step is the
// closed-form posterior computed in log space.
class IndependentMixtureFamily : public MixtureFamily {
 public:
  // n x G matrix of log P(x_i | theta_g).
  virtual Matrix log_component_densities(const ModelParams& params) const = 0;

  // n x G matrix of log tau_g + log P(x_i | theta_g).
  Matrix log_joint(const ModelParams& params) const;

  EStepResult e_step(const ModelParams& params, const Responsibilities& current,
                     double nu, FitFlags& flags) const override;
  double complete_data_loglik(const Responsibilities& hard_z,
                              const ModelParams& params) const override;
};

// Relative-change stopping rule:
// (l_curr - l_prev) / |l_curr| < epsilon, or an absolute change test when
// l_curr is exactly zero.
bool converged(double l_prev, double l_curr, double epsilon);

// Runs EM from an initial classification matrix: M-step from z0, then
// alternating E/M cycles until `converged` fires or max_iter cycles have run.
// trace[0] is the objective after the initial M-step; each cycle appends one
// entry. Non-convergence is reported through FitResult::converged.
FitResult em_fit(const MixtureFamily& family, const Responsibilities& z0,
                 const ConvergenceConfig& cfg);

// Complete-data log-likelihood for a hard assignment. Returns -inf when a
// component with zero weight or zero density receives an observation.
double complete_data_loglik(const MixtureFamily& family,
                            const Responsibilities& hard_z,
                            const ModelParams& params);

}  // namespace embia

#pragma once

#include "embia/core.hpp"

#include <optional>

namespace embia {

// Dirichlet prior on tau and an independent Beta(a, b) prior on each
// distinct entry theta_gh (g <= h).
struct SbmPriors {
  Vector dirichlet;
  double beta_a = 1.0;
  double beta_b = 1.0;

  static SbmPriors uniform(int groups);
  void validate(Index groups) const;
};

// Mean-field lower bound on the log joint density of the network and the
// parameters, including the log prior density of (tau, theta).
double sbm_elbo(const Matrix& adj, const Responsibilities& resp, const SbmParams& params,
                const SbmPriors& priors);

struct VeStepResult {
  Responsibilities resp;
  int sweeps = 0;
  bool converged = false;
};

struct VeStepOptions {
  double tolerance = 1e-6;
  int max_sweeps = 50;
  double nu = 1.0;  // tempering exponent applied to each node's field
};

// Sequential fixed-point sweeps of the mean-field update in node order.
// Stops when no entry moves by more than `tolerance` within a sweep.
VeStepResult sbm_ve_step(const Matrix& adj, const SbmParams& params,
                         const Responsibilities& resp_init, const VeStepOptions& options = {});

// MAP update of (tau, theta) given the variational responsibilities.
SbmParams sbm_m_step(const Matrix& adj, const Responsibilities& resp, const SbmPriors& priors);

int sbm_param_count(int groups);

// Throws std::invalid_argument unless adj is a symmetric 0/1 matrix with a
// zero diagonal.
void validate_adjacency(const Matrix& adj);

class StochasticBlockmodel final : public MixtureFamily {
 public:
  // Default priors are uniform: Dirichlet(1, ..., 1) and Beta(1, 1).
  explicit StochasticBlockmodel(const Matrix& adj);
  StochasticBlockmodel(const Matrix& adj, SbmPriors priors);

  std::string_view name() const override { return "sbm"; }
  Index observations() const override { return adj_.rows(); }
  ModelParams m_step(const Responsibilities& z, FitFlags& flags) const override;
  EStepResult e_step(const ModelParams& params, const Responsibilities& current, double nu,
                     FitFlags& flags) const override;
  double complete_data_loglik(const Responsibilities& hard_z,
                              const ModelParams& params) const override;
  int param_count(int groups) const override;

  SbmPriors priors_for(Index groups) const;
  const Matrix& adjacency() const { return adj_; }

 private:
  Matrix adj_;
  std::optional<SbmPriors> priors_;
};

}  // namespace embia

#pragma once

#include "embia/core.hpp"

#include <span>

namespace embia {

// log N(x; mu, sigma). Throws SingularCovariance if sigma is not positive
// definite.
double gmm_log_density(const Vector& x, const Vector& mu, const Matrix& sigma);

// Ordinary E-step; objective is the observed-data log-likelihood.
EStepResult gmm_e_step(const Matrix& data, const GaussianParams& params);

// Weighted MLE of (tau, mu, Sigma). Under EEV all groups share the
// eigenvalue spectrum of the pooled rotated scatter while keeping their own
// eigenvectors. A covariance whose smallest eigenvalue falls below
// 1e-10 * trace / m receives a ridge of 1e-8 * trace / m and sets
// flags->boundary_adjacent.
GaussianParams gmm_m_step(const Matrix& data, const Responsibilities& resp,
                          CovarianceStructure structure, FitFlags* flags = nullptr);

int gmm_param_count(CovarianceStructure structure, int groups, int dims);

// Total within-cluster sum of squared distances to the cluster means.
// Labels are 0-based.
double within_cluster_ss(const Matrix& data, std::span<const int> labels);

class GaussianMixture final : public IndependentMixtureFamily {
 public:
  GaussianMixture(const Matrix& data, CovarianceStructure structure);

  std::string_view name() const override { return "gmm"; }
  Index observations() const override { return data_.rows(); }
  ModelParams m_step(const Responsibilities& z, FitFlags& flags) const override;
  Matrix log_component_densities(const ModelParams& params) const override;
  int param_count(int groups) const override;
  void finalize_flags(const ModelParams& params, FitFlags& flags) const override;

  CovarianceStructure structure() const { return structure_; }
  const Matrix& data() const { return data_; }

 private:
  Matrix data_;
  CovarianceStructure structure_;
};

}  // namespace embia

#include "embia/core.hpp"

#include <cmath>
#include <string>

namespace embia {

MixingWeights::MixingWeights(Vector values) : tau(std::move(values)) {
  if (tau.size() == 0) throw std::invalid_argument("mixing weights: empty");
  for (Index g = 0; g < tau.size(); ++g) {
    if (!(tau(g) >= 0.0 && tau(g) <= 1.0)) {
      throw std::invalid_argument("mixing weights: entry " + std::to_string(g) +
                                  " outside [0, 1]");
    }
  }
  if (std::abs(tau.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixing weights: entries do not sum to 1");
  }
}

std::string_view to_string(CovarianceStructure s) {
  switch (s) {
    case CovarianceStructure::VVV: return "VVV";
    case CovarianceStructure::EEV: return "EEV";
  }
  return "?";
}

CovarianceStructure covariance_structure_from_string(std::string_view s) {
  if (s == "VVV") return CovarianceStructure::VVV;
  if (s == "EEV") return CovarianceStructure::EEV;
  throw std::invalid_argument("unknown covariance structure '" + std::string(s) + "'");
}

const MixingWeights& mixing_weights(const ModelParams& params) {
  return std::visit([](const auto& p) -> const MixingWeights& { return p.tau; },
                    params);
}

Responsibilities::Responsibilities(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw std::invalid_argument("responsibilities: empty matrix");
  }
  for (Index i = 0; i < values_.rows(); ++i) {
    double sum = 0.0;
    for (Index g = 0; g < values_.cols(); ++g) {
      const double v = values_(i, g);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("responsibilities: entry (" + std::to_string(i) +
                                    ", " + std::to_string(g) + ") outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw std::invalid_argument("responsibilities: row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
}

Responsibilities Responsibilities::from_labels(const std::vector<int>& labels,
                                               int groups) {
  if (groups < 1) throw std::invalid_argument("from_labels: groups < 1");
  Matrix z = Matrix::Zero(static_cast<Index>(labels.size()), groups);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= groups) {
      throw std::invalid_argument("from_labels: label out of range at row " +
                                  std::to_string(i));
    }
    z(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return Responsibilities(std::move(z));
}

bool Responsibilities::is_hard() const {
  return ((values_.array() == 0.0) || (values_.array() == 1.0)).all();
}

std::vector<int> Responsibilities::hard_labels() const {
  std::vector<int> labels(static_cast<std::size_t>(n()));
  for (Index i = 0; i < n(); ++i) {
    Index best = 0;
    for (Index g = 1; g < groups(); ++g) {
      if (values_(i, g) > values_(i, best)) best = g;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

void ConvergenceConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

EmptyCluster::EmptyCluster(int component)
    : std::runtime_error("empty cluster: component " + std::to_string(component)),
      component_(component) {}

Matrix IndependentMixtureFamily::log_joint(const ModelParams& params) const {
  Matrix lj = log_component_densities(params);
  const Vector& tau = mixing_weights(params).tau;
  for (Index g = 0; g < lj.cols(); ++g) {
    lj.col(g).array() += std::log(tau(g));
  }
  return lj;
}

EStepResult IndependentMixtureFamily::e_step(const ModelParams& params,
                                             const Responsibilities&, double nu,
                                             FitFlags&) const {
  const Matrix lj = log_joint(params);
  double loglik = 0.0;
  for (Index i = 0; i < lj.rows(); ++i) loglik += log_sum_exp(lj.row(i));
  if (!std::isfinite(loglik)) {
    throw std::runtime_error("e-step: observation with zero density under every component");
  }
  Matrix z;
  if (nu == 1.0) {
    normalize_log_rows(lj, z);
  } else {
    normalize_log_rows(nu * lj, z);
  }
  return {Responsibilities(std::move(z)), loglik};
}

double IndependentMixtureFamily::complete_data_loglik(const Responsibilities& hard_z,
                                                      const ModelParams& params) const {
  const Matrix lj = log_joint(params);
  double total = 0.0;
  for (Index i = 0; i < hard_z.n(); ++i) {
    for (Index g = 0; g < hard_z.groups(); ++g) {
      if (hard_z.values()(i, g) > 0.0) total += hard_z.values()(i, g) * lj(i, g);
    }
  }
  return total;
}

bool converged(double l_prev, double l_curr, double epsilon) {
  const double change = l_curr - l_prev;
  if (l_curr == 0.0) return std::abs(change) < epsilon;
  return change / std::abs(l_curr) < epsilon;
}

FitResult em_fit(const MixtureFamily& family, const Responsibilities& z0,
                 const ConvergenceConfig& cfg) {
  cfg.validate();
  if (z0.n() != family.observations()) {
    throw std::invalid_argument("em_fit: z0 has " + std::to_string(z0.n()) +
                                " rows but the data has " +
                                std::to_string(family.observations()) + " observations");
  }

  FitResult result;
  ModelParams params = family.m_step(z0, result.flags);
  EStepResult e = family.e_step(params, z0, 1.0, result.flags);
  result.trace.push_back(e.objective);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    ModelParams next = family.m_step(e.resp, result.flags);
    EStepResult e_next = family.e_step(next, e.resp, 1.0, result.flags);
    const double l_prev = e.objective;
    params = std::move(next);
    e = std::move(e_next);
    result.trace.push_back(e.objective);
    result.iterations = it;
    if (converged(l_prev, e.objective, cfg.epsilon)) {
      result.converged = true;
      break;
    }
  }

  result.objective = e.objective;
  result.responsibilities = std::move(e.resp);
  result.params = std::move(params);
  family.finalize_flags(result.params, result.flags);
  return result;
}

double complete_data_loglik(const MixtureFamily& family, const Responsibilities& hard_z,
                            const ModelParams& params) {
  if (!hard_z.is_hard()) {
    throw std::invalid_argument("complete_data_loglik: assignment is not hard");
  }
  return family.complete_data_loglik(hard_z, params);
}

}  // namespace embia

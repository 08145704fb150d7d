#include "embia/lca.hpp"

#include <cmath>
#include <string>

namespace embia {

double lca_log_density(const Vector& x, const Vector& theta_g) {
  if (x.size() != theta_g.size()) throw std::invalid_argument("lca_log_density: length mismatch");
  double total = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    if (x(k) != 0.0 && x(k) != 1.0) {
      throw std::invalid_argument("lca_log_density: non-binary entry " + std::to_string(k));
    }
    total += x(k) == 1.0 ? std::log(theta_g(k)) : std::log1p(-theta_g(k));
  }
  return total;
}

EStepResult lca_e_step(const Matrix& data, const LcaParams& params) {
  LatentClassModel family(data);
  FitFlags flags;
  return family.e_step(params, Responsibilities{}, 1.0, flags);
}

LcaParams lca_m_step(const Matrix& data, const Responsibilities& resp) {
  if (resp.n() != data.rows()) throw std::invalid_argument("lca_m_step: row count mismatch");
  const Vector counts = resp.column_sums();
  const bool hard = resp.is_hard();
  const Vector column_means = data.colwise().mean().transpose();

  LcaParams out;
  out.tau = MixingWeights(counts / counts.sum());
  out.theta.resize(resp.groups(), data.cols());
  const Matrix hits = resp.values().transpose() * data;  // G x M
  for (Index g = 0; g < resp.groups(); ++g) {
    if (counts(g) < 1e-10) {
      if (hard) throw EmptyCluster(static_cast<int>(g));
      out.theta.row(g) = column_means.transpose();
    } else {
      out.theta.row(g) = hits.row(g) / counts(g);
    }
  }
  out.theta = out.theta.cwiseMax(kThetaClamp).cwiseMin(1.0 - kThetaClamp);
  return out;
}

int lca_param_count(int groups, int items) {
  if (groups < 1 || items < 1) throw std::invalid_argument("lca_param_count: G and M must be >= 1");
  return (groups - 1) + groups * items;
}

LatentClassModel::LatentClassModel(const Matrix& data) : data_(data) {
  if (data_.rows() == 0 || data_.cols() == 0) throw std::invalid_argument("latent class model: empty data");
  for (Index i = 0; i < data_.rows(); ++i) {
    for (Index k = 0; k < data_.cols(); ++k) {
      if (data_(i, k) != 0.0 && data_(i, k) != 1.0) {
        throw std::invalid_argument("latent class model: entry (" + std::to_string(i) + ", " +
                                    std::to_string(k) + ") is not binary");
      }
    }
  }
}

ModelParams LatentClassModel::m_step(const Responsibilities& z, FitFlags&) const {
  return lca_m_step(data_, z);
}

Matrix LatentClassModel::log_component_densities(const ModelParams& params) const {
  // Boundary item probabilities would give -inf for every class on some
  // rows; evaluate with the same clamp the M-step applies.
  const Matrix theta =
      std::get<LcaParams>(params).theta.cwiseMax(kThetaClamp).cwiseMin(1.0 - kThetaClamp);
  const Matrix log_on = theta.array().log();
  const Matrix log_off = (1.0 - theta.array()).log();
  return data_ * log_on.transpose() + (1.0 - data_.array()).matrix() * log_off.transpose();
}

int LatentClassModel::param_count(int groups) const {
  return lca_param_count(groups, static_cast<int>(data_.cols()));
}

}  // namespace embia

#include "embia/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>

namespace embia {

namespace {

constexpr double kEmptyColumn = 1e-10;
constexpr double kEigenFloor = 1e-10;
constexpr double kRidge = 1e-8;

Eigen::LLT<Matrix> checked_cholesky(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance("covariance matrix is not positive definite");
  }
  const auto diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw SingularCovariance("covariance matrix is not positive definite");
  }
  return llt;
}

// Adds the ridge to `sigma` if its spectrum is too flat at the bottom.
bool regularize(Matrix& sigma) {
  const Index m = sigma.rows();
  const double scale = sigma.trace() / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kEigenFloor * scale || !(scale > 0.0)) {
    const double ridge = scale > 0.0 ? kRidge * scale : kRidge;
    sigma.diagonal().array() += ridge;
    return true;
  }
  return false;
}

Vector log_densities(const Matrix& data, const Vector& mu, const Matrix& sigma) {
  const Index m = data.cols();
  const auto llt = checked_cholesky(sigma);
  const Matrix L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  Matrix centered = (data.rowwise() - mu.transpose()).transpose();  // m x n
  L.triangularView<Eigen::Lower>().solveInPlace(centered);
  const Vector maha = centered.colwise().squaredNorm().transpose();
  const double constant = static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + log_det;
  return -0.5 * (maha.array() + constant);
}

}  // namespace

double gmm_log_density(const Vector& x, const Vector& mu, const Matrix& sigma) {
  if (x.size() != mu.size() || sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw std::invalid_argument("gmm_log_density: dimension mismatch");
  }
  Matrix row = x.transpose();
  return log_densities(row, mu, sigma)(0);
}

EStepResult gmm_e_step(const Matrix& data, const GaussianParams& params) {
  GaussianMixture family(data, params.structure);
  FitFlags flags;
  const Responsibilities dummy;
  return family.e_step(params, dummy, 1.0, flags);
}

GaussianParams gmm_m_step(const Matrix& data, const Responsibilities& resp,
                          CovarianceStructure structure, FitFlags* flags) {
  const Index n = data.rows();
  const Index m = data.cols();
  const Index G = resp.groups();
  if (resp.n() != n) throw std::invalid_argument("gmm_m_step: row count mismatch");

  const Matrix& z = resp.values();
  const Vector counts = resp.column_sums();
  const bool hard = resp.is_hard();
  bool boundary = false;

  GaussianParams out;
  out.structure = structure;
  out.tau = MixingWeights(counts / counts.sum());
  out.means.resize(static_cast<std::size_t>(G));
  std::vector<Matrix> scatter(static_cast<std::size_t>(G));

  const Vector grand_mean = data.colwise().mean().transpose();
  for (Index g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (counts(g) < kEmptyColumn) {
      if (hard) throw EmptyCluster(static_cast<int>(g));
      // A vanishing soft component keeps a neutral location; its weight
      // carries it out of the likelihood.
      out.means[gi] = grand_mean;
      scatter[gi] = Matrix::Zero(m, m);
      boundary = true;
      continue;
    }
    out.means[gi] = (data.transpose() * z.col(g)) / counts(g);
    const Matrix centered = data.rowwise() - out.means[gi].transpose();
    scatter[gi] = centered.transpose() * z.col(g).asDiagonal() * centered;
  }

  out.covariances.resize(static_cast<std::size_t>(G));
  if (structure == CovarianceStructure::VVV) {
    const Matrix pooled = [&] {
      const Matrix c = data.rowwise() - grand_mean.transpose();
      return Matrix((c.transpose() * c) / static_cast<double>(n));
    }();
    for (Index g = 0; g < G; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      Matrix sigma = counts(g) < kEmptyColumn ? pooled : Matrix(scatter[gi] / counts(g));
      sigma = 0.5 * (sigma + sigma.transpose());
      boundary |= regularize(sigma);
      out.covariances[gi] = std::move(sigma);
    }
  } else {
    // Eigenvalues come back in ascending order for every group, so summing
    // them position-wise pairs like with like.
    std::vector<Matrix> orientation(static_cast<std::size_t>(G));
    Vector shared = Vector::Zero(m);
    for (Index g = 0; g < G; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (scatter[gi] + scatter[gi].transpose()));
      orientation[gi] = eig.eigenvectors();
      shared += eig.eigenvalues().cwiseMax(0.0);
    }
    shared /= static_cast<double>(n);
    const double scale = shared.sum() / static_cast<double>(m);
    if (shared.minCoeff() < kEigenFloor * scale || !(scale > 0.0)) {
      shared.array() += scale > 0.0 ? kRidge * scale : kRidge;
      boundary = true;
    }
    for (Index g = 0; g < G; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      Matrix sigma = orientation[gi] * shared.asDiagonal() * orientation[gi].transpose();
      out.covariances[gi] = 0.5 * (sigma + sigma.transpose());
    }
  }

  if (flags && boundary) flags->boundary_adjacent = true;
  return out;
}

int gmm_param_count(CovarianceStructure structure, int groups, int dims) {
  if (groups < 1 || dims < 1) throw std::invalid_argument("gmm_param_count: G and m must be >= 1");
  const int G = groups;
  const int m = dims;
  const int base = (G - 1) + G * m;
  switch (structure) {
    case CovarianceStructure::VVV: return base + G * m * (m + 1) / 2;
    case CovarianceStructure::EEV: return base + m + G * m * (m - 1) / 2;
  }
  return base;
}

double within_cluster_ss(const Matrix& data, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != data.rows()) {
    throw std::invalid_argument("within_cluster_ss: label count mismatch");
  }
  int groups = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("within_cluster_ss: negative label");
    groups = std::max(groups, l + 1);
  }
  Matrix sums = Matrix::Zero(groups, data.cols());
  Vector counts = Vector::Zero(groups);
  for (Index i = 0; i < data.rows(); ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += data.row(i);
    counts(labels[static_cast<std::size_t>(i)]) += 1.0;
  }
  double total = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    const int g = labels[static_cast<std::size_t>(i)];
    total += (data.row(i) - sums.row(g) / counts(g)).squaredNorm();
  }
  return total;
}

GaussianMixture::GaussianMixture(const Matrix& data, CovarianceStructure structure)
    : data_(data), structure_(structure) {
  if (data_.rows() == 0 || data_.cols() == 0) {
    throw std::invalid_argument("gaussian mixture: empty data");
  }
  if (!data_.allFinite()) throw std::invalid_argument("gaussian mixture: non-finite data");
}

ModelParams GaussianMixture::m_step(const Responsibilities& z, FitFlags& flags) const {
  return gmm_m_step(data_, z, structure_, &flags);
}

Matrix GaussianMixture::log_component_densities(const ModelParams& params) const {
  const auto& p = std::get<GaussianParams>(params);
  const Index G = p.tau.groups();
  Matrix out(data_.rows(), G);
  for (Index g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    out.col(g) = log_densities(data_, p.means[gi], p.covariances[gi]);
  }
  return out;
}

int GaussianMixture::param_count(int groups) const {
  return gmm_param_count(structure_, groups, static_cast<int>(data_.cols()));
}

void GaussianMixture::finalize_flags(const ModelParams& params, FitFlags& flags) const {
  const auto& tau = std::get<GaussianParams>(params).tau.tau;
  const double n = static_cast<double>(data_.rows());
  const double m = static_cast<double>(data_.cols());
  for (Index g = 0; g < tau.size(); ++g) {
    if (n * tau(g) < m + 1.0) flags.spurious_candidate = true;
  }
}

}  // namespace embia

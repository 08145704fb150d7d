#include "embia/sbm.hpp"

#include "embia/lca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace embia {

namespace {

Matrix clamped(const Matrix& theta) {
  return theta.cwiseMax(kThetaClamp).cwiseMin(1.0 - kThetaClamp);
}

double log_beta_density(double x, double a, double b) {
  double v = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  if (a != 1.0) v += (a - 1.0) * std::log(x);
  if (b != 1.0) v += (b - 1.0) * std::log1p(-x);
  return v;
}

double log_prior(const SbmParams& params, const SbmPriors& priors) {
  const Index G = params.tau.groups();
  double v = std::lgamma(priors.dirichlet.sum());
  for (Index g = 0; g < G; ++g) {
    v -= std::lgamma(priors.dirichlet(g));
    if (priors.dirichlet(g) != 1.0) v += (priors.dirichlet(g) - 1.0) * std::log(params.tau.tau(g));
  }
  const Matrix theta = clamped(params.theta);
  for (Index g = 0; g < G; ++g) {
    for (Index h = g; h < G; ++h) v += log_beta_density(theta(g, h), priors.beta_a, priors.beta_b);
  }
  return v;
}

// Non-edge indicator over distinct pairs: 1 - x_ij off the diagonal.
Matrix non_edges(const Matrix& adj) {
  Matrix d = Matrix::Ones(adj.rows(), adj.cols()) - adj;
  d.diagonal().setZero();
  return d;
}

void check_shapes(const Matrix& adj, const Responsibilities& resp, const Matrix& theta) {
  if (resp.n() != adj.rows()) throw std::invalid_argument("sbm: responsibilities row count mismatch");
  if (theta.rows() != resp.groups() || theta.cols() != resp.groups()) {
    throw std::invalid_argument("sbm: connectivity matrix does not match group count");
  }
}

}  // namespace

SbmPriors SbmPriors::uniform(int groups) {
  return SbmPriors{Vector::Ones(groups), 1.0, 1.0};
}

void SbmPriors::validate(Index groups) const {
  if (dirichlet.size() != groups) throw std::invalid_argument("sbm priors: Dirichlet length mismatch");
  if (!(dirichlet.array() > 0.0).all() || !(beta_a > 0.0) || !(beta_b > 0.0)) {
    throw std::invalid_argument("sbm priors: hyperparameters must be > 0");
  }
}

void validate_adjacency(const Matrix& adj) {
  if (adj.rows() != adj.cols()) throw std::invalid_argument("adjacency matrix is not square");
  for (Index i = 0; i < adj.rows(); ++i) {
    if (adj(i, i) != 0.0) throw std::invalid_argument("adjacency: self-loop at node " + std::to_string(i + 1));
    for (Index j = 0; j < adj.cols(); ++j) {
      if (adj(i, j) != 0.0 && adj(i, j) != 1.0) {
        throw std::invalid_argument("adjacency: non-binary entry at (" + std::to_string(i + 1) + ", " +
                                    std::to_string(j + 1) + ")");
      }
      if (adj(i, j) != adj(j, i)) {
        throw std::invalid_argument("adjacency: asymmetric entry at (" + std::to_string(i + 1) + ", " +
                                    std::to_string(j + 1) + "); directed networks are not supported");
      }
    }
  }
}

double sbm_elbo(const Matrix& adj, const Responsibilities& resp, const SbmParams& params,
                const SbmPriors& priors) {
  check_shapes(adj, resp, params.theta);
  priors.validate(resp.groups());
  const Matrix& z = resp.values();
  const Matrix theta = clamped(params.theta);

  double mixing = 0.0;
  double entropy = 0.0;
  for (Index g = 0; g < z.cols(); ++g) {
    const double log_tau = std::log(params.tau.tau(g));
    for (Index i = 0; i < z.rows(); ++i) {
      if (z(i, g) > 0.0) {
        mixing += z(i, g) * log_tau;
        entropy -= xlogx(z(i, g));
      }
    }
  }

  // Both products count every unordered pair twice.
  const Matrix edges = z.transpose() * adj * z;
  const Matrix gaps = z.transpose() * non_edges(adj) * z;
  const double pairwise =
      0.5 * ((edges.array() * theta.array().log()).sum() +
             (gaps.array() * (1.0 - theta.array()).log()).sum());

  return mixing + pairwise + entropy + log_prior(params, priors);
}

VeStepResult sbm_ve_step(const Matrix& adj, const SbmParams& params,
                         const Responsibilities& resp_init, const VeStepOptions& options) {
  check_shapes(adj, resp_init, params.theta);
  const Index n = adj.rows();
  const Index G = resp_init.groups();
  const Matrix theta = clamped(params.theta);
  const Matrix log_on = theta.array().log();
  const Matrix log_off = (1.0 - theta.array()).log();
  const Vector log_tau = params.tau.tau.array().log();

  Matrix z = resp_init.values();
  Vector column_totals = z.colwise().sum().transpose();
  Vector field(G);
  Matrix row_out;

  VeStepResult out;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index i = 0; i < n; ++i) {
      const Vector linked = (adj.row(i) * z).transpose();
      const Vector unlinked = column_totals - z.row(i).transpose() - linked;
      field = log_tau + log_on * linked + log_off * unlinked;
      normalize_log_rows(options.nu * field.transpose(), row_out);
      max_change = std::max(max_change, (row_out.row(0) - z.row(i)).cwiseAbs().maxCoeff());
      column_totals += (row_out.row(0) - z.row(i)).transpose();
      z.row(i) = row_out.row(0);
    }
    out.sweeps = sweep;
    if (max_change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.resp = Responsibilities(std::move(z));
  return out;
}

SbmParams sbm_m_step(const Matrix& adj, const Responsibilities& resp, const SbmPriors& priors) {
  if (resp.n() != adj.rows()) throw std::invalid_argument("sbm_m_step: row count mismatch");
  const Index G = resp.groups();
  priors.validate(G);
  const Matrix& z = resp.values();
  const Vector counts = resp.column_sums();
  const bool hard = resp.is_hard();
  for (Index g = 0; g < G; ++g) {
    if (counts(g) < 1e-10 && hard) throw EmptyCluster(static_cast<int>(g));
  }

  SbmParams out;
  Vector tau = (counts.array() + priors.dirichlet.array() - 1.0).cwiseMax(0.0).matrix();
  if (!(tau.sum() > 0.0)) throw EmptyCluster(0);
  out.tau = MixingWeights(tau / tau.sum());

  const Matrix edges = z.transpose() * adj * z;
  Matrix dyads = counts * counts.transpose();
  dyads -= z.transpose() * z;
  out.theta.resize(G, G);
  const double a = priors.beta_a;
  const double b = priors.beta_b;
  for (Index g = 0; g < G; ++g) {
    for (Index h = g; h < G; ++h) {
      const double scale = g == h ? 0.5 : 1.0;
      const double e = scale * 0.5 * (edges(g, h) + edges(h, g));
      const double d = scale * 0.5 * (dyads(g, h) + dyads(h, g));
      const double denom = d + a + b - 2.0;
      const double v = denom > 1e-12 ? (e + a - 1.0) / denom : a / (a + b);
      out.theta(g, h) = out.theta(h, g) = std::clamp(v, kThetaClamp, 1.0 - kThetaClamp);
    }
  }
  return out;
}

int sbm_param_count(int groups) {
  if (groups < 1) throw std::invalid_argument("sbm_param_count: G must be >= 1");
  return (groups - 1) + groups * (groups + 1) / 2;
}

StochasticBlockmodel::StochasticBlockmodel(const Matrix& adj) : adj_(adj) {
  validate_adjacency(adj_);
}

StochasticBlockmodel::StochasticBlockmodel(const Matrix& adj, SbmPriors priors)
    : adj_(adj), priors_(std::move(priors)) {
  validate_adjacency(adj_);
}

SbmPriors StochasticBlockmodel::priors_for(Index groups) const {
  if (priors_) return *priors_;
  return SbmPriors::uniform(static_cast<int>(groups));
}

ModelParams StochasticBlockmodel::m_step(const Responsibilities& z, FitFlags&) const {
  return sbm_m_step(adj_, z, priors_for(z.groups()));
}

EStepResult StochasticBlockmodel::e_step(const ModelParams& params, const Responsibilities& current,
                                         double nu, FitFlags& flags) const {
  const auto& p = std::get<SbmParams>(params);
  VeStepOptions options;
  options.nu = nu;
  VeStepResult ve = sbm_ve_step(adj_, p, current, options);
  if (!ve.converged) flags.inner_nonconverged = true;
  const double bound = sbm_elbo(adj_, ve.resp, p, priors_for(current.groups()));
  return {std::move(ve.resp), bound};
}

double StochasticBlockmodel::complete_data_loglik(const Responsibilities& hard_z,
                                                  const ModelParams& params) const {
  const auto& p = std::get<SbmParams>(params);
  check_shapes(adj_, hard_z, p.theta);
  const Matrix theta = clamped(p.theta);
  const std::vector<int> labels = hard_z.hard_labels();
  double total = 0.0;
  for (Index i = 0; i < adj_.rows(); ++i) {
    total += std::log(p.tau.tau(labels[static_cast<std::size_t>(i)]));
    for (Index j = i + 1; j < adj_.rows(); ++j) {
      const double t = theta(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
      total += adj_(i, j) == 1.0 ? std::log(t) : std::log1p(-t);
    }
  }
  return total;
}

int StochasticBlockmodel::param_count(int groups) const { return sbm_param_count(groups); }

}  // namespace embia

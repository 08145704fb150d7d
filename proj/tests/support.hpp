#pragma once

// Synthetic data generators and small helpers shared by the unit and
// acceptance tests.

#include "embia/core.hpp"
#include "embia/init.hpp"
#include "embia/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace testing {

using embia::Index;
using embia::Matrix;
using embia::Responsibilities;
using embia::Rng;
using embia::Vector;

inline Matrix gaussian_blobs(Index n, Index m, int groups, Rng& rng, double spread = 4.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(groups, m);
  for (Index g = 0; g < groups; ++g) {
    for (Index j = 0; j < m; ++j) centers(g, j) = spread * normal(rng);
  }
  Matrix x(n, m);
  for (Index i = 0; i < n; ++i) {
    const Index g = i % groups;
    for (Index j = 0; j < m; ++j) x(i, j) = centers(g, j) + normal(rng);
  }
  return x;
}

inline Matrix binary_data(Index n, Index items, int groups, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix profile(groups, items);
  for (Index g = 0; g < groups; ++g) {
    for (Index j = 0; j < items; ++j) profile(g, j) = 0.1 + 0.8 * u(rng);
  }
  Matrix x(n, items);
  for (Index i = 0; i < n; ++i) {
    const Index g = i % groups;
    for (Index j = 0; j < items; ++j) x(i, j) = u(rng) < profile(g, j) ? 1.0 : 0.0;
  }
  return x;
}

inline Matrix random_graph(Index n, double p, Rng& rng) {
  std::bernoulli_distribution edge(p);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (edge(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

// Planted partition: nodes i % groups share a block.
inline Matrix planted_graph(Index n, int groups, double p_in, double p_out, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double p = (i % groups == j % groups) ? p_in : p_out;
      if (u(rng) < p) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

inline Responsibilities random_soft_z(Index n, int groups, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix z(n, groups);
  for (Index i = 0; i < n; ++i) {
    for (Index g = 0; g < groups; ++g) z(i, g) = u(rng);
    z.row(i) /= z.row(i).sum();
  }
  return Responsibilities(std::move(z));
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline bool nondecreasing(const std::vector<double>& trace, double slack = 1e-8) {
  for (std::size_t t = 1; t < trace.size(); ++t) {
    if (trace[t] < trace[t - 1] - slack) return false;
  }
  return true;
}

inline std::vector<int> identity_permutation(int groups) {
  std::vector<int> p(static_cast<std::size_t>(groups));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// log sum over all G^n labelings of p(adj, labels | tau, theta), plus the
// log prior density, which is the quantity the bound sits under.
inline double enumerated_log_evidence(const Matrix& adj, const embia::SbmParams& p, const embia::SbmPriors& priors) {
  const Index n = adj.rows();
  const int G = static_cast<int>(p.tau.groups());
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> terms;
  while (true) {
    double v = 0.0;
    for (Index i = 0; i < n; ++i) {
      const int gi = labels[static_cast<std::size_t>(i)];
      v += std::log(p.tau.tau(gi));
      for (Index j = i + 1; j < n; ++j) {
        const double t = p.theta(gi, labels[static_cast<std::size_t>(j)]);
        v += adj(i, j) == 1.0 ? std::log(t) : std::log(1.0 - t);
      }
    }
    terms.push_back(v);
    std::size_t k = 0;
    while (k < labels.size() && ++labels[k] == G) labels[k++] = 0;
    if (k == labels.size()) break;
  }
  double prior = std::lgamma(priors.dirichlet.sum());
  for (int g = 0; g < G; ++g) {
    prior += -std::lgamma(priors.dirichlet(g)) + (priors.dirichlet(g) - 1.0) * std::log(p.tau.tau(g));
    for (int h = g; h < G; ++h) {
      const double t = p.theta(g, h);
      prior += std::lgamma(priors.beta_a + priors.beta_b) - std::lgamma(priors.beta_a) - std::lgamma(priors.beta_b) +
               (priors.beta_a - 1.0) * std::log(t) + (priors.beta_b - 1.0) * std::log(1.0 - t);
    }
  }
  return embia::log_sum_exp(Eigen::Map<const Vector>(terms.data(), static_cast<Index>(terms.size()))) + prior;
}

}  // namespace testing

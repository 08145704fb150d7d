#include "embia/init.hpp"

#include "embia/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace embia {

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

Responsibilities random_z(Index n, int groups, Rng& rng) {
  if (groups < 1 || n < groups) throw std::invalid_argument("random_z: need n >= G >= 1");
  std::uniform_int_distribution<int> pick(0, groups - 1);
  Matrix z = Matrix::Zero(n, groups);
  for (Index i = 0; i < n; ++i) z(i, pick(rng)) = 1.0;
  return Responsibilities(std::move(z));
}

// ---------------------------------------------------------------------------
// Ward agglomeration

std::vector<int> ward_labels(const Matrix& data, int groups) {
  const Index n = data.rows();
  if (groups < 1 || n < groups) throw std::invalid_argument("hclust: need n >= G >= 1");

  // Clusters are identified by their lowest member index; `parent` links
  // absorbed clusters to the one they merged into.
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  std::vector<bool> active(static_cast<std::size_t>(n), true);
  Vector size = Vector::Ones(n);
  Matrix centroid = data;

  // Ward merge cost: increase in within-cluster sum of squares.
  auto cost = [&](Index a, Index b) {
    return size(a) * size(b) / (size(a) + size(b)) * (centroid.row(a) - centroid.row(b)).squaredNorm();
  };
  Matrix costs = Matrix::Constant(n, n, std::numeric_limits<double>::infinity());
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) costs(a, b) = cost(a, b);
  }

  for (Index remaining = n; remaining > groups; --remaining) {
    Index best_a = -1;
    Index best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < n; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (Index b = a + 1; b < n; ++b) {
        if (active[static_cast<std::size_t>(b)] && costs(a, b) < best) {
          best = costs(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }
    centroid.row(best_a) =
        (size(best_a) * centroid.row(best_a) + size(best_b) * centroid.row(best_b)) /
        (size(best_a) + size(best_b));
    size(best_a) += size(best_b);
    active[static_cast<std::size_t>(best_b)] = false;
    parent[static_cast<std::size_t>(best_b)] = best_a;
    for (Index c = 0; c < n; ++c) {
      if (c == best_a || !active[static_cast<std::size_t>(c)]) continue;
      const double v = cost(std::min(c, best_a), std::max(c, best_a));
      costs(std::min(c, best_a), std::max(c, best_a)) = v;
    }
  }

  auto root = [&](Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
    return i;
  };
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<int> label_of(static_cast<std::size_t>(n), -1);
  int next_label = 0;
  for (Index i = 0; i < n; ++i) {
    int& l = label_of[static_cast<std::size_t>(root(i))];
    if (l < 0) l = next_label++;
    labels[static_cast<std::size_t>(i)] = l;
  }
  return labels;
}

Responsibilities hclust_init(const Matrix& data, int groups) {
  return Responsibilities::from_labels(ward_labels(data, groups), groups);
}

// ---------------------------------------------------------------------------
// Burn-in pyramid

void BurninConfig::validate() const {
  if (initial_candidates < 1) throw std::invalid_argument("burn-in: initial_candidates must be >= 1");
  if (iterations_per_stage < 1) throw std::invalid_argument("burn-in: iterations_per_stage must be >= 1");
  if (!(retain_fraction > 0.0 && retain_fraction < 1.0)) {
    throw std::invalid_argument("burn-in: retain_fraction must lie in (0, 1)");
  }
}

Responsibilities burnin_pyramid(const MixtureFamily& family, int groups, const BurninConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  std::vector<Responsibilities> candidates;
  candidates.reserve(static_cast<std::size_t>(cfg.initial_candidates));
  for (int c = 0; c < cfg.initial_candidates; ++c) {
    candidates.push_back(random_z(family.observations(), groups, rng));
  }
  return burnin_pyramid(family, std::move(candidates), cfg);
}

Responsibilities burnin_pyramid(const MixtureFamily& family, std::vector<Responsibilities> candidates,
                                const BurninConfig& cfg) {
  cfg.validate();
  if (candidates.empty()) throw std::invalid_argument("burn-in: no candidates");
  const ConvergenceConfig stage{1e-12, cfg.iterations_per_stage};

  struct Survivor {
    std::size_t index;
    Responsibilities z;
    double objective;
  };
  std::vector<Survivor> pool;
  for (std::size_t c = 0; c < candidates.size(); ++c) pool.push_back({c, std::move(candidates[c]), kNegInf});

  for (;;) {
    std::vector<Survivor> next;
    for (auto& s : pool) {
      try {
        FitResult fit = em_fit(family, s.z, stage);
        next.push_back({s.index, std::move(fit.responsibilities), fit.objective});
      } catch (const std::exception&) {
        // candidate eliminated
      }
    }
    if (next.empty()) throw std::runtime_error("burn-in: every candidate failed");
    if (next.size() == 1) return std::move(next.front().z);

    std::stable_sort(next.begin(), next.end(), [](const Survivor& a, const Survivor& b) {
      if (a.objective != b.objective) return a.objective > b.objective;
      return a.index < b.index;
    });
    const std::size_t k = next.size();
    std::size_t keep = static_cast<std::size_t>(std::ceil(cfg.retain_fraction * static_cast<double>(k)));
    keep = std::clamp<std::size_t>(keep, 1, k - 1);
    next.resize(keep);
    if (keep == 1) return std::move(next.front().z);
    pool = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Deterministic annealing

void AnnealSchedule::validate() const {
  if (!(nu0 > 0.0 && nu0 <= 1.0)) throw std::invalid_argument("anneal: nu0 must lie in (0, 1]");
  if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("anneal: rate must lie in (0, 1)");
  if (stage < 1) throw std::invalid_argument("anneal: stage must be >= 1");
}

Responsibilities anneal_e_step(const MixtureFamily& family, const ModelParams& params,
                               const Responsibilities& current, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("anneal_e_step: nu must be > 0");
  FitFlags flags;
  return family.e_step(params, current, nu, flags).resp;
}

FitResult anneal_fit(const MixtureFamily& family, const Responsibilities& z0,
                     const AnnealSchedule& schedule, const ConvergenceConfig& cfg) {
  schedule.validate();
  cfg.validate();
  if (z0.n() != family.observations()) throw std::invalid_argument("anneal_fit: z0 row count mismatch");

  constexpr double kPinGap = 1e-4;
  auto pin = [](double nu) { return 1.0 - nu < kPinGap ? 1.0 : nu; };

  FitResult result;
  double nu = pin(schedule.nu0);
  ModelParams params = family.m_step(z0, result.flags);
  EStepResult e = family.e_step(params, z0, nu, result.flags);
  if (nu == 1.0) result.trace.push_back(e.objective);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    ModelParams next = family.m_step(e.resp, result.flags);
    if (nu < 1.0 && it % schedule.stage == 0) nu = pin(schedule.next(nu));
    EStepResult e_next = family.e_step(next, e.resp, nu, result.flags);
    params = std::move(next);
    const double l_prev = e.objective;
    e = std::move(e_next);
    result.iterations = it;
    if (nu < 1.0) continue;
    const bool first = result.trace.empty();
    result.trace.push_back(e.objective);
    if (!first && converged(l_prev, e.objective, cfg.epsilon)) {
      result.converged = true;
      break;
    }
  }

  if (result.trace.empty()) result.trace.push_back(e.objective);
  result.objective = e.objective;
  result.responsibilities = std::move(e.resp);
  result.params = std::move(params);
  family.finalize_flags(result.params, result.flags);
  return result;
}

// ---------------------------------------------------------------------------
// Label alignment

namespace {

// Minimum-cost assignment (Hungarian algorithm, potentials form). Returns
// assignment[row] = column.
std::vector<int> hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace

std::vector<int> best_permutation(const Responsibilities& reference, const Responsibilities& candidate) {
  if (reference.n() != candidate.n() || reference.groups() != candidate.groups()) {
    throw std::invalid_argument("align_labels: shape mismatch");
  }
  const Matrix similarity = reference.values().transpose() * candidate.values();
  const int G = static_cast<int>(reference.groups());
  std::vector<int> perm(static_cast<std::size_t>(G));
  std::iota(perm.begin(), perm.end(), 0);
  if (G > 8) return hungarian(-similarity);

  std::vector<int> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double score = 0.0;
    for (int g = 0; g < G; ++g) score += similarity(g, perm[static_cast<std::size_t>(g)]);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Responsibilities permute_columns(const Responsibilities& z, std::span<const int> perm) {
  if (static_cast<Index>(perm.size()) != z.groups()) throw std::invalid_argument("permute_columns: bad length");
  Matrix out(z.n(), z.groups());
  for (Index g = 0; g < z.groups(); ++g) out.col(g) = z.values().col(perm[static_cast<std::size_t>(g)]);
  return Responsibilities(std::move(out));
}

Responsibilities align_labels(const Responsibilities& reference, const Responsibilities& candidate) {
  const std::vector<int> perm = best_permutation(reference, candidate);
  return permute_columns(candidate, perm);
}

// ---------------------------------------------------------------------------
// Bayesian initialization averaging

double bic_star(double loglik, int params, Index n) {
  if (n < 1 || params < 0) throw std::invalid_argument("bic_star: need n >= 1 and p >= 0");
  return -2.0 * loglik + static_cast<double>(params) * std::log(static_cast<double>(n));
}

std::vector<double> bia_weights(std::span<const double> bic_values) {
  if (bic_values.empty()) throw std::invalid_argument("bia_weights: empty input");
  const double lowest = *std::min_element(bic_values.begin(), bic_values.end());
  std::vector<double> w(bic_values.size());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::exp(-0.5 * (bic_values[j] - lowest));
    total += w[j];
  }
  for (double& x : w) x /= total;
  return w;
}

Responsibilities bia_average(std::span<const Responsibilities> z_list, std::span<const double> weights) {
  if (z_list.empty() || z_list.size() != weights.size()) {
    throw std::invalid_argument("bia_average: need one weight per candidate");
  }
  const Index n = z_list.front().n();
  const Index G = z_list.front().groups();
  Matrix out = Matrix::Zero(n, G);
  for (std::size_t j = 0; j < z_list.size(); ++j) {
    if (z_list[j].n() != n || z_list[j].groups() != G) {
      throw std::invalid_argument("bia_average: candidate " + std::to_string(j) + " has a different shape");
    }
    out += weights[j] * z_list[j].values();
  }
  // Convexity keeps rows stochastic up to rounding; renormalize the residue.
  for (Index i = 0; i < n; ++i) out.row(i) /= out.row(i).sum();
  return Responsibilities(std::move(out.cwiseMin(1.0)));
}

void BiaConfig::validate() const {
  if (starts < 2) throw std::invalid_argument("bia: need at least 2 starts");
  if (pre_iterations < 1) throw std::invalid_argument("bia: pre_iterations must be >= 1");
}

FitResult bia_from_starts(const MixtureFamily& family, std::span<const Responsibilities> starts,
                          int pre_iterations, const ConvergenceConfig& convergence, int workers,
                          BiaDiagnostics* diagnostics) {
  if (starts.size() < 2) throw std::invalid_argument("bia: need at least 2 starts");
  if (pre_iterations < 1) throw std::invalid_argument("bia: pre_iterations must be >= 1");
  convergence.validate();

  const ConvergenceConfig preliminary{convergence.epsilon, pre_iterations};
  std::vector<std::optional<FitResult>> runs(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t j) {
    try {
      runs[j] = em_fit(family, starts[j], preliminary);
    } catch (const std::exception&) {
      runs[j].reset();
    }
  });

  std::vector<std::size_t> alive;
  for (std::size_t j = 0; j < runs.size(); ++j) {
    if (runs[j] && std::isfinite(runs[j]->objective)) alive.push_back(j);
  }
  if (alive.size() < 2) {
    throw std::runtime_error("bia: only " + std::to_string(alive.size()) + " of " +
                             std::to_string(starts.size()) + " candidates survived the preliminary runs");
  }

  std::size_t reference = alive.front();
  for (std::size_t j : alive) {
    if (runs[j]->objective > runs[reference]->objective) reference = j;
  }
  const Responsibilities& ref_z = runs[reference]->responsibilities;
  const int groups = static_cast<int>(ref_z.groups());
  const int p = family.param_count(groups);

  std::vector<Responsibilities> aligned;
  std::vector<double> bics;
  aligned.reserve(alive.size());
  for (std::size_t j : alive) {
    aligned.push_back(align_labels(ref_z, runs[j]->responsibilities));
    bics.push_back(bic_star(runs[j]->objective, p, family.observations()));
  }
  const std::vector<double> weights = bia_weights(bics);
  const Responsibilities z_star = bia_average(aligned, weights);

  if (diagnostics) {
    diagnostics->candidate_objectives.clear();
    for (const auto& r : runs) diagnostics->candidate_objectives.push_back(r ? r->objective : kNegInf);
    diagnostics->weights = weights;
    diagnostics->reference = static_cast<int>(reference);
    diagnostics->dropped = static_cast<int>(starts.size() - alive.size());
  }
  return em_fit(family, z_star, convergence);
}

FitResult bia_init(const MixtureFamily& family, int groups, const BiaConfig& cfg,
                   const ConvergenceConfig& convergence, BiaDiagnostics* diagnostics) {
  cfg.validate();
  std::vector<Responsibilities> starts;
  starts.reserve(static_cast<std::size_t>(cfg.starts));
  for (int j = 0; j < cfg.starts; ++j) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(j));
    starts.push_back(random_z(family.observations(), groups, rng));
  }
  return bia_from_starts(family, starts, cfg.pre_iterations, convergence, cfg.workers, diagnostics);
}

}  // namespace embia

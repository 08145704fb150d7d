#pragma once

#include "embia/core.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace embia {

using Rng = std::mt19937_64;

// Independent generator for stream (seed, a, b). Streams depend only on the
// triple, never on the order in which they are requested.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

// Hard allocation with each row drawn from Multinomial(1, 1/G, ..., 1/G).
Responsibilities random_z(Index n, int groups, Rng& rng);

// Agglomerative Ward clustering on Euclidean distance, cut at `groups`
// clusters. Labels are numbered by first appearance in row order. Equal
// merge costs go to the pair with the lowest indices.
std::vector<int> ward_labels(const Matrix& data, int groups);
Responsibilities hclust_init(const Matrix& data, int groups);

struct BurninConfig {
  int initial_candidates = 16;
  int iterations_per_stage = 5;
  double retain_fraction = 0.5;

  void validate() const;
};

// Pyramid burn-in: every surviving candidate runs `iterations_per_stage` EM
// cycles, candidates are ranked by objective (ties by index) and the top
// fraction survives, until one remains. Candidates whose M-step fails are
// eliminated. Returns the survivor's current responsibilities.
Responsibilities burnin_pyramid(const MixtureFamily& family, int groups, const BurninConfig& cfg,
                                Rng& rng);
// Same, starting from caller-supplied candidates.
Responsibilities burnin_pyramid(const MixtureFamily& family, std::vector<Responsibilities> candidates,
                                const BurninConfig& cfg);

struct AnnealSchedule {
  double nu0 = 0.05;
  double rate = 0.9;
  int stage = 10;

  void validate() const;
  // nu after one update: rate * nu + (1 - rate) * 1.
  double next(double nu) const { return rate * nu + (1.0 - rate); }
};

// Tempered E-step with responsibilities proportional to
// [tau_g P(x_i | theta_g)]^nu.
Responsibilities anneal_e_step(const MixtureFamily& family, const ModelParams& params,
                               const Responsibilities& current, double nu);

// Deterministic-annealing EM. nu is updated every `stage` cycles; once
// 1 - nu < 1e-4 it is pinned to 1 and the usual stopping rule applies.
// The trace holds the untempered objective from the first cycle at nu = 1
// onward, so it is nondecreasing like an ordinary fit.
FitResult anneal_fit(const MixtureFamily& family, const Responsibilities& z0,
                     const AnnealSchedule& schedule, const ConvergenceConfig& cfg);

// Column permutation `perm` maximizing sum_g (ref^T cand)(g, perm[g]).
// Exhaustive for G <= 8 (lexicographically smallest among ties), Hungarian
// algorithm beyond that.
std::vector<int> best_permutation(const Responsibilities& reference, const Responsibilities& candidate);
// Candidate with columns reordered so column g is candidate column perm[g].
Responsibilities align_labels(const Responsibilities& reference, const Responsibilities& candidate);
Responsibilities permute_columns(const Responsibilities& z, std::span<const int> perm);

double bic_star(double loglik, int params, Index n);

// exp(-0.5 * (b_j - min b)) normalized to sum to one.
std::vector<double> bia_weights(std::span<const double> bic_values);

// sum_j w_j Z_j for already-aligned candidates.
Responsibilities bia_average(std::span<const Responsibilities> z_list, std::span<const double> weights);

struct BiaConfig {
  int starts = 30;
  int pre_iterations = 10;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct BiaDiagnostics {
  std::vector<double> candidate_objectives;  // after the preliminary cycles
  std::vector<double> weights;               // survivors only, in index order
  int reference = -1;                        // index of the alignment reference
  int dropped = 0;
};

// J random starts, T preliminary cycles each, alignment to the best
// candidate, BIC*-weighted averaging and a full EM run from the average.
// Throws std::runtime_error if fewer than two candidates survive.
FitResult bia_init(const MixtureFamily& family, int groups, const BiaConfig& cfg,
                   const ConvergenceConfig& convergence, BiaDiagnostics* diagnostics = nullptr);

// BIA from caller-supplied starting matrices (the candidate pool).
FitResult bia_from_starts(const MixtureFamily& family, std::span<const Responsibilities> starts,
                          int pre_iterations, const ConvergenceConfig& convergence, int workers = 1,
                          BiaDiagnostics* diagnostics = nullptr);

}  // namespace embia

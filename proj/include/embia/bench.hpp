#pragma once

#include "embia/core.hpp"
#include "embia/data.hpp"
#include "embia/init.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace embia {

enum class ModelKind { gmm, lca, sbm };
enum class InitKind { random, hclust, burnin, anneal, bia };

std::string_view to_string(ModelKind kind);
std::string_view to_string(InitKind kind);
ModelKind model_kind_from_string(std::string_view s);
InitKind init_kind_from_string(std::string_view s);

// Default stopping tolerance per family: 1e-5 for Gaussian mixtures and
// blockmodels, 1e-9 for latent class analysis.
ConvergenceConfig default_convergence(ModelKind model);

struct ExperimentSpec {
  ModelKind model = ModelKind::gmm;
  CovarianceStructure structure = CovarianceStructure::VVV;
  int groups = 2;
  InitKind init = InitKind::random;
  int starts = 30;          // BIA candidate count
  int pre_iterations = 10;  // BIA preliminary cycles
  AnnealSchedule anneal;
  BurninConfig burnin;
  int repetitions = 1;
  std::uint64_t seed = 1;
  ConvergenceConfig convergence;
  int workers = 1;

  // Throws std::invalid_argument when the experiment cannot run on `dataset`.
  void validate(const Dataset& dataset) const;
};

std::unique_ptr<MixtureFamily> make_family(const ExperimentSpec& spec, const Dataset& dataset);

// One initialization plus the fit it leads to, for repetition `repetition`.
// Random draws come from the stream (spec.seed, repetition).
FitResult run_single(const ExperimentSpec& spec, const Dataset& dataset, const MixtureFamily& family,
                     int repetition);

struct RunRecord {
  int repetition = 0;
  std::optional<FitResult> fit;  // empty when the run failed
  std::string error;
  double seconds = 0.0;

  bool failed() const { return !fit.has_value(); }
  bool spurious() const { return fit && fit->flags.spurious_candidate; }
};

// Objectives rounded to the nearest integer, halves rounded up.
long long objective_bin(double value);

// Attain tolerance: a run reaches the best mode if within this of it.
inline constexpr double kAttainTolerance = 0.5;

struct RestartDistribution {
  std::vector<double> values;           // successful runs, ascending
  std::map<long long, int> bins;        // successful runs per integer bin
  int failures = 0;                     // bins + failures = repetitions
  std::optional<double> best;           // best non-spurious objective
  double attain_rate = 0.0;             // runs within kAttainTolerance of best / repetitions
  std::vector<RunRecord> runs;          // in repetition order

  int count_in_bin(long long bin) const;
  int attained() const;
};

RestartDistribution tally(std::vector<RunRecord> runs);

// Independent repetitions, optionally on several workers. The result does
// not depend on the worker count.
RestartDistribution run_experiment(const ExperimentSpec& spec, const Dataset& dataset);

// True for fits where two components coincide or one has vanished: the
// symmetric stationary points (saddles) of the likelihood.
bool degenerate_solution(const ModelParams& params);

struct SweepAxis {
  std::string name;  // nu0, rate, stage, starts or pre-iters
  std::vector<double> values;
};

struct SweepGrid {
  ExperimentSpec base;
  SweepAxis rows;
  SweepAxis cols;
};

struct SweepResult {
  SweepGrid grid;
  Matrix objectives;  // best non-spurious objective per cell (NaN if none)
  std::vector<std::vector<bool>> degenerate;
  std::vector<std::vector<RestartDistribution>> cells;
};

// Every cell reuses the base seed so cells see matching random starts.
SweepResult sweep(const SweepGrid& grid, const Dataset& dataset);

struct ComparisonRecord {
  int changes = 0;
  std::vector<int> changed_rows;  // 0-based
  std::vector<int> labels_a;
  std::vector<int> labels_b;      // after alignment to a
  std::vector<int> permutation;   // b column used for each a column
  std::optional<double> wss_a;
  std::optional<double> wss_b;
  double objective_a = 0.0;
  double objective_b = 0.0;
};

ComparisonRecord compare_solutions(const FitResult& fit_a, const FitResult& fit_b, const Dataset& dataset);

}  // namespace embia

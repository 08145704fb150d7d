#include "embia/bench.hpp"

#include "embia/gmm.hpp"
#include "embia/lca.hpp"
#include "embia/parallel.hpp"
#include "embia/sbm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace embia {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gmm: return "gmm";
    case ModelKind::lca: return "lca";
    case ModelKind::sbm: return "sbm";
  }
  return "?";
}

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::random: return "random";
    case InitKind::hclust: return "hclust";
    case InitKind::burnin: return "burnin";
    case InitKind::anneal: return "anneal";
    case InitKind::bia: return "bia";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "gmm") return ModelKind::gmm;
  if (s == "lca") return ModelKind::lca;
  if (s == "sbm") return ModelKind::sbm;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

InitKind init_kind_from_string(std::string_view s) {
  if (s == "random") return InitKind::random;
  if (s == "hclust") return InitKind::hclust;
  if (s == "burnin") return InitKind::burnin;
  if (s == "anneal") return InitKind::anneal;
  if (s == "bia") return InitKind::bia;
  throw std::invalid_argument("unknown init method '" + std::string(s) + "'");
}

ConvergenceConfig default_convergence(ModelKind model) {
  switch (model) {
    case ModelKind::gmm: return ConvergenceConfig::gaussian();
    case ModelKind::lca: return ConvergenceConfig::latent_class();
    case ModelKind::sbm: return ConvergenceConfig::blockmodel();
  }
  return {};
}

void ExperimentSpec::validate(const Dataset& dataset) const {
  const DataKind expected = model == ModelKind::gmm   ? DataKind::continuous
                            : model == ModelKind::lca ? DataKind::binary
                                                      : DataKind::network;
  if (dataset.kind != expected) {
    throw std::invalid_argument("model " + std::string(to_string(model)) + " needs " +
                                std::string(to_string(expected)) + " data, got " +
                                std::string(to_string(dataset.kind)));
  }
  if (groups < 1 || groups > dataset.n()) throw std::invalid_argument("groups must lie in 1..n");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  convergence.validate();
  switch (init) {
    case InitKind::hclust:
      if (model != ModelKind::gmm) throw std::invalid_argument("hierarchical starts need continuous data");
      break;
    case InitKind::bia:
      BiaConfig{starts, pre_iterations, seed, workers}.validate();
      break;
    case InitKind::anneal: anneal.validate(); break;
    case InitKind::burnin: burnin.validate(); break;
    case InitKind::random: break;
  }
}

std::unique_ptr<MixtureFamily> make_family(const ExperimentSpec& spec, const Dataset& dataset) {
  switch (spec.model) {
    case ModelKind::gmm: return std::make_unique<GaussianMixture>(dataset.values, spec.structure);
    case ModelKind::lca: return std::make_unique<LatentClassModel>(dataset.values);
    case ModelKind::sbm: return std::make_unique<StochasticBlockmodel>(dataset.values);
  }
  throw std::invalid_argument("unknown model");
}

FitResult run_single(const ExperimentSpec& spec, const Dataset& dataset, const MixtureFamily& family,
                     int repetition) {
  const auto rep = static_cast<std::uint64_t>(repetition);
  Rng rng = make_stream(spec.seed, rep);
  switch (spec.init) {
    case InitKind::random:
      return em_fit(family, random_z(dataset.n(), spec.groups, rng), spec.convergence);
    case InitKind::hclust:
      return em_fit(family, hclust_init(dataset.values, spec.groups), spec.convergence);
    case InitKind::burnin:
      return em_fit(family, burnin_pyramid(family, spec.groups, spec.burnin, rng), spec.convergence);
    case InitKind::anneal:
      return anneal_fit(family, random_z(dataset.n(), spec.groups, rng), spec.anneal, spec.convergence);
    case InitKind::bia: {
      // Candidate streams hang off a per-repetition seed.
      const BiaConfig cfg{spec.starts, spec.pre_iterations, rng(), 1};
      return bia_init(family, spec.groups, cfg, spec.convergence);
    }
  }
  throw std::invalid_argument("unknown init method");
}

long long objective_bin(double value) { return static_cast<long long>(std::floor(value + 0.5)); }

int RestartDistribution::count_in_bin(long long bin) const {
  const auto it = bins.find(bin);
  return it == bins.end() ? 0 : it->second;
}

int RestartDistribution::attained() const {
  if (!best) return 0;
  int count = 0;
  for (const auto& r : runs) {
    if (r.fit && !r.spurious() && r.fit->objective >= *best - kAttainTolerance) ++count;
  }
  return count;
}

RestartDistribution tally(std::vector<RunRecord> runs) {
  RestartDistribution d;
  std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) { return a.repetition < b.repetition; });
  for (const auto& r : runs) {
    if (r.failed()) {
      ++d.failures;
      continue;
    }
    d.values.push_back(r.fit->objective);
    ++d.bins[objective_bin(r.fit->objective)];
    if (!r.spurious() && std::isfinite(r.fit->objective)) {
      d.best = d.best ? std::max(*d.best, r.fit->objective) : r.fit->objective;
    }
  }
  std::sort(d.values.begin(), d.values.end());
  d.runs = std::move(runs);
  if (!d.runs.empty()) d.attain_rate = static_cast<double>(d.attained()) / static_cast<double>(d.runs.size());
  return d;
}

RestartDistribution run_experiment(const ExperimentSpec& spec, const Dataset& dataset) {
  spec.validate(dataset);
  const auto family = make_family(spec, dataset);
  std::vector<RunRecord> runs(static_cast<std::size_t>(spec.repetitions));
  parallel_for(runs.size(), spec.workers, [&](std::size_t r) {
    RunRecord& record = runs[r];
    record.repetition = static_cast<int>(r);
    const auto start = std::chrono::steady_clock::now();
    try {
      record.fit = run_single(spec, dataset, *family, static_cast<int>(r));
    } catch (const std::exception& e) {
      record.error = e.what();
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return tally(std::move(runs));
}

bool degenerate_solution(const ModelParams& params) {
  constexpr double kCoincide = 1e-3;
  constexpr double kVanished = 1e-6;
  const Vector& tau = mixing_weights(params).tau;
  if ((tau.array() < kVanished).any()) return true;
  const Index G = tau.size();
  for (Index g = 0; g < G; ++g) {
    for (Index h = g + 1; h < G; ++h) {
      double gap = 0.0;
      if (const auto* p = std::get_if<GaussianParams>(&params)) {
        const auto gi = static_cast<std::size_t>(g);
        const auto hi = static_cast<std::size_t>(h);
        const double scale = 1.0 + p->means[gi].cwiseAbs().maxCoeff();
        gap = std::max((p->means[gi] - p->means[hi]).cwiseAbs().maxCoeff(),
                       (p->covariances[gi] - p->covariances[hi]).cwiseAbs().maxCoeff()) /
              scale;
      } else if (const auto* q = std::get_if<LcaParams>(&params)) {
        gap = (q->theta.row(g) - q->theta.row(h)).cwiseAbs().maxCoeff();
      } else {
        const auto& s = std::get<SbmParams>(params);
        // Blocks g and h are interchangeable only if their rows agree once
        // the g/h columns are swapped as well.
        Vector rg = s.theta.row(g).transpose();
        Vector rh = s.theta.row(h).transpose();
        std::swap(rh(g), rh(h));
        gap = (rg - rh).cwiseAbs().maxCoeff();
      }
      if (gap < kCoincide) return true;
    }
  }
  return false;
}

namespace {

void apply_axis(ExperimentSpec& spec, const std::string& name, double value) {
  if (name == "nu0") spec.anneal.nu0 = value;
  else if (name == "rate") spec.anneal.rate = value;
  else if (name == "stage") spec.anneal.stage = static_cast<int>(value);
  else if (name == "starts") spec.starts = static_cast<int>(value);
  else if (name == "pre-iters") spec.pre_iterations = static_cast<int>(value);
  else throw std::invalid_argument("unknown sweep parameter '" + name + "'");
}

}  // namespace

SweepResult sweep(const SweepGrid& grid, const Dataset& dataset) {
  if (grid.rows.values.empty() || grid.cols.values.empty()) throw std::invalid_argument("sweep: empty grid");
  SweepResult out;
  out.grid = grid;
  const auto R = static_cast<Index>(grid.rows.values.size());
  const auto C = static_cast<Index>(grid.cols.values.size());
  out.objectives = Matrix::Constant(R, C, std::numeric_limits<double>::quiet_NaN());
  out.degenerate.assign(static_cast<std::size_t>(R), std::vector<bool>(static_cast<std::size_t>(C), false));
  out.cells.assign(static_cast<std::size_t>(R), std::vector<RestartDistribution>(static_cast<std::size_t>(C)));
  for (Index r = 0; r < R; ++r) {
    for (Index c = 0; c < C; ++c) {
      ExperimentSpec spec = grid.base;
      apply_axis(spec, grid.rows.name, grid.rows.values[static_cast<std::size_t>(r)]);
      apply_axis(spec, grid.cols.name, grid.cols.values[static_cast<std::size_t>(c)]);
      RestartDistribution cell = run_experiment(spec, dataset);
      if (cell.best) out.objectives(r, c) = *cell.best;
      bool degenerate = false;
      for (const auto& run : cell.runs) {
        if (run.fit && degenerate_solution(run.fit->params)) degenerate = true;
      }
      out.degenerate[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = degenerate;
      out.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = std::move(cell);
    }
  }
  return out;
}

ComparisonRecord compare_solutions(const FitResult& fit_a, const FitResult& fit_b, const Dataset& dataset) {
  const Responsibilities& za = fit_a.responsibilities;
  if (za.n() != dataset.n() || fit_b.responsibilities.n() != dataset.n()) {
    throw std::invalid_argument("compare: fits do not match the dataset");
  }
  ComparisonRecord out;
  out.permutation = best_permutation(za, fit_b.responsibilities);
  const Responsibilities zb = permute_columns(fit_b.responsibilities, out.permutation);
  out.labels_a = za.hard_labels();
  out.labels_b = zb.hard_labels();
  for (std::size_t i = 0; i < out.labels_a.size(); ++i) {
    if (out.labels_a[i] != out.labels_b[i]) out.changed_rows.push_back(static_cast<int>(i));
  }
  out.changes = static_cast<int>(out.changed_rows.size());
  if (dataset.kind == DataKind::continuous) {
    out.wss_a = within_cluster_ss(dataset.values, out.labels_a);
    out.wss_b = within_cluster_ss(dataset.values, out.labels_b);
  }
  out.objective_a = fit_a.objective;
  out.objective_b = fit_b.objective;
  return out;
}

}  // namespace embia

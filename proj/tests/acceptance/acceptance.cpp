// Acceptance suite. Each criterion prints one PASS / FAIL / SKIPPED line
// (plus indented detail lines) and maps to an exit code: 0 pass, 1 fail,
// 77 skipped because a fixture is missing.
//
//   embia_acceptance [karate|carcinoma|alzheimer|ais|properties]...
//
// With no arguments every criterion runs. Fixtures are looked up in
// $EMBIA_DATA_DIR (default tests/fixtures).

#include "embia/bench.hpp"
#include "embia/gmm.hpp"
#include "embia/lca.hpp"
#include "embia/report.hpp"
#include "embia/sbm.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace embia;

namespace {

enum class Status { pass, fail, skipped };

struct Outcome {
  Status status = Status::pass;
  std::vector<std::string> details;

  // Records one sub-check; any failing sub-check fails the criterion.
  void check(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    if (!ok) status = Status::fail;
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(double v, int precision = 2) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

std::filesystem::path data_dir() {
  const char* dir = std::getenv("EMBIA_DATA_DIR");
  return dir ? std::filesystem::path(dir) : std::filesystem::path("tests/fixtures");
}

std::optional<std::filesystem::path> find_fixture(const std::string& name) {
  const auto p = data_dir() / name;
  if (std::filesystem::exists(p)) return p;
  return std::nullopt;
}

Outcome skipped(const std::string& fixture) {
  Outcome o;
  o.status = Status::skipped;
  o.note("fixture missing: " + (data_dir() / fixture).string());
  return o;
}

int worker_count() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int count_between(const RestartDistribution& d, double lo, double hi) {
  int n = 0;
  for (const auto& r : d.runs) {
    if (r.fit && !r.spurious() && r.fit->objective >= lo && r.fit->objective <= hi) ++n;
  }
  return n;
}

bool any_near(const RestartDistribution& d, double target, double tol) {
  return count_between(d, target - tol, target + tol) > 0;
}

// Most populated bin (ties go to the higher bin).
std::pair<long long, int> modal_bin(const RestartDistribution& d) {
  std::pair<long long, int> best{0, -1};
  for (const auto& [bin, count] : d.bins) {
    if (count >= best.second) best = {bin, count};
  }
  return best;
}

std::string bins_line(const RestartDistribution& d) {
  std::ostringstream out;
  out << "bins:";
  for (auto it = d.bins.rbegin(); it != d.bins.rend(); ++it) out << ' ' << it->first << 'x' << it->second;
  if (d.failures) out << " failed x" << d.failures;
  return out.str();
}

ExperimentSpec base_spec(ModelKind model, int groups, InitKind init, int reps) {
  ExperimentSpec s;
  s.model = model;
  s.groups = groups;
  s.init = init;
  s.repetitions = reps;
  s.seed = 1;
  s.convergence = default_convergence(model);
  s.workers = worker_count();
  return s;
}

// ---------------------------------------------------------------------------

Outcome karate() {
  Outcome o;
  const Dataset data = builtin_karate();

  const auto random = run_experiment(base_spec(ModelKind::sbm, 4, InitKind::random, 200), data);
  auto bia_spec = base_spec(ModelKind::sbm, 4, InitKind::bia, 20);
  bia_spec.starts = 200;
  bia_spec.pre_iterations = 15;
  const auto bia = run_experiment(bia_spec, data);
  if (!random.best || !bia.best) {
    o.check(false, "every run failed");
    return o;
  }

  const long long best_bin = objective_bin(std::max(*random.best, *bia.best));
  o.note("best bound " + fmt(std::max(*random.best, *bia.best)) + " (bin " + std::to_string(best_bin) + ")");
  o.note("random " + bins_line(random));
  o.note("BIA    " + bins_line(bia));

  const int random_hits = random.count_in_bin(best_bin);
  o.check(random_hits <= 10, "random starts reach the best bin in " + std::to_string(random_hits) +
                                 "/200 runs (<= 5%)");
  const auto [mode, mode_count] = modal_bin(random);
  o.check(mode < best_bin && mode_count >= 50,
          "dominant suboptimal mode: bin " + std::to_string(mode) + " holds " + std::to_string(mode_count) +
              "/200 runs (modal, below the best bin, >= 25%)");
  const int bia_hits = bia.count_in_bin(best_bin);
  o.check(bia_hits >= 18, "BIA (J=200, T=15) reaches the best bin in " + std::to_string(bia_hits) +
                              "/20 runs (>= 90%)");
  return o;
}

Outcome carcinoma() {
  const auto path = find_fixture("carcinoma.csv");
  if (!path) return skipped("carcinoma.csv");
  Outcome o;
  const Dataset data = load_matrix(*path, DataKind::binary);
  o.check(data.n() == 118 && data.m() == 7, "fixture shape " + std::to_string(data.n()) + "x" + std::to_string(data.m()));

  const auto random = run_experiment(base_spec(ModelKind::lca, 4, InitKind::random, 100), data);
  auto bia_spec = base_spec(ModelKind::lca, 4, InitKind::bia, 100);
  bia_spec.starts = 30;
  bia_spec.pre_iterations = 10;
  const auto bia = run_experiment(bia_spec, data);
  o.note("random " + bins_line(random));
  o.note("BIA    " + bins_line(bia));

  const double best = std::max(random.best.value_or(kNegInf), bia.best.value_or(kNegInf));
  o.check(std::abs(best + 289.29) <= 0.05, "best log-likelihood " + fmt(best, 3) + " (target -289.29 +/- 0.05)");
  o.check(any_near(random, -289.79, 0.1), "mode near -289.79 found among 100 random starts");
  o.check(any_near(random, -291.27, 0.1), "mode near -291.27 found among 100 random starts");
  const long long top = objective_bin(best);
  const int in_top_two = bia.count_in_bin(top) + bia.count_in_bin(top - 1);
  o.check(in_top_two >= 80, "BIA (J=30, T=10) puts " + std::to_string(in_top_two) + "/100 runs in the top two bins (>= 80)");
  return o;
}

Outcome alzheimer() {
  const auto path = find_fixture("alzheimer.csv");
  if (!path) return skipped("alzheimer.csv");
  Outcome o;
  const Dataset data = load_matrix(*path, DataKind::binary);
  o.note("fixture shape " + std::to_string(data.n()) + "x" + std::to_string(data.m()));

  const auto random = run_experiment(base_spec(ModelKind::lca, 3, InitKind::random, 100), data);
  auto bia_spec = base_spec(ModelKind::lca, 3, InitKind::bia, 100);
  bia_spec.starts = 20;
  bia_spec.pre_iterations = 200;
  const auto bia = run_experiment(bia_spec, data);
  auto anneal_spec = base_spec(ModelKind::lca, 3, InitKind::anneal, 100);
  anneal_spec.anneal = AnnealSchedule{0.12, 0.87, 10};
  const auto anneal = run_experiment(anneal_spec, data);
  o.note("random " + bins_line(random));
  o.note("BIA    " + bins_line(bia));
  o.note("anneal " + bins_line(anneal));

  const bool global = any_near(random, -743.5, 0.05) || any_near(bia, -743.5, 0.05) || any_near(anneal, -743.5, 0.05);
  const bool local = any_near(random, -745.7, 0.05) || any_near(bia, -745.7, 0.05) || any_near(anneal, -745.7, 0.05);
  o.check(global, "global mode -743.5 +/- 0.05 reached");
  o.check(local, "suboptimal mode -745.7 +/- 0.05 reached");
  const long long bin = objective_bin(-743.5);
  const int r = random.count_in_bin(bin);
  const int b = bia.count_in_bin(bin);
  const int a = anneal.count_in_bin(bin);
  o.check(r >= 5 && r <= 35, "random starts attain bin " + std::to_string(bin) + " in " + std::to_string(r) + "/100 (5-35)");
  o.check(b >= 50, "BIA (J=20, T=200) attains it in " + std::to_string(b) + "/100 (>= 50)");
  o.check(a <= 10, "annealing (0.12, 0.87, 10) attains it in " + std::to_string(a) + "/100 (<= 10)");
  return o;
}

Outcome ais() {
  const auto path = find_fixture("ais.csv");
  if (!path) return skipped("ais.csv");
  Outcome o;
  const Dataset data = load_matrix(*path, DataKind::continuous);
  o.check(data.n() == 202 && data.m() == 11, "fixture shape " + std::to_string(data.n()) + "x" + std::to_string(data.m()));

  auto spec = base_spec(ModelKind::gmm, 2, InitKind::hclust, 1);
  spec.structure = CovarianceStructure::EEV;
  const auto family = make_family(spec, data);
  const FitResult hier = run_single(spec, data, *family, 0);
  o.check(std::abs(hier.objective + 4743.6) <= 1.0,
          "hclust start converges to " + fmt(hier.objective) + " (target -4743.6 +/- 1.0)");

  auto bia_spec = spec;
  bia_spec.init = InitKind::bia;
  bia_spec.starts = 50;
  bia_spec.pre_iterations = 100;
  bia_spec.repetitions = 40;
  const auto bia = run_experiment(bia_spec, data);
  o.note("BIA " + bins_line(bia));
  const int near = count_between(bia, -4723.4, -4721.4);
  o.check(2 * near > bia_spec.repetitions, "BIA (J=50, T=100) reaches -4722.4 +/- 1.0 in " + std::to_string(near) +
                                               "/40 runs (majority)");

  // Compare against the best BIA run, the global mode.
  const RunRecord* top = nullptr;
  for (const auto& r : bia.runs) {
    if (r.fit && !r.spurious() && (!top || r.fit->objective > top->fit->objective)) top = &r;
  }
  if (!top) {
    o.check(false, "no BIA run to compare against");
    return o;
  }
  const auto cmp = compare_solutions(hier, *top->fit, data);
  o.note("hclust " + fmt(cmp.objective_a) + " vs BIA " + fmt(cmp.objective_b));
  o.check(std::abs(cmp.changes - 15) <= 2, std::to_string(cmp.changes) + " membership changes (target 15 +/- 2)");
  o.check(std::abs(*cmp.wss_a / 619110.0 - 1.0) <= 0.005,
          "hclust within-cluster SS " + fmt(*cmp.wss_a, 1) + " (target 619110 +/- 0.5%)");
  o.check(std::abs(*cmp.wss_b / 606377.0 - 1.0) <= 0.005,
          "BIA within-cluster SS " + fmt(*cmp.wss_b, 1) + " (target 606377 +/- 0.5%)");
  // The property form of the same claim, reported for diagnosis only: the
  // fixture reproduces both reference log-likelihoods, so the numeric
  // targets above apply.
  o.note(std::string("property form: BIA objective higher: ") + (cmp.objective_b > cmp.objective_a ? "yes" : "no") +
         ", WSS lower: " + (*cmp.wss_b < *cmp.wss_a ? "yes" : "no"));
  return o;
}

Outcome properties() {
  Outcome o;

  // EM monotonicity and E-step normalization across families.
  {
    int monotone = 0;
    int normalized = 0;
    int runs = 0;
    auto record = [&](const MixtureFamily& family, const Responsibilities& z0, const ConvergenceConfig& cfg) {
      const FitResult fit = em_fit(family, z0, cfg);
      ++runs;
      if (testing::nondecreasing(fit.trace)) ++monotone;
      const Matrix& z = fit.responsibilities.values();
      if (((z.rowwise().sum().array() - 1.0).abs() <= 1e-12).all()) ++normalized;
    };
    // Hard random starts may leave a group empty; those draws are skipped.
    for (std::uint64_t attempt = 0; runs < 100 && attempt < 1000; ++attempt) {
      Rng rng = make_stream(2024, 1, attempt);
      const int groups = 2 + static_cast<int>(attempt % 2);
      const Matrix x = testing::gaussian_blobs(40, 2, groups, rng, 2.0);
      const GaussianMixture gmm(x, attempt % 2 ? CovarianceStructure::EEV : CovarianceStructure::VVV);
      try {
        record(gmm, random_z(40, groups, rng), ConvergenceConfig::gaussian());
      } catch (const EmptyCluster&) {
      }
    }
    o.check(runs == 100 && monotone == runs && normalized == runs, "GMM: " + std::to_string(monotone) + "/" + std::to_string(runs) +
                                                          " monotone traces, " + std::to_string(normalized) + " normalized");
    monotone = normalized = runs = 0;
    for (int k = 0; k < 100; ++k) {
      Rng rng = make_stream(2024, 2, static_cast<std::uint64_t>(k));
      const LatentClassModel lca(testing::binary_data(60, 6, 3, rng));
      record(lca, random_z(60, 3, rng), ConvergenceConfig::latent_class());
    }
    o.check(monotone == runs && normalized == runs, "LCA: " + std::to_string(monotone) + "/" + std::to_string(runs) +
                                                          " monotone traces, " + std::to_string(normalized) + " normalized");
    monotone = normalized = runs = 0;
    for (int k = 0; k < 100; ++k) {
      Rng rng = make_stream(2024, 3, static_cast<std::uint64_t>(k));
      const StochasticBlockmodel sbm(testing::planted_graph(20, 2, 0.6, 0.15, rng));
      record(sbm, random_z(20, 2, rng), ConvergenceConfig::blockmodel());
    }
    o.check(monotone == runs && normalized == runs, "SBM: " + std::to_string(monotone) + "/" + std::to_string(runs) +
                                                          " monotone bound traces, " + std::to_string(normalized) + " normalized");
  }

  // Bound against brute-force evidence.
  {
    Rng rng = make_stream(2024, 4);
    std::uniform_int_distribution<int> size(2, 6);
    std::uniform_int_distribution<int> groups(1, 3);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    int below = 0;
    for (int k = 0; k < 50; ++k) {
      const Index n = size(rng);
      const int G = groups(rng);
      const Matrix adj = testing::random_graph(n, 0.4, rng);
      Vector tau(G);
      Matrix theta(G, G);
      for (int g = 0; g < G; ++g) {
        tau(g) = u(rng);
        for (int h = g; h < G; ++h) theta(g, h) = theta(h, g) = u(rng);
      }
      const SbmParams p{MixingWeights(tau / tau.sum()), theta};
      const auto priors = SbmPriors::uniform(G);
      const auto z = sbm_ve_step(adj, p, testing::random_soft_z(n, G, rng)).resp;
      if (sbm_elbo(adj, z, p, priors) <= testing::enumerated_log_evidence(adj, p, priors) + 1e-10) ++below;
    }
    o.check(below == 50, "bound <= enumerated log-evidence on " + std::to_string(below) + "/50 graphs (n <= 6, G <= 3)");
  }

  // Planted permutations.
  {
    Rng rng = make_stream(2024, 5);
    int recovered = 0;
    int total = 0;
    for (int G = 1; G <= 5; ++G) {
      const auto ref = testing::random_soft_z(40, G, rng);
      auto perm = testing::identity_permutation(G);
      do {
        ++total;
        if (align_labels(ref, permute_columns(ref, perm)) == ref) {
          ++recovered;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    o.check(recovered == total, "align_labels recovers " + std::to_string(recovered) + "/" + std::to_string(total) +
                                    " planted permutations (G <= 5)");
  }

  // Weight shift invariance.
  {
    Rng rng = make_stream(2024, 6);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> b(10);
      for (double& v : b) v = u(rng);
      std::vector<double> shifted = b;
      const double c = 1000.0 * u(rng);
      for (double& v : shifted) v += c;
      const auto w1 = bia_weights(b);
      const auto w2 = bia_weights(shifted);
      for (std::size_t j = 0; j < b.size(); ++j) worst = std::max(worst, std::abs(w1[j] - w2[j]));
    }
    o.check(worst <= 1e-12, "bia_weights shift invariance, max deviation " + fmt(worst, 17));
  }

  // Tempered E-step at nu = 1.
  {
    Rng rng = make_stream(2024, 7);
    int same = 0;
    FitFlags flags;
    for (int k = 0; k < 30; ++k) {
      const GaussianMixture gmm(testing::gaussian_blobs(30, 2, 2, rng), CovarianceStructure::VVV);
      const LatentClassModel lca(testing::binary_data(30, 5, 2, rng));
      const StochasticBlockmodel sbm(testing::planted_graph(12, 2, 0.7, 0.2, rng));
      for (const MixtureFamily* f : {static_cast<const MixtureFamily*>(&gmm), static_cast<const MixtureFamily*>(&lca),
                                     static_cast<const MixtureFamily*>(&sbm)}) {
        const auto z0 = testing::random_soft_z(f->observations(), 2, rng);
        const ModelParams params = f->m_step(z0, flags);
        if (anneal_e_step(*f, params, z0, 1.0) == f->e_step(params, z0, 1.0, flags).resp) ++same;
      }
    }
    o.check(same == 90, "annealed E-step at nu = 1 equals the plain E-step in " + std::to_string(same) + "/90 cases");
  }

  // Parallel and serial reports.
  {
    const Dataset data = builtin_karate();
    auto spec = base_spec(ModelKind::sbm, 3, InitKind::bia, 8);
    spec.starts = 10;
    spec.pre_iterations = 5;
    spec.workers = 1;
    Report serial{"equality", "karate", {{"BIA", spec, run_experiment(spec, data)}}, std::nullopt, std::nullopt, false};
    spec.workers = 4;
    Report parallel{"equality", "karate", {{"BIA", spec, run_experiment(spec, data)}}, std::nullopt, std::nullopt, false};
    parallel.distributions[0].spec.workers = 1;
    bool equal = true;
    for (auto f : {ReportFormat::json, ReportFormat::csv, ReportFormat::table}) {
      equal = equal && render_report(serial, f) == render_report(parallel, f);
    }
    o.check(equal, "serial and 4-worker reports are byte-identical");
  }
  return o;
}

const std::map<std::string, std::function<Outcome()>>& criteria() {
  static const std::map<std::string, std::function<Outcome()>> table{
      {"karate", karate}, {"carcinoma", carcinoma}, {"alzheimer", alzheimer}, {"ais", ais}, {"properties", properties}};
  return table;
}

const std::vector<std::string> kOrder{"karate", "carcinoma", "alzheimer", "ais", "properties"};

const std::map<std::string, std::string> kTitles{
    {"karate", "Karate SBM G=4: random-start rarity of the best bin, BIA attainment"},
    {"carcinoma", "Carcinoma LCA G=4: global mode, secondary modes, BIA top-two bins"},
    {"alzheimer", "Alzheimer's LCA G=3: modes, random / BIA / annealing attainment"},
    {"ais", "AIS GMM G=2 EEV: hclust and BIA modes, solution comparison"},
    {"properties", "Property suite on synthetic instances"},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.empty()) selected = kOrder;

  bool failed = false;
  bool all_skipped = true;
  for (const auto& name : selected) {
    const auto it = criteria().find(name);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIPPED";
    std::cout << '[' << tag << "] " << name << ": " << kTitles.at(name) << '\n';
    for (const auto& line : o.details) std::cout << "    " << line << '\n';
    std::cout.flush();
    failed |= o.status == Status::fail;
    all_skipped &= o.status == Status::skipped;
  }
  if (failed) return 1;
  return all_skipped ? 77 : 0;
}

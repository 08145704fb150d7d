// Command-line front end: single fits, restart distributions, parameter
// sweeps, solution comparison and dataset summaries.

#include "embia/bench.hpp"
#include "embia/data.hpp"
#include "embia/report.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace embia;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string data;
  std::string kind;
  std::string model = "gmm";
  std::string structure = "VVV";
  int groups = 2;
  std::string init = "random";
  std::string init_b = "bia";
  std::string starts = "30";
  std::string pre_iters = "10";
  std::string nu0 = "0.05";
  std::string rate = "0.9";
  int stage = 10;
  int candidates = 16;
  int burnin_iters = 5;
  double retain = 0.5;
  int reps = 1;
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  int max_iter = 10000;
  int workers = 1;
  std::string format = "table";
  std::string out;
  bool timing = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("--" + flag + ": '" + item + "' is not a number");
    }
  }
  if (values.empty()) throw std::invalid_argument("--" + flag + ": empty list");
  return values;
}

double parse_scalar(const std::string& text, const std::string& flag) {
  const auto values = parse_list(text, flag);
  if (values.size() != 1) throw std::invalid_argument("--" + flag + " takes a single value here");
  return values.front();
}

std::filesystem::path resolve_data_path(const std::string& name) {
  std::filesystem::path p(name);
  if (std::filesystem::exists(p)) return p;
  if (const char* dir = std::getenv("EMBIA_DATA_DIR")) {
    const auto candidate = std::filesystem::path(dir) / p;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return p;
}

DataKind kind_for(const Options& o) {
  if (!o.kind.empty()) return data_kind_from_string(o.kind);
  switch (model_kind_from_string(o.model)) {
    case ModelKind::gmm: return DataKind::continuous;
    case ModelKind::lca: return DataKind::binary;
    case ModelKind::sbm: return DataKind::network;
  }
  return DataKind::continuous;
}

Dataset load_dataset(const Options& o) {
  if (o.data.empty()) throw std::invalid_argument("--data is required");
  if (o.data == "builtin:karate") return builtin_karate();
  const DataKind kind = kind_for(o);
  const auto path = resolve_data_path(o.data);
  // Networks come as edge lists unless given as a delimited adjacency matrix.
  if (kind == DataKind::network && path.extension() != ".csv" && path.extension() != ".tsv") {
    return load_edgelist(path);
  }
  return load_matrix(path, kind);
}

ExperimentSpec make_spec(const Options& o, bool sweeping) {
  ExperimentSpec s;
  s.model = model_kind_from_string(o.model);
  s.structure = covariance_structure_from_string(o.structure);
  s.groups = o.groups;
  s.init = init_kind_from_string(o.init);
  if (!sweeping) {
    s.starts = static_cast<int>(parse_scalar(o.starts, "starts"));
    s.pre_iterations = static_cast<int>(parse_scalar(o.pre_iters, "pre-iters"));
    s.anneal.nu0 = parse_scalar(o.nu0, "nu0");
    s.anneal.rate = parse_scalar(o.rate, "rate");
  }
  s.anneal.stage = o.stage;
  s.burnin = BurninConfig{o.candidates, o.burnin_iters, o.retain};
  s.repetitions = o.reps;
  s.seed = o.seed;
  s.convergence = default_convergence(s.model);
  if (o.epsilon) s.convergence.epsilon = *o.epsilon;
  s.convergence.max_iter = o.max_iter;
  s.workers = o.workers;
  return s;
}

void write_output(const Report& report, const Options& o) {
  const ReportFormat format = report_format_from_string(o.format);
  if (o.out.empty()) {
    std::cout << render_report(report, format);
  } else {
    emit_report(report, format, o.out);
  }
}

std::string label_for(const ExperimentSpec& s) {
  switch (s.init) {
    case InitKind::random: return "Random starts";
    case InitKind::hclust: return "Hierarchical";
    case InitKind::burnin: return "Burn-in";
    case InitKind::anneal: return "Annealing";
    case InitKind::bia: return "BIA";
  }
  return "run";
}

int run_fit_like(const Options& o, bool restarts) {
  const Dataset dataset = load_dataset(o);
  ExperimentSpec spec = make_spec(o, false);
  if (!restarts) spec.repetitions = 1;
  Report report;
  report.title = restarts ? "convergent objective distribution" : "single fit";
  report.dataset = o.data;
  report.include_timing = o.timing;
  report.distributions.push_back({label_for(spec), spec, run_experiment(spec, dataset)});
  write_output(report, o);
  return 0;
}

int run_sweep(const Options& o) {
  const Dataset dataset = load_dataset(o);
  SweepGrid grid;
  grid.base = make_spec(o, true);
  if (grid.base.init == InitKind::anneal) {
    grid.rows = {"nu0", parse_list(o.nu0, "nu0")};
    grid.cols = {"rate", parse_list(o.rate, "rate")};
  } else if (grid.base.init == InitKind::bia) {
    grid.rows = {"starts", parse_list(o.starts, "starts")};
    grid.cols = {"pre-iters", parse_list(o.pre_iters, "pre-iters")};
  } else {
    throw std::invalid_argument("sweep needs --init anneal or --init bia");
  }
  Report report;
  report.title = "parameter sweep";
  report.dataset = o.data;
  report.sweep = sweep(grid, dataset);
  write_output(report, o);
  return 0;
}

int run_compare(const Options& o) {
  const Dataset dataset = load_dataset(o);
  ExperimentSpec a = make_spec(o, false);
  a.repetitions = 1;
  ExperimentSpec b = a;
  b.init = init_kind_from_string(o.init_b);
  a.validate(dataset);
  b.validate(dataset);
  const auto family = make_family(a, dataset);
  const FitResult fa = run_single(a, dataset, *family, 0);
  const FitResult fb = run_single(b, dataset, *family, 0);
  Report report;
  report.title = "solution comparison (" + std::string(to_string(a.init)) + " vs " +
                 std::string(to_string(b.init)) + ")";
  report.dataset = o.data;
  report.comparison = compare_solutions(fa, fb, dataset);
  write_output(report, o);
  return 0;
}

int run_summarize(const Options& o) {
  const Dataset dataset = load_dataset(o);
  const auto summary = summarize(dataset);
  const std::string text = to_json(summary).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(o.out, text);
  }
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "Data file, fixture name under EMBIA_DATA_DIR, or builtin:karate")->required();
  cmd->add_option("--kind", o.kind, "continuous, binary or network (default: from --model)");
  cmd->add_option("--model", o.model, "gmm, lca or sbm");
  cmd->add_option("--out", o.out, "Output path (default: stdout)");
}

void add_fit_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--structure", o.structure, "Gaussian covariance structure: VVV or EEV");
  cmd->add_option("--groups", o.groups, "Number of mixture components");
  cmd->add_option("--init", o.init, "random, hclust, burnin, anneal or bia");
  cmd->add_option("--starts", o.starts, "BIA candidate starts (list for sweeps)");
  cmd->add_option("--pre-iters", o.pre_iters, "BIA preliminary EM cycles (list for sweeps)");
  cmd->add_option("--nu0", o.nu0, "Annealing initial exponent (list for sweeps)");
  cmd->add_option("--rate", o.rate, "Annealing rate r (list for sweeps)");
  cmd->add_option("--stage", o.stage, "Annealing cycles per exponent update");
  cmd->add_option("--candidates", o.candidates, "Burn-in initial candidates");
  cmd->add_option("--burnin-iters", o.burnin_iters, "Burn-in EM cycles per stage");
  cmd->add_option("--retain", o.retain, "Burn-in retained fraction per stage");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--epsilon", o.epsilon, "Relative convergence tolerance (default per model)");
  cmd->add_option("--max-iter", o.max_iter, "Maximum EM cycles");
  cmd->add_option("--workers", o.workers, "Concurrent repetitions");
  cmd->add_option("--format", o.format, "json, csv or table");
  cmd->add_flag("--timing", o.timing, "Record wall-clock seconds per run");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based clustering with EM and Bayesian initialization averaging"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit one model from one initialization");
  auto* restarts = app.add_subcommand("restarts", "Distribution of convergent objectives over repetitions");
  restarts->add_option("--reps", o.reps, "Repetitions");
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over annealing (nu0 x rate) or BIA (starts x pre-iters)");
  sweep_cmd->add_option("--reps", o.reps, "Repetitions per cell");
  auto* compare = app.add_subcommand("compare", "Compare the solutions reached from two initializations");
  compare->add_option("--init-b", o.init_b, "Initialization of the second fit");
  auto* summarize_cmd = app.add_subcommand("summarize", "Per-column summary of a dataset");

  for (auto* cmd : {fit, restarts, sweep_cmd, compare}) {
    add_common(cmd, o);
    add_fit_options(cmd, o);
  }
  add_common(summarize_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*fit) return run_fit_like(o, false);
    if (*restarts) return run_fit_like(o, true);
    if (*sweep_cmd) return run_sweep(o);
    if (*compare) return run_compare(o);
    if (*summarize_cmd) return run_summarize(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}

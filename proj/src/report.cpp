#include "embia/report.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace embia {

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// NaN is not representable in JSON.
nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

// Shortest text that reads back as the same double; used for grid axes.
std::string axis_label(double v) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::string(buf, end);
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "table" || s == "table-text") return ReportFormat::table;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

nlohmann::json to_json(const ModelParams& params) {
  nlohmann::json j;
  j["tau"] = vector_json(mixing_weights(params).tau);
  if (const auto* g = std::get_if<GaussianParams>(&params)) {
    j["family"] = "gmm";
    j["structure"] = to_string(g->structure);
    j["means"] = nlohmann::json::array();
    j["covariances"] = nlohmann::json::array();
    for (std::size_t k = 0; k < g->means.size(); ++k) {
      j["means"].push_back(vector_json(g->means[k]));
      j["covariances"].push_back(matrix_json(g->covariances[k]));
    }
  } else if (const auto* l = std::get_if<LcaParams>(&params)) {
    j["family"] = "lca";
    j["theta"] = matrix_json(l->theta);
  } else {
    j["family"] = "sbm";
    j["theta"] = matrix_json(std::get<SbmParams>(params).theta);
  }
  return j;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json trace = nlohmann::json::array();
  for (double v : fit.trace) trace.push_back(number_or_null(v));
  return {
      {"objective", number_or_null(fit.objective)},
      {"iterations", fit.iterations},
      {"converged", fit.converged},
      {"trace", std::move(trace)},
      {"params", to_json(fit.params)},
      {"flags",
       {{"spurious_candidate", fit.flags.spurious_candidate},
        {"boundary_adjacent", fit.flags.boundary_adjacent},
        {"inner_nonconverged", fit.flags.inner_nonconverged}}},
      {"degenerate", degenerate_solution(fit.params)},
  };
}

nlohmann::json to_json(const ExperimentSpec& s) {
  nlohmann::json j{
      {"model", to_string(s.model)},
      {"groups", s.groups},
      {"init", to_string(s.init)},
      {"repetitions", s.repetitions},
      {"seed", s.seed},
      {"epsilon", s.convergence.epsilon},
      {"max_iter", s.convergence.max_iter},
  };
  if (s.model == ModelKind::gmm) j["structure"] = to_string(s.structure);
  switch (s.init) {
    case InitKind::bia:
      j["starts"] = s.starts;
      j["pre_iterations"] = s.pre_iterations;
      break;
    case InitKind::anneal:
      j["nu0"] = s.anneal.nu0;
      j["rate"] = s.anneal.rate;
      j["stage"] = s.anneal.stage;
      break;
    case InitKind::burnin:
      j["initial_candidates"] = s.burnin.initial_candidates;
      j["iterations_per_stage"] = s.burnin.iterations_per_stage;
      j["retain_fraction"] = s.burnin.retain_fraction;
      break;
    default: break;
  }
  return j;
}

namespace {

nlohmann::json distribution_json(const RestartDistribution& d, bool timing) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [bin, count] : d.bins) bins[std::to_string(bin)] = count;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : d.runs) {
    nlohmann::json run{{"repetition", r.repetition}};
    if (r.fit) {
      run["fit"] = to_json(*r.fit);
    } else {
      run["error"] = r.error;
    }
    if (timing) run["seconds"] = r.seconds;
    runs.push_back(std::move(run));
  }
  return {
      {"values", d.values},
      {"bins", std::move(bins)},
      {"failures", d.failures},
      {"best", d.best ? nlohmann::json(*d.best) : nlohmann::json(nullptr)},
      {"attained", d.attained()},
      {"attain_rate", d.attain_rate},
      {"attain_tolerance", kAttainTolerance},
      {"runs", std::move(runs)},
  };
}

}  // namespace

nlohmann::json to_json(const Report& report) {
  nlohmann::json j{{"title", report.title},
                   {"dataset", report.dataset},
                   {"binning", "objective rounded to the nearest integer, halves rounded up"}};
  j["distributions"] = nlohmann::json::array();
  for (const auto& d : report.distributions) {
    j["distributions"].push_back({{"label", d.label},
                                  {"spec", to_json(d.spec)},
                                  {"distribution", distribution_json(d.distribution, report.include_timing)}});
  }
  if (report.sweep) {
    const auto& s = *report.sweep;
    nlohmann::json objectives = nlohmann::json::array();
    for (Index r = 0; r < s.objectives.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Index c = 0; c < s.objectives.cols(); ++c) row.push_back(number_or_null(s.objectives(r, c)));
      objectives.push_back(std::move(row));
    }
    j["sweep"] = {{"spec", to_json(s.grid.base)},
                  {"rows", {{"name", s.grid.rows.name}, {"values", s.grid.rows.values}}},
                  {"cols", {{"name", s.grid.cols.name}, {"values", s.grid.cols.values}}},
                  {"objectives", std::move(objectives)},
                  {"degenerate", s.degenerate}};
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    j["comparison"] = {{"changes", c.changes},
                       {"changed_rows", c.changed_rows},
                       {"permutation", c.permutation},
                       {"labels_a", c.labels_a},
                       {"labels_b", c.labels_b},
                       {"objective_a", number_or_null(c.objective_a)},
                       {"objective_b", number_or_null(c.objective_b)}};
    if (c.wss_a) j["comparison"]["wss_a"] = *c.wss_a;
    if (c.wss_b) j["comparison"]["wss_b"] = *c.wss_b;
  }
  return j;
}

std::string render_table(const Report& report) {
  std::ostringstream out;
  out << "# " << (report.title.empty() ? "report" : report.title) << '\n';
  out << "# bins: objective rounded to the nearest integer, halves rounded up\n";
  if (!report.distributions.empty()) {
    std::set<long long> bins;
    std::size_t label_width = std::string("Objective").size();
    for (const auto& d : report.distributions) {
      for (const auto& [bin, count] : d.distribution.bins) bins.insert(bin);
      label_width = std::max(label_width, d.label.size());
    }
    std::size_t cell = 5;
    for (long long b : bins) cell = std::max(cell, std::to_string(b).size() + 1);
    bool any_failures = false;
    for (const auto& d : report.distributions) any_failures |= d.distribution.failures > 0;

    out << std::left << std::setw(static_cast<int>(label_width)) << "Objective";
    for (long long b : bins) out << std::right << std::setw(static_cast<int>(cell)) << b;
    if (any_failures) out << std::right << std::setw(8) << "failed";
    out << '\n';
    for (const auto& d : report.distributions) {
      out << std::left << std::setw(static_cast<int>(label_width)) << d.label;
      for (long long b : bins) out << std::right << std::setw(static_cast<int>(cell)) << d.distribution.count_in_bin(b);
      if (any_failures) out << std::right << std::setw(8) << d.distribution.failures;
      out << '\n';
    }
  }
  if (report.sweep) {
    const auto& s = *report.sweep;
    out << "# sweep: rows " << s.grid.rows.name << ", columns " << s.grid.cols.name
        << "; '*' marks degenerate (saddle) solutions\n";
    out << std::left << std::setw(10) << s.grid.rows.name;
    for (double v : s.grid.cols.values) out << std::right << std::setw(12) << axis_label(v);
    out << '\n';
    for (Index r = 0; r < s.objectives.rows(); ++r) {
      out << std::left << std::setw(10) << axis_label(s.grid.rows.values[static_cast<std::size_t>(r)]);
      for (Index c = 0; c < s.objectives.cols(); ++c) {
        std::ostringstream cellv;
        cellv << std::fixed << std::setprecision(2) << s.objectives(r, c);
        if (s.degenerate[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) cellv << '*';
        out << std::right << std::setw(12) << cellv.str();
      }
      out << '\n';
    }
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    out << std::fixed << std::setprecision(2);
    out << "objective A: " << c.objective_a << "\nobjective B: " << c.objective_b << '\n';
    out << "membership changes: " << c.changes << '\n';
    if (c.wss_a) out << "within-cluster SS A: " << *c.wss_a << "\nwithin-cluster SS B: " << *c.wss_b << '\n';
  }
  return out.str();
}

std::string render_csv(const Report& report) {
  std::ostringstream out;
  if (!report.distributions.empty()) {
    out << "label,repetition,objective,bin,converged,iterations,spurious,degenerate";
    if (report.include_timing) out << ",seconds";
    out << '\n';
    for (const auto& d : report.distributions) {
      for (const auto& r : d.distribution.runs) {
        out << d.label << ',' << r.repetition << ',';
        if (r.fit) {
          out << format_double(r.fit->objective) << ',' << objective_bin(r.fit->objective) << ','
              << (r.fit->converged ? 1 : 0) << ',' << r.fit->iterations << ',' << (r.spurious() ? 1 : 0) << ','
              << (degenerate_solution(r.fit->params) ? 1 : 0);
        } else {
          out << "NA,NA,0,0,0,0";
        }
        if (report.include_timing) out << ',' << format_double(r.seconds);
        out << '\n';
      }
    }
  }
  if (report.sweep) {
    const auto& s = *report.sweep;
    out << s.grid.rows.name << '\\' << s.grid.cols.name;
    for (double v : s.grid.cols.values) out << ',' << axis_label(v);
    out << '\n';
    for (Index r = 0; r < s.objectives.rows(); ++r) {
      out << axis_label(s.grid.rows.values[static_cast<std::size_t>(r)]);
      for (Index c = 0; c < s.objectives.cols(); ++c) {
        out << ',';
        if (std::isfinite(s.objectives(r, c))) out << format_double(s.objectives(r, c));
        else out << "NA";
      }
      out << '\n';
    }
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    out << "row,label_a,label_b,changed\n";
    for (std::size_t i = 0; i < c.labels_a.size(); ++i) {
      out << i + 1 << ',' << c.labels_a[i] + 1 << ',' << c.labels_b[i] + 1 << ','
          << (c.labels_a[i] != c.labels_b[i] ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string render_report(const Report& report, ReportFormat format) {
  if (report.empty()) throw std::invalid_argument("report has no results");
  switch (format) {
    case ReportFormat::json: return to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::table: return render_table(report);
  }
  return {};
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
  write_text_file(path, render_report(report, format));
}

}  // namespace embia

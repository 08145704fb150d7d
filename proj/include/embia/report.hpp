#pragma once

#include "embia/bench.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace embia {

enum class ReportFormat { json, csv, table };

ReportFormat report_format_from_string(std::string_view s);

struct LabeledDistribution {
  std::string label;
  ExperimentSpec spec;
  RestartDistribution distribution;
};

struct Report {
  std::string title;
  std::string dataset;
  std::vector<LabeledDistribution> distributions;
  std::optional<SweepResult> sweep;
  std::optional<ComparisonRecord> comparison;
  // Wall-clock seconds per run. Off by default so that reports of identical
  // experiments are byte-identical.
  bool include_timing = false;

  bool empty() const { return distributions.empty() && !sweep && !comparison; }
};

nlohmann::json to_json(const ModelParams& params);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const ExperimentSpec& spec);
nlohmann::json to_json(const Report& report);

// Integer-binned counts laid out one row per distribution, one column per
// bin in ascending order.
std::string render_table(const Report& report);
// One line per run; for sweeps, the objective matrix with axis labels.
std::string render_csv(const Report& report);
std::string render_report(const Report& report, ReportFormat format);

// Throws std::invalid_argument for an empty report and IoError when the
// path cannot be written.
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace embia

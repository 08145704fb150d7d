#pragma once

#include "embia/numeric.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace embia {

enum class DataKind { continuous, binary, network };

std::string_view to_string(DataKind kind);
DataKind data_kind_from_string(std::string_view s);

// Observations in rows. For networks the payload is the n x n adjacency.
struct Dataset {
  DataKind kind = DataKind::continuous;
  Matrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;

  Index n() const { return values.rows(); }
  Index m() const { return values.cols(); }

  bool operator==(const Dataset& other) const = default;
};

// Malformed or invalid input. The message carries the location.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  std::optional<char> delimiter;  // auto-detected among , \t ; when unset
  std::optional<bool> header;     // detected from a non-numeric first line when unset
};

// Throws DataError if the payload violates the invariants of its kind.
void validate(const Dataset& dataset);

Dataset parse_matrix(std::string_view text, DataKind kind, const LoadOptions& options = {},
                     std::string_view source = "<memory>");
Dataset load_matrix(const std::filesystem::path& path, DataKind kind, const LoadOptions& options = {});

// Whitespace-separated 1-based node pairs, one per line. '#' starts a comment.
Dataset parse_edgelist(std::string_view text, std::optional<int> n = std::nullopt,
                       std::string_view source = "<memory>");
Dataset load_edgelist(const std::filesystem::path& path, std::optional<int> n = std::nullopt);

// Zachary's karate club: 34 members, 78 friendships.
Dataset builtin_karate();

struct DatasetSummary {
  DataKind kind = DataKind::continuous;
  Index n = 0;
  Index m = 0;
  std::vector<double> column_means;  // detection fractions for binary data
  std::optional<Index> edges;
  std::optional<double> density;
};

DatasetSummary summarize(const Dataset& dataset);

nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetSummary& summary);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace embia

#include "embia/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace embia {

namespace {

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto end = line.find(delimiter, start);
    cells.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

char detect_delimiter(std::string_view line) {
  char best = ',';
  std::ptrdiff_t best_count = 0;
  for (char c : {',', '\t', ';'}) {
    const auto count = std::count(line.begin(), line.end(), c);
    if (count > best_count) {
      best = c;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(DataKind kind) {
  switch (kind) {
    case DataKind::continuous: return "continuous";
    case DataKind::binary: return "binary";
    case DataKind::network: return "network";
  }
  return "?";
}

DataKind data_kind_from_string(std::string_view s) {
  if (s == "continuous") return DataKind::continuous;
  if (s == "binary") return DataKind::binary;
  if (s == "network") return DataKind::network;
  throw DataError("unknown data kind '" + std::string(s) + "'");
}

void validate(const Dataset& d) {
  const auto at = [](Index i, Index j) {
    return "row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1);
  };
  if (d.values.rows() == 0 || d.values.cols() == 0) throw DataError("dataset is empty");
  if (!d.row_ids.empty() && static_cast<Index>(d.row_ids.size()) != d.n()) {
    throw DataError("row id count does not match the number of rows");
  }
  if (!d.column_ids.empty() && static_cast<Index>(d.column_ids.size()) != d.m()) {
    throw DataError("column id count does not match the number of columns");
  }
  for (Index i = 0; i < d.n(); ++i) {
    for (Index j = 0; j < d.m(); ++j) {
      const double v = d.values(i, j);
      if (!std::isfinite(v)) throw DataError("non-finite value at " + at(i, j));
      if (d.kind != DataKind::continuous && v != 0.0 && v != 1.0) {
        throw DataError("value " + std::to_string(v) + " at " + at(i, j) + " is not 0 or 1");
      }
    }
  }
  if (d.kind == DataKind::network) {
    if (d.n() != d.m()) throw DataError("adjacency matrix is not square");
    for (Index i = 0; i < d.n(); ++i) {
      if (d.values(i, i) != 0.0) throw DataError("self-loop at node " + std::to_string(i + 1));
      for (Index j = i + 1; j < d.n(); ++j) {
        if (d.values(i, j) != d.values(j, i)) {
          throw DataError("asymmetric adjacency at " + at(i, j) + "; directed networks are not supported");
        }
      }
    }
  }
}

Dataset parse_matrix(std::string_view text, DataKind kind, const LoadOptions& options,
                     std::string_view source) {
  const auto lines = split_lines(text);
  std::vector<std::pair<std::size_t, std::string_view>> content;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (!trim(lines[k]).empty()) content.emplace_back(k + 1, lines[k]);
  }
  if (content.empty()) throw DataError(std::string(source) + ": no data");

  const char delimiter = options.delimiter.value_or(detect_delimiter(content.front().second));
  const auto first_cells = split_cells(content.front().second, delimiter);
  const bool header = options.header.value_or(std::any_of(
      first_cells.begin(), first_cells.end(), [](std::string_view c) { return !parse_number(c); }));

  Dataset d;
  d.kind = kind;
  std::size_t begin = 0;
  if (header) {
    for (auto c : first_cells) d.column_ids.emplace_back(trim(c));
    begin = 1;
  }
  if (begin >= content.size()) throw DataError(std::string(source) + ": header but no data rows");

  const std::size_t width = split_cells(content[begin].second, delimiter).size();
  if (header && d.column_ids.size() != width) {
    throw DataError(location(source, content.front().first) + ": header has " +
                    std::to_string(d.column_ids.size()) + " fields but data rows have " + std::to_string(width));
  }
  d.values.resize(static_cast<Index>(content.size() - begin), static_cast<Index>(width));
  for (std::size_t r = begin; r < content.size(); ++r) {
    const auto& [line_no, line] = content[r];
    const auto cells = split_cells(line, delimiter);
    if (cells.size() != width) {
      throw DataError(location(source, line_no) + ": expected " + std::to_string(width) + " fields, found " +
                      std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw DataError(location(source, line_no) + ", column " + std::to_string(c + 1) + ": '" +
                        std::string(trim(cells[c])) + "' is not numeric");
      }
      d.values(static_cast<Index>(r - begin), static_cast<Index>(c)) = *v;
    }
  }
  try {
    validate(d);
  } catch (const DataError& e) {
    throw DataError(std::string(source) + ": " + e.what());
  }
  return d;
}

Dataset load_matrix(const std::filesystem::path& path, DataKind kind, const LoadOptions& options) {
  return parse_matrix(read_text_file(path), kind, options, path.string());
}

Dataset parse_edgelist(std::string_view text, std::optional<int> n, std::string_view source) {
  std::vector<std::tuple<std::size_t, long, long>> pairs;
  const auto lines = split_lines(text);
  long largest = 0;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::string_view line = lines[k];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    std::istringstream in{std::string(line)};
    long a = 0;
    long b = 0;
    std::string extra;
    if (!(in >> a >> b) || (in >> extra)) {
      throw DataError(location(source, k + 1) + ": expected two integer node indices");
    }
    if (a == b) throw DataError(location(source, k + 1) + ": self-loop on node " + std::to_string(a));
    if (a < 1 || b < 1) throw DataError(location(source, k + 1) + ": node indices are 1-based");
    largest = std::max({largest, a, b});
    pairs.emplace_back(k + 1, a, b);
  }
  const long size = n ? *n : largest;
  if (size < 1) throw DataError(std::string(source) + ": empty edge list and no node count");

  Dataset d;
  d.kind = DataKind::network;
  d.values = Matrix::Zero(size, size);
  for (const auto& [line_no, a, b] : pairs) {
    if (a > size || b > size) {
      throw DataError(location(source, line_no) + ": node index out of range 1.." + std::to_string(size));
    }
    d.values(a - 1, b - 1) = 1.0;
    d.values(b - 1, a - 1) = 1.0;
  }
  return d;
}

Dataset load_edgelist(const std::filesystem::path& path, std::optional<int> n) {
  return parse_edgelist(read_text_file(path), n, path.string());
}

DatasetSummary summarize(const Dataset& d) {
  DatasetSummary s;
  s.kind = d.kind;
  s.n = d.n();
  s.m = d.m();
  const Vector means = d.values.colwise().mean().transpose();
  s.column_means.assign(means.data(), means.data() + means.size());
  if (d.kind == DataKind::network) {
    const auto edges = static_cast<Index>(std::llround(d.values.sum() / 2.0));
    s.edges = edges;
    const double dyads = static_cast<double>(d.n()) * static_cast<double>(d.n() - 1) / 2.0;
    s.density = dyads > 0.0 ? static_cast<double>(edges) / dyads : 0.0;
  }
  return s;
}

nlohmann::json to_json(const Dataset& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < d.n(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d.m()));
    for (Index j = 0; j < d.m(); ++j) row[static_cast<std::size_t>(j)] = d.values(i, j);
    rows.push_back(row);
  }
  return {{"kind", to_string(d.kind)}, {"values", rows}, {"row_ids", d.row_ids}, {"column_ids", d.column_ids}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset d;
  try {
    d.kind = data_kind_from_string(j.at("kind").get<std::string>());
    const auto& rows = j.at("values");
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.at(0).size() : 0;
    d.values.resize(static_cast<Index>(n), static_cast<Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
      if (rows.at(i).size() != m) throw DataError("ragged row " + std::to_string(i + 1) + " in dataset JSON");
      for (std::size_t k = 0; k < m; ++k) {
        d.values(static_cast<Index>(i), static_cast<Index>(k)) = rows.at(i).at(k).get<double>();
      }
    }
    d.row_ids = j.value("row_ids", std::vector<std::string>{});
    d.column_ids = j.value("column_ids", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset JSON: ") + e.what());
  }
  validate(d);
  return d;
}

nlohmann::json to_json(const DatasetSummary& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"n", s.n}, {"m", s.m}, {"column_means", s.column_means}};
  if (s.edges) j["edges"] = *s.edges;
  if (s.density) j["density"] = *s.density;
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (std::filesystem::is_directory(path)) throw IoError("cannot write '" + path.string() + "': is a directory");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

}  // namespace embia

#include "wdro/dataset.hpp"

#include "wdro/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

namespace wdro {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line, const std::string& where) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  if (quoted) fail(ErrorCode::ParseError, where + ": unterminated quote");
  cells.push_back(trim(cell));
  return cells;
}

Index find_column(const std::vector<std::string>& header, const std::string& name, const std::string& source) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorCode::MissingColumn, source + ": no column named '" + name + "'");
  return static_cast<Index>(it - header.begin());
}

}  // namespace

Matrix Dataset::samples() const {
  if (!response) return features;
  Matrix out(features.rows(), features.cols() + 1);
  out << features, *response;
  return out;
}

Dataset parse_dataset(std::istream& in, const DatasetSchema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_row(line, source + " row 1");
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].empty()) fail(ErrorCode::ParseError, source + " row 1 column " + std::to_string(c + 1) + ": empty column name");

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const std::string where = source + " row " + std::to_string(row_number);
    const std::vector<std::string> cells = split_row(line, where);
    if (cells.size() != header.size())
      fail(ErrorCode::ParseError, where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                      std::to_string(cells.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, values[c]);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(values[c]))
        fail(ErrorCode::NonNumericCell,
             where + " column " + std::to_string(c + 1) + " (" + header[c] + "): not a finite number: '" + cell + "'");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(ErrorCode::SchemaViolation, source + ": no data rows");

  const Index n = static_cast<Index>(rows.size());
  std::vector<Index> roles;
  Dataset ds;
  auto take = [&](const std::optional<std::string>& name, std::optional<Vector>& target, std::string& target_name,
                  bool binary) {
    if (!name) return;
    const Index col = find_column(header, *name, source);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      v[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)];
      if (binary && v[i] != 0.0 && v[i] != 1.0)
        fail(ErrorCode::SchemaViolation, source + " row " + std::to_string(i + 2) + ": column '" + *name +
                                             "' must be 0 or 1");
    }
    target = std::move(v);
    target_name = *name;
    roles.push_back(col);
  };
  take(schema.response, ds.response, ds.response_name, false);
  take(schema.attribute, ds.attribute, ds.attribute_name, true);
  take(schema.label, ds.label, ds.label_name, true);

  std::vector<Index> feature_cols;
  for (Index c = 0; c < static_cast<Index>(header.size()); ++c)
    if (std::find(roles.begin(), roles.end(), c) == roles.end()) feature_cols.push_back(c);
  ds.features.resize(n, static_cast<Index>(feature_cols.size()));
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    ds.feature_names.push_back(header[static_cast<std::size_t>(feature_cols[f])]);
    for (Index i = 0; i < n; ++i)
      ds.features(i, static_cast<Index>(f)) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(feature_cols[f])];
  }
  return ds;
}

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, path + ": cannot open file");
  return parse_dataset(in, schema, path);
}

}  // namespace wdro

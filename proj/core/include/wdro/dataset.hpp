#pragma once

#include "wdro/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wdro {

/// n sample rows with optional role columns. Role columns are removed from
/// `features`.
struct Dataset {
  Matrix features;
  std::vector<std::string> feature_names;
  std::optional<Vector> response;
  std::optional<Vector> attribute;
  std::optional<Vector> label;
  std::string response_name;
  std::string attribute_name;
  std::string label_name;

  Index size() const { return features.rows(); }

  /// Feature rows with the response (when present) appended as the last
  /// column, which is the layout the regression model expects.
  Matrix samples() const;
};

struct DatasetSchema {
  std::optional<std::string> response;
  std::optional<std::string> attribute;  // must be 0/1 valued
  std::optional<std::string> label;      // must be 0/1 valued
};

/// Comma-separated file with a header row. Every cell must parse as a finite
/// number. Rows and columns in error messages are 1-based, counting the header
/// as row 1.
Dataset load_dataset(const std::string& path, const DatasetSchema& schema = {});
Dataset parse_dataset(std::istream& in, const DatasetSchema& schema = {}, const std::string& source = "<stream>");

}  // namespace wdro

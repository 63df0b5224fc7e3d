#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asymdec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Dataset;

// Read-only handle on one row of a Dataset. Loss quartets evaluate through
// this so they can reach per-row cost columns as well as features.
class RowView {
 public:
  RowView(const Dataset& data, std::size_t index) : data_(&data), index_(index) {}

  std::size_t index() const noexcept { return index_; }
  std::span<const double> features() const;
  int label() const;
  std::optional<int> group() const;
  // Throws SchemaError when the column is absent.
  double numeric(std::string_view column) const;
  const std::string& text(std::string_view column) const;

 private:
  const Dataset* data_;
  std::size_t index_;
};

// Labeled samples: y in {-1,+1}, a feature matrix in model units, an
// optional small-integer group id and optional auxiliary columns (per-row
// cost cells, detention days, crime category, ...).
class Dataset {
 public:
  std::vector<std::string> feature_names;
  RowMatrix X;
  std::vector<int> y;
  std::vector<int> group;  // empty when the data carries no groups
  std::map<std::string, std::vector<double>, std::less<>> numeric_columns;
  std::map<std::string, std::vector<std::string>, std::less<>> text_columns;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }
  bool empty() const noexcept { return y.empty(); }
  bool has_groups() const noexcept { return !group.empty(); }

  RowView row(std::size_t i) const { return RowView(*this, i); }

  Dataset subset(std::span<const std::size_t> rows) const;
  // Rows [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const;

  // Checks shapes and label values; throws SchemaError/DimensionMismatch.
  void check() const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180-style reader: comma separated, double-quoted fields, header row.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::string_view text);

// Parses a double; throws ParseError naming the row and column.
double parse_number(std::string_view field, std::size_t row, std::string_view column);

// Options for turning a generic CSV into a Dataset.
struct CsvDatasetOptions {
  std::string label_column = "y";
  std::string group_column = "group";  // used when present
  // Explicit feature list; empty means every numeric column that is not the
  // label, the group, or a reserved auxiliary column.
  std::vector<std::string> features;
};

// Columns that are never treated as features by default.
const std::vector<std::string>& reserved_columns();

// Labels may be coded -1/+1 or 0/1 (1 -> +1).
Dataset load_dataset_csv(const std::string& path, const CsvDatasetOptions& options = {});
Dataset dataset_from_csv(const CsvTable& table, const CsvDatasetOptions& options = {});

}  // namespace asymdec

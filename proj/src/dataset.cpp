#include "asymdec/dataset.hpp"

#include "asymdec/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace asymdec {

std::span<const double> RowView::features() const {
  return {data_->X.row(static_cast<Eigen::Index>(index_)).data(), data_->dim()};
}

int RowView::label() const { return data_->y[index_]; }

std::optional<int> RowView::group() const {
  if (!data_->has_groups()) return std::nullopt;
  return data_->group[index_];
}

double RowView::numeric(std::string_view column) const {
  auto it = data_->numeric_columns.find(column);
  if (it == data_->numeric_columns.end()) {
    throw SchemaError("missing numeric column '" + std::string(column) + "'");
  }
  return it->second[index_];
}

const std::string& RowView::text(std::string_view column) const {
  auto it = data_->text_columns.find(column);
  if (it == data_->text_columns.end()) {
    throw SchemaError("missing text column '" + std::string(column) + "'");
  }
  return it->second[index_];
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.reserve(rows.size());
  if (has_groups()) out.group.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = rows[k];
    out.X.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(r));
    out.y.push_back(y[r]);
    if (has_groups()) out.group.push_back(group[r]);
  }
  for (const auto& [name, values] : numeric_columns) {
    auto& dst = out.numeric_columns[name];
    dst.reserve(rows.size());
    for (auto r : rows) dst.push_back(values[r]);
  }
  for (const auto& [name, values] : text_columns) {
    auto& dst = out.text_columns[name];
    dst.reserve(rows.size());
    for (auto r : rows) dst.push_back(values[r]);
  }
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> rows(end - begin);
  for (std::size_t i = begin; i < end; ++i) rows[i - begin] = i;
  return subset(rows);
}

void Dataset::check() const {
  const auto n = size();
  if (static_cast<std::size_t>(X.rows()) != n) {
    throw DimensionMismatch("feature matrix has " + std::to_string(X.rows()) + " rows, labels " +
                            std::to_string(n));
  }
  if (feature_names.size() != dim()) {
    throw DimensionMismatch("feature names do not match feature matrix width");
  }
  if (has_groups() && group.size() != n) throw DimensionMismatch("group column length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 1 && y[i] != -1) {
      throw SchemaError("label at row " + std::to_string(i) + " is not -1/+1");
    }
  }
  for (const auto& [name, values] : numeric_columns) {
    if (values.size() != n) throw DimensionMismatch("column '" + name + "' length mismatch");
  }
  for (const auto& [name, values] : text_columns) {
    if (values.size() != n) throw DimensionMismatch("column '" + name + "' length mismatch");
  }
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("stray quote in record " + std::to_string(records.size()));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw EmptyData("CSV has no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ParseError("row " + std::to_string(r - 1) + " has " +
                       std::to_string(records[r].size()) + " fields, header has " +
                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

double parse_number(std::string_view field, std::size_t row, std::string_view column) {
  auto trimmed = field;
  while (!trimmed.empty() && trimmed.front() == ' ') trimmed.remove_prefix(1);
  while (!trimmed.empty() && trimmed.back() == ' ') trimmed.remove_suffix(1);
  if (!trimmed.empty() && trimmed.front() == '+') trimmed.remove_prefix(1);
  double value = 0.0;
  const auto* first = trimmed.data();
  const auto* last = trimmed.data() + trimmed.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (trimmed.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("row " + std::to_string(row) + ", column '" + std::string(column) +
                     "': cannot parse '" + std::string(field) + "' as a number");
  }
  return value;
}

const std::vector<std::string>& reserved_columns() {
  static const std::vector<std::string> names = {"l_pp", "l_np", "l_pn", "l_nn",
                                                 "crime", "detention_days", "row_id"};
  return names;
}

Dataset load_dataset_csv(const std::string& path, const CsvDatasetOptions& options) {
  return dataset_from_csv(read_csv(path), options);
}

Dataset dataset_from_csv(const CsvTable& table, const CsvDatasetOptions& options) {
  const auto label_col = table.column(options.label_column);
  if (!label_col) throw SchemaError("label column '" + options.label_column + "' not found");
  const auto group_col = table.column(options.group_column);
  if (table.rows.empty()) throw EmptyData("data file has a header but no rows");

  const auto& reserved = reserved_columns();
  auto is_reserved = [&](const std::string& name) {
    return std::find(reserved.begin(), reserved.end(), name) != reserved.end();
  };

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (!options.features.empty()) {
    for (const auto& name : options.features) {
      auto col = table.column(name);
      if (!col) throw SchemaError("feature column '" + name + "' not found");
      feature_cols.push_back(*col);
      feature_names.push_back(name);
    }
  } else {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& name = table.header[c];
      if (c == *label_col || (group_col && c == *group_col) || is_reserved(name)) continue;
      feature_cols.push_back(c);
      feature_names.push_back(name);
    }
  }

  Dataset data;
  const auto n = table.rows.size();
  data.feature_names = feature_names;
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
  data.y.resize(n);
  if (group_col) data.group.resize(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const double label = parse_number(row[*label_col], r, options.label_column);
    if (label == 1.0) {
      data.y[r] = 1;
    } else if (label == -1.0 || label == 0.0) {
      data.y[r] = -1;
    } else {
      throw ParseError("row " + std::to_string(r) + ": label must be -1/+1 or 0/1");
    }
    if (group_col) {
      const double g = parse_number(row[*group_col], r, options.group_column);
      if (g < 0 || g != static_cast<int>(g)) {
        throw ParseError("row " + std::to_string(r) + ": group id must be a non-negative integer");
      }
      data.group[r] = static_cast<int>(g);
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          parse_number(row[feature_cols[k]], r, feature_names[k]);
    }
  }

  for (const auto& name : reserved) {
    auto col = table.column(name);
    if (!col || name == "row_id") continue;
    if (name == "crime") {
      auto& dst = data.text_columns[name];
      dst.reserve(n);
      for (const auto& row : table.rows) dst.push_back(row[*col]);
    } else {
      auto& dst = data.numeric_columns[name];
      dst.reserve(n);
      for (std::size_t r = 0; r < n; ++r) dst.push_back(parse_number(table.rows[r][*col], r, name));
    }
  }
  data.check();
  return data;
}

}  // namespace asymdec

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bcf/errors.hpp"
#include "bcf/linalg.hpp"
#include "bcf/simdg.hpp"

namespace bcf {

/// Shortest-safe text form of a double: 17 significant digits, '.' decimal.
inline std::string format_double(double value) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
  return {buf, static_cast<std::size_t>(len)};
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

inline bool parse_double(std::string_view text, double &out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

/// Numeric table with named columns.
struct CsvTable {
  std::vector<std::string> names;
  Matrix data;

  Index column(const std::string &name) const {
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == name) return static_cast<Index>(j);
    }
    throw invalid_input_error("missing column '" + name + "'");
  }

  bool has_column(const std::string &name) const {
    for (const auto &n : names) {
      if (n == name) return true;
    }
    return false;
  }

  Matrix columns(const std::vector<std::string> &wanted) const {
    Matrix out(data.rows(), static_cast<Index>(wanted.size()));
    for (std::size_t j = 0; j < wanted.size(); ++j) out.col(static_cast<Index>(j)) = data.col(column(wanted[j]));
    return out;
  }
};

inline CsvTable read_csv_table(std::istream &in, const std::string &source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw invalid_input_error(source + ": empty file, expected a header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  CsvTable table;
  table.names = split_csv_line(line);
  const std::size_t width = table.names.size();

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != width) {
      throw invalid_input_error(source + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(width) + " fields, got " +
                                std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw invalid_input_error(source + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + fields[j] + "' in column '" +
                                  table.names[j] + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  table.data.resize(static_cast<Index>(rows), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      table.data(static_cast<Index>(i), static_cast<Index>(j)) = values[i * width + j];
    }
  }
  return table;
}

inline CsvTable read_csv_table(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return read_csv_table(in, path);
}

// Dataset files: x1..xp, y, z1..zr and optionally u, v1..vp.

inline void write_dataset_csv(std::ostream &out, const Dataset &d) {
  validate(d);
  const bool with_noise = d.u.has_value() && d.v.has_value();
  std::string header;
  for (Index j = 0; j < d.p(); ++j) header += "x" + std::to_string(j + 1) + ",";
  header += "y";
  for (Index j = 0; j < d.r(); ++j) header += ",z" + std::to_string(j + 1);
  if (with_noise) {
    header += ",u";
    for (Index j = 0; j < d.p(); ++j) header += ",v" + std::to_string(j + 1);
  }
  out << header << '\n';
  for (Index i = 0; i < d.n(); ++i) {
    std::string row;
    for (Index j = 0; j < d.p(); ++j) row += format_double(d.x(i, j)) + ",";
    row += format_double(d.y(i));
    for (Index j = 0; j < d.r(); ++j) row += "," + format_double(d.z(i, j));
    if (with_noise) {
      row += "," + format_double((*d.u)(i));
      for (Index j = 0; j < d.p(); ++j) row += "," + format_double((*d.v)(i, j));
    }
    out << row << '\n';
  }
  if (!out) throw io_error("failed writing dataset");
}

inline void write_dataset_csv(const std::string &path, const Dataset &d) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  write_dataset_csv(out, d);
  if (!out) throw io_error("failed writing '" + path + "'");
}

inline std::vector<std::string> prefixed_columns(const CsvTable &t, const std::string &prefix) {
  std::vector<std::string> out;
  for (int j = 1; t.has_column(prefix + std::to_string(j)); ++j) out.push_back(prefix + std::to_string(j));
  return out;
}

inline Dataset dataset_from_table(const CsvTable &t) {
  const auto xs = prefixed_columns(t, "x");
  const auto zs = prefixed_columns(t, "z");
  if (xs.empty()) throw invalid_input_error("dataset CSV: no x1 column");
  if (zs.empty()) throw invalid_input_error("dataset CSV: no z1 column");
  Dataset d;
  d.x = t.columns(xs);
  d.y = t.data.col(t.column("y"));
  d.z = t.columns(zs);
  if (t.has_column("u")) {
    const auto vs = prefixed_columns(t, "v");
    if (vs.size() != xs.size()) throw invalid_input_error("dataset CSV: u present but v columns incomplete");
    d.u = Vector(t.data.col(t.column("u")));
    d.v = t.columns(vs);
  }
  validate(d);
  return d;
}

inline Dataset read_dataset_csv(const std::string &path) {
  return dataset_from_table(read_csv_table(path));
}

}  // namespace bcf

#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bcf/csv.hpp"
#include "bcf/errors.hpp"

namespace bcf::experiments {

struct ResultRow {
  int rep = 0;
  std::string method;
  std::string param;
  double param_value = 0.0;
  std::string metric;
  double value = 0.0;

  bool operator==(const ResultRow &) const = default;
};

inline bool row_order(const ResultRow &a, const ResultRow &b) {
  return std::tie(a.rep, a.method, a.param_value, a.param, a.metric) <
         std::tie(b.rep, b.method, b.param_value, b.param, b.metric);
}

inline void sort_rows(std::vector<ResultRow> &rows) { std::stable_sort(rows.begin(), rows.end(), row_order); }

inline std::string quote_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline constexpr const char *kResultsHeader = "rep,method,param,param_value,metric,value";

inline void write_results_csv(std::ostream &out, const std::vector<ResultRow> &rows) {
  out << kResultsHeader << '\n';
  for (const auto &row : rows) {
    out << row.rep << ',' << quote_field(row.method) << ',' << quote_field(row.param) << ','
        << format_double(row.param_value) << ',' << quote_field(row.metric) << ','
        << format_double(row.value) << '\n';
  }
}

inline void write_results_json(std::ostream &out, const std::vector<ResultRow> &rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &row : rows) {
    arr.push_back({{"rep", row.rep},
                   {"method", row.method},
                   {"param", row.param},
                   {"param_value", row.param_value},
                   {"metric", row.metric},
                   {"value", row.value}});
  }
  out << arr.dump(2) << '\n';
}

/// Writes rows in canonical order. `format` is "csv" or "json".
inline void emit_results(std::vector<ResultRow> rows, const std::string &path, const std::string &format) {
  sort_rows(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  if (format == "csv") {
    write_results_csv(out, rows);
  } else if (format == "json") {
    write_results_json(out, rows);
  } else {
    throw config_error("unknown output format '" + format + "'");
  }
  out.flush();
  if (!out) throw io_error("failed writing '" + path + "'");
}

inline std::vector<ResultRow> parse_results_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw invalid_input_error("results CSV: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw invalid_input_error("results CSV: expected 6 fields in '" + line + "'");
    ResultRow row;
    double rep = 0.0;
    if (!parse_double(f[0], rep) || !parse_double(f[3], row.param_value) || !parse_double(f[5], row.value)) {
      throw invalid_input_error("results CSV: non-numeric field in '" + line + "'");
    }
    row.rep = static_cast<int>(rep);
    row.method = f[1];
    row.param = f[2];
    row.metric = f[4];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ResultRow> parse_results_json(std::istream &in) {
  nlohmann::json arr;
  in >> arr;
  std::vector<ResultRow> rows;
  for (const auto &j : arr) {
    rows.push_back({j.at("rep").get<int>(), j.at("method").get<std::string>(), j.at("param").get<std::string>(),
                    j.at("param_value").get<double>(), j.at("metric").get<std::string>(),
                    j.at("value").get<double>()});
  }
  return rows;
}

}  // namespace bcf::experiments

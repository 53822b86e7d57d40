#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dpmix/data.hpp"
#include "dpmix/io.hpp"

namespace dpmix {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string s = trim(raw);
  const auto where = " at row " + std::to_string(row + 1) + ", column " +
                     std::to_string(col + 1);
  if (s.empty()) throw ParseError("NonNumericCell", "empty cell" + where);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("NonNumericCell", "'" + s + "'" + where);
  if (!std::isfinite(v))
    throw ParseError("NonNumericCell", "non-finite value" + where);
  return v;
}

}  // namespace detail

// Read a rectangular numeric table, rows = samples. An optional label column
// (by header name, or 0-based index for headerless files) is pulled out and
// coded as dense integers in first-appearance order.
inline DataMatrix ingest_csv(const std::string& path, bool has_header,
                             const std::optional<std::string>& label_column = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("FileNotFound", "cannot open '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    rows.push_back(detail::split_csv_line(line));
  }
  if (rows.empty()) throw ParseError("ParseError", "'" + path + "' is empty");

  std::vector<std::string> header;
  std::size_t first_data = 0;
  if (has_header) {
    header = rows[0];
    first_data = 1;
    if (rows.size() < 2) throw ParseError("ParseError", "no data rows");
  }
  const std::size_t ncol = rows[first_data].size();
  for (std::size_t r = first_data; r < rows.size(); ++r)
    if (rows[r].size() != ncol)
      throw ParseError("RaggedRows", "row " + std::to_string(r + 1) + " has " +
                                         std::to_string(rows[r].size()) +
                                         " cells, expected " + std::to_string(ncol));

  std::optional<std::size_t> label_idx;
  if (label_column) {
    if (has_header) {
      for (std::size_t c = 0; c < header.size(); ++c)
        if (detail::trim(header[c]) == *label_column) { label_idx = c; break; }
      if (!label_idx)
        throw ParseError("ParseError", "no column named '" + *label_column + "'");
    } else {
      try {
        label_idx = static_cast<std::size_t>(std::stoul(*label_column));
      } catch (...) {
        throw ParseError("ParseError",
                         "headerless files address the label column by index");
      }
      if (*label_idx >= ncol)
        throw ParseError("ParseError", "label column index out of range");
    }
  }

  const std::size_t n = rows.size() - first_data;
  const std::size_t d = ncol - (label_idx ? 1 : 0);
  if (d == 0) throw ParseError("ParseError", "no feature columns");
  RowMatrix x(n, d);
  std::optional<std::vector<int>> labels;
  std::unordered_map<std::string, int> codes;
  if (label_idx) labels.emplace(n);

  for (std::size_t r = 0; r < n; ++r) {
    std::size_t jout = 0;
    for (std::size_t c = 0; c < ncol; ++c) {
      if (label_idx && c == *label_idx) {
        const std::string key = detail::trim(rows[r + first_data][c]);
        auto [it, fresh] = codes.try_emplace(key, static_cast<int>(codes.size()));
        (void)fresh;
        (*labels)[r] = it->second;
        continue;
      }
      x(r, jout++) = detail::parse_cell(rows[r + first_data][c], r + first_data, c);
    }
  }
  return DataMatrix(std::move(x), std::move(labels));
}

inline void write_matrix_csv(const std::string& path,
                             const std::vector<std::string>& header,
                             const RowMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("FileNotFound", "cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  if (!header.empty()) out << "\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << fmt17(m(r, c));
    out << "\n";
  }
}

}  // namespace dpmix

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "protosel/errors.hpp"
#include "protosel/kernel.hpp"

namespace protosel {

struct Dataset {
  std::vector<std::string> columns;  // empty when the file has no header
  bool labeled = false;
  std::vector<DataPoint> points;

  std::size_t dim() const { return points.empty() ? 0 : points.front().dim(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool looks_numeric(const std::vector<std::string_view>& fields) {
  for (auto f : fields)
    if (!parse_double(f)) return false;
  return true;
}

}  // namespace detail

// Reads a numeric CSV. A header row is detected by any non-numeric field; when
// its last column is `label` (or `labels_last` is set) the final column is an
// integer class id. Rows are numbered from 1 in error messages.
inline Dataset read_csv(std::istream& in, bool labels_last = false) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto fields = detail::split_fields(stripped);
    if (!width && ds.columns.empty() && !detail::looks_numeric(fields)) {
      for (auto f : fields) ds.columns.emplace_back(f);
      ds.labeled = ds.columns.back() == "label";
      if (labels_last && !ds.labeled) {
        throw InputError("line " + std::to_string(line_no) + ": --labels given but last header column is not `label`");
      }
      width = fields.size();
      continue;
    }
    if (!width) {
      width = fields.size();
      ds.labeled = labels_last;
    }
    if (fields.size() != *width) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(*width) +
                       " columns, found " + std::to_string(fields.size()));
    }
    const std::size_t d = ds.labeled ? fields.size() - 1 : fields.size();
    if (d == 0) throw InputError("line " + std::to_string(line_no) + ": no feature columns");
    DataPoint p;
    p.stream_index = ds.points.size();
    p.features.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto v = detail::parse_double(fields[i]);
      if (!v || !std::isfinite(*v)) {
        throw InputError("line " + std::to_string(line_no) + ", column " + std::to_string(i + 1) +
                         ": not a finite number: '" + std::string(fields[i]) + "'");
      }
      p.features.push_back(*v);
    }
    if (ds.labeled) {
      const auto lv = detail::parse_double(fields.back());
      if (!lv || *lv != std::floor(*lv)) {
        throw InputError("line " + std::to_string(line_no) + ": label must be an integer, got '" +
                         std::string(fields.back()) + "'");
      }
      p.label = static_cast<int>(*lv);
    }
    ds.points.push_back(std::move(p));
  }
  return ds;
}

inline Dataset read_csv_file(const std::string& path, bool labels_last = false) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_csv(in, labels_last);
}

inline void write_csv(std::ostream& out, const std::vector<DataPoint>& points, bool with_labels) {
  if (points.empty()) return;
  const std::size_t d = points.front().dim();
  for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << "x" << i;
  if (with_labels) out << ",label";
  out << "\n";
  out.precision(17);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << p.features[i];
    if (with_labels) out << "," << p.label.value_or(0);
    out << "\n";
  }
}

}  // namespace protosel

#pragma once

// Daily closing prices (CSV with `date` and `close` columns) to log-returns.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rieszpf/error.hpp"

namespace rieszpf {

struct ReturnsSeries {
  std::vector<std::string> dates;  ///< date of the later close in each pair
  std::vector<double> log_returns;
  std::vector<double> closes;  ///< source closes, one more than log_returns
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace detail

inline ReturnsSeries parse_prices_csv(std::istream& in) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!detail::trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  require(have_header, ErrorCode::empty_file, "price file has no header row");

  const auto header = detail::split_csv_line(line);
  std::size_t date_col = header.size();
  std::size_t close_col = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    const auto name = detail::lower(header[k]);
    if (name == "date" && date_col == header.size()) date_col = k;
    if (name == "close" && close_col == header.size()) close_col = k;
  }
  require(date_col < header.size(), ErrorCode::missing_column, "no 'date' column in header");
  require(close_col < header.size(), ErrorCode::missing_column, "no 'close' column in header");

  ReturnsSeries out;
  std::vector<std::string> dates;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    require(fields.size() > std::max(date_col, close_col), ErrorCode::missing_column,
            "row " + std::to_string(row) + " has too few fields");
    double close = 0.0;
    std::size_t used = 0;
    try {
      close = std::stod(fields[close_col], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == fields[close_col].size() && used > 0, ErrorCode::io_error,
            "row " + std::to_string(row) + ": close '" + fields[close_col] + "' is not a number");
    require(close > 0.0 && std::isfinite(close), ErrorCode::non_positive_price,
            "row " + std::to_string(row) + ": close must be positive");
    dates.push_back(fields[date_col]);
    out.closes.push_back(close);
  }
  require(!out.closes.empty(), ErrorCode::empty_file, "price file has no data rows");

  for (std::size_t t = 1; t < out.closes.size(); ++t) {
    out.dates.push_back(dates[t]);
    out.log_returns.push_back(std::log(out.closes[t] / out.closes[t - 1]));
  }
  return out;
}

inline ReturnsSeries load_prices_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
  return parse_prices_csv(in);
}

/// `date,log_return` rows with 17 significant digits.
inline void write_returns_csv(std::ostream& out, const ReturnsSeries& r) {
  out << "date,log_return\n";
  char buf[64];
  for (std::size_t t = 0; t < r.log_returns.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", r.log_returns[t]);
    out << r.dates[t] << ',' << buf << '\n';
  }
}

}  // namespace rieszpf

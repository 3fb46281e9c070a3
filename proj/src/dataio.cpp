#include "dynssv/dataio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dynssv/math.hpp"

namespace dynssv {

namespace {

[[noreturn]] void data_error(const std::string& label, std::size_t line,
                             const std::string& what) {
  std::ostringstream msg;
  if (!label.empty()) msg << label << ": ";
  msg << "line " << line << ": " << what;
  throw std::runtime_error(msg.str());
}

// ISO-8601 calendar date as days since epoch; rejects impossible dates.
long parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw std::runtime_error("expected YYYY-MM-DD, got '" + text + "'");
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (text[i] < '0' || text[i] > '9')
      throw std::runtime_error("expected YYYY-MM-DD, got '" + text + "'");
  const int y = std::stoi(text.substr(0, 4));
  const unsigned m = unsigned(std::stoi(text.substr(5, 2)));
  const unsigned d = unsigned(std::stoi(text.substr(8, 2)));
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok())
    throw std::runtime_error("impossible calendar date '" + text + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream row(line);
  while (std::getline(row, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name, const std::string& label) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  data_error(label, 1, "missing required column '" + name + "'");
}

}  // namespace

void PriceSeries::validate() const {
  if (dates.size() != close.size())
    throw std::runtime_error("price series: date and close counts differ");
  if (close.size() < 3)
    throw std::runtime_error("price series: need at least 3 observations");
  long prev = std::numeric_limits<long>::min();
  for (std::size_t i = 0; i < dates.size(); ++i) {
    long day;
    try {
      day = parse_date(dates[i]);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("price series row " + std::to_string(i + 1) +
                               ": " + e.what());
    }
    if (day <= prev)
      throw std::runtime_error("price series row " + std::to_string(i + 1) +
                               ": dates must be strictly increasing");
    prev = day;
    if (!(close[i] > 0.0) || !std::isfinite(close[i]))
      throw std::runtime_error("price series row " + std::to_string(i + 1) +
                               ": close must be a positive number");
  }
}

Dataset compute_returns(const PriceSeries& p) {
  p.validate();
  const std::size_t T = p.close.size() - 1;
  std::vector<double> diff(T);
  CompensatedSum total;
  for (std::size_t t = 0; t < T; ++t) {
    diff[t] = std::log(p.close[t + 1]) - std::log(p.close[t]);
    total.add(diff[t]);
  }
  const double mean_diff = total.value() / double(T);
  Dataset d;
  d.label = p.label;
  d.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) d.y[t] = 100.0 * (diff[t] - mean_diff);
  d.validate();
  return d;
}

SummaryStats summary_stats(std::span<const double> y) {
  if (y.size() < 4)
    throw std::invalid_argument("summary_stats: need at least 4 observations");
  SummaryStats s;
  s.n = y.size();
  s.mean = mean_of(y);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  s.min = *lo;
  s.max = *hi;
  CompensatedSum m2, m3, m4;
  for (double v : y) {
    const double c = v - s.mean;
    const double c2 = c * c;
    m2.add(c2);
    m3.add(c2 * c);
    m4.add(c2 * c2);
  }
  const double n = double(s.n);
  const double v2 = m2.value() / n;
  if (!(v2 > 0.0))
    throw std::runtime_error("summary_stats: zero variance, moments undefined");
  s.sd = std::sqrt(v2);
  s.skewness = (m3.value() / n) / (v2 * s.sd);
  s.kurtosis = (m4.value() / n) / (v2 * v2);
  return s;
}

std::vector<double> rolling_skewness(std::span<const double> y,
                                     std::size_t window) {
  if (window < 4)
    throw std::invalid_argument("rolling_skewness: window must be >= 4");
  if (window > y.size())
    throw std::invalid_argument("rolling_skewness: window exceeds series");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(y.size(), nan);
  for (std::size_t t = window - 1; t < y.size(); ++t) {
    const auto w = y.subspan(t + 1 - window, window);
    const double mean = mean_of(w);
    CompensatedSum m2, m3;
    for (double v : w) {
      const double c = v - mean;
      m2.add(c * c);
      m3.add(c * c * c);
    }
    const double v2 = m2.value() / double(window);
    if (v2 > 0.0) out[t] = (m3.value() / double(window)) / (v2 * std::sqrt(v2));
  }
  return out;
}

PriceSeries parse_price_csv(std::istream& in, const std::string& label) {
  PriceSeries p;
  p.label = label;
  std::string line;
  if (!std::getline(in, line)) data_error(label, 1, "empty file");
  const auto header = split_row(line);
  const std::size_t date_col = column_index(header, "date", label);
  const std::size_t close_col = column_index(header, "close", label);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto row = split_row(line);
    if (row.size() <= std::max(date_col, close_col))
      data_error(label, lineno, "too few columns");
    if (row[close_col].empty())
      data_error(label, lineno, "blank close");
    double close;
    try {
      std::size_t used = 0;
      close = std::stod(row[close_col], &used);
      if (used != row[close_col].size()) throw std::invalid_argument("trail");
    } catch (const std::exception&) {
      data_error(label, lineno, "unparseable close '" + row[close_col] + "'");
    }
    if (!(close > 0.0) || !std::isfinite(close))
      data_error(label, lineno, "close must be positive");
    try {
      parse_date(row[date_col]);
    } catch (const std::runtime_error& e) {
      data_error(label, lineno, e.what());
    }
    p.dates.push_back(row[date_col]);
    p.close.push_back(close);
  }
  p.validate();
  return p;
}

Dataset parse_dataset_csv(std::istream& in, const std::string& label) {
  Dataset d;
  d.label = label;
  std::string line;
  if (!std::getline(in, line)) data_error(label, 1, "empty file");
  const std::size_t y_col = column_index(split_row(line), "y", label);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto row = split_row(line);
    if (row.size() <= y_col) data_error(label, lineno, "too few columns");
    double y;
    try {
      std::size_t used = 0;
      y = std::stod(row[y_col], &used);
      if (used != row[y_col].size()) throw std::invalid_argument("trail");
    } catch (const std::exception&) {
      data_error(label, lineno, "unparseable value '" + row[y_col] + "'");
    }
    if (!std::isfinite(y)) data_error(label, lineno, "non-finite value");
    d.y.push_back(y);
  }
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(label.empty() ? e.what() : label + ": " + e.what());
  }
  return d;
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream os;
  os.precision(17);
  os << "t,y\n";
  for (std::size_t t = 0; t < d.y.size(); ++t)
    os << (t + 1) << ',' << d.y[t] << '\n';
  return os.str();
}

std::string stats_to_json(const SummaryStats& s, const std::string& label) {
  nlohmann::json j;
  j["series"] = label;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["min"] = s.min;
  j["max"] = s.max;
  j["skewness"] = s.skewness;
  j["kurtosis"] = s.kurtosis;
  return j.dump(2);
}

}  // namespace dynssv

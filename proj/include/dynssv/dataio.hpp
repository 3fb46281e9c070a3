// Price ingestion, mean-corrected percentage returns, and the moment
// summaries used to describe them.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dynssv/model.hpp"

namespace dynssv {

struct PriceSeries {
  std::vector<std::string> dates;  // ISO-8601 calendar dates
  std::vector<double> close;
  std::string label;

  // Strictly increasing real calendar dates, positive closes, length >= 3.
  void validate() const;
};

// y_t = 100 (log P_t - log P_{t-1} - mean log-difference); length - 1
// observations, mean exactly zero up to rounding.
Dataset compute_returns(const PriceSeries& p);

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // m4 / m2^2, so a normal sample sits near 3
};

// Population (biased) moment estimators. Requires n >= 4 and positive
// variance.
SummaryStats summary_stats(std::span<const double> y);
inline SummaryStats summary_stats(const Dataset& d) {
  return summary_stats(std::span<const double>(d.y));
}

// Sample skewness of each trailing window; the first window - 1 positions
// and any zero-variance window are NaN.
std::vector<double> rolling_skewness(std::span<const double> y,
                                     std::size_t window = 200);

// CSV with a header row naming `date` and `close` columns; other columns
// are ignored. Blank or non-positive closes are rejected with a row index.
PriceSeries parse_price_csv(std::istream& in, const std::string& label = "");

// CSV with `t,y` columns as written by dataset_to_csv.
Dataset parse_dataset_csv(std::istream& in, const std::string& label = "");

std::string dataset_to_csv(const Dataset& d);
std::string stats_to_json(const SummaryStats& s, const std::string& label);

}  // namespace dynssv

#pragma once

// Benjamini-Hochberg step-up procedure.

#include "peakfdr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace peakfdr {

struct PValueSeries
{
  std::vector<double> values;
  std::vector<std::size_t> ids; // candidate identifier per value

  std::size_t size() const { return values.size(); }

  static PValueSeries from_values(std::vector<double> values)
  {
    PValueSeries s;
    s.ids.resize(values.size());
    std::iota(s.ids.begin(), s.ids.end(), std::size_t{0});
    s.values = std::move(values);
    return s;
  }

  void validate() const
  {
    require(ids.size() == values.size(), "PValueSeries: one id per value");
    for (double p : values)
      require(p >= 0.0 && p <= 1.0, "PValueSeries: p-values must lie in [0, 1]");
  }
};

struct BhResult
{
  std::vector<std::size_t> rejected; // ids, ascending
  std::optional<double> threshold;   // p_(k*) when k* exists
};

/// Rejects every hypothesis with p <= p_(k*), k* the largest k with
/// p_(k) <= k alpha / m.
inline BhResult bh_reject(const PValueSeries& series, double alpha)
{
  require(alpha > 0 && alpha < 1, "bh_reject: alpha must lie in (0, 1)");
  series.validate();
  const std::size_t m = series.size();
  BhResult result;
  if (m == 0)
    return result;
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = m; k >= 1; --k)
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
      result.threshold = sorted[k - 1];
      break;
    }
  if (!result.threshold)
    return result;
  for (std::size_t i = 0; i < m; ++i)
    if (series.values[i] <= *result.threshold)
      result.rejected.push_back(series.ids[i]);
  std::sort(result.rejected.begin(), result.rejected.end());
  return result;
}

} // namespace peakfdr

#pragma once

// Kernel smoothing and discrete local-maximum extraction on a circular grid.

#include "peakfdr/error.hpp"
#include "peakfdr/numerics.hpp"
#include "peakfdr/signal_model.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace peakfdr {

struct KernelSpec
{
  double bandwidth = 1.0;  // gamma
  double truncation = 6.0; // radius in standard deviations

  void validate() const
  {
    require(bandwidth > 0, "KernelSpec: bandwidth must be positive");
    require(truncation > 0, "KernelSpec: truncation must be positive");
  }
};

struct Candidate
{
  std::size_t index = 0;
  double height = 0.0;
  std::map<int, double> neighbor_heights; // signed offset -> smoothed value
  std::optional<double> p_value;
  std::optional<double> p_value_stderr; // Monte-Carlo p-values only
};

inline Measurement smooth(const Measurement& m, const KernelSpec& k)
{
  m.validate();
  k.validate();
  const auto kernel = gaussian_kernel_weights(k.bandwidth, m.dt, k.truncation);
  if (kernel.size() >= m.size())
    throw kernel_too_wide("smooth: kernel window is not shorter than the measurement");
  Measurement out;
  out.dt = m.dt;
  out.origin = m.origin;
  out.samples = circular_convolve(m.samples, kernel);
  return out;
}

/// Indices strictly above both circular neighbours. A plateau of equal values
/// strictly above its flanks yields one candidate at its (left-)center.
inline std::vector<Candidate> find_local_maxima(const Measurement& m)
{
  const auto& y = m.samples;
  const std::size_t n = y.size();
  require(n >= 3, "find_local_maxima: need at least 3 samples");
  // Start at the beginning of a run so no plateau straddles the walk origin.
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] != y[(i + n - 1) % n]) {
      start = i;
      break;
    }
  std::vector<Candidate> out;
  if (start == n)
    return out; // constant
  std::size_t pos = start;
  std::size_t walked = 0;
  while (walked < n) {
    std::size_t run = 1;
    while (run < n && y[(pos + run) % n] == y[pos])
      ++run;
    const double before = y[(pos + n - 1) % n];
    const double after = y[(pos + run) % n];
    if (y[pos] > before && y[pos] > after) {
      const std::size_t idx = (pos + (run - 1) / 2) % n;
      out.push_back(Candidate{idx, y[idx], {}, std::nullopt, std::nullopt});
    }
    pos = (pos + run) % n;
    walked += run;
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.index < b.index; });
  return out;
}

inline std::vector<Candidate> collect_neighbors(const Measurement& m, std::vector<Candidate> candidates,
                                                const std::vector<int>& offsets)
{
  const auto n = static_cast<long long>(m.size());
  for (int off : offsets)
    require(off != 0, "collect_neighbors: offsets must be non-zero");
  for (auto& c : candidates)
    for (int off : offsets) {
      auto j = (static_cast<long long>(c.index) + off) % n;
      if (j < 0)
        j += n;
      c.neighbor_heights[off] = m.samples[static_cast<std::size_t>(j)];
    }
  return candidates;
}

} // namespace peakfdr

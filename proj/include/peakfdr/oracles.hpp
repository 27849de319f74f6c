#pragma once

// Independent reference computations for validating the statistical kernels.
// These take different routes from the production code: brute force instead
// of sorting, simulation instead of closed forms, quadrature instead of
// algebra.

#include "peakfdr/filtering.hpp"
#include "peakfdr/numerics.hpp"
#include "peakfdr/palm.hpp"
#include "peakfdr/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace peakfdr::oracle {

/// sigma^2 * integral of the squared k-th derivative of the N(0, xi^2) density.
inline double squared_derivative_integral(double sigma, double xi, int order,
                                          const QuadratureSpec& quad = {1e-12, 1e-300, 4096, 12.0})
{
  const auto f = [&](double s) {
    const double density = std_normal_pdf(s / xi) / xi;
    double v = density;
    if (order == 1)
      v = -s / (xi * xi) * density;
    else if (order == 2)
      v = (s * s / (xi * xi * xi * xi) - 1.0 / (xi * xi)) * density;
    return v * v;
  };
  // Split at 0 so each half is smooth and unimodal enough for tight tolerances.
  return sigma * sigma * (integrate(f, -infinity, 0.0, quad, {0.0, xi}) +
                          integrate(f, 0.0, infinity, quad, {0.0, xi}));
}

/// Benjamini-Hochberg by the counting definition: k* is the largest k with
/// at least k p-values <= k alpha / m; every p <= k* alpha / m is rejected.
inline std::vector<std::size_t> bh_brute_force(const std::vector<double>& p, double alpha)
{
  const std::size_t m = p.size();
  std::size_t best = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double cut = static_cast<double>(k) * alpha / static_cast<double>(m);
    const auto count = static_cast<std::size_t>(
        std::count_if(p.begin(), p.end(), [&](double v) { return v <= cut; }));
    if (count >= k)
      best = k;
  }
  std::vector<std::size_t> out;
  if (best == 0)
    return out;
  const double cut = static_cast<double>(best) * alpha / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    if (p[i] <= cut)
      out.push_back(i);
  return out;
}

// Pure-noise local maxima of the smoothed measurement, generated the way a
// real detection run sees them: raw nu-noise, then the gamma smoother.
struct NullMaxima
{
  std::vector<double> peaks;
  std::vector<double> neighbors; // value at the configured offset
};

inline NullMaxima simulate_smoothed_maxima(double sigma, double nu, double gamma, int offset,
                                           std::size_t count, std::uint64_t seed,
                                           std::size_t segment = 1 << 16)
{
  NullMaxima out;
  out.peaks.reserve(count);
  out.neighbors.reserve(count);
  for (std::uint64_t s = 0; out.peaks.size() < count; ++s) {
    Measurement m;
    m.samples = generate_noise(NoiseSpec{sigma, nu}, segment, 1.0, seed, 1000 + s);
    const auto smoothed = smooth(m, KernelSpec{gamma, 6.0});
    const auto maxima = collect_neighbors(smoothed, find_local_maxima(smoothed), {offset});
    for (const auto& c : maxima) {
      if (out.peaks.size() == count)
        break;
      out.peaks.push_back(c.height);
      out.neighbors.push_back(c.neighbor_heights.at(offset));
    }
  }
  return out;
}

/// Kolmogorov distance between the empirical CDF of `heights` and the Palm
/// CDF 1 - F(u).
inline double palm_ks_distance(std::vector<double> heights, const NoiseMoments& moments)
{
  std::sort(heights.begin(), heights.end());
  const double n = static_cast<double>(heights.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const double model = 1.0 - palm_upper_tail(heights[i], moments);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    worst = std::max({worst, std::abs(model - lo), std::abs(model - hi)});
  }
  return worst;
}

struct FrequencyEstimate
{
  double frequency = 0.0;
  std::size_t hits = 0;
  std::size_t events = 0;
};

/// Fraction of null maxima whose peak exceeds `peak` and neighbour exceeds `neighbor`.
inline FrequencyEstimate joint_exceedance(const NullMaxima& sample, double peak, double neighbor)
{
  FrequencyEstimate e;
  e.events = sample.peaks.size();
  for (std::size_t i = 0; i < e.events; ++i)
    if (sample.peaks[i] > peak && sample.neighbors[i] > neighbor)
      ++e.hits;
  e.frequency = e.events ? static_cast<double>(e.hits) / static_cast<double>(e.events) : 0.0;
  return e;
}

} // namespace peakfdr::oracle

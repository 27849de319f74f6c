#pragma once

// Scalar special functions, adaptive quadrature and seeded sampling shared by
// the rest of the library. Everything here is a pure function.

#include "peakfdr/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace peakfdr {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

inline double std_normal_pdf(double x)
{
  constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Lower tail Phi(x). erfc keeps full relative precision deep in the left tail.
inline double std_normal_cdf(double x)
{
  if (std::isinf(x))
    return x > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Upper tail 1 - Phi(x), accurate for large positive x.
inline double std_normal_sf(double x)
{
  return std_normal_cdf(-x);
}

/// P(X > threshold | X <= upper_bound) for X ~ Normal(mean, sd^2).
///
/// Throws degenerate_truncation when the conditioning event underflows.
inline double truncated_normal_upper_tail(double mean, double sd, double upper_bound,
                                          double threshold)
{
  require(sd > 0, "truncated_normal_upper_tail: sd must be positive");
  if (threshold >= upper_bound)
    return 0.0;
  const double zu = (upper_bound - mean) / sd;
  const double zt = (threshold - mean) / sd;
  const double mass = std_normal_cdf(zu);
  if (!(mass > 0))
    throw degenerate_truncation();
  // Difference of upper tails loses nothing when both points sit right of the mean.
  const double inside = zt > 0 ? std_normal_sf(zt) - std_normal_sf(zu)
                               : std_normal_cdf(zu) - std_normal_cdf(zt);
  return std::clamp(inside / mass, 0.0, 1.0);
}

struct QuadratureSpec
{
  double relative_tolerance = 1e-8;
  double absolute_tolerance = 1e-12;
  int max_subdivisions = 200;
  // Infinite endpoints are replaced by center +- cutoff * scale.
  double infinite_tail_cutoff = 10.0;

  void validate() const
  {
    require(relative_tolerance > 0 && absolute_tolerance > 0,
            "QuadratureSpec: tolerances must be positive");
    require(max_subdivisions >= 1, "QuadratureSpec: max_subdivisions must be >= 1");
    require(infinite_tail_cutoff > 0, "QuadratureSpec: tail cutoff must be positive");
  }
};

// Location and scale of the Gaussian factor that dominates an integrand's
// tails. Used only to place the cutoff for infinite endpoints.
struct TailFrame
{
  double center = 0.0;
  double scale = 1.0;
};

/// Adaptive 15-point Gauss-Kronrod integration of f over [lower, upper].
///
/// Either endpoint may be infinite; it is then truncated at
/// frame.center +- spec.infinite_tail_cutoff * frame.scale. Throws
/// non_convergence when the error estimate exceeds the tolerance after
/// spec.max_subdivisions bisections.
template <class F>
double integrate(F&& f, double lower, double upper, const QuadratureSpec& spec = {},
                 TailFrame frame = {})
{
  spec.validate();
  require(!std::isnan(lower) && !std::isnan(upper), "integrate: NaN bound");
  const double reach = spec.infinite_tail_cutoff * frame.scale;
  if (std::isinf(lower))
    lower = lower < 0 ? frame.center - reach : frame.center + reach;
  if (std::isinf(upper))
    upper = upper < 0 ? frame.center - reach : frame.center + reach;
  if (lower == upper)
    return 0.0;

  const auto depth =
      static_cast<unsigned>(std::ceil(std::log2(static_cast<double>(spec.max_subdivisions))));
  double err = 0.0;
  double l1 = 0.0;
  // Boost stops bisecting on a per-level test, so the summed estimate can land
  // just above tol * L1. Aim lower than the acceptance bound.
  const double target = spec.relative_tolerance / 16.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double x) { return static_cast<double>(f(x)); }, lower, upper, std::max(depth, 1u),
      target, &err, &l1);
  if (!std::isfinite(value) ||
      err > std::max(spec.absolute_tolerance, spec.relative_tolerance * l1))
    throw non_convergence("integrate: tolerance not reached within subdivision limit");
  return value;
}

// Engine for the independent stream (seed, stream_id). Streams are derived by
// seeding, never by advancing shared state.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x70eaU};
  return std::mt19937_64(seq);
}

inline std::vector<double> sample_std_normals(std::uint64_t seed, std::uint64_t stream_id,
                                              std::size_t count)
{
  auto engine = make_engine(seed, stream_id);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(count);
  for (auto& x : out)
    x = normal(engine);
  return out;
}

/// Gaussian density of standard deviation `sd` sampled at k*dt for
/// |k| <= ceil(truncation * sd / dt), renormalized to unit sum.
/// Index k + radius holds the weight for offset k.
inline std::vector<double> gaussian_kernel_weights(double sd, double dt, double truncation)
{
  require(sd > 0 && dt > 0 && truncation > 0, "gaussian_kernel_weights: bad arguments");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(truncation * sd / dt));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double v = std_normal_pdf(static_cast<double>(k) * dt / sd);
    w[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  for (auto& v : w)
    v /= total;
  return w;
}

// out[i] = sum_k kernel[k + r] * x[(i - k) mod n] for an odd-length kernel of
// radius r <= n.
inline std::vector<double> circular_convolve(const std::vector<double>& x,
                                             const std::vector<double>& kernel)
{
  const std::size_t n = x.size();
  require(kernel.size() % 2 == 1, "circular_convolve: kernel length must be odd");
  const std::size_t radius = kernel.size() / 2;
  require(radius <= n, "circular_convolve: kernel radius exceeds signal length");
  // padded[m] = x[(m - radius) mod n]
  std::vector<double> padded(n + 2 * radius);
  for (std::size_t m = 0; m < padded.size(); ++m)
    padded[m] = x[(m + n - radius % n) % n];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // x[i - k] = padded[i - k + radius]; kernel index k + radius runs 0..2r.
    double acc = 0.0;
    const double* base = padded.data() + i + 2 * radius;
    for (std::size_t q = 0; q < kernel.size(); ++q)
      acc += kernel[q] * base[-static_cast<std::ptrdiff_t>(q)];
    out[i] = acc;
  }
  return out;
}

} // namespace peakfdr

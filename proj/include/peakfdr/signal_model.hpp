#pragma once

// Synthetic measurements y = mu + z: a train of truncated Gaussian bumps plus
// Gaussian-kernel-smoothed white noise on a uniform circular grid.

#include "peakfdr/error.hpp"
#include "peakfdr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace peakfdr {

struct Measurement
{
  double dt = 1.0;
  double origin = 0.0;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t i) const { return origin + static_cast<double>(i) * dt; }

  void validate() const
  {
    require(dt > 0, "Measurement: grid spacing must be positive");
    require(samples.size() >= 3, "Measurement: need at least 3 samples");
    require(std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); }),
            "Measurement: samples must be finite");
  }
};

struct SignalSpec
{
  double amplitude = 1.0;
  double width = 3.0;              // sd of the Gaussian bump
  double support_multiplier = 3.0; // support is center +- multiplier * width
  std::vector<double> centers;
  // Optional per-occurrence amplitudes; empty means `amplitude` for all.
  std::vector<double> amplitudes;

  double support_half_width() const { return support_multiplier * width; }

  double amplitude_of(std::size_t j) const
  {
    return amplitudes.empty() ? amplitude : amplitudes[j];
  }

  void validate(std::size_t length, double dt, double origin = 0.0) const
  {
    require(amplitude > 0, "SignalSpec: amplitude must be positive");
    require(width > 0 && support_multiplier > 0, "SignalSpec: width and multiplier must be positive");
    require(amplitudes.empty() || amplitudes.size() == centers.size(),
            "SignalSpec: amplitudes must match centers");
    require(std::all_of(amplitudes.begin(), amplitudes.end(), [](double a) { return a > 0; }),
            "SignalSpec: amplitudes must be positive");
    const double hi = origin + static_cast<double>(length - 1) * dt;
    const double hw = support_half_width();
    for (double c : centers)
      require(c - hw >= origin && c + hw <= hi, "SignalSpec: support exceeds the measurement domain");
  }
};

struct NoiseSpec
{
  double sigma = 1.0;
  double bandwidth = 1.0; // nu

  void validate() const
  {
    require(sigma >= 0, "NoiseSpec: sigma must be non-negative");
    require(bandwidth > 0, "NoiseSpec: bandwidth must be positive");
  }
};

inline constexpr double noise_kernel_truncation = 6.0;

inline std::vector<double> signal_train(const SignalSpec& spec, std::size_t length, double dt = 1.0,
                                        double origin = 0.0)
{
  require(length >= 3, "signal_train: need at least 3 samples");
  spec.validate(length, dt, origin);
  std::vector<double> mu(length, 0.0);
  const double hw = spec.support_half_width();
  for (std::size_t j = 0; j < spec.centers.size(); ++j) {
    const double tau = spec.centers[j];
    const double scale = spec.amplitude_of(j) / spec.width;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((tau - hw - origin) / dt)));
    for (std::size_t i = first; i < length; ++i) {
      const double t = origin + static_cast<double>(i) * dt;
      if (t - tau > hw)
        break;
      if (std::abs(t - tau) <= hw)
        mu[i] += scale * std_normal_pdf((t - tau) / spec.width);
    }
  }
  return mu;
}

/// sigma * sum_k phi_nu(k dt) dB_{i-k}: increments dB ~ Normal(0, dt), circular.
inline std::vector<double> generate_noise(const NoiseSpec& spec, std::size_t length, double dt,
                                          std::uint64_t seed, std::uint64_t stream_id)
{
  spec.validate();
  require(length >= 3, "generate_noise: need at least 3 samples");
  require(dt > 0, "generate_noise: grid spacing must be positive");
  if (spec.sigma == 0)
    return std::vector<double>(length, 0.0);
  const auto kernel = gaussian_kernel_weights(spec.bandwidth, dt, noise_kernel_truncation);
  if (kernel.size() >= length)
    throw kernel_too_wide("generate_noise: noise kernel longer than the measurement");
  auto increments = sample_std_normals(seed, stream_id, length);
  // Unit-sum weights are phi_nu(k dt) * dt, so scaling by 1/dt recovers the
  // density; dB = sqrt(dt) * N(0, 1).
  const double scale = spec.sigma * std::sqrt(dt) / dt;
  auto z = circular_convolve(increments, kernel);
  for (auto& v : z)
    v *= scale;
  return z;
}

struct SynthesisParts
{
  std::vector<double> mu;
  std::vector<double> z;
  Measurement measurement;
};

inline SynthesisParts synthesize_parts(const SignalSpec& signal, const NoiseSpec& noise,
                                       std::size_t length, double dt, std::uint64_t seed,
                                       std::uint64_t stream_id)
{
  SynthesisParts parts;
  parts.mu = signal_train(signal, length, dt);
  parts.z = generate_noise(noise, length, dt, seed, stream_id);
  parts.measurement.dt = dt;
  parts.measurement.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i)
    parts.measurement.samples[i] = parts.mu[i] + parts.z[i];
  return parts;
}

inline Measurement synthesize(const SignalSpec& signal, const NoiseSpec& noise, std::size_t length,
                              double dt, std::uint64_t seed, std::uint64_t stream_id)
{
  return synthesize_parts(signal, noise, length, dt, seed, stream_id).measurement;
}

/// Uniformly random centers whose supports fit in the domain with at least
/// `min_gap` between adjacent supports.
///
/// Uses the spacing transform: sorted uniforms on the slack interval shifted
/// by j * (2 * half_width + min_gap). This is exactly the law of whole-set
/// rejection sampling, without the rejection loop.
inline std::vector<double> place_occurrences(std::size_t count, std::size_t length, double dt,
                                             double support_half_width, double min_gap,
                                             std::uint64_t seed, std::uint64_t stream_id)
{
  require(length >= 3 && dt > 0, "place_occurrences: bad grid");
  require(support_half_width >= 0 && min_gap >= 0, "place_occurrences: negative widths");
  if (count == 0)
    return {};
  const double lo = support_half_width;
  const double hi = static_cast<double>(length - 1) * dt - support_half_width;
  const double pitch = 2.0 * support_half_width + min_gap;
  const double slack = hi - lo - static_cast<double>(count - 1) * pitch;
  if (slack < 0)
    throw infeasible_placement("place_occurrences: domain cannot fit the requested occurrences");
  auto engine = make_engine(seed, stream_id);
  std::uniform_real_distribution<double> uniform(0.0, slack);
  std::vector<double> centers(count);
  for (auto& c : centers)
    c = uniform(engine);
  std::sort(centers.begin(), centers.end());
  for (std::size_t j = 0; j < count; ++j)
    centers[j] += lo + static_cast<double>(j) * pitch;
  return centers;
}

} // namespace peakfdr

#pragma once

// Joint p-value of a local maximum and neighbouring samples.
//
// K = 2 is evaluated by quadrature: the Palm density of the peak times the
// probability that the neighbour exceeds its observed value, where the
// neighbour given the peak height u is Normal(rho u, sigma^2 (1 - rho^2))
// truncated above at u. K > 2 is estimated by Monte Carlo over simulated
// null maxima.

#include "peakfdr/error.hpp"
#include "peakfdr/filtering.hpp"
#include "peakfdr/numerics.hpp"
#include "peakfdr/palm.hpp"
#include "peakfdr/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace peakfdr {

enum class SidePolicy { right, left, both_min, both_max };

inline std::string to_string(SidePolicy p)
{
  switch (p) {
  case SidePolicy::right:
    return "right";
  case SidePolicy::left:
    return "left";
  case SidePolicy::both_min:
    return "both-min";
  case SidePolicy::both_max:
    return "both-max";
  }
  return "right";
}

inline SidePolicy parse_side_policy(const std::string& s)
{
  if (s == "right")
    return SidePolicy::right;
  if (s == "left")
    return SidePolicy::left;
  if (s == "both-min")
    return SidePolicy::both_min;
  if (s == "both-max")
    return SidePolicy::both_max;
  throw invalid_argument("unknown side policy '" + s + "'");
}

struct NeighborConfig
{
  int samples = 2;  // K: the peak plus K - 1 neighbours
  int distance = 2; // d, in grid samples
  SidePolicy policy = SidePolicy::right;
  std::size_t mc_samples = 200000;

  void validate() const
  {
    require(samples >= 2, "NeighborConfig: K must be >= 2");
    require(distance >= 1, "NeighborConfig: distance must be >= 1");
  }
};

// Offsets whose smoothed values a candidate needs. For K = 2 this follows the
// side policy; for K > 2 it is +d, -d, +2d, -2d, ... truncated to K - 1.
inline std::vector<int> neighbor_offsets(const NeighborConfig& config)
{
  config.validate();
  const int d = config.distance;
  if (config.samples == 2) {
    switch (config.policy) {
    case SidePolicy::right:
      return {d};
    case SidePolicy::left:
      return {-d};
    default:
      return {-d, d};
    }
  }
  std::vector<int> out;
  for (int i = 0; static_cast<int>(out.size()) < config.samples - 1; ++i) {
    const int step = (i / 2 + 1) * d;
    out.push_back(i % 2 == 0 ? step : -step);
  }
  return out;
}

/// Lag correlation of Gaussian-xi-smoothed white noise.
inline double neighbor_correlation(double lag, double xi)
{
  require(lag >= 0 && xi > 0, "neighbor_correlation: need lag >= 0, xi > 0");
  return std::exp(-lag * lag / (4.0 * xi * xi));
}

struct JointNullModel
{
  NoiseMoments moments;
  double correlation = 0.0;
  double conditional_sd = 0.0;
  double dt = 1.0;

  void validate() const
  {
    moments.validate();
    require(std::abs(correlation) < 1.0, "JointNullModel: |rho| must be < 1");
    require(conditional_sd > 0, "JointNullModel: conditional sd must be positive");
  }
};

inline JointNullModel make_joint_null_model(const NoiseMoments& moments, int distance,
                                            double dt = 1.0)
{
  moments.validate();
  require(distance >= 1, "make_joint_null_model: distance must be >= 1");
  JointNullModel model;
  model.moments = moments;
  model.dt = dt;
  model.correlation = neighbor_correlation(static_cast<double>(distance) * dt, moments.bandwidth);
  model.conditional_sd =
      moments.sigma_gamma() * std::sqrt(1.0 - model.correlation * model.correlation);
  model.validate();
  return model;
}

/// P(neighbour > s1 | peak = u, neighbour <= u) under the truncated Gaussian
/// conditional. A numerically impossible truncation event maps to 0.
inline double conditional_neighbor_tail(double u, double s1, const JointNullModel& model)
{
  if (s1 >= u)
    return 0.0;
  try {
    return truncated_normal_upper_tail(model.correlation * u, model.conditional_sd, u, s1);
  } catch (const degenerate_truncation&) {
    return 0.0;
  }
}

/// P(peak > s_m, neighbour > s1) for a null local maximum.
inline double two_sample_pvalue(double peak, double neighbor, const JointNullModel& model,
                                const QuadratureSpec& quad = {})
{
  model.validate();
  if (peak == infinity)
    return 0.0;
  const double sigma = model.moments.sigma_gamma();
  // Upper limit peak + cutoff * sigma; for peak = -inf both ends come from the frame.
  const double upper = std::isinf(peak) ? infinity : peak + quad.infinite_tail_cutoff * sigma;
  // The conditional tail vanishes for u <= neighbour.
  const double lower = std::max(peak, neighbor);
  if (!std::isinf(upper) && lower >= upper)
    return 0.0;
  const auto integrand = [&](double u) {
    return palm_density(u, model.moments) * conditional_neighbor_tail(u, neighbor, model);
  };
  const double value = integrate(integrand, lower, upper, quad, TailFrame{0.0, sigma});
  return std::clamp(value, 0.0, 1.0);
}

inline double select_neighbor(const Candidate& candidate, const NeighborConfig& config)
{
  const int d = config.distance;
  const auto at = [&](int off) {
    const auto it = candidate.neighbor_heights.find(off);
    if (it == candidate.neighbor_heights.end())
      throw missing_neighbor("select_neighbor: no neighbour height at offset " +
                             std::to_string(off));
    return it->second;
  };
  switch (config.policy) {
  case SidePolicy::right:
    return at(d);
  case SidePolicy::left:
    return at(-d);
  case SidePolicy::both_min:
    return std::min(at(-d), at(d));
  case SidePolicy::both_max:
    return std::max(at(-d), at(d));
  }
  return at(d);
}

struct McEstimate
{
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t events = 0; // conditioning events (null maxima) used
};

// Heights at simulated null local maxima and at fixed offsets from them.
struct NullMaximaBank
{
  std::vector<int> offsets;
  std::vector<double> peaks;
  std::vector<std::vector<double>> neighbors; // neighbors[j][i]: offset j, maximum i

  std::size_t size() const { return peaks.size(); }

  McEstimate exceedance(double peak_threshold, const std::vector<double>& neighbor_thresholds) const
  {
    require(neighbor_thresholds.size() == offsets.size(),
            "NullMaximaBank: one threshold per offset required");
    if (peaks.size() < 1000)
      throw insufficient_maxima("Monte-Carlo p-value needs at least 1000 null maxima");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      bool all = peaks[i] > peak_threshold;
      for (std::size_t j = 0; all && j < offsets.size(); ++j)
        all = neighbors[j][i] > neighbor_thresholds[j];
      hits += all ? 1 : 0;
    }
    const double n = static_cast<double>(peaks.size());
    const double p = static_cast<double>(hits) / n;
    return McEstimate{p, std::sqrt(p * (1.0 - p) / n), peaks.size()};
  }
};

/// Simulates stationary null noise with the model's covariance (Gaussian
/// correlation at the moments' bandwidth) on circular segments and records
/// `count` local maxima with their offset heights.
inline NullMaximaBank simulate_null_maxima(const JointNullModel& model, const std::vector<int>& offsets,
                                           std::size_t count, std::uint64_t seed,
                                           std::uint64_t stream_id)
{
  model.validate();
  const double xi = model.moments.bandwidth;
  constexpr double sqrt_pi = 1.7724538509055160272981674833411;
  // Invert Var z = sigma^2 / (2 sqrt(pi) xi).
  const NoiseSpec noise{std::sqrt(model.moments.sigma_gamma_sq * 2.0 * sqrt_pi * xi), xi};
  const auto segment = static_cast<std::size_t>(
      std::max(4096.0, 200.0 * std::ceil(xi / model.dt)));

  NullMaximaBank bank;
  bank.offsets = offsets;
  bank.neighbors.assign(offsets.size(), {});
  auto seeder = make_engine(seed, stream_id);
  const std::uint64_t child_seed = seeder();
  for (std::uint64_t s = 0; bank.peaks.size() < count; ++s) {
    Measurement m;
    m.dt = model.dt;
    m.samples = generate_noise(noise, segment, model.dt, child_seed, s);
    auto maxima = collect_neighbors(m, find_local_maxima(m), offsets);
    for (const auto& c : maxima) {
      if (bank.peaks.size() == count)
        break;
      bank.peaks.push_back(c.height);
      for (std::size_t j = 0; j < offsets.size(); ++j)
        bank.neighbors[j].push_back(c.neighbor_heights.at(offsets[j]));
    }
  }
  return bank;
}

/// Monte-Carlo estimate of P(peak > thresholds[0], neighbour_j > thresholds[j + 1]).
inline McEstimate k_sample_pvalue_mc(const std::vector<double>& thresholds,
                                     const std::vector<int>& offsets, const JointNullModel& model,
                                     std::size_t mc_samples, std::uint64_t seed,
                                     std::uint64_t stream_id)
{
  require(thresholds.size() >= 2, "k_sample_pvalue_mc: K must be >= 2");
  require(offsets.size() + 1 == thresholds.size(), "k_sample_pvalue_mc: need K - 1 offsets");
  if (mc_samples < 1000)
    throw insufficient_maxima("Monte-Carlo p-value needs at least 1000 null maxima");
  const auto bank = simulate_null_maxima(model, offsets, mc_samples, seed, stream_id);
  return bank.exceedance(thresholds[0], {thresholds.begin() + 1, thresholds.end()});
}

} // namespace peakfdr

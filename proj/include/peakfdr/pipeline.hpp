#pragma once

// End-to-end detection: smooth, find local maxima, assign p-values, apply BH.

#include "peakfdr/error.hpp"
#include "peakfdr/filtering.hpp"
#include "peakfdr/ksample.hpp"
#include "peakfdr/multitest.hpp"
#include "peakfdr/palm.hpp"
#include "peakfdr/signal_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace peakfdr {

enum class DetectionMethod { one_sample, k_sample };

inline std::string to_string(DetectionMethod m)
{
  return m == DetectionMethod::one_sample ? "one-sample" : "k-sample";
}

struct DetectionParams
{
  KernelSpec kernel;
  NoiseSpec noise;
  double alpha = 0.05;
  MomentsBandwidth bandwidth = MomentsBandwidth::composed;
  NeighborConfig neighbors;
  QuadratureSpec quadrature;
  // Debug: replace every neighbour threshold by -inf.
  bool neighbor_floor = false;
  // RNG stream for the K > 2 Monte-Carlo null.
  std::uint64_t mc_seed = 0;
  std::uint64_t mc_stream = 0;

  void validate() const
  {
    kernel.validate();
    noise.validate();
    require(noise.sigma > 0, "DetectionParams: noise sigma must be positive");
    require(alpha > 0 && alpha < 1, "DetectionParams: alpha must lie in (0, 1)");
    neighbors.validate();
  }

  NoiseMoments moments() const
  {
    return noise_moments(noise.sigma, moments_bandwidth(noise.bandwidth, kernel.bandwidth, bandwidth));
  }
};

struct DetectionResult
{
  DetectionMethod method = DetectionMethod::one_sample;
  std::vector<Candidate> candidates;
  std::vector<std::size_t> detected; // grid indices of rejected candidates
  std::optional<double> bh_threshold;
  DetectionParams params;
  double dt = 1.0;
  double origin = 0.0;
};

namespace detail {

inline DetectionResult finish(DetectionMethod method, std::vector<Candidate> candidates,
                              const DetectionParams& params, const Measurement& m)
{
  std::vector<double> p;
  p.reserve(candidates.size());
  for (const auto& c : candidates)
    p.push_back(*c.p_value);
  const auto bh = bh_reject(PValueSeries::from_values(std::move(p)), params.alpha);
  DetectionResult r;
  r.method = method;
  for (auto id : bh.rejected)
    r.detected.push_back(candidates[id].index);
  r.candidates = std::move(candidates);
  r.bh_threshold = bh.threshold;
  r.params = params;
  r.dt = m.dt;
  r.origin = m.origin;
  return r;
}

} // namespace detail

inline DetectionResult one_sample_test(const Measurement& m, const DetectionParams& params)
{
  params.validate();
  const auto smoothed = smooth(m, params.kernel);
  auto candidates = find_local_maxima(smoothed);
  const auto moments = params.moments();
  for (auto& c : candidates)
    c.p_value = one_sample_pvalue(c.height, moments);
  return detail::finish(DetectionMethod::one_sample, std::move(candidates), params, m);
}

inline DetectionResult one_sample_test(const Measurement& m, const KernelSpec& kernel,
                                       const NoiseSpec& noise, double alpha)
{
  DetectionParams params;
  params.kernel = kernel;
  params.noise = noise;
  params.alpha = alpha;
  return one_sample_test(m, params);
}

/// K = 2 uses the quadrature p-value; K > 2 the Monte-Carlo estimate, with
/// one shared bank of null maxima for all candidates.
inline DetectionResult k_sample_test(const Measurement& m, const DetectionParams& params)
{
  params.validate();
  const auto& nc = params.neighbors;
  const auto smoothed = smooth(m, params.kernel);
  const auto offsets = neighbor_offsets(nc);
  auto candidates = collect_neighbors(smoothed, find_local_maxima(smoothed), offsets);
  const auto moments = params.moments();
  const auto model = make_joint_null_model(moments, nc.distance, m.dt);

  if (nc.samples == 2) {
    for (auto& c : candidates) {
      const double s1 = params.neighbor_floor ? -infinity : select_neighbor(c, nc);
      c.p_value = two_sample_pvalue(c.height, s1, model, params.quadrature);
    }
  } else {
    if (nc.mc_samples < 1000)
      throw insufficient_maxima("k_sample_test: Monte-Carlo mode needs at least 1000 null maxima");
    const auto bank =
        simulate_null_maxima(model, offsets, nc.mc_samples, params.mc_seed, params.mc_stream);
    for (auto& c : candidates) {
      std::vector<double> thresholds;
      for (int off : offsets)
        thresholds.push_back(params.neighbor_floor ? -infinity : c.neighbor_heights.at(off));
      const auto est = bank.exceedance(c.height, thresholds);
      c.p_value = est.value;
      c.p_value_stderr = est.stderr_;
    }
  }
  return detail::finish(DetectionMethod::k_sample, std::move(candidates), params, m);
}

inline DetectionResult k_sample_test(const Measurement& m, const KernelSpec& kernel,
                                     const NoiseSpec& noise, double alpha, const NeighborConfig& nc)
{
  DetectionParams params;
  params.kernel = kernel;
  params.noise = noise;
  params.alpha = alpha;
  params.neighbors = nc;
  return k_sample_test(m, params);
}

} // namespace peakfdr

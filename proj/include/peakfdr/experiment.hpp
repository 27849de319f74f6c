#pragma once

// Monte-Carlo power / FDR harness. Each trial places signals, synthesizes one
// measurement and runs both tests on it, so the methods are compared on
// matched samples.

#include "peakfdr/error.hpp"
#include "peakfdr/pipeline.hpp"
#include "peakfdr/signal_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

namespace peakfdr {

struct TrialConfig
{
  std::size_t length = 1000;
  std::size_t n_signals = 10;
  double a = 5.0;
  double b = 3.0;
  double c = 3.0;
  double sigma = 1.0;
  double nu = 4.0;
  double gamma = 4.0;
  double alpha = 0.05;
  int d = 2;
  SidePolicy policy = SidePolicy::right;
  std::size_t n_trials = 1000;
  std::uint64_t base_seed = 0;
  MomentsBandwidth bandwidth = MomentsBandwidth::composed;
  // Gap between adjacent supports; defaults to one support width.
  std::optional<double> min_gap;

  double support_half_width() const { return c * b; }
  double gap() const { return min_gap.value_or(2.0 * support_half_width()); }

  void validate() const
  {
    require(length >= 3, "TrialConfig: L must be >= 3");
    require(a > 0 && b > 0 && c > 0, "TrialConfig: a, b, c must be positive");
    require(sigma > 0 && nu > 0 && gamma > 0, "TrialConfig: sigma, nu, gamma must be positive");
    require(alpha > 0 && alpha < 1, "TrialConfig: alpha must lie in (0, 1)");
    require(d >= 1, "TrialConfig: d must be >= 1");
    require(n_trials >= 1, "TrialConfig: n_trials must be >= 1");
    require(gap() >= 0, "TrialConfig: min_gap must be non-negative");
  }

  DetectionParams detection_params() const
  {
    DetectionParams p;
    p.kernel.bandwidth = gamma;
    p.noise = NoiseSpec{sigma, nu};
    p.alpha = alpha;
    p.bandwidth = bandwidth;
    p.neighbors.samples = 2;
    p.neighbors.distance = d;
    p.neighbors.policy = policy;
    return p;
  }
};

struct Classification
{
  std::size_t true_positives = 0;
  std::size_t false_positives = 0; // V
  std::size_t detected_signals = 0;
};

/// A detection is a true positive iff its time lies in some support
/// [tau - c b, tau + c b].
inline Classification classify_detections(const std::vector<std::size_t>& detected,
                                          const SignalSpec& signal, double dt, double origin = 0.0)
{
  Classification out;
  const double hw = signal.support_half_width();
  std::set<std::size_t> hit;
  for (auto idx : detected) {
    const double t = origin + static_cast<double>(idx) * dt;
    bool inside = false;
    // Centers are sorted and supports disjoint; a linear scan keeps this simple for 10 signals.
    for (std::size_t j = 0; j < signal.centers.size(); ++j)
      if (std::abs(t - signal.centers[j]) <= hw) {
        inside = true;
        hit.insert(j);
      }
    if (inside)
      ++out.true_positives;
    else
      ++out.false_positives;
  }
  out.detected_signals = hit.size();
  return out;
}

struct MethodOutcome
{
  std::size_t false_positives = 0; // V
  std::size_t rejections = 0;      // R
  std::size_t detected_signals = 0;

  bool operator==(const MethodOutcome&) const = default;
};

struct TrialResult
{
  std::size_t trial_index = 0;
  MethodOutcome one_sample;
  MethodOutcome two_sample;

  bool operator==(const TrialResult&) const = default;
};

inline constexpr std::uint64_t placement_stream(std::size_t trial) { return 2 * trial; }
inline constexpr std::uint64_t noise_stream(std::size_t trial) { return 2 * trial + 1; }

inline SignalSpec trial_signal(const TrialConfig& config, std::size_t trial_index)
{
  SignalSpec s;
  s.amplitude = config.a;
  s.width = config.b;
  s.support_multiplier = config.c;
  s.centers = place_occurrences(config.n_signals, config.length, 1.0, config.support_half_width(),
                                config.gap(), config.base_seed, placement_stream(trial_index));
  return s;
}

inline TrialResult run_trial(const TrialConfig& config, std::size_t trial_index)
{
  config.validate();
  const auto signal = trial_signal(config, trial_index);
  const auto m = synthesize(signal, NoiseSpec{config.sigma, config.nu}, config.length, 1.0,
                            config.base_seed, noise_stream(trial_index));
  const auto params = config.detection_params();
  const auto score = [&](const DetectionResult& r) {
    const auto cls = classify_detections(r.detected, signal, m.dt, m.origin);
    return MethodOutcome{cls.false_positives, r.detected.size(), cls.detected_signals};
  };
  TrialResult out;
  out.trial_index = trial_index;
  out.one_sample = score(one_sample_test(m, params));
  out.two_sample = score(k_sample_test(m, params));
  return out;
}

struct MethodSummary
{
  double power = 0.0;
  double power_stderr = 0.0;
  double fdr = 0.0; // E[V / max(R, 1)]
  double fdr_stderr = 0.0;
  double fdr_conditional = 0.0; // E[V / R | R > 0]
  double rejection_rate = 0.0;  // P(R > 0)
  double mean_v = 0.0;
  double mean_r = 0.0;
};

struct MetricsSummary
{
  TrialConfig config;
  MethodSummary one_sample;
  MethodSummary two_sample;
};

struct ConfigOutcome
{
  TrialConfig config;
  std::vector<TrialResult> trials; // ordered by trial index
  MetricsSummary summary;
};

// Mean and standard error (sample sd / sqrt(n)); stderr is 0 for n = 1.
inline std::pair<double, double> mean_and_stderr(const std::vector<double>& x)
{
  if (x.empty())
    return {0.0, 0.0};
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= n;
  if (x.size() < 2)
    return {mean, 0.0};
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline double trial_power(const MethodOutcome& o, std::size_t n_signals)
{
  return n_signals == 0 ? 0.0
                        : static_cast<double>(o.detected_signals) / static_cast<double>(n_signals);
}

inline double trial_fdp(const MethodOutcome& o)
{
  return static_cast<double>(o.false_positives) /
         static_cast<double>(std::max<std::size_t>(o.rejections, 1));
}

inline MethodSummary summarize_method(const std::vector<MethodOutcome>& outcomes,
                                      std::size_t n_signals)
{
  MethodSummary s;
  std::vector<double> power, fdp, fdp_positive;
  double v = 0.0, r = 0.0;
  for (const auto& o : outcomes) {
    power.push_back(trial_power(o, n_signals));
    fdp.push_back(trial_fdp(o));
    if (o.rejections > 0)
      fdp_positive.push_back(trial_fdp(o));
    v += static_cast<double>(o.false_positives);
    r += static_cast<double>(o.rejections);
  }
  const double n = static_cast<double>(outcomes.size());
  std::tie(s.power, s.power_stderr) = mean_and_stderr(power);
  std::tie(s.fdr, s.fdr_stderr) = mean_and_stderr(fdp);
  s.fdr_conditional = mean_and_stderr(fdp_positive).first;
  s.rejection_rate = n > 0 ? static_cast<double>(fdp_positive.size()) / n : 0.0;
  s.mean_v = n > 0 ? v / n : 0.0;
  s.mean_r = n > 0 ? r / n : 0.0;
  return s;
}

inline MetricsSummary summarize(const TrialConfig& config, const std::vector<TrialResult>& trials)
{
  std::vector<MethodOutcome> one, two;
  for (const auto& t : trials) {
    one.push_back(t.one_sample);
    two.push_back(t.two_sample);
  }
  return MetricsSummary{config, summarize_method(one, config.n_signals),
                        summarize_method(two, config.n_signals)};
}

/// Runs every trial of `config` on `workers` threads. Results are stored by
/// trial index, so the outcome does not depend on the worker count.
inline ConfigOutcome run_config(const TrialConfig& config, unsigned workers = 1)
{
  config.validate();
  ConfigOutcome out;
  out.config = config;
  out.trials.resize(config.n_trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < config.n_trials; i = next++) {
      try {
        out.trials[i] = run_trial(config, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = config.n_trials;
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.n_trials)));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back(work);
  }
  if (failure)
    std::rethrow_exception(failure);
  out.summary = summarize(config, out.trials);
  return out;
}

/// Runs configs in order. Each finished config is handed to `sink` before
/// the next starts, so a failing config leaves earlier results flushed.
inline std::vector<MetricsSummary> run_grid(const std::vector<TrialConfig>& configs,
                                            unsigned workers = 1,
                                            const std::function<void(const ConfigOutcome&)>& sink = {})
{
  std::vector<MetricsSummary> out;
  out.reserve(configs.size());
  for (const auto& config : configs) {
    auto outcome = run_config(config, workers);
    if (sink)
      sink(outcome);
    out.push_back(outcome.summary);
  }
  return out;
}

} // namespace peakfdr

#include "peakfdr/pipeline.hpp"
#include "peakfdr/signal_model.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace peakfdr;

namespace {
DetectionParams params(double nu, double gamma)
{
  DetectionParams p;
  p.kernel.bandwidth = gamma;
  p.noise = NoiseSpec{1.0, nu};
  return p;
}
Measurement noise_only(double nu, std::uint64_t seed, std::size_t L = 1000)
{
  Measurement m;
  m.samples = generate_noise({1.0, nu}, L, 1.0, seed, 1);
  return m;
}
} // namespace

TEST(Pipeline, ZeroNoiseBumpIsDetected)
{
  SignalSpec s;
  s.amplitude = 5;
  s.width = 3;
  s.centers = {500};
  Measurement m;
  m.samples = signal_train(s, 1000);
  // Tiny known sigma: the bump's height is astronomically significant.
  DetectionParams p = params(3, 4);
  p.noise.sigma = 1e-3;
  const auto one = one_sample_test(m, p);
  ASSERT_EQ(one.detected.size(), 1u);
  EXPECT_EQ(one.detected[0], 500u);
  const auto two = k_sample_test(m, p);
  ASSERT_EQ(two.detected.size(), 1u);
  EXPECT_EQ(two.detected[0], 500u);
}

TEST(Pipeline, NeighborFloorReproducesOneSample)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SignalSpec s;
    s.amplitude = 5;
    s.width = 2;
    s.centers = {200, 600};
    const auto m = synthesize(s, {1.0, 4.0}, 1000, 1.0, seed, 1);
    auto p = params(4, 3);
    const auto one = one_sample_test(m, p);
    p.neighbor_floor = true;
    const auto two = k_sample_test(m, p);
    EXPECT_EQ(one.detected, two.detected);
    ASSERT_EQ(one.candidates.size(), two.candidates.size());
    for (std::size_t i = 0; i < one.candidates.size(); ++i)
      EXPECT_NEAR(*one.candidates[i].p_value, *two.candidates[i].p_value, 1e-6);
  }
}

TEST(Pipeline, DetectedAreCandidatesBelowThreshold)
{
  SignalSpec s;
  s.amplitude = 6;
  s.width = 2;
  s.centers = {100, 300, 500, 700};
  const auto m = synthesize(s, {1.0, 3.0}, 1000, 1.0, 3, 1);
  for (const auto& r : {one_sample_test(m, params(3, 2)), k_sample_test(m, params(3, 2))}) {
    ASSERT_FALSE(r.detected.empty());
    ASSERT_TRUE(r.bh_threshold);
    EXPECT_LE(*r.bh_threshold, r.params.alpha);
    for (auto idx : r.detected) {
      const auto it = std::find_if(r.candidates.begin(), r.candidates.end(),
                                   [&](const Candidate& c) { return c.index == idx; });
      ASSERT_NE(it, r.candidates.end());
      EXPECT_LE(*it->p_value, *r.bh_threshold);
    }
  }
}

TEST(Pipeline, Deterministic)
{
  const auto m = noise_only(4, 8);
  const auto a = k_sample_test(m, params(4, 4));
  const auto b = k_sample_test(m, params(4, 4));
  EXPECT_EQ(a.detected, b.detected);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i)
    EXPECT_EQ(*a.candidates[i].p_value, *b.candidates[i].p_value);
}

TEST(Pipeline, OneSampleNullFamilywiseRate)
{
  // Under pure noise every rejection is false, so FDR = P(any rejection).
  int any = 0;
  const int n = 1000;
  for (int seed = 0; seed < n; ++seed)
    any += !one_sample_test(noise_only(3, static_cast<std::uint64_t>(seed)), params(3, 4))
                .detected.empty();
  const double rate = any / static_cast<double>(n);
  EXPECT_LE(rate, 0.05 + 2 * std::sqrt(rate * (1 - rate) / n));
}

TEST(Pipeline, KGreaterThanTwoAttachesStandardErrors)
{
  auto p = params(3, 2);
  p.neighbors.samples = 3;
  p.neighbors.mc_samples = 5000;
  p.mc_seed = 4;
  const auto r = k_sample_test(noise_only(3, 2, 400), p);
  ASSERT_FALSE(r.candidates.empty());
  for (const auto& c : r.candidates) {
    EXPECT_TRUE(c.p_value_stderr);
    EXPECT_EQ(c.neighbor_heights.size(), 2u);
  }
  p.neighbors.mc_samples = 10;
  EXPECT_THROW(k_sample_test(noise_only(3, 2, 400), p), insufficient_maxima);
}

TEST(Pipeline, ParameterValidation)
{
  auto p = params(3, 2);
  p.alpha = 1.0;
  EXPECT_THROW(one_sample_test(noise_only(3, 1), p), invalid_argument);
  p = params(3, 2);
  p.noise.sigma = 0;
  EXPECT_THROW(k_sample_test(noise_only(3, 1), p), invalid_argument);
  p = params(3, 200);
  EXPECT_THROW(one_sample_test(noise_only(3, 1), p), kernel_too_wide);
}

TEST(Pipeline, ConvenienceOverloadsAgree)
{
  const auto m = noise_only(4, 5);
  const auto a = one_sample_test(m, KernelSpec{3.0, 6.0}, NoiseSpec{1.0, 4.0}, 0.1);
  auto p = params(4, 3);
  p.alpha = 0.1;
  EXPECT_EQ(a.detected, one_sample_test(m, p).detected);
  NeighborConfig nc;
  nc.policy = SidePolicy::both_min;
  const auto b = k_sample_test(m, KernelSpec{3.0, 6.0}, NoiseSpec{1.0, 4.0}, 0.1, nc);
  p.neighbors = nc;
  EXPECT_EQ(b.detected, k_sample_test(m, p).detected);
}

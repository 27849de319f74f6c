#include "peakfdr/filtering.hpp"
#include "peakfdr/signal_model.hpp"

#include <gtest/gtest.h>

using namespace peakfdr;

namespace {
Measurement of(std::vector<double> v)
{
  Measurement m;
  m.samples = std::move(v);
  return m;
}
std::vector<std::size_t> indices(const std::vector<Candidate>& c)
{
  std::vector<std::size_t> out;
  for (const auto& x : c)
    out.push_back(x.index);
  return out;
}
} // namespace

TEST(Smooth, PreservesGridAndConstants)
{
  Measurement m = of(std::vector<double>(100, 2.0));
  m.dt = 0.5;
  m.origin = 3;
  const auto s = smooth(m, {2.0, 6.0});
  EXPECT_EQ(s.dt, 0.5);
  EXPECT_EQ(s.origin, 3);
  for (double v : s.samples)
    EXPECT_NEAR(v, 2.0, 1e-13);
}

TEST(Smooth, KernelTooWide)
{
  EXPECT_THROW(smooth(of(std::vector<double>(20, 0.0)), {4.0, 6.0}), kernel_too_wide);
}

TEST(Smooth, PeakOfSmoothedBumpMatchesConvolvedWidth)
{
  // Gaussian bump of sd b smoothed by sd gamma has peak a / sqrt(b^2 + gamma^2) phi(0).
  SignalSpec s;
  s.amplitude = 5;
  s.width = 3;
  s.support_multiplier = 8;
  s.centers = {200};
  Measurement m = of(signal_train(s, 400));
  const auto y = smooth(m, {4.0, 6.0});
  EXPECT_NEAR(y.samples[200], 5.0 / 5.0 * std_normal_pdf(0.0), 1e-4);
}

TEST(LocalMaxima, StrictThreePointRule)
{
  EXPECT_EQ(indices(find_local_maxima(of({0, 1, 0, 2, 3, 1, 0}))), (std::vector<std::size_t>{1, 4}));
}

TEST(LocalMaxima, Circular)
{
  // Index 0 beats its circular left neighbour at index 4.
  EXPECT_EQ(indices(find_local_maxima(of({5, 1, 2, 1, 0}))), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(indices(find_local_maxima(of({1, 0, 0, 2}))), (std::vector<std::size_t>{3}));
}

TEST(LocalMaxima, PlateauGivesLeftCenter)
{
  EXPECT_EQ(indices(find_local_maxima(of({0, 2, 2, 0, 0}))), (std::vector<std::size_t>{1}));
  EXPECT_EQ(indices(find_local_maxima(of({0, 2, 2, 2, 0}))), (std::vector<std::size_t>{2}));
  // Plateau wrapping the boundary: indices 4, 0, 1 -> center 0.
  EXPECT_EQ(indices(find_local_maxima(of({3, 3, 0, 1, 3}))), (std::vector<std::size_t>{0}));
  // Shoulder (plateau not above both sides) is not a maximum.
  EXPECT_EQ(indices(find_local_maxima(of({0, 2, 2, 3, 0}))), (std::vector<std::size_t>{3}));
}

TEST(LocalMaxima, ConstantHasNone)
{
  EXPECT_TRUE(find_local_maxima(of({1, 1, 1, 1})).empty());
}

TEST(LocalMaxima, HeightsAreSmoothedValues)
{
  const auto c = find_local_maxima(of({0, 1.5, 0, 0}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].height, 1.5);
  EXPECT_FALSE(c[0].p_value);
}

TEST(LocalMaxima, NoiseDensityMatchesRiceRate)
{
  // Expected maxima per unit length for smoothed white noise at bandwidth xi
  // is sqrt(lambda4 / lambda2) / (2 pi) = sqrt(3 / 2) / (2 pi xi).
  const double nu = 4.0;
  Measurement m = of(generate_noise({1.0, nu}, 200000, 1.0, 1, 0));
  const double rate = static_cast<double>(find_local_maxima(m).size()) / 200000.0;
  EXPECT_NEAR(rate / (std::sqrt(1.5) / (2 * std::numbers::pi * nu)), 1.0, 0.03);
}

TEST(Neighbors, CircularOffsets)
{
  const auto m = of({0, 1, 2, 3, 4, 5});
  auto c = collect_neighbors(m, {Candidate{0, 0.0, {}, {}, {}}, Candidate{5, 5.0, {}, {}, {}}},
                             {-2, 2});
  EXPECT_EQ(c[0].neighbor_heights.at(-2), 4);
  EXPECT_EQ(c[0].neighbor_heights.at(2), 2);
  EXPECT_EQ(c[1].neighbor_heights.at(2), 1);
  EXPECT_THROW(collect_neighbors(m, c, {0}), invalid_argument);
}

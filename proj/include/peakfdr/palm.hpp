#pragma once

// Spectral moments of Gaussian-smoothed white noise and the Palm law of the
// height of its local maxima.

#include "peakfdr/error.hpp"
#include "peakfdr/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace peakfdr {

// Which bandwidth enters the moment formulas: the correlation of the smoothed
// noise (sqrt(nu^2 + gamma^2)) or the raw noise bandwidth nu.
enum class MomentsBandwidth { composed, raw };

inline std::string to_string(MomentsBandwidth b)
{
  return b == MomentsBandwidth::composed ? "composed" : "raw";
}

inline MomentsBandwidth parse_moments_bandwidth(const std::string& s)
{
  if (s == "composed")
    return MomentsBandwidth::composed;
  if (s == "raw")
    return MomentsBandwidth::raw;
  throw invalid_argument("unknown moments bandwidth '" + s + "'");
}

struct NoiseMoments
{
  double sigma_gamma_sq = 0.0; // Var z
  double lambda2 = 0.0;        // Var z'
  double lambda4 = 0.0;        // Var z''
  double delta = 0.0;          // sigma_gamma_sq * lambda4 - lambda2^2
  double bandwidth = 0.0;      // effective Gaussian bandwidth xi

  double sigma_gamma() const { return std::sqrt(sigma_gamma_sq); }

  void validate() const
  {
    require(sigma_gamma_sq > 0 && lambda2 > 0 && lambda4 > 0,
            "NoiseMoments: moments must be positive");
    require(delta > 0, "NoiseMoments: delta must be positive");
  }
};

// Smoothing nu-correlated noise with a gamma kernel leaves a Gaussian
// correlation of bandwidth sqrt(nu^2 + gamma^2).
inline double effective_bandwidth(double nu, double gamma)
{
  require(nu > 0 && gamma >= 0, "effective_bandwidth: need nu > 0, gamma >= 0");
  return std::hypot(nu, gamma);
}

inline double moments_bandwidth(double nu, double gamma, MomentsBandwidth which)
{
  return which == MomentsBandwidth::composed ? effective_bandwidth(nu, gamma) : nu;
}

/// Moments of sigma * (phi_xi * dB): with c = sigma^2 / (2 sqrt(pi) xi),
/// Var z = c, Var z' = c / (2 xi^2), Var z'' = 3 c / (4 xi^4).
inline NoiseMoments noise_moments(double sigma, double xi)
{
  require(sigma > 0 && xi > 0, "noise_moments: sigma and xi must be positive");
  constexpr double sqrt_pi = 1.7724538509055160272981674833411;
  NoiseMoments m;
  const double s2 = sigma * sigma;
  m.sigma_gamma_sq = s2 / (2.0 * sqrt_pi * xi);
  m.lambda2 = s2 / (4.0 * sqrt_pi * xi * xi * xi);
  m.lambda4 = 3.0 * s2 / (8.0 * sqrt_pi * std::pow(xi, 5));
  m.delta = m.sigma_gamma_sq * m.lambda4 - m.lambda2 * m.lambda2;
  m.bandwidth = xi;
  return m;
}

/// Probability that a local maximum of the null process exceeds u.
inline double palm_upper_tail(double u, const NoiseMoments& m)
{
  m.validate();
  if (std::isinf(u))
    return u < 0 ? 1.0 : 0.0;
  const double s2 = m.sigma_gamma_sq;
  const double s = std::sqrt(s2);
  const double l22 = m.lambda2 * m.lambda2;
  const double a = std::sqrt(m.lambda4 / m.delta);
  const double b = std::sqrt(l22 / (m.delta * s2));
  const double c = std::sqrt(2.0 * std::numbers::pi * l22 / (m.lambda4 * s2));
  const double value = std_normal_sf(u * a) + c * std_normal_pdf(u / s) * std_normal_cdf(u * b);
  return std::clamp(value, 0.0, 1.0);
}

/// -d/du palm_upper_tail. The two phi * phi cross terms of the derivative
/// merge into one Gaussian because delta + lambda2^2 = sigma^2 lambda4.
inline double palm_density(double u, const NoiseMoments& m)
{
  m.validate();
  if (std::isinf(u))
    return 0.0;
  const double s2 = m.sigma_gamma_sq;
  const double s = std::sqrt(s2);
  const double l22 = m.lambda2 * m.lambda2;
  const double a = std::sqrt(m.lambda4 / m.delta);
  const double b = std::sqrt(l22 / (m.delta * s2));
  const double c = std::sqrt(2.0 * std::numbers::pi * l22 / (m.lambda4 * s2));
  const double core = std::sqrt(m.delta / m.lambda4) / s2 * std_normal_pdf(u * a);
  const double skew = c * (u / s2) * std_normal_pdf(u / s) * std_normal_cdf(u * b);
  return std::max(0.0, core + skew);
}

inline double one_sample_pvalue(double height, const NoiseMoments& m)
{
  return palm_upper_tail(height, m);
}

} // namespace peakfdr

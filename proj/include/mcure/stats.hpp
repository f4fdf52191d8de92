#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

// Scalar distribution helpers shared across the model, sampler, and tests.

namespace mcure {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Complement 1 - Phi(z) without cancellation for large z.
inline double normal_cdf_compl(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z - 0.5 * kLogTwoPi); }

inline double normal_logpdf(double v, double mean, double var) {
  const double d = v - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - d * d / (2.0 * var);
}

// log(1 + e^a) without overflow.
inline double softplus(double a) {
  if (a > 0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

inline double logistic(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// tanh activation and its derivative 1 - tanh^2.
inline double psi(double a) { return std::tanh(a); }
inline double psi_deriv(double a) {
  const double y = std::tanh(a);
  return 1.0 - y * y;
}

// Log-density of the log-normal(mu, sigma) distribution at t > 0.
inline double lognormal_logpdf(double t, double mu, double sigma) {
  const double z = (std::log(t) - mu) / sigma;
  return -std::log(t) - std::log(sigma) - 0.5 * kLogTwoPi - 0.5 * z * z;
}

inline double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double a : v)
    if (a > hi) hi = a;
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double a : v) s += std::exp(a - hi);
  return hi + std::log(s);
}

inline double beta_logpdf(double x, double c, double d) {
  double lp = std::lgamma(c + d) - std::lgamma(c) - std::lgamma(d);
  if (c != 1.0) lp += (c - 1.0) * std::log(x);
  if (d != 1.0) lp += (d - 1.0) * std::log1p(-x);
  return lp;
}

// Inverse-Gamma(shape a, scale b) log-density at v > 0.
inline double inverse_gamma_logpdf(double v, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(v) - b / v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

using Rng = std::mt19937_64;

inline double runif(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rnorm(Rng& rng, double mean = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline double rgumbel(Rng& rng) {
  double u = runif(rng);
  while (u <= 0.0) u = runif(rng);
  return -std::log(-std::log(u));
}

inline double rbeta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng), y = gb(rng);
  return x / (x + y);
}

inline double rinverse_gamma(Rng& rng, double shape, double scale) {
  std::gamma_distribution<double> g(shape, 1.0 / scale);
  return 1.0 / g(rng);
}

}  // namespace mcure

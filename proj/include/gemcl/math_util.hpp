#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gemcl {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Inverse of softplus on (0, inf).
inline double inv_softplus(double y) {
  if (y <= 0.0) throw std::invalid_argument("inv_softplus: argument must be positive");
  return y >= 1.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Digamma via upward recurrence into the asymptotic region.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: argument must be positive");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

// Log density of a Student's t with nu dof, location mu and squared scale s2.
inline double log_student_t(double x, double nu, double mu, double s2) {
  double u = x - mu;
  double nus2 = nu * s2;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(3.14159265358979323846 * nus2) -
         0.5 * (nu + 1.0) * std::log1p(u * u / nus2);
}

inline double log_gaussian(double x, double mean, double var) {
  double u = x - mean;
  return -0.5 * (std::log(2.0 * 3.14159265358979323846 * var) + u * u / var);
}

inline double logsumexp(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("logsumexp: empty input");
  double m = v[0];
  for (double x : v)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace gemcl

#pragma once

// Deterministic random primitives. std:: distributions are implementation
// defined, so every draw here is built directly on the mt19937_64 engine,
// which the standard pins bit-for-bit. Results are reproducible across
// platforms and compilers.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gemcl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

// Counter-based seed derivation: mixes a parent seed with any number of
// stream labels (indices, hashed strings). Used to give every episode,
// bootstrap resample and simulation run its own independent stream.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(mix_seed(a, b), rest...);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  // Unbiased integer in [0, n) via modulo rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (-n) % n;
    for (;;) {
      std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

  // Box-Muller. Two uniforms per call, no cached spare, so the stream
  // position is a pure function of the call count.
  double normal() {
    double u1;
    do {
      u1 = real01();
    } while (u1 <= 0.0);
    double u2 = real01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Marsaglia-Tsang; shape boost for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double g = gamma(shape + 1.0);
      double u;
      do {
        u = real01();
      } while (u <= 0.0);
      return g * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = real01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  // Gamma with shape/rate parameterization.
  double gamma(double shape, double rate) { return gamma(shape) / rate; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k entries of a partial Fisher-Yates pass over [0, n).
  std::vector<std::size_t> choose(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gemcl

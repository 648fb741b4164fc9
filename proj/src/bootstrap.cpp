#include "gemcl/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gemcl/rng.hpp"

namespace gemcl {

double percentile_sorted(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty vector");
  if (pct <= 0.0) return sorted.front();
  if (pct >= 100.0) return sorted.back();
  double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(rank);
  double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BootstrapDiff bootstrap_diff(const std::vector<double>& acc_a, const std::vector<double>& acc_b,
                             int resamples, double confidence, std::uint64_t seed) {
  if (acc_a.empty() || acc_b.empty()) throw std::invalid_argument("bootstrap: empty inputs");
  if (acc_a.size() != acc_b.size()) throw std::invalid_argument("bootstrap: length mismatch");
  if (resamples < 1) throw std::invalid_argument("bootstrap: resamples must be >= 1");
  if (!(confidence > 0.0 && confidence < 100.0))
    throw std::invalid_argument("bootstrap: confidence must be in (0, 100)");

  const std::size_t n = acc_a.size();
  std::vector<double> diffs(resamples);
  for (int i = 0; i < resamples; ++i) {
    // Per-resample derived stream; the loop can be sharded without
    // changing a single draw.
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    double sum_a = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum_a += acc_a[rng.below(n)];
    double sum_b = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum_b += acc_b[rng.below(n)];
    diffs[i] = sum_a / static_cast<double>(n) - sum_b / static_cast<double>(n);
  }
  std::sort(diffs.begin(), diffs.end());

  double tail = (100.0 - confidence) / 2.0;
  BootstrapDiff out;
  out.ci_lo = percentile_sorted(diffs, tail);
  out.ci_hi = percentile_sorted(diffs, 100.0 - tail);
  out.significant = !(out.ci_lo <= 0.0 && 0.0 <= out.ci_hi);
  return out;
}

}  // namespace gemcl

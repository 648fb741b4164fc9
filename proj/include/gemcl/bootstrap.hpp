#pragma once

#include <cstdint>
#include <vector>

namespace gemcl {

// Linear-interpolation percentile on a sorted vector: rank = p/100 * (n-1),
// value interpolated between the bracketing order statistics.
double percentile_sorted(const std::vector<double>& sorted, double pct);

struct BootstrapDiff {
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool significant = false;
};

// Percentile bootstrap CI on mean(a) - mean(b). Each of the `resamples`
// iterations independently draws len(a) values with replacement from a and
// len(b) from b and records the difference of the resample means. The CI is
// the central `confidence`% of those differences; significant iff it
// excludes zero. Index draws depend only on (seed, iteration, sizes), not
// on the values, so shifting a vector shifts the CI exactly.
BootstrapDiff bootstrap_diff(const std::vector<double>& acc_a, const std::vector<double>& acc_b,
                             int resamples, double confidence, std::uint64_t seed);

}  // namespace gemcl

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace sdiff {

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Pairwise summation; the split points depend only on the length.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

/// Sample mean and standard error of the mean.
inline Estimate estimate_mean(std::span<const double> x) {
  Estimate e;
  e.n = x.size();
  if (e.n == 0) return e;
  e.mean = pairwise_sum(x) / static_cast<double>(e.n);
  if (e.n < 2) return e;
  double ss = 0.0;
  for (double v : x) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  return e;
}

}  // namespace sdiff

#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace sdiff {

// e^{i j theta1} for 0 <= j <= k1max and e^{i j theta2} for |j| <= k2max,
// built by repeated multiplication. Reused across calls to avoid allocation.
class TrigTable {
 public:
  void fill(double t1, double t2, int k1max, int k2max) {
    k2max_ = k2max;
    e1_.resize(static_cast<std::size_t>(k1max) + 1);
    e2_.resize(2 * static_cast<std::size_t>(k2max) + 1);
    const std::complex<double> w1(std::cos(t1), std::sin(t1));
    const std::complex<double> w2(std::cos(t2), std::sin(t2));
    e1_[0] = 1.0;
    for (int j = 1; j <= k1max; ++j) e1_[j] = e1_[j - 1] * w1;
    e2_[k2max] = 1.0;
    for (int j = 1; j <= k2max; ++j) {
      e2_[k2max + j] = e2_[k2max + j - 1] * w2;
      e2_[k2max - j] = std::conj(e2_[k2max + j]);
    }
  }

  /// cos(k.theta) + i sin(k.theta) for k1 >= 0.
  std::complex<double> phase(int k1, int k2) const {
    return e1_[k1] * e2_[k2max_ + k2];
  }

 private:
  int k2max_ = 0;
  std::vector<std::complex<double>> e1_;
  std::vector<std::complex<double>> e2_;
};

}  // namespace sdiff

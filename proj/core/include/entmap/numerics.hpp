#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace entmap {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      carry_ += (sum_ - t) + value;
    } else {
      carry_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double value) {
    add(value);
    return *this;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// log(sum_i exp(a_i)) with max subtraction. Returns -inf for an empty span
/// or when every entry is -inf.
inline double log_sum_exp(std::span<const double> a) {
  if (a.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) {
    return m;
  }
  double s = 0.0;
  for (double v : a) {
    s += std::exp(v - m);
  }
  return m + std::log(s);
}

/// Overwrites `a` with softmax(a) and returns the log normalizer.
inline double softmax_inplace(std::span<double> a) {
  const double m = *std::max_element(a.begin(), a.end());
  double s = 0.0;
  for (double& v : a) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : a) {
    v /= s;
  }
  return m + std::log(s);
}

}  // namespace entmap

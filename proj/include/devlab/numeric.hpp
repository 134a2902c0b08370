#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "devlab/errors.hpp"

namespace devlab {

/// Compensated (Kahan-Babuska) accumulator.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Two-sided standard normal quantile for a central confidence level.
inline double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InputError("confidence must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> std_normal;
  return boost::math::quantile(std_normal, 0.5 + confidence / 2.0);
}

/// Wilson score interval for k successes out of n trials.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw InputError("wilson_interval: trials must be >= 1");
  if (successes > trials) throw InputError("wilson_interval: successes exceed trials");
  const double z = normal_critical_value(confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  // Pin the degenerate endpoints exactly; rounding can otherwise leave
  // 1 - 1e-17 at k == n.
  if (successes == 0) iv.lo = 0.0;
  if (successes == trials) iv.hi = 1.0;
  return iv;
}

/// Inverse-ECDF quantile: the smallest sample x with ECDF(x) >= q.
inline double empirical_quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw InputError("empirical_quantile: no samples");
  if (!(q > 0.0 && q <= 1.0)) throw InputError("empirical_quantile: q must lie in (0, 1]");
  const auto m = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
  rank = std::clamp<std::size_t>(rank, 1, m);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   samples.end());
  return samples[rank - 1];
}

}  // namespace devlab

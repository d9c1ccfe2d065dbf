#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spcrl {

inline double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// Standard error of the mean (sample variance, n-1 denominator).
inline double stderr_of(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0) / n);
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Welch's unequal-variance t-test, two-sided p-value.
inline WelchResult welch_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("welch_t_test: need >= 2 samples per side");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  double va = 0.0, vb = 0.0;
  for (double x : a) va += (x - ma) * (x - ma);
  for (double x : b) vb += (x - mb) * (x - mb);
  va /= (na - 1.0);
  vb /= (nb - 1.0);

  WelchResult out;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    // Identical spreadless samples: either indistinguishable or trivially apart.
    out.t = (ma == mb) ? 0.0 : std::numeric_limits<double>::infinity();
    out.df = na + nb - 2.0;
    out.p_value = (ma == mb) ? 1.0 : 0.0;
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.df = se2 * se2 /
           (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  const boost::math::students_t dist(out.df);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

}  // namespace spcrl

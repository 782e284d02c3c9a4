#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "llmsched/core/errors.hpp"

namespace llmsched::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw RangeError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n - 1); 0 for a single observation.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

struct PairedTest {
  double mean_difference = 0.0;  // mean of a - b
  double t = 0.0;
  double df = 0.0;
  double p_less = 1.0;  // one-sided p-value for H1: mean(a - b) < 0
};

inline PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw RangeError("paired t-test needs two equal samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  PairedTest r;
  r.mean_difference = mean(d);
  r.df = static_cast<double>(d.size() - 1);
  const double se = stddev(d) / std::sqrt(static_cast<double>(d.size()));
  if (se == 0.0) {
    r.t = r.mean_difference < 0.0 ? -INFINITY : (r.mean_difference > 0.0 ? INFINITY : 0.0);
    r.p_less = r.mean_difference < 0.0 ? 0.0 : (r.mean_difference > 0.0 ? 1.0 : 0.5);
    return r;
  }
  r.t = r.mean_difference / se;
  boost::math::students_t dist(r.df);
  r.p_less = boost::math::cdf(dist, r.t);
  return r;
}

// Asymptotic Kolmogorov distribution tail, P(K > x).
inline double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against Exponential(rate), using the
// Stephens small-sample correction of the statistic.
inline KsResult ks_test_exponential(std::vector<double> x, double rate) {
  if (x.empty()) throw RangeError("KS test of an empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-rate * std::max(0.0, x[i]));
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw RangeError("pearson needs two equal samples of size >= 2");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace llmsched::stats

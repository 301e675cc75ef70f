/*
 * Copyright 2026 the pairfit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <span>

#include "pairfit/errors.hpp"

namespace pairfit {

/// log(1 + exp(x)) without overflow for large |x|.
inline double log1pexp(double x) {
  if (x > 33.3) return x;                    // exp(-x) below double epsilon
  if (x > -37.0) return std::log1p(std::exp(x));
  return std::exp(x);
}

/// Logistic CDF, clipped away from exact 0/1.
inline double logistic(double x) {
  double p;
  if (x >= 0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    p = e / (1.0 + e);
  }
  return std::clamp(p, DBL_EPSILON, 1.0 - DBL_EPSILON);
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw error(errc::domain, "logit argument must lie in (0,1)");
  return std::log(p / (1.0 - p));
}

/// Bernoulli log-likelihood contribution on the linear-predictor scale.
inline double bernoulli_loglik(double y, double eta) { return y * eta - log1pexp(eta); }

/// log(sum_i exp(v_i)), guarded against overflow.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw error(errc::domain, "log_sum_exp of empty range");
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Standard normal CDF; erfc keeps the upper tail accurate.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Two-sided normal tail probability 2*(1 - Phi(|z|)), exact at z=0.
inline double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

/// Inverse standard normal CDF. Bisection bracket plus Newton polish; the
/// cost does not matter because it is only used at configuration time.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw error(errc::domain, "normal_quantile argument must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    double f = normal_cdf(x) - p;
    double d = normal_pdf(x);
    if (d <= 0.0) break;
    x -= f / d;
  }
  return x;
}

}  // namespace pairfit

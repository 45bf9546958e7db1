/*
 * Copyright 2026 The sampler-smith Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Summary statistics and goodness-of-fit tests on sample sets.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "sampler_smith/families.hpp"
#include "sampler_smith/rng.hpp"

namespace sampler_smith {

inline constexpr double kDegenerateVariance = 1e-12;

// Population (1/N) central moments. Returns nullopt if any sample is not
// finite. When the variance is below 1e-12 skew and kurtosis are set to 0.
inline std::optional<MomentVector> sample_moments(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_moments needs at least 2 samples");
  double mean = 0.0;
  for (double x : xs) {
    if (!std::isfinite(x)) return std::nullopt;
    mean += x;
  }
  const double n = static_cast<double>(xs.size());
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean, d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  MomentVector m;
  m.mean = mean;
  m.sd = std::sqrt(m2);
  if (m2 >= kDegenerateVariance) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2) - 3.0;
  }
  if (!std::isfinite(m.sd) || !std::isfinite(m.skew) || !std::isfinite(m.kurt)) return std::nullopt;
  return m;
}

// Sum over the four statistics of log Normal(target_k; observed_k, sigma_k).
inline double moment_log_kernel(const MomentVector& observed, const MomentVector& target,
                                const std::array<double, 4>& sigma) {
  const auto o = observed.as_array(), t = target.as_array();
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += normal_log_pdf(t[k], o[k], sigma[k]);
  return s;
}

// G = 2 sum c_i ln(c_i / (p_i n)). Empty bins contribute nothing; a count on
// a zero-probability bin gives +inf.
inline double g_statistic(const std::vector<long>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size()) throw std::invalid_argument("g_statistic: size mismatch");
  double n = 0.0;
  for (long c : counts) n += static_cast<double>(c);
  if (n < 1.0) throw std::invalid_argument("g_statistic: no observations");
  double g = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (probs[i] <= 0.0) return std::numeric_limits<double>::infinity();
    const double c = static_cast<double>(counts[i]);
    g += c * std::log(c / (probs[i] * n));
  }
  return std::max(0.0, 2.0 * g);
}

// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi_square_sf: df must be >= 1");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

inline constexpr double kIntegerTolerance = 1e-9;

// p-value of the G-test of `samples` against a countable family. Samples off
// the support give 0.
inline double g_test_p_value(const std::vector<double>& samples, Family f, const std::vector<double>& params) {
  if (samples.empty()) throw std::invalid_argument("g_test_p_value: no samples");
  const BinTable t = bin_table(f, params);
  std::vector<long> counts(t.probs.size(), 0);
  const long last = t.first + static_cast<long>(t.probs.size()) - 1;
  for (double x : samples) {
    if (!std::isfinite(x)) return 0.0;
    const double r = std::nearbyint(x);
    if (std::abs(x - r) > kIntegerTolerance || r < static_cast<double>(t.first)) return 0.0;
    if (r > static_cast<double>(last)) {
      if (!t.has_tail) return 0.0;
      ++counts.back();
    } else {
      const long k = static_cast<long>(r) - t.first;
      // The final bin of a tailed table is the tail itself.
      ++counts[std::min<long>(k, static_cast<long>(counts.size()) - 1)];
    }
  }
  // Bins that cannot occur carry no degrees of freedom.
  std::vector<long> c;
  std::vector<double> p;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (t.probs[i] <= 0.0 && counts[i] == 0) continue;
    c.push_back(counts[i]);
    p.push_back(t.probs[i]);
  }
  if (c.size() < 2) return 1.0;
  return chi_square_sf(g_statistic(c, p), static_cast<int>(c.size()) - 1);
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// Kolmogorov distance between the empirical distribution of `xs` and `cdf`.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace sampler_smith

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


// Parametric families used as synthesis targets: closed-form moments, and
// the probability tables the G-test bins countable samples against.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sampler_smith {

enum class Family { kBernoulli, kGeometric, kPoisson, kNormal, kGamma, kBeta };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::kBernoulli: return "bernoulli";
    case Family::kGeometric: return "geometric";
    case Family::kPoisson: return "poisson";
    case Family::kNormal: return "normal";
    case Family::kGamma: return "gamma";
    case Family::kBeta: return "beta";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (Family f : {Family::kBernoulli, Family::kGeometric, Family::kPoisson, Family::kNormal, Family::kGamma,
                   Family::kBeta})
    if (family_name(f) == s) return f;
  return std::nullopt;
}

inline bool is_countable(Family f) {
  return f == Family::kBernoulli || f == Family::kGeometric || f == Family::kPoisson;
}

inline std::size_t num_params(Family f) { return f == Family::kNormal || f == Family::kBeta ? 2 : 1; }

// Mean, standard deviation, skewness and excess kurtosis.
struct MomentVector {
  double mean = 0.0;
  double sd = 0.0;
  double skew = 0.0;
  double kurt = 0.0;

  std::array<double, 4> as_array() const { return {mean, sd, skew, kurt}; }
  bool operator==(const MomentVector&) const = default;
};

inline void check_params(Family f, const std::vector<double>& params) {
  auto fail = [f](const std::string& why) {
    throw std::domain_error(std::string(family_name(f)) + ": " + why);
  };
  if (params.size() != num_params(f)) fail("expected " + std::to_string(num_params(f)) + " parameters");
  for (double v : params)
    if (!std::isfinite(v)) fail("parameters must be finite");
  switch (f) {
    case Family::kBernoulli:
      if (params[0] < 0.0 || params[0] > 1.0) fail("p must be in [0, 1]");
      break;
    case Family::kGeometric:
      if (params[0] <= 0.0 || params[0] > 1.0) fail("p must be in (0, 1]");
      break;
    case Family::kPoisson:
      if (params[0] <= 0.0) fail("rate must be > 0");
      break;
    case Family::kNormal:
      if (params[1] <= 0.0) fail("std must be > 0");
      break;
    case Family::kGamma:
      if (params[0] <= 0.0) fail("alpha must be > 0");
      break;
    case Family::kBeta:
      if (params[0] <= 0.0 || params[1] <= 0.0) fail("alpha and beta must be > 0");
      break;
  }
}

inline MomentVector analytic_moments(Family f, const std::vector<double>& params) {
  check_params(f, params);
  switch (f) {
    case Family::kBernoulli: {
      const double p = params[0], v = p * (1.0 - p);
      if (v == 0.0) return {p, 0.0, 0.0, 0.0};
      return {p, std::sqrt(v), (1.0 - 2.0 * p) / std::sqrt(v), (1.0 - 6.0 * v) / v};
    }
    case Family::kGeometric: {
      // Number of trials up to and including the first success.
      const double p = params[0], q = 1.0 - p;
      if (q == 0.0) return {1.0, 0.0, 0.0, 0.0};
      return {1.0 / p, std::sqrt(q) / p, (2.0 - p) / std::sqrt(q), 6.0 + p * p / q};
    }
    case Family::kPoisson: {
      const double l = params[0];
      return {l, std::sqrt(l), 1.0 / std::sqrt(l), 1.0 / l};
    }
    case Family::kNormal:
      return {params[0], params[1], 0.0, 0.0};
    case Family::kGamma: {
      const double a = params[0];
      return {a, std::sqrt(a), 2.0 / std::sqrt(a), 6.0 / a};
    }
    case Family::kBeta: {
      const double a = params[0], b = params[1], s = a + b;
      const double var = a * b / (s * s * (s + 1.0));
      const double skew = 2.0 * (b - a) * std::sqrt(s + 1.0) / ((s + 2.0) * std::sqrt(a * b));
      const double kurt = 6.0 * ((a - b) * (a - b) * (s + 1.0) - a * b * (s + 2.0)) / (a * b * (s + 2.0) * (s + 3.0));
      return {a / s, std::sqrt(var), skew, kurt};
    }
  }
  return {};
}

// Bins for the G-test on a countable family: one bin per support value from
// `first` to `first + probs.size() - 2`, then a tail bin for larger values.
// Bernoulli has no tail bin.
struct BinTable {
  long first = 0;
  std::vector<double> probs;
  bool has_tail = false;
};

inline constexpr double kBinQuantile = 0.999;

inline BinTable bin_table(Family f, const std::vector<double>& params) {
  check_params(f, params);
  BinTable t;
  switch (f) {
    case Family::kBernoulli:
      t.first = 0;
      t.probs = {1.0 - params[0], params[0]};
      return t;
    case Family::kGeometric: {
      const double p = params[0];
      t.first = 1;
      double cdf = 0.0, pk = p;
      while (cdf < kBinQuantile) {
        t.probs.push_back(pk);
        cdf += pk;
        pk *= 1.0 - p;
      }
      break;
    }
    case Family::kPoisson: {
      const double l = params[0];
      t.first = 0;
      double cdf = 0.0, pk = std::exp(-l);
      for (long k = 0; cdf < kBinQuantile; ++k) {
        t.probs.push_back(pk);
        cdf += pk;
        pk *= l / static_cast<double>(k + 1);
      }
      break;
    }
    default:
      throw std::invalid_argument(std::string(family_name(f)) + " is not a countable family");
  }
  double cdf = 0.0;
  for (double v : t.probs) cdf += v;
  t.probs.push_back(std::max(0.0, 1.0 - cdf));
  t.has_tail = true;
  return t;
}

}  // namespace sampler_smith

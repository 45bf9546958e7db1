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


// Linear Gaussian state-space model, synthetic episodes and the exact
// Kalman filter and Rauch-Tung-Striebel smoother.

#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "sampler_smith/rng.hpp"

namespace sampler_smith::lg {

// x_1 ~ N(init_mean, init_sd^2), x_t ~ N(x_{t-1}, transition_sd^2),
// y_t ~ N(x_t, observation_sd^2).
struct LgModel {
  double init_mean = 0.0;
  double init_sd = 2.0;
  double transition_sd = 0.1;
  double observation_sd = 0.1;
};

inline void validate(const LgModel& m) {
  if (!(m.init_sd > 0.0 && m.transition_sd > 0.0 && m.observation_sd > 0.0))
    throw std::invalid_argument("model standard deviations must be > 0");
}

enum class WaveKind { kSin, kSquare };

inline std::string wave_name(WaveKind k) { return k == WaveKind::kSin ? "sin" : "square"; }

inline WaveKind parse_wave(const std::string& s) {
  if (s == "sin") return WaveKind::kSin;
  if (s == "square") return WaveKind::kSquare;
  throw std::invalid_argument("unknown episode kind: " + s);
}

// +1 on the half-period where sin is non-negative, -1 elsewhere.
inline double square_wave(double t) { return std::sin(t) >= 0.0 ? 1.0 : -1.0; }

inline double wave(WaveKind k, double t) { return k == WaveKind::kSin ? std::sin(t) : square_wave(t); }

inline constexpr double kGridStart = 1.0;
inline constexpr double kGridEnd = 100.0;
inline constexpr double kGridStep = 0.5;
inline constexpr int kGridPoints = 199;

inline std::vector<double> time_grid() {
  std::vector<double> t(kGridPoints);
  for (int i = 0; i < kGridPoints; ++i) t[static_cast<std::size_t>(i)] = kGridStart + kGridStep * i;
  return t;
}

struct Episode {
  std::string label;
  std::vector<double> t;
  std::vector<double> truth;  // latent path; empty when unknown
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

inline std::string episode_label(WaveKind k, double offset) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s(t%+.6f)", wave_name(k).c_str(), offset);
  return buf;
}

// f(t + offset) on the grid, observed with Normal(0, noise_sd^2) noise. The
// noiseless values are the latent truth.
inline Episode gen_episode(WaveKind k, double offset, double noise_sd, Rng& rng) {
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise sd must be >= 0");
  Episode e;
  e.label = episode_label(k, offset);
  e.t = time_grid();
  for (double t : e.t) {
    const double v = wave(k, t + offset);
    e.truth.push_back(v);
    e.y.push_back(v + noise_sd * standard_normal(rng));
  }
  return e;
}

// A path and observations drawn from the model itself.
inline Episode sample_model_episode(const LgModel& m, int steps, Rng& rng) {
  validate(m);
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  Episode e;
  e.label = "model";
  double x = m.init_mean + m.init_sd * standard_normal(rng);
  for (int i = 0; i < steps; ++i) {
    if (i > 0) x += m.transition_sd * standard_normal(rng);
    e.t.push_back(i + 1.0);
    e.truth.push_back(x);
    e.y.push_back(x + m.observation_sd * standard_normal(rng));
  }
  return e;
}

struct EpisodeSpec {
  WaveKind kind;
  double offset;
};

// Offsets of the training and test functions; a listed `f(t - c)` has offset -c.
inline std::vector<EpisodeSpec> training_functions(WaveKind k) {
  std::vector<EpisodeSpec> out;
  if (k == WaveKind::kSquare) {
    for (double c : {0.0, -kPi / 6, kPi / 6, -kPi / 4, kPi / 4, kPi / 3, -kPi / 3, kPi / 2, -kPi / 2})
      out.push_back({k, c});
  } else {
    for (double c : {-kPi / 6, kPi / 6, -kPi / 4, kPi / 4, -kPi / 3, kPi / 3, -kPi / 2, kPi / 2}) out.push_back({k, c});
  }
  return out;
}

inline std::vector<EpisodeSpec> test_functions(WaveKind k) {
  std::vector<EpisodeSpec> out;
  for (double c : {-1.0, 1.0, -2.0, 2.0}) out.push_back({k, c});
  return out;
}

struct KalmanResult {
  std::vector<double> filter_mean, filter_var;
  std::vector<double> smooth_mean, smooth_var;
};

inline KalmanResult kalman_filter_smoother(const LgModel& m, const std::vector<double>& ys) {
  validate(m);
  const std::size_t n = ys.size();
  const double q = m.transition_sd * m.transition_sd, r = m.observation_sd * m.observation_sd;
  KalmanResult k;
  k.filter_mean.resize(n);
  k.filter_var.resize(n);
  std::vector<double> pred_mean(n), pred_var(n);
  for (std::size_t t = 0; t < n; ++t) {
    pred_mean[t] = t == 0 ? m.init_mean : k.filter_mean[t - 1];
    pred_var[t] = t == 0 ? m.init_sd * m.init_sd : k.filter_var[t - 1] + q;
    const double gain = pred_var[t] / (pred_var[t] + r);
    k.filter_mean[t] = pred_mean[t] + gain * (ys[t] - pred_mean[t]);
    k.filter_var[t] = (1.0 - gain) * pred_var[t];
  }
  k.smooth_mean = k.filter_mean;
  k.smooth_var = k.filter_var;
  for (std::size_t t = n; t-- > 1;) {
    const std::size_t s = t - 1;
    const double c = k.filter_var[s] / pred_var[t];
    k.smooth_mean[s] = k.filter_mean[s] + c * (k.smooth_mean[t] - pred_mean[t]);
    k.smooth_var[s] = k.filter_var[s] + c * c * (k.smooth_var[t] - pred_var[t]);
  }
  return k;
}

}  // namespace sampler_smith::lg

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


// Sequential Monte Carlo on the linear Gaussian model.
//
// Each step proposes every particle, weights it by
//   p(y_t | x_t) p(x_t | x_{t-1}) / q(x_t)
// and then resamples multinomially. The proposal is either the transition
// prior or a mixture of the prior with the network's Normal. Every particle
// draws from its own stream keyed by (step, particle), so results do not
// depend on the number of worker threads.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sampler_smith/lg/mlp.hpp"
#include "sampler_smith/lg/model.hpp"
#include "sampler_smith/parallel.hpp"
#include "sampler_smith/rng.hpp"

namespace sampler_smith::lg {

inline constexpr int kHistory = 10;

// Features for predicting x_t: the last ten latents x_{t-10..t-1} and the last
// ten observations y_{t-9..t}. `latents` holds the latents before t in order
// (only the last ten are used). Short histories are left-padded with their
// earliest value; with no latents at all the pad is `empty_pad`.
inline Eigen::VectorXd make_features(const std::vector<double>& latents, const std::vector<double>& ys, std::size_t t,
                                     double empty_pad) {
  Eigen::VectorXd f(kFeatures);
  const std::size_t nl = latents.size();
  for (int i = 0; i < kHistory; ++i) {
    // Position i holds x_{t-10+i}; i = kHistory - 1 is x_{t-1}.
    const long back = kHistory - i;  // 1-based distance from the end
    if (nl == 0) {
      f(i) = empty_pad;
    } else if (static_cast<std::size_t>(back) <= nl) {
      f(i) = latents[nl - static_cast<std::size_t>(back)];
    } else {
      f(i) = latents[nl >= static_cast<std::size_t>(kHistory) ? nl - kHistory : 0];
    }
  }
  for (int i = 0; i < kHistory; ++i) {
    const long idx = static_cast<long>(t) - (kHistory - 1) + i;
    f(kHistory + i) = ys[static_cast<std::size_t>(std::max(0L, idx))];
  }
  return f;
}

// Maps features and the transition prior at this step to the network's
// Normal. The prior is passed so that tests can supply exact clones of it.
using ProposalNet = std::function<NormalParams(const Eigen::VectorXd& features, const NormalParams& prior)>;

struct Proposal {
  ProposalNet network;  // empty: the transition prior
  double mix = 0.7;     // probability of drawing from the network

  static Proposal prior() { return Proposal{nullptr, 0.0}; }
  static Proposal data_driven(MlpParams p, double mix) {
    return Proposal{[p = std::move(p)](const Eigen::VectorXd& f, const NormalParams&) { return mlp_forward(p, f); },
                    mix};
  }
};

struct ProposalDraw {
  double x = 0.0;
  double log_q = 0.0;
};

// Draws from mix * N(net) + (1 - mix) * N(prior) with uniform `u` choosing the
// component and standard normal `z` placing the point; returns the exact
// mixture log-density.
inline ProposalDraw mixture_proposal(const NormalParams& net, double mix, const NormalParams& prior, double u,
                                     double z) {
  if (!(mix >= 0.0 && mix <= 1.0)) throw std::invalid_argument("mixture probability must lie in [0, 1]");
  ProposalDraw d;
  d.x = u < mix ? net.mean + net.sd * z : prior.mean + prior.sd * z;
  const double a = mix > 0.0 ? std::log(mix) + normal_log_pdf(d.x, net.mean, net.sd) : -INFINITY;
  const double b = mix < 1.0 ? std::log1p(-mix) + normal_log_pdf(d.x, prior.mean, prior.sd) : -INFINITY;
  d.log_q = log_add_exp(a, b);
  return d;
}

inline double mixture_log_density(double x, const NormalParams& net, double mix, const NormalParams& prior) {
  const double a = mix > 0.0 ? std::log(mix) + normal_log_pdf(x, net.mean, net.sd) : -INFINITY;
  const double b = mix < 1.0 ? std::log1p(-mix) + normal_log_pdf(x, prior.mean, prior.sd) : -INFINITY;
  return log_add_exp(a, b);
}

struct ParticleResult {
  std::vector<std::vector<double>> values;     // [step][particle], before resampling
  std::vector<std::vector<double>> weights;    // normalized, [step][particle]
  std::vector<std::vector<std::size_t>> ancestors;  // [step][particle] -> particle at step - 1
  std::vector<double> ess;
  std::vector<bool> degenerate;  // every weight was zero; uniform weights used

  std::size_t steps() const { return values.size(); }
  std::size_t particles() const { return values.empty() ? 0 : values[0].size(); }

  std::vector<double> filtering_means() const {
    std::vector<double> m(steps(), 0.0);
    for (std::size_t t = 0; t < steps(); ++t)
      for (std::size_t s = 0; s < particles(); ++s) m[t] += weights[t][s] * values[t][s];
    return m;
  }

  // Paths of the final particles, traced back through their ancestors.
  std::vector<std::vector<double>> trajectories() const {
    const std::size_t n = steps(), p = particles();
    std::vector<std::vector<double>> paths(p, std::vector<double>(n));
    for (std::size_t s = 0; s < p; ++s) {
      std::size_t k = s;
      for (std::size_t t = n; t-- > 0;) {
        paths[s][t] = values[t][k];
        if (t > 0) k = ancestors[t][k];
      }
    }
    return paths;
  }
};

namespace detail {

inline constexpr uint64_t kResampleStream = ~uint64_t{0};

// Normalized weights from log-weights, NaN counting as zero weight. Returns
// false, with uniform weights, when every weight is zero.
inline bool normalize(const std::vector<double>& log_w, std::vector<double>& w) {
  double top = -INFINITY;
  for (double v : log_w)
    if (v > top) top = v;
  w.assign(log_w.size(), 0.0);
  if (!std::isfinite(top)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return false;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] = std::isnan(log_w[i]) ? 0.0 : std::exp(log_w[i] - top);
  for (double& v : w) v /= total;
  return true;
}

inline std::vector<std::size_t> multinomial_resample(const std::vector<double>& w, Rng& rng) {
  std::vector<double> cum(w.size());
  std::partial_sum(w.begin(), w.end(), cum.begin());
  std::vector<std::size_t> out(w.size());
  for (auto& a : out) {
    const double u = uniform01(rng) * cum.back();
    a = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    a = std::min(a, w.size() - 1);
  }
  return out;
}

}  // namespace detail

inline ParticleResult smc_run(const LgModel& m, const std::vector<double>& ys, int particles, const Proposal& prop,
                              Rng& rng, int jobs = 1) {
  validate(m);
  if (particles < 1) throw std::invalid_argument("particle count must be >= 1");
  if (ys.empty()) throw std::invalid_argument("no observations");
  if (!(prop.mix >= 0.0 && prop.mix <= 1.0)) throw std::invalid_argument("mixture probability must lie in [0, 1]");
  const uint64_t master = rng();
  const auto p = static_cast<std::size_t>(particles);
  ParticleResult r;
  std::vector<std::vector<double>> history(p), next_history(p);
  std::vector<double> log_w(p);
  std::vector<std::size_t> parent(p);
  for (std::size_t s = 0; s < p; ++s) parent[s] = s;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    std::vector<double> x(p);
    const std::vector<double>* prev = t > 0 ? &r.values[t - 1] : nullptr;
    parallel_for(p, jobs, [&](std::size_t s) {
      SplitMix64 local(derive_seed(master, {t, s}));
      const double u = uniform01(local), z = standard_normal(local);
      const std::size_t a = parent[s];
      const NormalParams prior = t == 0 ? NormalParams{m.init_mean, m.init_sd}
                                        : NormalParams{(*prev)[a], m.transition_sd};
      next_history[s] = t == 0 ? std::vector<double>{} : history[a];
      if (t > 0) {
        next_history[s].push_back((*prev)[a]);
        if (next_history[s].size() > static_cast<std::size_t>(kHistory)) next_history[s].erase(next_history[s].begin());
      }
      if (!prop.network || prop.mix == 0.0) {
        x[s] = prior.mean + prior.sd * z;
        log_w[s] = normal_log_pdf(ys[t], x[s], m.observation_sd);
        return;
      }
      const NormalParams net = prop.network(make_features(next_history[s], ys, t, m.init_mean), prior);
      const ProposalDraw d = mixture_proposal(net, prop.mix, prior, u, z);
      x[s] = d.x;
      log_w[s] = normal_log_pdf(ys[t], d.x, m.observation_sd) + normal_log_pdf(d.x, prior.mean, prior.sd) - d.log_q;
    });
    std::swap(history, next_history);
    std::vector<double> w;
    const bool ok = detail::normalize(log_w, w);
    double sq = 0.0;
    for (double v : w) sq += v * v;
    r.values.push_back(std::move(x));
    r.weights.push_back(w);
    r.ancestors.push_back(parent);
    r.ess.push_back(1.0 / sq);
    r.degenerate.push_back(!ok);
    if (t + 1 < ys.size()) {
      Rng resample_rng(derive_seed(master, {t, detail::kResampleStream}));
      parent = detail::multinomial_resample(w, resample_rng);
    }
  }
  return r;
}

// One pair per final trajectory and step, weighted by the trajectory's final
// normalized weight.
inline std::vector<TrainPair> extract_training_pairs(const ParticleResult& r, const std::vector<double>& ys,
                                                     const LgModel& m) {
  if (r.steps() != ys.size()) throw std::invalid_argument("observations do not match the particle result");
  const auto paths = r.trajectories();
  const auto& final_w = r.weights.back();
  std::vector<TrainPair> out;
  out.reserve(paths.size() * ys.size());
  for (std::size_t s = 0; s < paths.size(); ++s) {
    std::vector<double> before;
    for (std::size_t t = 0; t < ys.size(); ++t) {
      out.push_back({make_features(before, ys, t, m.init_mean), paths[s][t], final_w[s]});
      before.push_back(paths[s][t]);
      if (before.size() > static_cast<std::size_t>(kHistory)) before.erase(before.begin());
    }
  }
  return out;
}

// Merges pairs with identical features and response by adding their weights.
// The weighted loss is unchanged; trajectories that share ancestry produce
// many such duplicates.
inline std::vector<TrainPair> merge_duplicate_pairs(const std::vector<TrainPair>& pairs) {
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<TrainPair> out;
  for (const auto& p : pairs) {
    std::vector<double> key(p.features.data(), p.features.data() + p.features.size());
    key.push_back(p.response);
    auto [it, fresh] = seen.emplace(std::move(key), out.size());
    if (fresh)
      out.push_back(p);
    else
      out[it->second].weight += p.weight;
  }
  return out;
}

// Mean absolute error of the per-step filtering means against the true path.
inline double evaluate_error(const ParticleResult& r, const std::vector<double>& truth) {
  if (truth.size() != r.steps()) throw std::invalid_argument("truth length does not match the particle result");
  const auto est = r.filtering_means();
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) total += std::abs(est[t] - truth[t]);
  return total / static_cast<double>(truth.size());
}

inline double mean_absolute_error(const std::vector<double>& est, const std::vector<double>& truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("length mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) total += std::abs(est[t] - truth[t]);
  return total / static_cast<double>(truth.size());
}

}  // namespace sampler_smith::lg

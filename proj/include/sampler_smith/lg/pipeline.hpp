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


// Training and evaluation loop for the data-driven proposal.
//
// For every repeat, the network is trained incrementally: each training
// episode is filtered with the prior proposal, its weighted trajectories are
// added to the pool of training pairs, and training resumes from the previous
// parameters. Test episodes are then filtered with the prior proposal and with
// the prior/network mixture.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sampler_smith/lg/mlp.hpp"
#include "sampler_smith/lg/model.hpp"
#include "sampler_smith/lg/smc.hpp"
#include "sampler_smith/parallel.hpp"

namespace sampler_smith::lg {

struct PipelineConfig {
  std::vector<WaveKind> train_kinds{WaveKind::kSquare};
  std::vector<WaveKind> test_kinds{WaveKind::kSquare, WaveKind::kSin};
  int train_particles = 100;
  int test_particles = 10;
  int repeats = 5;
  double mix = 0.7;
  double noise_sd = 0.1;
  LgModel model;
  TrainConfig train;
  int jobs = 1;  // repeats run concurrently
};

inline void validate(const PipelineConfig& c) {
  validate(c.model);
  validate(c.train);
  if (c.train_particles < 1 || c.test_particles < 1) throw std::invalid_argument("particle counts must be >= 1");
  if (c.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(c.mix >= 0.0 && c.mix <= 1.0)) throw std::invalid_argument("mixture probability must lie in [0, 1]");
  if (!(c.noise_sd >= 0.0)) throw std::invalid_argument("noise sd must be >= 0");
  if (c.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

inline constexpr const char* kPriorArm = "prior";
inline constexpr const char* kDataDrivenArm = "data-driven";

struct MetricRow {
  std::string phase;  // "train" or "test"
  std::string episode;
  WaveKind kind = WaveKind::kSquare;
  std::string proposal;
  int repeat = 0;
  double mae = 0.0;
};

struct PipelineResult {
  std::vector<MetricRow> rows;
  std::vector<double> final_train_loss;  // per repeat; NaN without training
};

struct ArmSummary {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

// Mean and sample sd over repeats of the per-repeat average test MAE for one
// proposal, restricted to test episodes of `kind`.
inline ArmSummary summarize_arm(const PipelineResult& r, const std::string& proposal, WaveKind kind, int repeats) {
  std::vector<double> per(static_cast<std::size_t>(repeats), 0.0);
  std::vector<int> n(static_cast<std::size_t>(repeats), 0);
  for (const auto& row : r.rows) {
    if (row.phase != "test" || row.proposal != proposal || row.kind != kind) continue;
    per[static_cast<std::size_t>(row.repeat)] += row.mae;
    ++n[static_cast<std::size_t>(row.repeat)];
  }
  ArmSummary s;
  std::vector<double> vals;
  for (std::size_t i = 0; i < per.size(); ++i)
    if (n[i] > 0) vals.push_back(per[i] / n[i]);
  s.count = static_cast<int>(vals.size());
  if (vals.empty()) return s;
  for (double v : vals) s.mean += v;
  s.mean /= static_cast<double>(vals.size());
  if (vals.size() > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
  }
  return s;
}

// Average test MAE per repeat for one proposal and kind; NaN where absent.
inline std::vector<double> per_repeat_mae(const PipelineResult& r, const std::string& proposal, WaveKind kind,
                                          int repeats) {
  std::vector<double> sum(static_cast<std::size_t>(repeats), 0.0);
  std::vector<int> n(static_cast<std::size_t>(repeats), 0);
  for (const auto& row : r.rows) {
    if (row.phase != "test" || row.proposal != proposal || row.kind != kind) continue;
    sum[static_cast<std::size_t>(row.repeat)] += row.mae;
    ++n[static_cast<std::size_t>(row.repeat)];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = n[i] > 0 ? sum[i] / n[i] : NAN;
  return sum;
}

struct TrainedNetwork {
  MlpParams params;
  bool trained = false;                         // false when there were no training episodes
  std::vector<MetricRow> rows;                  // prior-proposal error on each training episode
  std::vector<std::vector<double>> epoch_loss;  // per training episode
};

// Filters each training episode with the prior proposal, adds its weighted
// trajectories to the pool and resumes training from the previous parameters.
inline TrainedNetwork train_incrementally(const PipelineConfig& cfg, int repeat, Rng& r) {
  TrainedNetwork out;
  out.params = init_mlp(r);
  std::vector<TrainPair> pool;
  for (WaveKind k : cfg.train_kinds) {
    for (const auto& spec : training_functions(k)) {
      const Episode ep = gen_episode(spec.kind, spec.offset, cfg.noise_sd, r);
      const ParticleResult res = smc_run(cfg.model, ep.y, cfg.train_particles, Proposal::prior(), r);
      out.rows.push_back({"train", ep.label, spec.kind, kPriorArm, repeat, evaluate_error(res, ep.truth)});
      const auto pairs = merge_duplicate_pairs(extract_training_pairs(res, ep.y, cfg.model));
      pool.insert(pool.end(), pairs.begin(), pairs.end());
      TrainResult tr = mlp_train(out.params, pool, cfg.train, r);
      out.params = tr.params;
      out.epoch_loss.push_back(tr.epoch_loss);
      out.trained = true;
    }
  }
  return out;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg, Rng& rng) {
  validate(cfg);
  const uint64_t master = rng();
  std::vector<std::vector<MetricRow>> per_repeat(static_cast<std::size_t>(cfg.repeats));
  std::vector<double> losses(static_cast<std::size_t>(cfg.repeats), NAN);
  parallel_for(per_repeat.size(), cfg.jobs, [&](std::size_t rep) {
    Rng r(derive_seed(master, {rep}));
    const int repeat = static_cast<int>(rep);
    TrainedNetwork net = train_incrementally(cfg, repeat, r);
    auto& rows = per_repeat[rep];
    rows = net.rows;
    if (!net.epoch_loss.empty() && !net.epoch_loss.back().empty()) losses[rep] = net.epoch_loss.back().back();
    for (WaveKind k : cfg.test_kinds) {
      for (const auto& spec : test_functions(k)) {
        const Episode ep = gen_episode(spec.kind, spec.offset, cfg.noise_sd, r);
        const ParticleResult prior = smc_run(cfg.model, ep.y, cfg.test_particles, Proposal::prior(), r);
        rows.push_back({"test", ep.label, spec.kind, kPriorArm, repeat, evaluate_error(prior, ep.truth)});
        if (!net.trained) continue;
        const ParticleResult dd =
            smc_run(cfg.model, ep.y, cfg.test_particles, Proposal::data_driven(net.params, cfg.mix), r);
        rows.push_back({"test", ep.label, spec.kind, kDataDrivenArm, repeat, evaluate_error(dd, ep.truth)});
      }
    }
  });
  PipelineResult out;
  for (auto& rows : per_repeat) out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  out.final_train_loss = losses;
  return out;
}

}  // namespace sampler_smith::lg

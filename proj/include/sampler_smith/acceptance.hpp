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


// The acceptance suite. Each criterion is a self-contained check with fixed
// seeds that reports a pass flag and a one-line summary of what it measured.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/corpus.hpp"
#include "sampler_smith/grammar.hpp"
#include "sampler_smith/lg/pipeline.hpp"
#include "sampler_smith/score.hpp"
#include "sampler_smith/stats.hpp"
#include "sampler_smith/synthesis.hpp"
#include "sampler_smith/typecheck.hpp"

namespace sampler_smith::acceptance {

struct Outcome {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs the command-line tool in-process: (args, out, err) -> exit code.
using CliRunner = std::function<int(const std::vector<std::string>&, std::ostream&, std::ostream&)>;

namespace detail {

inline std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::vector<double> draws(const Program& p, const std::vector<double>& args, int n, uint64_t seed) {
  Rng rng(seed);
  return draw_samples(p, args, n, EvalConfig{}, rng).values;
}

}  // namespace detail

inline Outcome corpus_fidelity() {
  using detail::g;
  const auto corpus = load_corpus();
  constexpr int n = 200000;
  const double bern = mean_of(detail::draws(find_entry(corpus, "bernoulli").program, {0.3}, n, 101));
  const double geom = mean_of(detail::draws(find_entry(corpus, "geometric").program, {0.5}, n, 102));
  const auto normal = detail::draws(find_entry(corpus, "std-normal").program, {}, n, 103);
  const double nm = mean_of(normal), ns = sd_of(normal);
  const double ks = ks_distance(normal, [](double x) { return normal_cdf(x); });
  const double beta = mean_of(detail::draws(find_entry(corpus, "beta-a-1").program, {2.0}, n, 104));
  const bool ok = std::abs(bern - 0.3) <= 0.01 && std::abs(geom - 2.0) <= 0.02 && std::abs(nm) < 0.01 &&
                  std::abs(ns - 1.0) < 0.01 && ks < 0.01 && std::abs(beta - 2.0 / 3.0) <= 0.01;
  return {1, "corpus fidelity", ok,
          "bernoulli(0.3) mean " + g(bern) + ", geometric(0.5) mean " + g(geom) + ", std-normal mean " + g(nm) +
              " sd " + g(ns) + " ks " + g(ks) + ", beta(2,1) mean " + g(beta)};
}

inline Outcome statistics_oracle() {
  std::vector<double> xs(60, 1.0);
  xs.insert(xs.end(), 40, 0.0);
  const double p = g_test_p_value(xs, Family::kBernoulli, {0.5});
  const double stat = 2.0 * (60.0 * std::log(60.0 / 50.0) + 40.0 * std::log(40.0 / 50.0));
  const double oracle = std::erfc(std::sqrt(stat / 2.0));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 0.25 * i;
    worst = std::max(worst, std::abs(chi_square_sf(x, 2) - std::exp(-x / 2.0)));
  }
  const bool ok = std::abs(p - 0.0448) <= 1e-4 && std::abs(p - oracle) <= 1e-12 && worst <= 1e-10;
  return {2, "statistics oracle", ok,
          "p " + detail::g(p) + " (erfc oracle " + detail::g(oracle) + "), df=2 max error " + detail::g(worst)};
}

inline Outcome grammar_soundness() {
  const RuleWeights w = estimate_weights(load_corpus(), 1.0, {});
  const std::vector<Formal> one = {{"a", TypeTag::kReal}}, two = {{"a", TypeTag::kReal}, {"b", TypeTag::kReal}};
  Rng rng(301);
  long ill_typed = 0, faults = 0, mismatched = 0;
  double worst = 0.0;
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) {
    const int shape = i % 3;
    const auto& formals = shape == 0 ? std::vector<Formal>{} : shape == 1 ? one : two;
    const TypeTag ret = shape == 1 ? TypeTag::kInt : TypeTag::kReal;
    const std::vector<double> args(formals.size(), 0.5);
    const GeneratedProgram gp = generate_program(formals, ret, w, rng);
    if (!is_well_typed(gp.program)) ++ill_typed;
    try {
      run_program(gp.program, args, EvalConfig{}, rng);
    } catch (const std::exception&) {
      ++faults;
    }
    const double d = std::abs(log_prior(gp.program, w) - gp.log_prob);
    if (!(d <= 1e-12)) ++mismatched;
    if (std::isfinite(d)) worst = std::max(worst, d);
  }
  return {3, "grammar soundness", ill_typed == 0 && faults == 0 && mismatched == 0,
          std::to_string(n) + " programs: " + std::to_string(ill_typed) + " ill-typed, " + std::to_string(faults) +
              " faults, " + std::to_string(mismatched) + " replay mismatches (max diff " + detail::g(worst) + ")"};
}

inline Outcome held_out_prior() {
  const auto corpus = load_corpus();
  std::string detail;
  bool ok = true;
  for (const auto& e : corpus) {
    const RuleWeights w = estimate_weights(corpus, 1.0, same_family_names(corpus, e.name));
    const double lp = log_prior(e.program, w);
    ok = ok && std::isfinite(lp);
    detail += (detail.empty() ? "" : ", ") + e.name + " " + detail::g(lp);
  }
  return {4, "held-out log-prior finite", ok, detail};
}

inline Outcome mh_correctness() {
  using detail::g;
  const RuleWeights w = toy_constant_grammar();
  ScoreConfig cfg;
  cfg.n = 10;
  auto posterior_of_one = [&](const MomentTarget& t) {
    Rng rng(0);
    const double l0 = score_program(parse_program("(fn [] 0.0)"), t, cfg, rng);
    const double l1 = score_program(parse_program("(fn [] 1.0)"), t, cfg, rng);
    return 1.0 / (1.0 + std::exp(l0 - l1));
  };
  auto mh_frequency = [&](const MomentTarget& t, uint64_t seed) {
    Rng rng(seed);
    const ChainTrace trace = run_mh(std::nullopt, t, w, cfg, 100000, rng);
    long ones = 0;
    for (const auto& r : trace.records) ones += r.program == "(fn [] 1.0)";
    return static_cast<double>(ones) / static_cast<double>(trace.records.size());
  };
  // For two programs the total variation distance is the gap in one mass.
  const MomentTarget wide{{1.0, 0.0, 0.0, 0.0}, {1.0, 0.1, 0.1, 0.1}};
  const double exact_wide = posterior_of_one(wide);
  const double tv_wide = std::abs(mh_frequency(wide, 501) - exact_wide);

  const MomentTarget tight{{1.0, 0.0, 0.0, 0.0}, {0.1, 0.1, 0.1, 0.1}};
  const double exact_tight = posterior_of_one(tight);
  const double tv_tight = std::abs(mh_frequency(tight, 502) - exact_tight);
  Rng rng(503);
  const AbcResult abc = rejection_abc(tight.target, w, 0.05, 100000, cfg, rng);
  long ones = 0;
  for (const auto& p : abc.accepted) ones += p.body->value == 1.0;
  const double abc_one = abc.accepted.empty() ? 0.0 : static_cast<double>(ones) / static_cast<double>(abc.accepted.size());
  const double tv_abc = std::abs(abc_one - exact_tight);
  return {5, "MH correctness on the toy grammar", tv_wide <= 0.02 && tv_tight <= 0.02 && tv_abc <= 0.02,
          "TV to enumeration: wide kernel " + g(tv_wide) + " (exact " + g(exact_wide) + "), tight kernel " +
              g(tv_tight) + "; rejection ABC " + g(tv_abc) + " over " + std::to_string(abc.accepted.size()) +
              " accepted"};
}

inline Outcome bernoulli_synthesis(int jobs = 1) {
  const auto corpus = load_corpus();
  const RuleWeights w = estimate_weights(corpus, 1.0, same_family_names(corpus, "bernoulli"));
  FamilyTarget target;
  target.family = Family::kBernoulli;
  target.params = {{0.1}, {0.3}, {0.5}, {0.7}, {0.9}};
  const ScoreConfig cfg;
  constexpr int seeds = 10;
  std::vector<double> pv(seeds);
  std::vector<std::string> best(seeds);
  parallel_for(seeds, jobs, [&](std::size_t s) {
    Rng rng(derive_seed(2024, {s}));
    const ChainTrace trace = run_mh(std::nullopt, target, w, cfg, 20000, rng);
    pv[s] = mean_p_value(trace.best_program, Family::kBernoulli, {0.2}, {0.2}, 20, cfg, derive_seed(77, {s}));
    best[s] = print_program(trace.best_program);
  });
  const auto top = static_cast<std::size_t>(std::max_element(pv.begin(), pv.end()) - pv.begin());
  long above = std::count_if(pv.begin(), pv.end(), [](double p) { return p > 0.5; });
  return {6, "Bernoulli synthesis with the family held out", pv[top] > 0.5,
          std::to_string(above) + "/10 seeds above 0.5; best p " + detail::g(pv[top]) + " from " + best[top]};
}

inline Outcome gp_baseline(int jobs = 1) {
  using detail::g;
  const auto corpus = load_corpus();
  const RuleWeights w = estimate_weights(corpus, 1.0, same_family_names(corpus, "normal"));
  const TargetSpec target = MomentTarget{{0.0, 1.0, 0.0, 0.0}};
  ScoreConfig cfg;
  cfg.jobs = jobs;
  const GpConfig gp;
  const long budget = gp.population + static_cast<long>(gp.generations) * (gp.population - gp.elitism);
  constexpr int seeds = 5;
  std::vector<double> gp_gain(seeds), mh_gain(seeds), gp_low(seeds), mh_low(seeds);
  for (int s = 0; s < seeds; ++s) {
    Rng rng(derive_seed(7000, {static_cast<uint64_t>(s)}));
    const GpResult r = run_gp(target, w, gp, cfg, rng);
    const double start = r.generations.front().best_penalty;
    gp_gain[s] = (start - r.generations.back().best_penalty) / start;
    Rng mh_rng(derive_seed(7100, {static_cast<uint64_t>(s)}));
    const ChainTrace trace = run_mh(std::nullopt, target, w, cfg, budget, mh_rng);
    mh_gain[s] = (start - penalty(trace.best_record().log_score, target)) / start;
    // Lowest penalty seen anywhere, ignoring the prior. Reported only.
    const double low0 = r.generations.front().min_penalty;
    double low = INFINITY, mh_min = INFINITY;
    for (const auto& gs : r.generations) low = std::min(low, gs.min_penalty);
    for (const auto& rec : trace.records) mh_min = std::min(mh_min, penalty(rec.log_score, target));
    gp_low[s] = (low0 - low) / low0;
    mh_low[s] = (low0 - mh_min) / low0;
  }
  const double gp_med = median_of(gp_gain), mh_med = median_of(mh_gain);
  const bool ok = gp_med >= 0.5 && mh_med >= gp_med / 2.0 && mh_med <= gp_med * 2.0;
  return {7, "GP baseline and matched-budget MH", ok,
          "median improvement over the generation-0 best penalty: GP " + g(gp_med) + ", MH " + g(mh_med) + " (" +
              std::to_string(budget) + " evaluations each); lowest penalty seen regardless of prior: GP " +
              g(median_of(gp_low)) + ", MH " + g(median_of(mh_low))};
}

inline Outcome smc_vs_kalman() {
  using namespace lg;
  const LgModel m;
  Rng rng(801);
  const Episode ep = sample_model_episode(m, 50, rng);
  const ParticleResult r = smc_run(m, ep.y, 10000, Proposal::prior(), rng);
  const KalmanResult k = kalman_filter_smoother(m, ep.y);
  const auto est = r.filtering_means();
  double ss = 0.0;
  for (std::size_t t = 0; t < est.size(); ++t) ss += (est[t] - k.filter_mean[t]) * (est[t] - k.filter_mean[t]);
  const double rmse = std::sqrt(ss / static_cast<double>(est.size()));

  std::vector<TrainPair> pairs;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd f(kFeatures);
    for (int j = 0; j < kFeatures; ++j) f[j] = 2.0 * uniform01(rng) - 1.0;
    pairs.push_back({f, 2.0 * uniform01(rng) - 1.0, 0.5 + uniform01(rng)});
  }
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> coef;
  for (const auto& p : pairs) coef.push_back(p.weight);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const MlpParams p = init_mlp(rng);
    const auto analytic = loss_and_grad(p, pairs, idx, coef).grad.flatten();
    const auto theta = p.flatten();
    const double h = 1e-5;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      MlpParams plus = p, minus = p;
      auto tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      plus.unflatten(tp);
      minus.unflatten(tm);
      const double numeric =
          (loss_and_grad(plus, pairs, idx, coef).loss - loss_and_grad(minus, pairs, idx, coef).loss) / (2 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
  }
  return {8, "SMC against the Kalman filter", rmse < 0.05 && worst < 1e-4,
          "filtering-mean RMSE " + detail::g(rmse) + " with 10^4 particles, gradient check max relative error " +
              detail::g(worst)};
}

inline Outcome data_driven_benefit(int jobs = 1) {
  using namespace lg;
  PipelineConfig cfg;
  cfg.test_kinds = {WaveKind::kSquare};
  cfg.jobs = jobs;
  Rng rng(42);
  const PipelineResult r = run_pipeline(cfg, rng);
  const auto prior = per_repeat_mae(r, kPriorArm, WaveKind::kSquare, cfg.repeats);
  const auto dd = per_repeat_mae(r, kDataDrivenArm, WaveKind::kSquare, cfg.repeats);
  int wins = 0;
  std::string detail;
  for (int i = 0; i < cfg.repeats; ++i) {
    wins += dd[i] < prior[i];
    detail += (i ? ", " : "") + detail::g(dd[i]) + " vs " + detail::g(prior[i]);
  }
  return {9, "data-driven proposal beats the prior", wins >= 4,
          std::to_string(wins) + "/5 repeats; data-driven vs prior MAE on square tests: " + detail};
}

namespace detail {

inline std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& f : std::filesystem::directory_iterator(dir))
    if (f.is_regular_file()) files[f.path().filename().string()] = read_text_file(f.path());
  return files;
}

inline std::string without_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

}  // namespace detail

// One small invocation of every subcommand.
inline std::vector<std::vector<std::string>> determinism_commands() {
  const std::string normal = R"({"kind":"moments","family":"normal","params":[0,1]})";
  return {
      {"weights", "estimate", "--holdout", "bernoulli"},
      {"generate", "--count", "4", "--draws", "200", "--seed", "3"},
      {"score", "--program", "(fn [] (safe-uc -1.0 1.0))", "--target", normal, "--seed", "3"},
      {"synth", "mh", "--target", R"({"kind":"family","family":"bernoulli","params":[0.3,0.7]})", "--holdout",
       "bernoulli", "--iterations", "150", "--chains", "3", "--draws", "50", "--seed", "3"},
      {"synth", "gp", "--target", normal, "--population", "16", "--generations", "4", "--draws", "50", "--seed", "3"},
      {"abc", "reject", "--toy", "--target", R"({"kind":"moments","target":{"mean":1,"sd":0,"skew":0,"kurt":0}})",
       "--epsilon", "0.05", "--max-draws", "500", "--draws", "20", "--seed", "3"},
      {"lg", "episodes", "--train", "step", "--test", "all", "--seed", "3"},
      {"lg", "smc", "--kind", "square", "--offset", "1", "--particles", "40", "--seed", "3"},
      {"lg", "train", "--train", "step", "--particles", "20", "--epochs", "3", "--seed", "3"},
      {"lg", "pipeline", "--train", "step", "--test", "all", "--repeats", "2", "--train-particles", "20",
       "--test-particles", "5", "--epochs", "3", "--seed", "3"},
      {"selftest", "--only", "2"},
  };
}

inline Outcome determinism(const CliRunner& run) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "sampler-smith-determinism";
  fs::remove_all(root);
  std::vector<std::string> failures;
  int index = 0;
  for (const auto& cmd : determinism_commands()) {
    std::map<std::string, std::string> outputs[3];
    bool ran = true;
    for (int k = 0; k < 3; ++k) {
      const fs::path dir = root / (std::to_string(index) + "-" + std::to_string(k));
      fs::create_directories(dir);
      auto args = cmd;
      args.insert(args.end(), {"--jobs", k == 2 ? "4" : "1", "--out", dir.string()});
      std::ostringstream out, err;
      if (run(args, out, err) != 0) {
        failures.push_back(cmd[0] + " exited nonzero: " + err.str());
        ran = false;
        break;
      }
      outputs[k] = detail::read_dir(dir);
    }
    ++index;
    if (!ran) continue;
    const std::string name = cmd[0] + (cmd.size() > 1 && cmd[1][0] != '-' ? " " + cmd[1] : "");
    if (outputs[0].empty()) failures.push_back(name + " wrote no files");
    if (outputs[0] != outputs[1]) failures.push_back(name + " differs between identical runs");
    for (const auto& [file, text] : outputs[0]) {
      if (file.size() < 4 || file.substr(file.size() - 4) != ".csv") continue;
      const auto other = outputs[2].find(file);
      if (other == outputs[2].end() || detail::without_comments(text) != detail::without_comments(other->second))
        failures.push_back(name + " " + file + " differs with --jobs 4");
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(determinism_commands().size()) + " subcommands run three times";
  for (const auto& f : failures) detail += "; " + f;
  return {10, "determinism", failures.empty(), detail};
}

inline constexpr int kNumCriteria = 10;

inline Outcome run_criterion(int id, const CliRunner& run, int jobs = 1) {
  switch (id) {
    case 1: return corpus_fidelity();
    case 2: return statistics_oracle();
    case 3: return grammar_soundness();
    case 4: return held_out_prior();
    case 5: return mh_correctness();
    case 6: return bernoulli_synthesis(jobs);
    case 7: return gp_baseline(jobs);
    case 8: return smc_vs_kalman();
    case 9: return data_driven_benefit(jobs);
    case 10: return determinism(run);
  }
  throw std::invalid_argument("no acceptance criterion " + std::to_string(id));
}

inline std::string format_outcome(const Outcome& o) {
  return std::string(o.passed ? "PASS" : "FAIL") + " " + std::to_string(o.id) + " " + o.name + ": " + o.detail;
}

}  // namespace sampler_smith::acceptance

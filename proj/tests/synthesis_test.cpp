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


#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "sampler_smith/corpus.hpp"
#include "sampler_smith/synthesis.hpp"

namespace sampler_smith {
namespace {

// Only the constants 0.0 and 1.0, each with probability one half.
RuleWeights two_constant_grammar() {
  RuleWeights w = RuleWeights::uniform();
  w.real.rules = {0, 1, 0, 0, 0, 0, 0};
  w.boolean.rules = {0, 1, 0, 0, 0, 0, 0};
  w.real_consts = {0.5, 0.5, 0, 0, 0, 0, 0};
  w.max_depth = 1;
  validate(w);
  return w;
}

// Target mean 1; the sd, skew and kurtosis of a constant are all zero and
// contribute equally to both programs.
MomentTarget toy_target(double sigma_mean) {
  return MomentTarget{{1.0, 0.0, 0.0, 0.0}, {sigma_mean, 0.1, 0.1, 0.1}};
}

// Posterior mass of the program `1.0` by enumeration.
double enumerated_posterior_of_one(const MomentTarget& t, const ScoreConfig& cfg) {
  Rng rng(0);
  const double l0 = score_program(parse_program("(fn [] 0.0)"), t, cfg, rng);
  const double l1 = score_program(parse_program("(fn [] 1.0)"), t, cfg, rng);
  return 1.0 / (1.0 + std::exp(l0 - l1));
}

std::map<std::string, long> visit_counts(const ChainTrace& trace, std::size_t thin = 1) {
  std::map<std::string, long> counts;
  for (std::size_t i = 0; i < trace.records.size(); i += thin) ++counts[trace.records[i].program];
  return counts;
}

TEST(Mh, ToyPosteriorWithTightKernel) {
  const auto t = toy_target(0.1);
  ScoreConfig cfg;
  cfg.n = 10;
  Rng rng(1);
  auto trace = run_mh(parse_program("(fn [] 0.0)"), t, two_constant_grammar(), cfg, 100000, rng);
  const double want = enumerated_posterior_of_one(t, cfg);
  EXPECT_GT(want, 1.0 - 1e-15);
  auto counts = visit_counts(trace);
  EXPECT_NEAR(counts["(fn [] 1.0)"] / 1e5, want, 0.02);
}

TEST(Mh, ToyPosteriorMatchesEnumeration) {
  const auto t = toy_target(1.0);
  ScoreConfig cfg;
  cfg.n = 10;
  const double want = enumerated_posterior_of_one(t, cfg);
  EXPECT_NEAR(want, 1.0 / (1.0 + std::exp(-0.5)), 1e-12);
  Rng rng(2);
  auto trace = run_mh(std::nullopt, t, two_constant_grammar(), cfg, 100000, rng);
  auto counts = visit_counts(trace);
  const double got = counts["(fn [] 1.0)"] / 1e5;
  EXPECT_NEAR(got, want, 0.02);

  // Every tenth state is close to independent here; chi-square on those.
  auto thinned = visit_counts(trace, 10);
  const double n = 1e4;
  const double o1 = static_cast<double>(thinned["(fn [] 1.0)"]), o0 = n - o1;
  const double chi2 = std::pow(o1 - n * want, 2) / (n * want) + std::pow(o0 - n * (1 - want), 2) / (n * (1 - want));
  EXPECT_GT(boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), chi2)), 0.01);
}

TEST(Mh, SimplifiedRatioMatchesFullForm) {
  const RuleWeights w = RuleWeights::defaults();
  const TargetSpec t = MomentTarget{{0.0, 1.0, 0.0, 0.0}, {0.5, 0.5, 0.5, 0.5}};
  ScoreConfig cfg;
  cfg.n = 20;
  Rng rng(3);
  int compared = 0;
  while (compared < 1000) {
    MhState s = initial_state(t, w, cfg, rng);
    MhProposal p = propose(s, t, w, cfg, rng);
    const double a = log_accept_ratio(s, p), b = log_accept_ratio_full(s, p);
    if (a == -INFINITY) {
      EXPECT_EQ(b, -INFINITY);
      continue;
    }
    EXPECT_NEAR(a, b, 1e-10) << print_program(s.program) << " -> " << print_program(p.program);
    ++compared;
  }
}

TEST(Mh, IdenticalRegenerationIsAccepted) {
  // A single-site program whose only alternative is itself.
  RuleWeights w = two_constant_grammar();
  w.real_consts = {1, 0, 0, 0, 0, 0, 0};
  const TargetSpec t = toy_target(1.0);
  Rng rng(4);
  MhState s{parse_program("(fn [] 0.0)"), 0.0, 0.0, 0};
  s.log_score = score_program(s.program, t, ScoreConfig{}, rng);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(mh_step(s, t, w, ScoreConfig{}, rng).accepted);
  EXPECT_EQ(s.iteration, 20);
}

TEST(Mh, RejectedProposalLeavesStateAlone) {
  // From `1.0` under a tight kernel, proposing `0.0` is always rejected.
  const RuleWeights w = two_constant_grammar();
  const TargetSpec t = toy_target(0.1);
  ScoreConfig cfg;
  Rng rng(5);
  const Program one = parse_program("(fn [] 1.0)");
  MhState s{one, log_prior(one, w), 0.0, 0};
  s.log_score = score_program(one, t, cfg, rng);
  const double before = s.log_score;
  for (int i = 0; i < 50; ++i) {
    mh_step(s, t, w, cfg, rng);
    EXPECT_TRUE(structurally_equal(s.program, one));
    EXPECT_EQ(s.log_score, before);
  }
  EXPECT_EQ(s.iteration, 50);
}

TEST(Mh, SingleIteration) {
  Rng rng(6);
  auto trace = run_mh(std::nullopt, toy_target(1.0), two_constant_grammar(), ScoreConfig{}, 1, rng);
  EXPECT_EQ(trace.records.size(), 1u);
  EXPECT_EQ(trace.records[0].iteration, 1);
  EXPECT_THROW(run_mh(std::nullopt, toy_target(1.0), two_constant_grammar(), ScoreConfig{}, 0, rng),
               std::invalid_argument);
}

TEST(Mh, TraceIsDeterministicAndBestIsMonotone) {
  const auto corpus = load_corpus();
  const RuleWeights w = estimate_weights(corpus, 1.0, {"std-normal", "normal"});
  const TargetSpec t = MomentTarget{{0.0, 1.0, 0.0, 0.0}};
  ScoreConfig cfg;
  cfg.n = 50;
  Rng r1(7), r2(7);
  auto a = run_mh(std::nullopt, t, w, cfg, 500, r1);
  auto b = run_mh(std::nullopt, t, w, cfg, 500, r2);
  ASSERT_EQ(a.records.size(), b.records.size());
  double best = -INFINITY;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].program, b.records[i].program);
    EXPECT_EQ(a.records[i].log_score, b.records[i].log_score);
    EXPECT_EQ(a.records[i].accepted, b.records[i].accepted);
    EXPECT_EQ(a.records[i].iteration, static_cast<long>(i + 1));
    const double obj = a.records[i].log_prior + a.records[i].log_score;
    if (i <= a.best) best = std::max(best, obj);
    EXPECT_LE(obj, a.best_record().log_prior + a.best_record().log_score);
    EXPECT_NEAR(a.records[i].log_prior, log_prior(parse_program(a.records[i].program), w), 1e-9);
  }
  EXPECT_EQ(best, a.best_record().log_prior + a.best_record().log_score);
  EXPECT_EQ(print_program(a.best_program), a.best_record().program);
}

TEST(Mh, NoFiniteInitIsAConfigurationError) {
  // Every program is ten nested `exp` around a constant in [-10, 10], which
  // overflows on every draw.
  RuleWeights w = two_constant_grammar();
  w.real.rules = {0, 0, 1, 0, 0, 0, 0};
  w.real.procs.assign(w.real.procs.size(), 0.0);
  w.real.procs[static_cast<std::size_t>(Prim::kExp)] = 1.0;
  w.real_consts = {0, 0, 0, 0, 0, 0, 1};
  w.max_depth = 10;
  Rng rng(8);
  const TargetSpec t = MomentTarget{{0.0, 1.0, 0.0, 0.0}};
  EXPECT_THROW(run_mh(std::nullopt, t, w, ScoreConfig{}, 5, rng), std::runtime_error);
}

TEST(Gp, CrossoverKeepsOffspringWellTyped) {
  const auto corpus = load_corpus();
  const RuleWeights w = estimate_weights(corpus, 1.0, {});
  const std::vector<Formal> formals = {{"a", TypeTag::kReal}, {"b", TypeTag::kReal}};
  Rng rng(9);
  int changed = 0;
  for (int i = 0; i < 10000; ++i) {
    Program a = generate_program(formals, TypeTag::kReal, w, rng).program;
    Program b = generate_program(formals, TypeTag::kReal, w, rng).program;
    auto [ca, cb] = crossover(a, b, w.max_depth, 20, rng);
    ASSERT_TRUE(is_well_typed(ca)) << print_program(ca);
    ASSERT_TRUE(is_well_typed(cb)) << print_program(cb);
    ASSERT_LE(generation_depth(ca), w.max_depth);
    if (!structurally_equal(ca, a)) ++changed;
  }
  EXPECT_GT(changed, 5000);
}

TEST(Gp, IdenticalPopulationWithoutVariationIsStatic) {
  const TargetSpec t = MomentTarget{{0.0, 1.0, 0.0, 0.0}};
  GpConfig gp;
  gp.population = 20;
  gp.generations = 5;
  gp.mutation = 0.0;
  gp.crossover = 0.0;
  Rng rng(10);
  auto r = run_gp(t, RuleWeights::defaults(), gp, ScoreConfig{}, rng, {parse_program("(fn [] (+ 1.0 -1.0))")});
  ASSERT_EQ(r.generations.size(), 6u);
  for (const auto& g : r.generations) {
    EXPECT_EQ(g.best_fitness, r.generations[0].best_fitness);
    EXPECT_DOUBLE_EQ(g.mean_fitness, r.generations[0].best_fitness);
  }
}

TEST(Gp, BestFitnessIsMonotoneAndDeterministic) {
  const TargetSpec t = MomentTarget{{0.0, 1.0, 0.0, 0.0}};
  const RuleWeights w = estimate_weights(load_corpus(), 1.0, {"std-normal", "normal"});
  GpConfig gp;
  gp.population = 30;
  gp.generations = 8;
  ScoreConfig serial, parallel;
  parallel.jobs = 4;
  Rng r1(11), r2(11);
  auto a = run_gp(t, w, gp, serial, r1);
  auto b = run_gp(t, w, gp, parallel, r2);
  ASSERT_EQ(a.generations.size(), b.generations.size());
  for (std::size_t g = 0; g < a.generations.size(); ++g) {
    EXPECT_EQ(a.generations[g].best_fitness, b.generations[g].best_fitness);
    EXPECT_EQ(a.generations[g].best_program, b.generations[g].best_program);
    if (g > 0) {
      EXPECT_GE(a.generations[g].best_fitness, a.generations[g - 1].best_fitness);
    }
    EXPECT_EQ(a.generations[g].best_penalty, penalty(a.generations[g].best_log_score, t));
    EXPECT_LE(a.generations[g].min_penalty, a.generations[g].best_penalty);
    EXPECT_EQ(a.generations[g].min_penalty, b.generations[g].min_penalty);
  }
  EXPECT_TRUE(is_well_typed(a.best.program));
}

TEST(Gp, RejectsBadConfig) {
  GpConfig gp;
  gp.population = 1;
  EXPECT_THROW(validate(gp), std::invalid_argument);
  gp = GpConfig{};
  gp.crossover = 1.5;
  EXPECT_THROW(validate(gp), std::invalid_argument);
}

TEST(Abc, InfiniteEpsilonReturnsThePrior) {
  Rng rng(12);
  auto r = rejection_abc({1.0, 0.0, 0.0, 0.0}, two_constant_grammar(), INFINITY, 20000, ScoreConfig{}, rng);
  ASSERT_EQ(r.accepted.size(), 20000u);
  long ones = 0;
  for (const auto& p : r.accepted) ones += p.body->value == 1.0;
  EXPECT_NEAR(ones / 20000.0, 0.5, 0.02);
}

TEST(Abc, ZeroEpsilonWithContinuousStatistics) {
  RuleWeights w = two_constant_grammar();
  w.real_consts = {0, 0, 0, 0, 0, 1, 0};
  Rng rng(13);
  auto r = rejection_abc({0.0, 0.0, 0.0, 0.0}, w, 0.0, 1000, ScoreConfig{}, rng);
  EXPECT_TRUE(r.accepted.empty());
  EXPECT_EQ(r.draws, 1000);
}

TEST(Abc, ToyAcceptanceMatchesTruncatedPosterior) {
  // Within epsilon = 0.05 of mean 1 only the program `1.0` survives.
  Rng rng(14);
  auto r = rejection_abc({1.0, 0.0, 0.0, 0.0}, two_constant_grammar(), 0.05, 20000, ScoreConfig{}, rng);
  long ones = 0;
  for (const auto& p : r.accepted) ones += p.body->value == 1.0;
  ASSERT_FALSE(r.accepted.empty());
  EXPECT_NEAR(static_cast<double>(ones) / static_cast<double>(r.accepted.size()), 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(r.accepted.size()) / 20000.0, 0.5, 0.02);
}

}  // namespace
}  // namespace sampler_smith

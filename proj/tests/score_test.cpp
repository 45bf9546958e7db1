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


#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sampler_smith/corpus.hpp"
#include "sampler_smith/score.hpp"
#include "sampler_smith/syntax.hpp"

namespace sampler_smith {
namespace {

FamilyTarget family_target(Family f, std::vector<std::vector<double>> params) {
  FamilyTarget t;
  t.family = f;
  t.params = std::move(params);
  return t;
}

TEST(Score, CorpusBernoulliAgainstItsFamily) {
  const Program p = find_entry(load_corpus(), "bernoulli").program;
  ScoreConfig cfg;
  for (double lambda : {0.2, 0.5, 0.8}) {
    FamilyTarget t = family_target(Family::kBernoulli, {{lambda}});
    double total = 0.0;
    for (uint64_t seed = 0; seed < 200; ++seed) total += score_program_seeded(p, t, cfg, seed);
    const double mean = total / 200.0;
    EXPECT_GT(mean, -2.0) << lambda;
    EXPECT_LT(mean, -0.5) << lambda;
  }
}

TEST(Score, ConstantZeroAgainstStandardNormal) {
  MomentTarget t{{0.0, 1.0, 0.0, 0.0}, {0.001, 0.001, 0.001, 0.001}};
  Rng rng(1);
  const double s = score_program(parse_program("(fn [] 0.0)"), t, ScoreConfig{}, rng);
  EXPECT_NEAR(s, -499976.04, 0.01);
  EXPECT_NEAR(penalty(s, t), 500000.0, 1e-6);
}

TEST(Score, NaNProgramIsRejected) {
  MomentTarget t{{0.0, 1.0, 0.0, 0.0}};
  Rng rng(1);
  EXPECT_EQ(score_program(parse_program("(fn [] (- (exp 1000.0) (exp 1000.0)))"), t, ScoreConfig{}, rng), -INFINITY);
}

TEST(Score, TooManyCapHitsAreRejected) {
  MomentTarget t{{0.0, 1.0, 0.0, 0.0}};
  Rng rng(1);
  EXPECT_EQ(score_program(parse_program("(fn [] (+ (safe-uc 0.0 1.0) (recur)))"), t, ScoreConfig{}, rng), -INFINITY);
  // Rejecting about one run in three is tolerated.
  Program q = parse_program("(fn [] (if (< (safe-uc 0.0 1.0) 0.03) (recur) (safe-uc 0.0 1.0)))");
  EXPECT_GT(score_program(q, t, ScoreConfig{}, rng), -INFINITY);
}

TEST(Score, FamilyScoreInvariantUnderReordering) {
  const auto corpus = load_corpus();
  const Program p = find_entry(corpus, "geometric").program;
  FamilyTarget a = family_target(Family::kGeometric, {{0.2}, {0.4}, {0.6}, {0.8}});
  FamilyTarget b = family_target(Family::kGeometric, {{0.6}, {0.2}, {0.8}, {0.4}});
  for (uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_EQ(score_program_seeded(p, a, ScoreConfig{}, seed), score_program_seeded(p, b, ScoreConfig{}, seed));
}

TEST(Score, ParallelSettingsMatchSerial) {
  const Program p = find_entry(load_corpus(), "poisson").program;
  FamilyTarget t = family_target(Family::kPoisson, {{0.5}, {1.0}, {2.0}, {3.0}, {4.0}});
  ScoreConfig one, four;
  four.jobs = 4;
  for (uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_EQ(score_program_seeded(p, t, one, seed), score_program_seeded(p, t, four, seed));
}

TEST(Score, ContinuousFamilyUsesAnalyticMoments) {
  const Program p = find_entry(load_corpus(), "normal").program;
  FamilyTarget t = family_target(Family::kNormal, {{0.0, 1.0}, {3.0, 2.0}});
  t.sigma = {0.5, 0.5, 0.5, 0.5};
  ScoreConfig cfg;
  cfg.n = 2000;
  const double good = score_program_seeded(p, t, cfg, 3);
  FamilyTarget wrong = t;
  wrong.params = {{1.0, 1.0}, {4.0, 2.0}};
  wrong.args = t.params;
  EXPECT_GT(good, score_program_seeded(p, wrong, cfg, 3) + 1.0);
  EXPECT_LE(good, score_normalizer(t));
}

TEST(Score, EmpiricalTarget) {
  EmpiricalTarget t{{1.0, 2.0, 3.0, 4.0}, {0.1, 0.1, 0.1, 0.1}};
  Rng rng(5);
  // Constant 2.5 matches the mean and misses the sd by sqrt(1.25).
  const double s = score_program(parse_program("(fn [] 2.5)"), t, ScoreConfig{}, rng);
  const double expected = 4 * normal_log_pdf(0, 0, 0.1) - 1.25 / (2 * 0.01) - 1.36 * 1.36 / (2 * 0.01);
  EXPECT_NEAR(s, expected, 1e-9);
}

TEST(Score, TargetJsonRoundTrip) {
  auto j = nlohmann::json::parse(R"({"kind": "family", "family": "bernoulli", "params": [0.1, 0.3, 0.5]})");
  TargetSpec t = target_from_json(j);
  const auto& f = std::get<FamilyTarget>(t);
  EXPECT_EQ(f.params.size(), 3u);
  EXPECT_EQ(f.params[1], std::vector<double>{0.3});
  EXPECT_EQ(target_return_type(t), TypeTag::kInt);
  EXPECT_EQ(target_formals(t).size(), 1u);
  TargetSpec back = target_from_json(to_json(t));
  EXPECT_EQ(std::get<FamilyTarget>(back).params, f.params);

  auto m = target_from_json(nlohmann::json::parse(R"({"kind": "moments", "family": "normal", "params": [0, 1], "sigma": 0.001})"));
  EXPECT_EQ(std::get<MomentTarget>(m).target, (MomentVector{0, 1, 0, 0}));
  EXPECT_EQ(std::get<MomentTarget>(m).sigma[3], 0.001);
  EXPECT_EQ(target_return_type(m), TypeTag::kReal);

  EXPECT_THROW(target_from_json(nlohmann::json::parse(R"({"kind": "family", "family": "bernoulli", "params": [1.5]})")),
               std::domain_error);
  EXPECT_THROW(target_from_json(nlohmann::json::parse(R"({"kind": "moments", "target": {"mean": 0, "sd": 1, "skew": 0, "kurt": 0}, "sigma": 0})")),
               std::invalid_argument);
  EXPECT_THROW(target_from_json(nlohmann::json::parse(R"({"kind": "family", "family": "zeta", "params": [1]})")),
               std::invalid_argument);
}

TEST(Score, MeanPValueOfExactSampler) {
  const Program p = find_entry(load_corpus(), "bernoulli").program;
  const double m = mean_p_value(p, Family::kBernoulli, {0.2}, {0.2}, 200, ScoreConfig{}, 9);
  EXPECT_GT(m, 0.4);
  EXPECT_LT(m, 0.6);
  const double bad = mean_p_value(parse_program("(fn [p] 1.0)"), Family::kBernoulli, {0.2}, {0.2}, 5, ScoreConfig{}, 9);
  EXPECT_LT(bad, 1e-10);
}

}  // namespace
}  // namespace sampler_smith

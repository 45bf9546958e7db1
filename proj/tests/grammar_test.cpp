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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/corpus.hpp"
#include "sampler_smith/grammar.hpp"
#include "sampler_smith/syntax.hpp"
#include "sampler_smith/typecheck.hpp"

namespace sampler_smith {
namespace {

GenContext bare_context(int depth = 0) {
  GenContext c;
  c.depth = depth;
  return c;
}

TEST(Generate, AtDepthCapWithEmptyScopeOnlyConstants) {
  RuleWeights w = RuleWeights::uniform(0);
  for (uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    Generated g = generate(s % 2 ? TypeTag::kReal : TypeTag::kBool, bare_context(), w, rng);
    EXPECT_EQ(g.expr->kind, ExprKind::kConst);
  }
}

TEST(Generate, AtDepthCapVariablesOrConstants) {
  RuleWeights w = RuleWeights::uniform(0);
  GenContext c = root_context({{"x", TypeTag::kReal}}, TypeTag::kReal);
  int vars = 0;
  for (uint64_t s = 0; s < 400; ++s) {
    Rng rng(s);
    Generated g = generate(TypeTag::kReal, c, w, rng);
    ASSERT_TRUE(g.expr->kind == ExprKind::kConst || g.expr->kind == ExprKind::kVar);
    vars += g.expr->kind == ExprKind::kVar;
  }
  EXPECT_GT(vars, 120);
  EXPECT_LT(vars, 280);
}

TEST(Generate, ConstantLogProbIsProductOfChoices) {
  RuleWeights w = RuleWeights::uniform();
  w.real.rules = {0.0, 0.5, 0.2, 0.1, 0.1, 0.1, 0.0};
  w.real_consts = {0.1, 0.3, 0.1, 0.1, 0.1, 0.2, 0.1};
  EXPECT_NEAR(subtree_log_prob(*make_real(0.0), TypeTag::kReal, bare_context(), w), std::log(0.05), 1e-15);
}

TEST(Generate, ContinuousConstantDensity) {
  RuleWeights w = RuleWeights::uniform();
  const double c = 0.37;
  const double expected = std::log(w.real_consts[5] * std::exp(-0.5 * c * c) / std::sqrt(2 * kPi) +
                                   w.real_consts[6] / 20.0);
  EXPECT_NEAR(real_const_log_prob(c, w), expected, 1e-14);
  EXPECT_NEAR(real_const_log_prob(11.0, w), std::log(w.real_consts[5]) - 60.5 - 0.5 * std::log(2 * kPi), 1e-12);
}

TEST(Generate, DeterministicGivenSeed) {
  RuleWeights w = RuleWeights::defaults();
  for (uint64_t s = 0; s < 50; ++s) {
    Rng a(s), b(s);
    auto x = generate_program({{"p", TypeTag::kReal}}, TypeTag::kReal, w, a);
    auto y = generate_program({{"p", TypeTag::kReal}}, TypeTag::kReal, w, b);
    EXPECT_TRUE(structurally_equal(x.program, y.program));
    EXPECT_EQ(x.log_prob, y.log_prob);
  }
}

// Generation and replay must agree for every program, under several weight
// settings including ones that favour let-fn and recur.
TEST(Generate, ReplayMatchesGenerationAndProgramsAreSound) {
  RuleWeights heavy = RuleWeights::defaults();
  heavy.real.rules = {0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  heavy.boolean.rules = {0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  heavy.max_depth = 5;
  const std::vector<RuleWeights> ws = {RuleWeights::defaults(), heavy,
                                       estimate_weights(load_corpus(), 1.0, std::vector<std::string>{})};
  const std::vector<Formal> formals = {{"p", TypeTag::kReal}, {"q", TypeTag::kBool}};
  int n = 0;
  for (std::size_t wi = 0; wi < ws.size(); ++wi) {
    for (uint64_t s = 0; s < 3000; ++s, ++n) {
      Rng rng(derive_seed(s, {wi}));
      const TypeTag ret = s % 3 == 0 ? TypeTag::kBool : (s % 3 == 1 ? TypeTag::kReal : TypeTag::kInt);
      auto g = generate_program(formals, ret, ws[wi], rng);
      ASSERT_TRUE(std::isfinite(g.log_prob));
      ASSERT_NO_THROW(type_check(g.program)) << print_program(g.program);
      ASSERT_LE(generation_depth(g.program), ws[wi].max_depth);
      const double lp = log_prior(g.program, ws[wi]);
      ASSERT_NEAR(lp, g.log_prob, 1e-12) << print_program(g.program);
      Program back = parse_program(print_program(g.program));
      ASSERT_TRUE(structurally_equal(back, g.program)) << print_program(g.program);
      Rng er(s);
      ASSERT_NO_THROW(run_program(g.program, {0.5, 1.0}, EvalConfig{}, er));
    }
  }
  EXPECT_EQ(n, 9000);
}

TEST(LogPrior, OutsideSupportBeyondDepthCap) {
  RuleWeights w = RuleWeights::defaults();
  auto chain = [](int depth) {
    ExprPtr e = make_real(1.0);
    for (int i = 0; i < depth; ++i) e = make_prim(Prim::kInc, {e});
    return Program{{}, TypeTag::kReal, e};
  };
  EXPECT_TRUE(std::isfinite(log_prior(chain(w.max_depth), w)));
  EXPECT_EQ(log_prior(chain(w.max_depth + 1), w), -INFINITY);
}

TEST(LogPrior, ArityThreeProcedureIsOutsideSupport) {
  Program p = parse_program("(fn [] (let [f (fn [a b c] (+ a (+ b c)))] (f 1.0 2.0 3.0)))");
  EXPECT_EQ(log_prior(p, RuleWeights::defaults()), -INFINITY);
}

TEST(LogPrior, CorpusFiniteUnderSmoothedWeights) {
  const auto corpus = load_corpus();
  RuleWeights w = estimate_weights(corpus, 1.0, {});
  for (const auto& e : corpus) EXPECT_TRUE(std::isfinite(log_prior(e.program, w))) << e.name;
}

TEST(Estimate, EmptyCorpusIsUniform) {
  RuleWeights w = estimate_weights(std::vector<Program>{}, 1.0);
  for (double v : w.real.rules) EXPECT_DOUBLE_EQ(v, 1.0 / 7);
  for (double v : w.boolean.rules) EXPECT_DOUBLE_EQ(v, 1.0 / 7);
  for (double v : w.real.procs) EXPECT_DOUBLE_EQ(v, 1.0 / 12);
  for (double v : w.real_consts) EXPECT_DOUBLE_EQ(v, 1.0 / 7);
}

TEST(Estimate, SingleConstantProgram) {
  RuleWeights w = estimate_weights({parse_program("(fn [] 0.0)")}, 1.0);
  EXPECT_DOUBLE_EQ(w.real.rules[static_cast<int>(Rule::kConst)], 2.0 / 8.0);
  EXPECT_DOUBLE_EQ(w.real.rules[static_cast<int>(Rule::kVar)], 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(w.real_consts[0], 2.0 / 8.0);
}

TEST(Estimate, OutOfSetConstantSplitsByDensity) {
  RuleWeights w = estimate_weights({parse_program("(fn [] 5.0)")}, 1.0);
  const double n = std::exp(-12.5) / std::sqrt(2 * kPi), u = 0.05;
  EXPECT_NEAR(w.real_consts[kConstNormal], (1.0 + n / (n + u)) / 8.0, 1e-15);
  EXPECT_NEAR(w.real_consts[kConstUniform], (1.0 + u / (n + u)) / 8.0, 1e-15);
}

TEST(Estimate, PrimAppIsTheModalRealRuleInTheCorpus) {
  RuleWeights w = estimate_weights(load_corpus(), 1.0, {});
  const auto& r = w.real.rules;
  for (std::size_t i = 0; i < kNumRules; ++i)
    if (i != static_cast<std::size_t>(Rule::kPrim)) {
      EXPECT_GT(r[static_cast<int>(Rule::kPrim)], r[i]) << i;
    }
}

TEST(Estimate, LargeAlphaApproachesUniform) {
  RuleWeights w = estimate_weights(load_corpus(), 1e9, {});
  for (double v : w.real.rules) EXPECT_NEAR(v, 1.0 / 7, 1e-6);
}

TEST(Estimate, ReplicatedCorpusApproachesFrequencies) {
  std::vector<Program> one = {parse_program("(fn [x] (+ x 1.0))")};
  std::vector<Program> many(100000, one[0]);
  RuleWeights w = estimate_weights(many, 1.0);
  // Per copy: prim 1, var 1, const 1.
  EXPECT_NEAR(w.real.rules[static_cast<int>(Rule::kPrim)], 1.0 / 3, 1e-4);
  EXPECT_NEAR(w.real.procs[0], 1.0, 2e-4);
}

TEST(Weights, JsonRoundTripAndValidation) {
  RuleWeights w = estimate_weights(load_corpus(), 0.5, {"bernoulli"});
  RuleWeights v = rule_weights_from_json(to_json(w));
  EXPECT_EQ(v.real.rules, w.real.rules);
  EXPECT_EQ(v.boolean.procs, w.boolean.procs);
  EXPECT_EQ(v.real_consts, w.real_consts);
  auto j = to_json(w);
  j["real"]["rules"]["var"] = 5.0;
  EXPECT_THROW(rule_weights_from_json(j), std::invalid_argument);
  for (const auto& cw : {w.real, w.boolean}) {
    double s = 0.0;
    for (double x : cw.rules) {
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Sites, ConstantProgramHasOneSite) {
  EXPECT_EQ(typed_sites(parse_program("(fn [] 0.0)")).size(), 1u);
}

TEST(Sites, OneSitePerNode) {
  for (const auto& e : load_corpus()) {
    const auto sites = typed_sites(e.program);
    EXPECT_EQ(sites.size(), node_count(*e.program.body)) << e.name;
    for (const auto& s : sites) EXPECT_TRUE(same_class(expr_at(*e.program.body, s.path).type, s.type));
  }
}

TEST(Sites, BernoulliSiteCount) {
  // if, <, safe-uc, 0.0, 1.0, p, 1.0, 0.0
  EXPECT_EQ(typed_sites(find_entry(load_corpus(), "bernoulli").program).size(), 8u);
}

TEST(Sites, RegeneratedSubtreesStayWellTyped) {
  RuleWeights w = RuleWeights::defaults();
  const auto corpus = load_corpus();
  for (uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    const Program& p = corpus[s % corpus.size()].program;
    const auto sites = typed_sites(p);
    const Site& site = sites[rng() % sites.size()];
    Generated g = generate(site.type, site.ctx, w, rng);
    Program q = replace_at(p, site.path, g.expr);
    ASSERT_TRUE(is_well_typed(q)) << print_program(q);
  }
}

}  // namespace
}  // namespace sampler_smith

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
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/eval.hpp"
#include "sampler_smith/syntax.hpp"

namespace sampler_smith {
namespace {

std::string read_corpus_file(const std::string& name) {
  std::ifstream in(std::string(SAMPLER_SMITH_SOURCE_DIR) + "/corpus/" + name + ".psmp");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kCorpusNames = {"bernoulli", "geometric", "std-normal", "normal",
                                               "poisson",   "gamma",     "beta-a-b",   "beta-a-1"};

double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / xs.size();
}

TEST(Print, ConstantProgram) {
  Program p{{}, TypeTag::kReal, make_real(0.0)};
  EXPECT_EQ(print_program(p), "(fn [] 0.0)");
}

TEST(Print, RealFormatting) {
  EXPECT_EQ(format_real(1.0), "1.0");
  EXPECT_EQ(format_real(-2.0), "-2.0");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1e300), "1e+300");
  EXPECT_EQ(std::stod(format_real(kPi)), kPi);
}

TEST(Eval, ConstantProgram) {
  Rng rng(3);
  auto r = run_program(parse_program("(fn [] 0.0)"), {}, EvalConfig{}, rng);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_FALSE(r.cap_hit);
}

TEST(Eval, IdentityProgram) {
  Rng rng(3);
  EXPECT_EQ(run_program(parse_program("(fn [x] x)"), {0.3}, EvalConfig{}, rng).value, 0.3);
}

// Depth counter by hand: activations 0..9 each add one, the recur issued from
// depth 9 would reach the cap and yields 0.
TEST(Eval, RecursionCapCountsTenIncrements) {
  Program p = parse_program("(fn [] (+ 1 (recur)))");
  Rng rng(1);
  auto r = run_program(p, {}, EvalConfig{}, rng);
  EXPECT_EQ(r.value, 10.0);
  EXPECT_TRUE(r.cap_hit);
  EvalConfig c3;
  c3.recursion_cap = 3;
  EXPECT_EQ(run_program(p, {}, c3, rng).value, 3.0);
  EXPECT_EQ(run_program_reference(p, {}, EvalConfig{}, rng).value, 10.0);
}

TEST(Eval, RecurInsideLocalProcedureHasItsOwnCounter) {
  // The local loop counts to the cap; the outer body adds one.
  Program p = parse_program("(fn [] (let [f (fn [n] (recur (inc n)))] (+ 1.0 (f 0.0))))");
  Rng rng(1);
  EXPECT_EQ(run_program(p, {}, EvalConfig{}, rng).value, 1.0);
  Program q = parse_program("(fn [] (let [f (fn [n] (+ n (recur (inc n))))] (f 0.0)))");
  // 0 + 1 + ... + 9, the tenth activation returns 0.
  EXPECT_EQ(run_program(q, {}, EvalConfig{}, rng).value, 45.0);
}

TEST(Eval, BernoulliSaturatedThreshold) {
  Program p = parse_program(read_corpus_file("bernoulli"));
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(run_program(p, {1.0}, EvalConfig{}, rng).value, 1.0);
}

TEST(Eval, BetaAlphaOneMeanBand) {
  Program p = parse_program(read_corpus_file("beta-a-1"));
  Rng rng(5);
  auto s = draw_samples(p, {1.0}, 100000, EvalConfig{}, rng);
  EXPECT_EQ(s.non_finite, 0);
  const double m = sample_mean(s.values);
  EXPECT_GT(m, 0.49);
  EXPECT_LT(m, 0.51);
}

TEST(Eval, GeometricMeanBand) {
  Program p = parse_program(read_corpus_file("geometric"));
  Rng rng(6);
  auto s = draw_samples(p, {0.5}, 100000, EvalConfig{}, rng);
  const double m = sample_mean(s.values);
  EXPECT_NEAR(m, 2.0, 0.02);
}

TEST(Eval, SafePrimitivesStayFiniteOnFiniteInputs) {
  Rng rng(7);
  const double big = std::numeric_limits<double>::max();
  const std::vector<double> edge = {0.0, -0.0, 1.0, -1.0, 1e-300, -1e-300, big, -big, 4.9e-324};
  std::vector<double> inputs = edge;
  for (int i = 0; i < 2000; ++i) inputs.push_back(std::ldexp(standard_normal(rng), int(uniform01(rng) * 2000) - 1000));
  for (double a : inputs) {
    EXPECT_TRUE(std::isfinite(apply_prim(Prim::kSafeLog, a, 0.0, rng))) << a;
    EXPECT_TRUE(std::isfinite(apply_prim(Prim::kSafeSqrt, a, 0.0, rng))) << a;
    for (double b : edge) {
      EXPECT_TRUE(std::isfinite(apply_prim(Prim::kSafeDiv, a, b, rng))) << a << " " << b;
      const double u = apply_prim(Prim::kSafeUc, a, b, rng);
      EXPECT_TRUE(std::isfinite(u)) << a << " " << b;
      EXPECT_GE(u, std::min(a, b));
      EXPECT_LE(u, std::max(a, b));
    }
  }
  EXPECT_EQ(apply_prim(Prim::kSafeDiv, 1.0, 0.0, rng), 0.0);
  EXPECT_EQ(apply_prim(Prim::kSafeLog, 0.0, 0.0, rng), 0.0);
  EXPECT_EQ(apply_prim(Prim::kSafeLog, -3.0, 0.0, rng), 0.0);
  EXPECT_EQ(apply_prim(Prim::kSafeSqrt, -4.0, 0.0, rng), 0.0);
  EXPECT_EQ(apply_prim(Prim::kSafeUc, 2.5, 2.5, rng), 2.5);
  EXPECT_EQ(apply_prim(Prim::kLess, NAN, 1.0, rng), 0.0);
}

TEST(Eval, SafeUcSwapsReversedBounds) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double u = apply_prim(Prim::kSafeUc, 3.0, 1.0, rng);
    EXPECT_GE(u, 1.0);
    EXPECT_LE(u, 3.0);
  }
}

TEST(Eval, IntPositionsRoundHalfToEven) {
  Program p = parse_program("(fn ^int [x] x)");
  Rng rng(1);
  EXPECT_EQ(run_program(p, {2.5}, EvalConfig{}, rng).value, 2.0);
  EXPECT_EQ(run_program(p, {3.5}, EvalConfig{}, rng).value, 4.0);
  Program q = parse_program("(fn [x] (let [^int k (+ x 0.5)] (+ k 0.25)))");
  EXPECT_EQ(run_program(q, {1.0}, EvalConfig{}, rng).value, 2.25);
}

TEST(Eval, FuelExhaustionIsFlagged) {
  Program p = parse_program("(fn [] (+ (+ 1.0 1.0) (+ 1.0 1.0)))");
  EvalConfig c;
  c.fuel = 3;
  Rng rng(1);
  auto r = run_program(p, {}, c, rng);
  EXPECT_TRUE(r.exhausted);
  EXPECT_TRUE(std::isnan(r.value));
  c.fuel = 7;
  r = run_program(p, {}, c, rng);
  EXPECT_FALSE(r.exhausted);
  EXPECT_EQ(r.value, 4.0);
}

TEST(Eval, NonFiniteValuesPropagate) {
  Program p = parse_program("(fn [] (exp (exp (exp 10.0))))");
  Rng rng(1);
  auto s = draw_samples(p, {}, 3, EvalConfig{}, rng);
  EXPECT_EQ(s.non_finite, 3);
}

TEST(DrawSamples, EmptyAndConstant) {
  Rng rng(2);
  Program zero = parse_program("(fn [] 0.0)");
  EXPECT_TRUE(draw_samples(zero, {}, 0, EvalConfig{}, rng).values.empty());
  EXPECT_EQ(draw_samples(zero, {}, 5, EvalConfig{}, rng).values, std::vector<double>(5, 0.0));
}

TEST(DrawSamples, DeterministicGivenSeed) {
  for (const auto& name : kCorpusNames) {
    Program p = parse_program(read_corpus_file(name));
    std::vector<double> args(p.formals.size(), 0.5);
    Rng a(42), b(42);
    EXPECT_EQ(draw_samples(p, args, 200, EvalConfig{}, a).values, draw_samples(p, args, 200, EvalConfig{}, b).values)
        << name;
  }
}

TEST(Compiled, AgreesWithReferenceInterpreter) {
  for (const auto& name : kCorpusNames) {
    Program p = parse_program(read_corpus_file(name));
    std::vector<double> args(p.formals.size(), 0.7);
    CompiledProgram c(p);
    Rng a(9), b(9);
    for (int i = 0; i < 500; ++i) {
      RunResult x = c.run(args, EvalConfig{}, a);
      RunResult y = run_program_reference(p, args, EvalConfig{}, b);
      ASSERT_EQ(x.value, y.value) << name << " draw " << i;
      ASSERT_EQ(x.cap_hit, y.cap_hit) << name;
    }
  }
}

TEST(Compiled, ShadowingAndStaticLinks) {
  const char* text =
      "(fn [x] (let [x (+ x 1.0)"
      "              g (fn [y] (+ x y))"
      "              x 100.0"
      "              h (fn [z] (let [x 5.0] (g (+ x z))))]"
      "          (+ x (h 1.0))))";
  Program p = parse_program(text);
  Rng a(1), b(1);
  EXPECT_EQ(run_program(p, {1.0}, EvalConfig{}, a).value, 108.0);
  EXPECT_EQ(run_program_reference(p, {1.0}, EvalConfig{}, b).value, 108.0);
}

TEST(Parse, BernoulliMatchesHandBuiltTree) {
  Program p = parse_program("(fn [p] (if (< (safe-uc 0.0 1.0) p) 1.0 0.0))");
  Program expected;
  expected.formals = {{"p", TypeTag::kReal}};
  expected.ret = TypeTag::kReal;
  expected.body = make_if(make_prim(Prim::kLess, {make_prim(Prim::kSafeUc, {make_real(0.0), make_real(1.0)}),
                                                  make_var("p", TypeTag::kReal)}),
                          make_real(1.0), make_real(0.0));
  EXPECT_TRUE(structurally_equal(p, expected));
}

TEST(Parse, CorpusRoundTrip) {
  for (const auto& name : kCorpusNames) {
    Program p = parse_program(read_corpus_file(name));
    const std::string text = print_program(p);
    Program q = parse_program(text);
    EXPECT_TRUE(structurally_equal(p, q)) << name;
    EXPECT_EQ(print_program(q), text) << name;
  }
}

TEST(Parse, CanonicalFormOfMessyText) {
  Program p = parse_program("(lambda (a b)  ; comment\n  (let [c (+ a b), d (* c c)]\n   d))");
  EXPECT_EQ(print_program(p), "(fn [a b] (let [c (+ a b)] (let [d (* c c)] d)))");
}

TEST(Parse, HintsAndBoolTypes) {
  const char* text = "(fn ^int [^bool b x] (let [f (fn ^bool [^bool c] (if c true (recur c)))] (if (f b) x 0.0)))";
  Program p = parse_program(text);
  EXPECT_EQ(p.ret, TypeTag::kInt);
  EXPECT_EQ(p.formals[0].type, TypeTag::kBool);
  EXPECT_EQ(print_program(p), text);
  EXPECT_TRUE(structurally_equal(parse_program(print_program(p)), p));
}

void expect_parse_error(const std::string& text, int line, int col) {
  try {
    parse_program(text);
    FAIL() << "no error for: " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), col) << e.what();
  }
}

TEST(Parse, ErrorsCarryPositions) {
  expect_parse_error("(fn [] (+ 1.0 z))", 1, 15);
  expect_parse_error("(fn [x]\n  (frob x))", 2, 4);
  expect_parse_error("(fn [x]\n  (+ x", 2, 3);
  expect_parse_error("(fn [] (if true 1.0))", 1, 8);
  expect_parse_error("(fn [] (+ true 1.0))", 1, 11);
  expect_parse_error("(fn [if] 1.0)", 1, 6);
  expect_parse_error("(fn [] 1.0))", 1, 12);
}

TEST(Parse, MultipleProgramsPerFile) {
  auto ps = parse_programs("; two\n(fn [] 0.0)\n(fn [x] (inc x))\n");
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(print_program(ps[1]), "(fn [x] (inc x))");
}

}  // namespace
}  // namespace sampler_smith

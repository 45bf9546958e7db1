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


// Searches for a Bernoulli sampler with the Bernoulli entry left out of the
// corpus, then checks the result at a parameter it was not trained on.

#include <cstdio>
#include <cstdlib>

#include "sampler_smith/corpus.hpp"
#include "sampler_smith/synthesis.hpp"

int main(int argc, char** argv) {
  using namespace sampler_smith;
  const long iterations = argc > 1 ? std::atol(argv[1]) : 5000;
  const auto corpus = load_corpus();
  const RuleWeights w = estimate_weights(corpus, 1.0, same_family_names(corpus, "bernoulli"));
  FamilyTarget target;
  target.family = Family::kBernoulli;
  target.params = {{0.1}, {0.3}, {0.5}, {0.7}, {0.9}};
  const ScoreConfig cfg;
  Rng rng(derive_seed(2024, {4}));
  const ChainTrace trace = run_mh(std::nullopt, target, w, cfg, iterations, rng);
  long accepted = 0;
  for (const auto& r : trace.records) accepted += r.accepted;
  const auto& best = trace.best_record();
  std::printf("%ld iterations, %ld accepted\n", iterations, accepted);
  std::printf("best at %ld: log-prior %.3f log-score %.3f\n  %s\n", best.iteration, best.log_prior, best.log_score,
              best.program.c_str());
  const double p = mean_p_value(trace.best_program, Family::kBernoulli, {0.2}, {0.2}, 20, cfg, 77);
  std::printf("mean G-test p-value at p = 0.2: %.3f\n", p);
}

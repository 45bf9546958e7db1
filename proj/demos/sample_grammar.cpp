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


// Draws a few programs from the corpus-estimated grammar and prints the
// moments of their output.

#include <cstdio>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/corpus.hpp"
#include "sampler_smith/stats.hpp"

int main() {
  using namespace sampler_smith;
  const RuleWeights w = estimate_weights(load_corpus(), 1.0, {});
  Rng rng(12);
  for (int i = 0; i < 8; ++i) {
    const GeneratedProgram g = generate_program({}, TypeTag::kReal, w, rng);
    const SampleSet s = draw_samples(g.program, {}, 1000, EvalConfig{}, rng);
    const auto m = sample_moments(s.values);
    std::printf("log-prior %8.3f  ", g.log_prob);
    if (m)
      std::printf("mean %8.3f sd %7.3f  ", m->mean, m->sd);
    else
      std::printf("%-28s", "non-finite draws");
    std::printf("%s\n", print_program(g.program).c_str());
  }
}

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


// Filters one square-wave episode with the bootstrap proposal at a few
// particle counts and compares against the exact Kalman filter.

#include <algorithm>
#include <cstdio>

#include "sampler_smith/lg/model.hpp"
#include "sampler_smith/lg/smc.hpp"

int main() {
  using namespace sampler_smith;
  using namespace sampler_smith::lg;
  const LgModel m;
  Rng rng(3);
  const Episode ep = gen_episode(WaveKind::kSquare, 1.0, 0.1, rng);
  const KalmanResult k = kalman_filter_smoother(m, ep.y);
  std::printf("%s, %zu steps, Kalman filter MAE %.4f\n", ep.label.c_str(), ep.y.size(),
              mean_absolute_error(k.filter_mean, ep.truth));
  for (int particles : {10, 100, 1000}) {
    const ParticleResult r = smc_run(m, ep.y, particles, Proposal::prior(), rng);
    double worst_ess = particles;
    for (double e : r.ess) worst_ess = std::min(worst_ess, e);
    std::printf("P = %4d  MAE %.4f  vs Kalman %.4f  min ESS %.1f\n", particles, evaluate_error(r, ep.truth),
                mean_absolute_error(r.filtering_means(), k.filter_mean), worst_ess);
  }
}

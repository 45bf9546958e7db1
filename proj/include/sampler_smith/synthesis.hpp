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


// Search over program text.
//
// `run_mh` is a single-chain pseudo-marginal Metropolis-Hastings sampler whose
// proposal picks a typed site uniformly and regenerates the subtree there from
// the grammar. `run_gp` is a strongly typed genetic-programming baseline with
// fitness log-prior plus log-score. `rejection_abc` draws whole programs from
// the prior and keeps those whose sample moments land within epsilon of the
// target; it is only practical for tiny grammars.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/grammar.hpp"
#include "sampler_smith/parallel.hpp"
#include "sampler_smith/score.hpp"
#include "sampler_smith/syntax.hpp"
#include "sampler_smith/typecheck.hpp"

namespace sampler_smith {

struct MhState {
  Program program;
  double log_prior = 0.0;
  double log_score = 0.0;  // estimate adopted at the last acceptance
  long iteration = 0;

  double objective() const { return log_prior + log_score; }
};

struct TraceRecord {
  long iteration = 0;
  std::string program;
  double log_prior = 0.0;
  double log_score = 0.0;
  bool accepted = false;
  std::size_t site = 0;
};

struct ChainTrace {
  std::vector<TraceRecord> records;
  std::size_t best = 0;  // record with the largest log-prior + log-score
  Program best_program;
  long init_attempts = 0;

  const TraceRecord& best_record() const { return records.at(best); }
};

// Details of one proposal, exposed for testing the acceptance rule.
struct MhProposal {
  Program program;
  std::size_t site = 0;
  std::size_t sites_before = 0;
  std::size_t sites_after = 0;
  double log_prior = 0.0;
  double log_score = 0.0;
  double forward_log_q = 0.0;   // log q(current -> proposal)
  double reverse_log_q = 0.0;   // log q(proposal -> current)
};

inline MhProposal propose(const MhState& state, const TargetSpec& target, const RuleWeights& w,
                          const ScoreConfig& cfg, Rng& rng) {
  const auto sites = typed_sites(state.program);
  MhProposal p;
  p.sites_before = sites.size();
  p.site = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sites.size()));
  const Site& s = sites[p.site];
  Generated g = generate(s.type, s.ctx, w, rng);
  p.program = replace_at(state.program, s.path, g.expr);
  p.sites_after = typed_sites(p.program).size();
  p.log_prior = log_prior(p.program, w);
  p.log_score = score_program(p.program, target, cfg, rng);
  const Expr& old_subtree = expr_at(*state.program.body, s.path);
  p.forward_log_q = -std::log(static_cast<double>(p.sites_before)) + g.log_prob;
  p.reverse_log_q = -std::log(static_cast<double>(p.sites_after)) + subtree_log_prob(old_subtree, s.type, s.ctx, w);
  return p;
}

// Log acceptance ratio with the prior and subtree factors cancelled.
inline double log_accept_ratio(const MhState& state, const MhProposal& p) {
  if (p.log_score == -INFINITY) return -INFINITY;
  return p.log_score - state.log_score + std::log(static_cast<double>(p.sites_before)) -
         std::log(static_cast<double>(p.sites_after));
}

// The same ratio written out term by term.
inline double log_accept_ratio_full(const MhState& state, const MhProposal& p) {
  if (p.log_score == -INFINITY) return -INFINITY;
  return (p.log_prior + p.log_score + p.reverse_log_q) - (state.log_prior + state.log_score + p.forward_log_q);
}

// Returns whether the proposal was accepted, and which site it touched.
struct MhStepResult {
  bool accepted = false;
  std::size_t site = 0;
};

inline MhStepResult mh_step(MhState& state, const TargetSpec& target, const RuleWeights& w, const ScoreConfig& cfg,
                            Rng& rng) {
  MhProposal p = propose(state, target, w, cfg, rng);
  ++state.iteration;
  const double log_a = log_accept_ratio(state, p);
  MhStepResult r;
  r.site = p.site;
  if (log_a == -INFINITY) return r;
  if (log_a >= 0.0 || std::log(uniform01(rng)) < log_a) {
    state.program = std::move(p.program);
    state.log_prior = p.log_prior;
    state.log_score = p.log_score;
    r.accepted = true;
  }
  return r;
}

inline constexpr long kMaxInitAttempts = 1000;

// Draws a starting program whose score is finite.
inline MhState initial_state(const TargetSpec& target, const RuleWeights& w, const ScoreConfig& cfg, Rng& rng,
                             long* attempts = nullptr) {
  const auto formals = target_formals(target);
  const TypeTag ret = target_return_type(target);
  for (long i = 1; i <= kMaxInitAttempts; ++i) {
    GeneratedProgram g = generate_program(formals, ret, w, rng);
    const double s = score_program(g.program, target, cfg, rng);
    if (s == -INFINITY) continue;
    if (attempts) *attempts = i;
    return MhState{g.program, g.log_prob, s, 0};
  }
  throw std::runtime_error("no program with a finite score in " + std::to_string(kMaxInitAttempts) + " draws");
}

inline ChainTrace run_mh(const std::optional<Program>& init, const TargetSpec& target, const RuleWeights& w,
                         const ScoreConfig& cfg, long iterations, Rng& rng) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  validate(cfg);
  validate(target);
  ChainTrace trace;
  MhState state;
  if (init) {
    type_check(*init);
    state = MhState{*init, log_prior(*init, w), score_program(*init, target, cfg, rng), 0};
    trace.init_attempts = 0;
  } else {
    state = initial_state(target, w, cfg, rng, &trace.init_attempts);
  }
  trace.records.reserve(static_cast<std::size_t>(iterations));
  double best = -INFINITY;
  std::string text = print_program(state.program);
  for (long i = 0; i < iterations; ++i) {
    const MhStepResult r = mh_step(state, target, w, cfg, rng);
    if (r.accepted) text = print_program(state.program);
    trace.records.push_back({state.iteration, text, state.log_prior, state.log_score, r.accepted, r.site});
    if (trace.records.size() == 1 || state.objective() > best) {
      best = state.objective();
      trace.best = trace.records.size() - 1;
      trace.best_program = state.program;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Genetic programming.

struct GpConfig {
  int population = 100;
  int generations = 50;
  int tournament = 3;
  double crossover = 0.5;
  double mutation = 0.2;
  int elitism = 1;
  int max_depth = 10;  // offspring deeper than this are discarded
  int crossover_tries = 20;
};

inline void validate(const GpConfig& g) {
  if (g.population < 2) throw std::invalid_argument("population must be >= 2");
  if (g.generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (g.tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  for (double p : {g.crossover, g.mutation})
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (g.elitism < 0 || g.elitism > g.population) throw std::invalid_argument("elitism must lie in [0, population]");
}

struct Individual {
  Program program;
  double log_prior = 0.0;
  double log_score = 0.0;
  double fitness() const { return log_prior + log_score; }
};

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;  // over individuals with finite fitness
  int invalid = 0;            // individuals with fitness -inf
  double best_log_prior = 0.0;
  double best_log_score = 0.0;
  double best_penalty = 0.0;
  double min_penalty = 0.0;   // lowest penalty in the population, whatever its prior
  std::string best_program;
};

struct GpResult {
  std::vector<GenerationStats> generations;
  Individual best;
};

namespace detail {

// Offspring must type-check in their new position and respect the depth limit.
inline ExprPtr subtree_at(const ExprPtr& root, const Path& path) {
  ExprPtr e = root;
  for (uint32_t i : path) e = e->kids.at(i);
  return e;
}

inline bool acceptable_child(const Program& p, int max_depth) {
  return is_well_typed(p) && generation_depth(p) <= max_depth;
}

}  // namespace detail

// Swaps subtrees at two sites of the same type class. A subtree that refers
// to names not visible at its new position fails the type check, in which case
// new sites are drawn; after `tries` failures the parents are returned.
inline std::pair<Program, Program> crossover(const Program& a, const Program& b, int max_depth, int tries, Rng& rng) {
  const auto sa = typed_sites(a);
  const auto sb = typed_sites(b);
  for (int t = 0; t < tries; ++t) {
    const Site& x = sa[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sa.size()))];
    std::vector<const Site*> matching;
    for (const auto& s : sb)
      if (s.type == x.type) matching.push_back(&s);
    if (matching.empty()) continue;
    const Site& y = *matching[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(matching.size()))];
    Program ca = replace_at(a, x.path, detail::subtree_at(b.body, y.path));
    Program cb = replace_at(b, y.path, detail::subtree_at(a.body, x.path));
    if (detail::acceptable_child(ca, max_depth) && detail::acceptable_child(cb, max_depth)) return {ca, cb};
  }
  return {a, b};
}

inline Program mutate(const Program& p, const RuleWeights& w, int max_depth, Rng& rng) {
  const auto sites = typed_sites(p);
  const Site& s = sites[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sites.size()))];
  Program out = replace_at(p, s.path, generate(s.type, s.ctx, w, rng).expr);
  return generation_depth(out) <= max_depth ? out : p;
}

namespace detail {

// Lowest index wins among equal fitness.
inline std::size_t tournament(const std::vector<Individual>& pop, int k, Rng& rng) {
  std::size_t best = pop.size();
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pop.size()));
    if (best == pop.size() || pop[j].fitness() > pop[best].fitness() ||
        (pop[j].fitness() == pop[best].fitness() && j < best))
      best = j;
  }
  return best;
}

inline void evaluate(std::vector<Individual>& pop, std::size_t from, const TargetSpec& target, const RuleWeights& w,
                     const ScoreConfig& cfg, uint64_t seed) {
  ScoreConfig inner = cfg;
  inner.jobs = 1;
  parallel_for(pop.size() - from, cfg.jobs, [&](std::size_t k) {
    Individual& ind = pop[from + k];
    ind.log_prior = log_prior(ind.program, w);
    ind.log_score = score_program_seeded(ind.program, target, inner, derive_seed(seed, {from + k}));
  });
}

// Index of the fittest individual, lowest index among ties.
inline std::size_t fittest(const std::vector<Individual>& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (pop[i].fitness() > pop[best].fitness()) best = i;
  return best;
}

inline GenerationStats summarize(int gen, const std::vector<Individual>& pop, const TargetSpec& target) {
  GenerationStats st;
  st.generation = gen;
  const Individual& b = pop[fittest(pop)];
  st.best_fitness = b.fitness();
  st.best_log_prior = b.log_prior;
  st.best_log_score = b.log_score;
  st.best_penalty = penalty(b.log_score, target);
  st.best_program = print_program(b.program);
  double sum = 0.0;
  int finite = 0;
  st.min_penalty = INFINITY;
  for (const auto& ind : pop) {
    st.min_penalty = std::min(st.min_penalty, penalty(ind.log_score, target));
    if (std::isfinite(ind.fitness())) {
      sum += ind.fitness();
      ++finite;
    } else {
      ++st.invalid;
    }
  }
  st.mean_fitness = finite > 0 ? sum / finite : -INFINITY;
  return st;
}

}  // namespace detail

// Elites are carried over unchanged and are not re-scored, so the best
// fitness never decreases. A non-empty `initial` replaces the generated first
// population, cycling through its programs.
inline GpResult run_gp(const TargetSpec& target, const RuleWeights& w, const GpConfig& gp, const ScoreConfig& cfg,
                       Rng& rng, const std::vector<Program>& initial = {}) {
  validate(gp);
  validate(cfg);
  validate(target);
  const auto formals = target_formals(target);
  const TypeTag ret = target_return_type(target);
  std::vector<Individual> pop(static_cast<std::size_t>(gp.population));
  for (std::size_t i = 0; i < pop.size(); ++i)
    pop[i].program = initial.empty() ? generate_program(formals, ret, w, rng).program : initial[i % initial.size()];
  detail::evaluate(pop, 0, target, w, cfg, rng());

  GpResult result;
  result.generations.push_back(detail::summarize(0, pop, target));
  for (int gen = 1; gen <= gp.generations; ++gen) {
    std::vector<std::size_t> order(pop.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return pop[i].fitness() > pop[j].fitness(); });
    std::vector<Individual> next;
    next.reserve(pop.size());
    for (int e = 0; e < gp.elitism; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    const std::size_t fresh = next.size();
    while (next.size() < pop.size()) {
      Program a = pop[detail::tournament(pop, gp.tournament, rng)].program;
      Program b = pop[detail::tournament(pop, gp.tournament, rng)].program;
      if (uniform01(rng) < gp.crossover) std::tie(a, b) = crossover(a, b, gp.max_depth, gp.crossover_tries, rng);
      for (Program* c : {&a, &b}) {
        if (next.size() == pop.size()) break;
        if (uniform01(rng) < gp.mutation) *c = mutate(*c, w, gp.max_depth, rng);
        next.push_back(Individual{*c, 0.0, 0.0});
      }
    }
    detail::evaluate(next, fresh, target, w, cfg, rng());
    pop = std::move(next);
    result.generations.push_back(detail::summarize(gen, pop, target));
  }
  result.best = pop[detail::fittest(pop)];
  return result;
}

// ---------------------------------------------------------------------------
// Rejection ABC.

// Grammar whose only programs are the constants 0.0 and 1.0, each with prior
// one half. Small enough to enumerate the posterior exactly.
inline RuleWeights toy_constant_grammar() {
  RuleWeights w = RuleWeights::uniform();
  w.real.rules = {0, 1, 0, 0, 0, 0, 0};
  w.boolean.rules = {0, 1, 0, 0, 0, 0, 0};
  w.real_consts = {0.5, 0.5, 0, 0, 0, 0, 0};
  w.max_depth = 1;
  return w;
}

struct AbcResult {
  std::vector<Program> accepted;
  long draws = 0;
};

inline double moment_distance(const MomentVector& a, const MomentVector& b) {
  const auto x = a.as_array(), y = b.as_array();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

// Programs take no arguments and return Real. A program whose draws are not
// all finite is never accepted.
inline AbcResult rejection_abc(const MomentVector& target, const RuleWeights& w, double epsilon, long max_draws,
                               const ScoreConfig& cfg, Rng& rng) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  validate(cfg);
  AbcResult out;
  for (long i = 0; i < max_draws; ++i) {
    ++out.draws;
    Program p = generate_program({}, TypeTag::kReal, w, rng).program;
    auto s = draw_samples(p, {}, cfg.n, cfg.eval, rng);
    if (s.non_finite > 0) continue;
    auto m = sample_moments(s.values);
    if (m && moment_distance(*m, target) <= epsilon) out.accepted.push_back(std::move(p));
  }
  return out;
}

}  // namespace sampler_smith

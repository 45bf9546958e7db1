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


// Scoring a candidate program against a target distribution.
//
// Three kinds of target are supported. A moment target compares the four
// sample moments of N draws against fixed values through a Gaussian kernel.
// An empirical target does the same against the moments of a data set. A
// family target runs the program once per parameter setting; countable
// families are judged by G-test p-values and continuous families by the
// moment kernel against their analytic moments.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sampler_smith/compiled.hpp"
#include "sampler_smith/expr.hpp"
#include "sampler_smith/families.hpp"
#include "sampler_smith/parallel.hpp"
#include "sampler_smith/rng.hpp"
#include "sampler_smith/stats.hpp"

namespace sampler_smith {

using Sigma = std::array<double, 4>;

struct MomentTarget {
  MomentVector target;
  Sigma sigma{0.1, 0.1, 0.1, 0.1};
};

struct FamilyTarget {
  Family family = Family::kBernoulli;
  std::vector<std::vector<double>> params;  // one family parameter vector per setting
  std::vector<std::vector<double>> args;    // program arguments per setting; empty means `params`
  Sigma sigma{0.1, 0.1, 0.1, 0.1};          // continuous families only

  const std::vector<double>& args_for(std::size_t s) const { return args.empty() ? params[s] : args[s]; }
};

struct EmpiricalTarget {
  std::vector<double> data;
  Sigma sigma{0.1, 0.1, 0.1, 0.1};
};

using TargetSpec = std::variant<MomentTarget, FamilyTarget, EmpiricalTarget>;

struct ScoreConfig {
  int n = 100;                 // draws per evaluation
  EvalConfig eval;
  double max_cap_fraction = 0.5;  // more runs than this hitting the cap gives -inf
  double p_value_floor = 1e-300;
  int jobs = 1;                // threads across parameter settings
};

inline constexpr double kNegInf = -INFINITY;

inline void validate(const ScoreConfig& c) {
  if (c.n < 2) throw std::invalid_argument("score needs at least 2 draws");
  if (c.eval.recursion_cap < 1) throw std::invalid_argument("recursion cap must be >= 1");
  if (c.eval.fuel < 1) throw std::invalid_argument("fuel must be >= 1");
  if (!(c.max_cap_fraction >= 0.0 && c.max_cap_fraction <= 1.0))
    throw std::invalid_argument("max cap fraction must lie in [0, 1]");
  if (!(c.p_value_floor > 0.0)) throw std::invalid_argument("p-value floor must be > 0");
  if (c.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

inline void validate(const TargetSpec& t) {
  auto check_sigma = [](const Sigma& s) {
    for (double v : s)
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("noise levels must be finite and > 0");
  };
  if (auto m = std::get_if<MomentTarget>(&t)) check_sigma(m->sigma);
  if (auto e = std::get_if<EmpiricalTarget>(&t)) {
    check_sigma(e->sigma);
    if (e->data.size() < 2) throw std::invalid_argument("empirical target needs at least 2 data points");
  }
  if (auto f = std::get_if<FamilyTarget>(&t)) {
    check_sigma(f->sigma);
    if (f->params.empty()) throw std::invalid_argument("family target needs at least one parameter setting");
    if (!f->args.empty() && f->args.size() != f->params.size())
      throw std::invalid_argument("family target: args and params differ in length");
    for (const auto& p : f->params) check_params(f->family, p);
    for (std::size_t s = 1; s < f->params.size(); ++s)
      if (f->args_for(s).size() != f->args_for(0).size())
        throw std::invalid_argument("family target: inconsistent argument counts");
  }
}

// Formals and return type of programs searched for this target.
inline std::vector<Formal> target_formals(const TargetSpec& t) {
  const auto* f = std::get_if<FamilyTarget>(&t);
  if (!f) return {};
  static const std::vector<std::string> names = {"a", "b", "c", "d"};
  std::vector<Formal> out;
  for (std::size_t i = 0; i < f->args_for(0).size(); ++i)
    out.push_back({i < names.size() ? names[i] : "a" + std::to_string(i), TypeTag::kReal});
  return out;
}

inline TypeTag target_return_type(const TargetSpec& t) {
  const auto* f = std::get_if<FamilyTarget>(&t);
  return f && is_countable(f->family) ? TypeTag::kInt : TypeTag::kReal;
}

// Largest achievable score: every moment residual zero, or every p-value 1.
inline double score_normalizer(const TargetSpec& t) {
  auto peak = [](const Sigma& s) {
    double v = 0.0;
    for (double x : s) v += normal_log_pdf(0.0, 0.0, x);
    return v;
  };
  if (auto m = std::get_if<MomentTarget>(&t)) return peak(m->sigma);
  if (auto e = std::get_if<EmpiricalTarget>(&t)) return peak(e->sigma);
  const auto& f = std::get<FamilyTarget>(t);
  return is_countable(f.family) ? 0.0 : peak(f.sigma) * static_cast<double>(f.params.size());
}

inline double penalty(double log_score, const TargetSpec& t) { return score_normalizer(t) - log_score; }

namespace detail {

// Samples from one parameter setting, or nullopt if the draws are rejected.
inline std::optional<std::vector<double>> accepted_draws(const CompiledProgram& prog, const std::vector<double>& args,
                                                         const ScoreConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  SampleSet s = draw_samples(prog, args, cfg.n, cfg.eval, rng);
  if (s.non_finite > 0) return std::nullopt;
  if (s.cap_hits > cfg.max_cap_fraction * cfg.n) return std::nullopt;
  return std::move(s.values);
}

inline double moment_score(const std::vector<double>& xs, const MomentVector& target, const Sigma& sigma) {
  const auto m = sample_moments(xs);
  if (!m) return kNegInf;
  return moment_log_kernel(*m, target, sigma);
}

}  // namespace detail

// Seed for the draws at one family parameter setting. It depends on the
// parameter values, not their position in the list.
inline uint64_t setting_seed(uint64_t master, const std::vector<double>& params) {
  uint64_t h = derive_seed(master, {params.size()});
  for (double v : params) h = derive_seed(h, {std::bit_cast<uint64_t>(v == 0.0 ? 0.0 : v)});
  return h;
}

// Log-score of `p` against `t` from draws seeded by `master`. A family target
// scores each setting with its own seed and adds the parts smallest first, so
// reordering the settings leaves the score unchanged bit for bit.
inline double score_program_seeded(const Program& p, const TargetSpec& t, const ScoreConfig& cfg, uint64_t master) {
  const CompiledProgram prog(p);
  if (auto m = std::get_if<MomentTarget>(&t)) {
    auto xs = detail::accepted_draws(prog, {}, cfg, derive_seed(master, {0}));
    return xs ? detail::moment_score(*xs, m->target, m->sigma) : kNegInf;
  }
  if (auto e = std::get_if<EmpiricalTarget>(&t)) {
    const auto target = sample_moments(e->data);
    if (!target) throw std::invalid_argument("empirical data must be finite");
    auto xs = detail::accepted_draws(prog, {}, cfg, derive_seed(master, {0}));
    return xs ? detail::moment_score(*xs, *target, e->sigma) : kNegInf;
  }
  const auto& f = std::get<FamilyTarget>(t);
  std::vector<double> parts(f.params.size(), 0.0);
  parallel_for(f.params.size(), cfg.jobs, [&](std::size_t s) {
    auto xs = detail::accepted_draws(prog, f.args_for(s), cfg, setting_seed(master, f.params[s]));
    if (!xs) {
      parts[s] = kNegInf;
    } else if (is_countable(f.family)) {
      parts[s] = std::log(std::max(g_test_p_value(*xs, f.family, f.params[s]), cfg.p_value_floor));
    } else {
      parts[s] = detail::moment_score(*xs, analytic_moments(f.family, f.params[s]), f.sigma);
    }
  });
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

inline double score_program(const Program& p, const TargetSpec& t, const ScoreConfig& cfg, Rng& rng) {
  return score_program_seeded(p, t, cfg, rng());
}

// Mean G-test p-value over `repeats` fresh sample sets at one parameter
// setting of a countable family. Rejected draws count as p = 0.
inline double mean_p_value(const Program& p, Family f, const std::vector<double>& params,
                           const std::vector<double>& args, int repeats, const ScoreConfig& cfg, uint64_t seed) {
  const CompiledProgram prog(p);
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    auto xs = detail::accepted_draws(prog, args, cfg, derive_seed(seed, {static_cast<uint64_t>(r)}));
    total += xs ? g_test_p_value(*xs, f, params) : 0.0;
  }
  return total / repeats;
}

// ---------------------------------------------------------------------------
// JSON.

namespace detail {

inline Sigma sigma_from_json(const nlohmann::json& j, const char* key) {
  Sigma s{0.1, 0.1, 0.1, 0.1};
  if (!j.contains(key)) return s;
  const auto& v = j.at(key);
  if (v.is_number()) {
    s.fill(v.get<double>());
  } else {
    const auto arr = v.get<std::vector<double>>();
    if (arr.size() != 4) throw std::invalid_argument(std::string(key) + " must be a number or 4 numbers");
    std::copy(arr.begin(), arr.end(), s.begin());
  }
  return s;
}

inline std::vector<std::vector<double>> settings_from_json(const nlohmann::json& j) {
  std::vector<std::vector<double>> out;
  for (const auto& v : j) out.push_back(v.is_number() ? std::vector<double>{v.get<double>()} : v.get<std::vector<double>>());
  return out;
}

}  // namespace detail

inline MomentVector moments_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("sd").get<double>(), j.at("skew").get<double>(), j.at("kurt").get<double>()};
}

inline nlohmann::json to_json(const MomentVector& m) {
  return {{"mean", m.mean}, {"sd", m.sd}, {"skew", m.skew}, {"kurt", m.kurt}};
}

// Accepted forms:
//   {"kind": "moments", "target": {mean, sd, skew, kurt}, "sigma": 0.1}
//   {"kind": "moments", "family": "normal", "params": [0, 1], "sigma": [...]}
//   {"kind": "family", "family": "bernoulli", "params": [0.1, 0.5], "args": [[...]]}
//   {"kind": "empirical", "data": [...], "sigma": 0.1}
// Empirical targets read from CSV are resolved by the caller.
inline TargetSpec target_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  TargetSpec t;
  if (kind == "moments") {
    MomentTarget m;
    if (j.contains("target")) {
      m.target = moments_from_json(j.at("target"));
    } else {
      const auto f = parse_family(j.at("family").get<std::string>());
      if (!f) throw std::invalid_argument("unknown family " + j.at("family").dump());
      m.target = analytic_moments(*f, j.at("params").get<std::vector<double>>());
    }
    m.sigma = detail::sigma_from_json(j, "sigma");
    t = m;
  } else if (kind == "family") {
    FamilyTarget f;
    const auto fam = parse_family(j.at("family").get<std::string>());
    if (!fam) throw std::invalid_argument("unknown family " + j.at("family").dump());
    f.family = *fam;
    f.params = detail::settings_from_json(j.at("params"));
    if (j.contains("args")) f.args = detail::settings_from_json(j.at("args"));
    f.sigma = detail::sigma_from_json(j, "sigma");
    t = f;
  } else if (kind == "empirical") {
    EmpiricalTarget e;
    e.data = j.at("data").get<std::vector<double>>();
    e.sigma = detail::sigma_from_json(j, "sigma");
    t = e;
  } else {
    throw std::invalid_argument("unknown target kind '" + kind + "'");
  }
  validate(t);
  return t;
}

inline nlohmann::json to_json(const TargetSpec& t) {
  nlohmann::json j;
  if (auto m = std::get_if<MomentTarget>(&t)) {
    j = {{"kind", "moments"}, {"target", to_json(m->target)}, {"sigma", m->sigma}};
  } else if (auto e = std::get_if<EmpiricalTarget>(&t)) {
    j = {{"kind", "empirical"}, {"data", e->data}, {"sigma", e->sigma}};
  } else {
    const auto& f = std::get<FamilyTarget>(t);
    j = {{"kind", "family"}, {"family", std::string(family_name(f.family))}, {"params", f.params}, {"sigma", f.sigma}};
    if (!f.args.empty()) j["args"] = f.args;
  }
  return j;
}

}  // namespace sampler_smith

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


// Grammar prior over programs.
//
// A program is generated top-down. At each position the generator knows the
// required type class (Real or Bool) and a GenContext, picks one of seven
// production rules, and recurses:
//
//   var      a visible variable of the class, uniformly
//   const    from the constant model of the class
//   prim     a primitive of the class, or a call to a visible procedure
//   let-fn   a local procedure (1 or 2 formals) and a body that may call it
//   let-val  a local variable of type Real or Bool and a body
//   if       condition, then and else branches
//   recur    call the innermost enclosing procedure again
//
// Rules that cannot fire at a position are dropped and the rest renormalized.
// At depth >= max_depth only var and const remain. log_prior replays the same
// choices, so it is exact for anything generate can produce.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sampler_smith/expr.hpp"
#include "sampler_smith/rng.hpp"
#include "sampler_smith/scope.hpp"

namespace sampler_smith {

enum class Rule : uint8_t { kVar, kConst, kPrim, kLetFn, kLetVal, kIf, kRecur };
inline constexpr std::size_t kNumRules = 7;
inline constexpr std::array<std::string_view, kNumRules> kRuleNames = {"var",     "const", "prim", "let-fn",
                                                                       "let-val", "if",    "recur"};

// Constant model for Real: five fixed values, then two continuous components.
inline constexpr std::size_t kNumRealConsts = 7;
inline constexpr std::array<double, 5> kFixedConstants = {0.0, 1.0, -1.0, 2.0, kPi};
inline constexpr std::array<std::string_view, kNumRealConsts> kRealConstNames = {"0.0", "1.0",    "-1.0",   "2.0",
                                                                                 "pi",  "normal", "uniform"};
inline constexpr std::size_t kConstNormal = 5;
inline constexpr std::size_t kConstUniform = 6;
inline constexpr double kUniformConstHalfWidth = 10.0;

// Procedure slots: the primitives of the class followed by one slot that
// calls a compound procedure in scope.
inline std::vector<Prim> class_prims(TypeTag cls) {
  std::vector<Prim> out;
  for (std::size_t i = 0; i < kNumPrims; ++i)
    if (same_class(kPrimTable[i].result, cls)) out.push_back(static_cast<Prim>(i));
  return out;
}

struct ClassWeights {
  std::array<double, kNumRules> rules{};
  std::vector<double> procs;  // class_prims(cls).size() + 1 entries, compound last
};

struct RuleWeights {
  ClassWeights real;
  ClassWeights boolean;
  std::array<double, kNumRealConsts> real_consts{};
  std::array<double, 2> bool_consts{};  // false, true
  int max_depth = 10;

  const ClassWeights& of(TypeTag cls) const { return type_class(cls) == TypeTag::kBool ? boolean : real; }
  ClassWeights& of(TypeTag cls) { return type_class(cls) == TypeTag::kBool ? boolean : real; }

  static RuleWeights uniform(int max_depth = 10) {
    RuleWeights w;
    w.max_depth = max_depth;
    for (TypeTag cls : {TypeTag::kReal, TypeTag::kBool}) {
      auto& c = w.of(cls);
      c.rules.fill(1.0 / kNumRules);
      const std::size_t n = class_prims(cls).size() + 1;
      c.procs.assign(n, 1.0 / n);
    }
    w.real_consts.fill(1.0 / kNumRealConsts);
    w.bool_consts.fill(0.5);
    return w;
  }

  // Hand-set weights that keep generated programs small: the expected number
  // of non-leaf children per node is well below one.
  static RuleWeights defaults() {
    RuleWeights w = uniform();
    w.real.rules = {0.30, 0.30, 0.25, 0.02, 0.05, 0.06, 0.02};
    w.boolean.rules = {0.15, 0.15, 0.60, 0.02, 0.02, 0.04, 0.02};
    w.real_consts = {0.2, 0.2, 0.1, 0.1, 0.1, 0.15, 0.15};
    return w;
  }
};

// ---------------------------------------------------------------------------
// Validation and JSON.

namespace detail {

template <typename Range>
void check_categorical(const Range& r, const std::string& what) {
  double s = 0.0;
  for (double v : r) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(what + ": weights must be finite and >= 0");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument(what + ": weights must sum to 1");
}

}  // namespace detail

inline void validate(const RuleWeights& w) {
  if (w.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  for (TypeTag cls : {TypeTag::kReal, TypeTag::kBool}) {
    const auto& c = w.of(cls);
    const std::string n(type_name(cls));
    detail::check_categorical(c.rules, n + " rules");
    if (c.procs.size() != class_prims(cls).size() + 1) throw std::invalid_argument(n + " procs: wrong length");
    detail::check_categorical(c.procs, n + " procs");
  }
  detail::check_categorical(w.real_consts, "real constants");
  detail::check_categorical(w.bool_consts, "bool constants");
}

inline nlohmann::json to_json(const RuleWeights& w) {
  nlohmann::json j;
  j["max_depth"] = w.max_depth;
  for (TypeTag cls : {TypeTag::kReal, TypeTag::kBool}) {
    const auto& c = w.of(cls);
    nlohmann::json cj;
    for (std::size_t r = 0; r < kNumRules; ++r) cj["rules"][std::string(kRuleNames[r])] = c.rules[r];
    const auto prims = class_prims(cls);
    for (std::size_t i = 0; i < prims.size(); ++i) cj["procs"][std::string(prim_info(prims[i]).name)] = c.procs[i];
    cj["procs"]["compound"] = c.procs.back();
    j[std::string(type_name(cls))] = cj;
  }
  for (std::size_t i = 0; i < kNumRealConsts; ++i) j["constants"]["real"][std::string(kRealConstNames[i])] = w.real_consts[i];
  j["constants"]["bool"]["false"] = w.bool_consts[0];
  j["constants"]["bool"]["true"] = w.bool_consts[1];
  return j;
}

inline RuleWeights rule_weights_from_json(const nlohmann::json& j) {
  RuleWeights w = RuleWeights::uniform();
  w.max_depth = j.at("max_depth").get<int>();
  for (TypeTag cls : {TypeTag::kReal, TypeTag::kBool}) {
    auto& c = w.of(cls);
    const auto& cj = j.at(std::string(type_name(cls)));
    for (std::size_t r = 0; r < kNumRules; ++r) c.rules[r] = cj.at("rules").at(std::string(kRuleNames[r])).get<double>();
    const auto prims = class_prims(cls);
    for (std::size_t i = 0; i < prims.size(); ++i)
      c.procs[i] = cj.at("procs").at(std::string(prim_info(prims[i]).name)).get<double>();
    c.procs.back() = cj.at("procs").at("compound").get<double>();
  }
  for (std::size_t i = 0; i < kNumRealConsts; ++i)
    w.real_consts[i] = j.at("constants").at("real").at(std::string(kRealConstNames[i])).get<double>();
  w.bool_consts[0] = j.at("constants").at("bool").at("false").get<double>();
  w.bool_consts[1] = j.at("constants").at("bool").at("true").get<double>();
  validate(w);
  return w;
}

// ---------------------------------------------------------------------------
// Rule availability.

// Probabilities of the seven rules at a position, after dropping rules that
// cannot fire and renormalizing. If every available rule has zero weight the
// constant rule is forced.
inline std::array<double, kNumRules> rule_probs(TypeTag cls, const GenContext& ctx, const RuleWeights& w) {
  std::array<double, kNumRules> p = w.of(cls).rules;
  const bool at_cap = ctx.depth >= w.max_depth;
  if (ctx.scope.visible(false, cls).empty()) p[static_cast<int>(Rule::kVar)] = 0.0;
  if (!ctx.enclosing || !same_class(ctx.enclosing->ret, cls)) p[static_cast<int>(Rule::kRecur)] = 0.0;
  if (at_cap)
    for (Rule r : {Rule::kPrim, Rule::kLetFn, Rule::kLetVal, Rule::kIf, Rule::kRecur}) p[static_cast<int>(r)] = 0.0;
  double s = 0.0;
  for (double v : p) s += v;
  if (s <= 0.0) {
    p.fill(0.0);
    p[static_cast<int>(Rule::kConst)] = 1.0;
    return p;
  }
  for (double& v : p) v /= s;
  return p;
}

// Probabilities of the procedure slots; the compound slot is dropped when no
// procedure of the class is visible.
inline std::vector<double> proc_probs(TypeTag cls, const GenContext& ctx, const RuleWeights& w) {
  std::vector<double> p = w.of(cls).procs;
  if (ctx.scope.visible(true, cls).empty()) p.back() = 0.0;
  double s = 0.0;
  for (double v : p) s += v;
  if (s <= 0.0) {
    // Fall back to uniform over the primitives.
    std::fill(p.begin(), p.end() - 1, 1.0 / (p.size() - 1));
    p.back() = 0.0;
    return p;
  }
  for (double& v : p) v /= s;
  return p;
}

// Log density of a Real constant under the constant model.
inline double real_const_log_prob(double c, const RuleWeights& w) {
  for (std::size_t i = 0; i < kFixedConstants.size(); ++i)
    if (c == kFixedConstants[i]) return std::log(w.real_consts[i]);
  const double normal = w.real_consts[kConstNormal] * std::exp(normal_log_pdf(c, 0.0, 1.0));
  const double uniform =
      std::abs(c) <= kUniformConstHalfWidth ? w.real_consts[kConstUniform] / (2.0 * kUniformConstHalfWidth) : 0.0;
  return std::log(normal + uniform);
}

template <typename Range>
std::size_t sample_categorical(const Range& probs, Rng& rng) {
  double total = 0.0;
  for (double v : probs) total += v;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  std::size_t i = 0;
  for (double v : probs) {
    if (v > 0.0) {
      acc += v;
      last = i;
      if (u < acc) return i;
    }
    ++i;
  }
  return last;
}

inline constexpr double kLogHalf = -0.69314718055994530942;

// ---------------------------------------------------------------------------
// Generation.

namespace detail {

inline TypeTag coin_type(Rng& rng) { return uniform01(rng) < 0.5 ? TypeTag::kReal : TypeTag::kBool; }

inline ExprPtr gen(TypeTag cls, const GenContext& ctx, const RuleWeights& w, Rng& rng, double& lp) {
  cls = type_class(cls);
  const auto rp = rule_probs(cls, ctx, w);
  const auto rule = static_cast<Rule>(sample_categorical(rp, rng));
  lp += std::log(rp[static_cast<int>(rule)]);
  GenContext kid = ctx;
  kid.depth = ctx.depth + 1;
  switch (rule) {
    case Rule::kVar: {
      const auto vars = ctx.scope.visible(false, cls);
      const std::size_t i = static_cast<std::size_t>(uniform01(rng) * vars.size());
      lp -= std::log(static_cast<double>(vars.size()));
      return make_var(vars[i]->name, vars[i]->type);
    }
    case Rule::kConst: {
      if (cls == TypeTag::kBool) {
        const std::size_t i = sample_categorical(w.bool_consts, rng);
        lp += std::log(w.bool_consts[i]);
        return make_bool(i == 1);
      }
      const std::size_t i = sample_categorical(w.real_consts, rng);
      double c;
      if (i < kFixedConstants.size())
        c = kFixedConstants[i];
      else if (i == kConstNormal)
        c = standard_normal(rng);
      else
        c = -kUniformConstHalfWidth + 2.0 * kUniformConstHalfWidth * uniform01(rng);
      lp += real_const_log_prob(c, w);
      return make_real(c);
    }
    case Rule::kPrim: {
      const auto pp = proc_probs(cls, ctx, w);
      const std::size_t slot = sample_categorical(pp, rng);
      lp += std::log(pp[slot]);
      if (slot + 1 < pp.size()) {
        const Prim prim = class_prims(cls)[slot];
        std::vector<ExprPtr> args;
        for (int a = 0; a < prim_info(prim).arity; ++a) args.push_back(gen(kPrimArgType, kid, w, rng, lp));
        return make_prim(prim, std::move(args));
      }
      const auto procs = ctx.scope.visible(true, cls);
      const std::size_t i = static_cast<std::size_t>(uniform01(rng) * procs.size());
      lp -= std::log(static_cast<double>(procs.size()));
      std::vector<ExprPtr> args;
      for (TypeTag t : procs[i]->args) args.push_back(gen(t, kid, w, rng, lp));
      return make_call(procs[i]->name, procs[i]->type, std::move(args));
    }
    case Rule::kLetFn: {
      const std::size_t n = ctx.scope.size();
      const int arity = uniform01(rng) < 0.5 ? 1 : 2;
      ProcSig sig;
      sig.name = "f" + std::to_string(n);
      std::vector<Formal> formals;
      GenContext fn_ctx = kid;
      for (int a = 0; a < arity; ++a) {
        const TypeTag t = coin_type(rng);
        formals.push_back({"a" + std::to_string(n + a), t});
        sig.args.push_back(t);
        fn_ctx.scope.push_var(formals.back().name, t);
      }
      sig.ret = coin_type(rng);
      lp += kLogHalf * static_cast<double>(2 + arity);
      fn_ctx.enclosing = sig;
      ExprPtr fn_body = gen(sig.ret, fn_ctx, w, rng, lp);
      GenContext body_ctx = ctx;
      body_ctx.scope.push_proc(sig);
      ExprPtr body = gen(cls, body_ctx, w, rng, lp);
      return make_let_fn(sig.name, std::move(formals), sig.ret, std::move(fn_body), std::move(body));
    }
    case Rule::kLetVal: {
      const TypeTag t = coin_type(rng);
      lp += kLogHalf;
      ExprPtr bound = gen(t, kid, w, rng, lp);
      const std::string name = "x" + std::to_string(ctx.scope.size());
      GenContext body_ctx = ctx;
      body_ctx.scope.push_var(name, t);
      ExprPtr body = gen(cls, body_ctx, w, rng, lp);
      return make_let_val(name, t, std::move(bound), std::move(body));
    }
    case Rule::kIf: {
      ExprPtr c = gen(TypeTag::kBool, kid, w, rng, lp);
      ExprPtr t = gen(cls, kid, w, rng, lp);
      ExprPtr f = gen(cls, kid, w, rng, lp);
      return make_if(std::move(c), std::move(t), std::move(f));
    }
    case Rule::kRecur: {
      std::vector<ExprPtr> args;
      for (TypeTag t : ctx.enclosing->args) args.push_back(gen(t, kid, w, rng, lp));
      return make_recur(ctx.enclosing->ret, std::move(args));
    }
  }
  throw std::logic_error("unreachable rule");
}

}  // namespace detail

struct Generated {
  ExprPtr expr;
  double log_prob = 0.0;
};

// Generates an expression of class `target` at `ctx`.
inline Generated generate(TypeTag target, const GenContext& ctx, const RuleWeights& w, Rng& rng) {
  Generated g;
  g.expr = detail::gen(target, ctx, w, rng, g.log_prob);
  return g;
}

struct GeneratedProgram {
  Program program;
  double log_prob = 0.0;
};

inline GeneratedProgram generate_program(const std::vector<Formal>& formals, TypeTag ret, const RuleWeights& w,
                                         Rng& rng) {
  GeneratedProgram g;
  g.program.formals = formals;
  g.program.ret = ret;
  Generated body = generate(ret, root_context(formals, ret), w, rng);
  g.program.body = body.expr;
  g.log_prob = body.log_prob;
  return g;
}

// ---------------------------------------------------------------------------
// Scoring by replay.

namespace detail {

// Adds terms to `lp` in exactly the order generation does, so the two agree
// bit for bit. Anything generation cannot produce sets `lp` to -inf.
inline void replay(const Expr& e, TypeTag cls, const GenContext& ctx, const RuleWeights& w, double& lp) {
  if (lp == -INFINITY) return;
  const auto outside = [&lp] { lp = -INFINITY; };
  cls = type_class(cls);
  if (!same_class(e.type, cls)) return outside();
  Rule rule = Rule::kConst;
  switch (e.kind) {
    case ExprKind::kConst: rule = Rule::kConst; break;
    case ExprKind::kVar: rule = Rule::kVar; break;
    case ExprKind::kPrimApp:
    case ExprKind::kCall: rule = Rule::kPrim; break;
    case ExprKind::kLetFn: rule = Rule::kLetFn; break;
    case ExprKind::kLetVal: rule = Rule::kLetVal; break;
    case ExprKind::kIf: rule = Rule::kIf; break;
    case ExprKind::kRecur: rule = Rule::kRecur; break;
  }
  const auto rp = rule_probs(cls, ctx, w);
  const double pr = rp[static_cast<int>(rule)];
  if (pr <= 0.0) return outside();
  lp += std::log(pr);
  GenContext kid = ctx;
  kid.depth = ctx.depth + 1;
  switch (e.kind) {
    case ExprKind::kConst:
      if (cls == TypeTag::kBool)
        lp += std::log(w.bool_consts[e.value != 0.0 ? 1 : 0]);
      else
        lp += real_const_log_prob(e.value, w);
      return;
    case ExprKind::kVar: {
      const ScopeEntry* s = ctx.scope.lookup(e.name);
      if (!s || s->is_proc || s->type != e.type) return outside();
      lp -= std::log(static_cast<double>(ctx.scope.visible(false, cls).size()));
      return;
    }
    case ExprKind::kPrimApp: {
      const auto prims = class_prims(cls);
      const auto pp = proc_probs(cls, ctx, w);
      std::size_t slot = prims.size();
      for (std::size_t i = 0; i < prims.size(); ++i)
        if (prims[i] == e.prim) slot = i;
      if (slot == prims.size() || pp[slot] <= 0.0) return outside();
      lp += std::log(pp[slot]);
      for (const auto& k : e.kids) replay(*k, kPrimArgType, kid, w, lp);
      return;
    }
    case ExprKind::kCall: {
      const ScopeEntry* s = ctx.scope.lookup(e.name);
      if (!s || !s->is_proc || s->args.size() != e.kids.size()) return outside();
      const auto pp = proc_probs(cls, ctx, w);
      if (pp.back() <= 0.0) return outside();
      lp += std::log(pp.back());
      lp -= std::log(static_cast<double>(ctx.scope.visible(true, cls).size()));
      for (std::size_t i = 0; i < e.kids.size(); ++i) replay(e.kid(i), s->args[i], kid, w, lp);
      return;
    }
    case ExprKind::kLetFn: {
      if (e.formals.empty() || e.formals.size() > 2 || e.decl_type == TypeTag::kInt) return outside();
      for (const auto& f : e.formals)
        if (f.type == TypeTag::kInt) return outside();
      lp += kLogHalf * static_cast<double>(2 + e.formals.size());
      const auto kids = child_contexts(e, ctx);
      replay(e.kid(0), e.decl_type, kids[0], w, lp);
      replay(e.kid(1), cls, kids[1], w, lp);
      return;
    }
    case ExprKind::kLetVal: {
      if (e.decl_type == TypeTag::kInt) return outside();
      lp += kLogHalf;
      const auto kids = child_contexts(e, ctx);
      replay(e.kid(0), e.decl_type, kids[0], w, lp);
      replay(e.kid(1), cls, kids[1], w, lp);
      return;
    }
    case ExprKind::kIf:
      replay(e.kid(0), TypeTag::kBool, kid, w, lp);
      replay(e.kid(1), cls, kid, w, lp);
      replay(e.kid(2), cls, kid, w, lp);
      return;
    case ExprKind::kRecur:
      if (ctx.enclosing->args.size() != e.kids.size()) return outside();
      for (std::size_t i = 0; i < e.kids.size(); ++i) replay(e.kid(i), ctx.enclosing->args[i], kid, w, lp);
      return;
  }
}

}  // namespace detail

// Log-probability that generation at `ctx` with class `target` yields `e`;
// -inf outside the support.
inline double subtree_log_prob(const Expr& e, TypeTag target, const GenContext& ctx, const RuleWeights& w) {
  double lp = 0.0;
  detail::replay(e, target, ctx, w, lp);
  return lp;
}

inline double log_prior(const Program& p, const RuleWeights& w) { return subtree_log_prob(*p.body, p.ret, root_context(p), w); }

// ---------------------------------------------------------------------------
// Regeneration sites.

struct Site {
  Path path;
  TypeTag type;  // class required at this position
  GenContext ctx;
};

namespace detail {

inline void collect_sites(const Expr& e, TypeTag cls, const GenContext& ctx, Path& path, std::vector<Site>& out) {
  out.push_back({path, type_class(cls), ctx});
  const auto kids = child_contexts(e, ctx);
  const auto types = child_types(e, ctx, e.type);
  for (std::size_t i = 0; i < e.kids.size(); ++i) {
    path.push_back(static_cast<uint32_t>(i));
    collect_sites(e.kid(i), types[i], kids[i], path, out);
    path.pop_back();
  }
}

}  // namespace detail

// Largest generation depth of any node; let bodies do not add depth.
inline int generation_depth(const Program& p);

// One site per AST node of the body, in pre-order.
inline std::vector<Site> typed_sites(const Program& p) {
  std::vector<Site> out;
  Path path;
  detail::collect_sites(*p.body, p.ret, root_context(p), path, out);
  return out;
}

inline int generation_depth(const Program& p) {
  int d = 0;
  for (const auto& s : typed_sites(p)) d = std::max(d, s.ctx.depth);
  return d;
}

// ---------------------------------------------------------------------------
// Estimation from a corpus.

namespace detail {

struct RuleCounts {
  std::array<double, kNumRules> real_rules{};
  std::array<double, kNumRules> bool_rules{};
  std::vector<double> real_procs = std::vector<double>(class_prims(TypeTag::kReal).size() + 1, 0.0);
  std::vector<double> bool_procs = std::vector<double>(class_prims(TypeTag::kBool).size() + 1, 0.0);
  std::array<double, kNumRealConsts> real_consts{};
  std::array<double, 2> bool_consts{};
};

inline void count_rules(const Expr& e, TypeTag cls, const GenContext& ctx, RuleCounts& c) {
  cls = type_class(cls);
  const bool is_bool = cls == TypeTag::kBool;
  auto& rules = is_bool ? c.bool_rules : c.real_rules;
  auto& procs = is_bool ? c.bool_procs : c.real_procs;
  switch (e.kind) {
    case ExprKind::kVar: rules[static_cast<int>(Rule::kVar)] += 1; break;
    case ExprKind::kConst:
      rules[static_cast<int>(Rule::kConst)] += 1;
      if (is_bool) {
        c.bool_consts[e.value != 0.0 ? 1 : 0] += 1;
      } else {
        bool fixed = false;
        for (std::size_t i = 0; i < kFixedConstants.size(); ++i)
          if (e.value == kFixedConstants[i]) {
            c.real_consts[i] += 1;
            fixed = true;
          }
        if (!fixed) {
          // Split the observation between the two continuous components in
          // proportion to their densities at the value.
          const double n = std::exp(normal_log_pdf(e.value, 0.0, 1.0));
          const double u = std::abs(e.value) <= kUniformConstHalfWidth ? 1.0 / (2.0 * kUniformConstHalfWidth) : 0.0;
          c.real_consts[kConstNormal] += n / (n + u);
          c.real_consts[kConstUniform] += u / (n + u);
        }
      }
      break;
    case ExprKind::kPrimApp: {
      rules[static_cast<int>(Rule::kPrim)] += 1;
      const auto prims = class_prims(cls);
      for (std::size_t i = 0; i < prims.size(); ++i)
        if (prims[i] == e.prim) procs[i] += 1;
      break;
    }
    case ExprKind::kCall:
      rules[static_cast<int>(Rule::kPrim)] += 1;
      procs.back() += 1;
      break;
    case ExprKind::kLetFn: rules[static_cast<int>(Rule::kLetFn)] += 1; break;
    case ExprKind::kLetVal: rules[static_cast<int>(Rule::kLetVal)] += 1; break;
    case ExprKind::kIf: rules[static_cast<int>(Rule::kIf)] += 1; break;
    case ExprKind::kRecur: rules[static_cast<int>(Rule::kRecur)] += 1; break;
  }
  const auto kids = child_contexts(e, ctx);
  const auto types = child_types(e, ctx, e.type);
  for (std::size_t i = 0; i < e.kids.size(); ++i) count_rules(e.kid(i), types[i], kids[i], c);
}

template <typename Range>
void smooth_into(const Range& counts, double alpha, Range& out) {
  double n = 0.0;
  for (double v : counts) n += v;
  const double k = static_cast<double>(counts.size());
  auto it = out.begin();
  for (double v : counts) *it++ = (v + alpha) / (n + alpha * k);
}

}  // namespace detail

// Posterior-mean weights under a symmetric Dirichlet(alpha) prior on every
// categorical. An empty corpus gives uniform weights.
inline RuleWeights estimate_weights(const std::vector<Program>& corpus, double alpha, int max_depth = 10) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet alpha must be > 0");
  detail::RuleCounts c;
  for (const auto& p : corpus) detail::count_rules(*p.body, p.ret, root_context(p), c);
  RuleWeights w = RuleWeights::uniform(max_depth);
  detail::smooth_into(c.real_rules, alpha, w.real.rules);
  detail::smooth_into(c.bool_rules, alpha, w.boolean.rules);
  detail::smooth_into(c.real_procs, alpha, w.real.procs);
  detail::smooth_into(c.bool_procs, alpha, w.boolean.procs);
  detail::smooth_into(c.real_consts, alpha, w.real_consts);
  detail::smooth_into(c.bool_consts, alpha, w.bool_consts);
  return w;
}

}  // namespace sampler_smith

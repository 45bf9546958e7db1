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


// Reference interpreter. Walks the AST with a persistent environment; slow
// but simple, and used to cross-check the compiled evaluator.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sampler_smith/expr.hpp"
#include "sampler_smith/rng.hpp"

namespace sampler_smith {

struct EvalConfig {
  int recursion_cap = 10;   // a recur reaching this depth returns 0 instead
  int64_t fuel = 10000;     // nodes evaluated per run before giving up
};

// Per-run bookkeeping shared by both evaluators.
struct EvalState {
  int64_t fuel = 0;
  bool exhausted = false;
  bool cap_hit = false;

  // Returns false once the budget is spent.
  bool tick() {
    if (fuel <= 0) {
      exhausted = true;
      return false;
    }
    --fuel;
    return true;
  }
};

struct RunResult {
  double value = 0.0;
  bool cap_hit = false;
  bool exhausted = false;
};

// Primitive semantics. Every primitive is total on finite inputs.
inline double apply_prim(Prim p, double a, double b, Rng& rng) {
  switch (p) {
    case Prim::kAdd: return a + b;
    case Prim::kSub: return a - b;
    case Prim::kMul: return a * b;
    case Prim::kSafeDiv: {
      if (b == 0.0) return 0.0;
      const double q = a / b;
      return std::isfinite(q) ? q : 0.0;
    }
    case Prim::kSafeUc: {
      if (a == b) return a;
      const double lo = std::min(a, b), hi = std::max(a, b);
      const double u = uniform01(rng);
      return lo * (1.0 - u) + hi * u;
    }
    case Prim::kCos: return std::cos(a);
    case Prim::kSafeSqrt: return a < 0.0 ? 0.0 : std::sqrt(a);
    case Prim::kSafeLog: return a <= 0.0 ? 0.0 : std::log(a);
    case Prim::kExp: return std::exp(a);
    case Prim::kInc: return a + 1.0;
    case Prim::kDec: return a - 1.0;
    case Prim::kLess: return a < b ? 1.0 : 0.0;
  }
  return 0.0;
}

// Values bound to Int slots are rounded half to even.
inline double coerce(TypeTag t, double v) { return t == TypeTag::kInt ? std::nearbyint(v) : v; }

namespace reference {

struct Closure;

struct Binding {
  std::string name;
  double value = 0.0;
  std::shared_ptr<const Closure> proc;
  std::shared_ptr<const Binding> next;
};
using Env = std::shared_ptr<const Binding>;

struct Closure {
  const std::vector<Formal>* formals;
  const Expr* body;
  TypeTag ret;
  Env env;  // definition environment
};

// The procedure activation a `recur` refers to.
struct Activation {
  const Closure* fn;
  int depth;
};

inline Env bind(Env env, std::string name, double v) {
  auto b = std::make_shared<Binding>();
  b->name = std::move(name);
  b->value = v;
  b->next = std::move(env);
  return b;
}

inline const Binding& find(const Env& env, const std::string& name) {
  for (const Binding* b = env.get(); b; b = b->next.get())
    if (b->name == name) return *b;
  throw std::logic_error("unbound name at runtime: " + name);
}

inline double eval(const Expr& e, const Env& env, const Activation& act, EvalState& st, const EvalConfig& cfg,
                   Rng& rng);

inline double invoke(const Closure& fn, const std::vector<double>& args, int depth, EvalState& st,
                     const EvalConfig& cfg, Rng& rng) {
  Env env = fn.env;
  for (std::size_t i = 0; i < args.size(); ++i)
    env = bind(env, (*fn.formals)[i].name, coerce((*fn.formals)[i].type, args[i]));
  return eval(*fn.body, env, Activation{&fn, depth}, st, cfg, rng);
}

inline double eval(const Expr& e, const Env& env, const Activation& act, EvalState& st, const EvalConfig& cfg,
                   Rng& rng) {
  if (!st.tick()) return NAN;
  switch (e.kind) {
    case ExprKind::kConst:
      return e.value;
    case ExprKind::kVar:
      return find(env, e.name).value;
    case ExprKind::kPrimApp: {
      const double a = eval(e.kid(0), env, act, st, cfg, rng);
      const double b = e.kids.size() > 1 ? eval(e.kid(1), env, act, st, cfg, rng) : 0.0;
      return apply_prim(e.prim, a, b, rng);
    }
    case ExprKind::kIf:
      return eval(e.kid(0), env, act, st, cfg, rng) != 0.0 ? eval(e.kid(1), env, act, st, cfg, rng)
                                                            : eval(e.kid(2), env, act, st, cfg, rng);
    case ExprKind::kLetVal: {
      const double v = coerce(e.decl_type, eval(e.kid(0), env, act, st, cfg, rng));
      return eval(e.kid(1), bind(env, e.name, v), act, st, cfg, rng);
    }
    case ExprKind::kLetFn: {
      auto clo = std::make_shared<Closure>(Closure{&e.formals, e.kids[0].get(), e.decl_type, env});
      auto b = std::make_shared<Binding>();
      b->name = e.name;
      b->proc = clo;
      b->next = env;
      return eval(e.kid(1), b, act, st, cfg, rng);
    }
    case ExprKind::kCall: {
      const Binding& b = find(env, e.name);
      std::vector<double> args;
      for (const auto& k : e.kids) args.push_back(eval(*k, env, act, st, cfg, rng));
      return coerce(b.proc->ret, invoke(*b.proc, args, 0, st, cfg, rng));
    }
    case ExprKind::kRecur: {
      if (act.depth + 1 >= cfg.recursion_cap) {
        st.cap_hit = true;
        return 0.0;
      }
      std::vector<double> args;
      for (const auto& k : e.kids) args.push_back(eval(*k, env, act, st, cfg, rng));
      return coerce(act.fn->ret, invoke(*act.fn, args, act.depth + 1, st, cfg, rng));
    }
  }
  return NAN;
}

}  // namespace reference

// Runs `p` on `args` with the reference interpreter.
inline RunResult run_program_reference(const Program& p, const std::vector<double>& args, const EvalConfig& cfg,
                                       Rng& rng) {
  if (args.size() != p.formals.size())
    throw std::invalid_argument("program expects " + std::to_string(p.formals.size()) + " arguments");
  EvalState st;
  st.fuel = cfg.fuel;
  reference::Closure top{&p.formals, p.body.get(), p.ret, nullptr};
  RunResult r;
  r.value = coerce(p.ret, reference::invoke(top, args, 0, st, cfg, rng));
  r.cap_hit = st.cap_hit;
  r.exhausted = st.exhausted;
  if (r.exhausted) r.value = NAN;
  return r;
}

}  // namespace sampler_smith

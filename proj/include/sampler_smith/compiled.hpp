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


// Compiled evaluator used for sampling. Names are resolved at compile time to
// (hops, slot) pairs: `hops` static links up from the current activation,
// then a slot within that activation's frame. Values live on one flat stack.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sampler_smith/eval.hpp"
#include "sampler_smith/expr.hpp"
#include "sampler_smith/rng.hpp"

namespace sampler_smith {

class CompiledProgram {
 public:
  explicit CompiledProgram(const Program& p) {
    Compiler c{*this, {}};
    c.compile_fn(p.formals, p.ret, *p.body);
    n_args_ = p.formals.size();
  }

  std::size_t num_args() const { return n_args_; }

  RunResult run(const std::vector<double>& args, const EvalConfig& cfg, Rng& rng) const {
    if (args.size() != n_args_)
      throw std::invalid_argument("program expects " + std::to_string(n_args_) + " arguments");
    thread_local Machine m;
    m.stack.clear();
    m.frames.clear();
    m.st = EvalState{};
    m.st.fuel = cfg.fuel;
    m.cfg = &cfg;
    m.rng = &rng;
    const Fn& top = fns_[0];
    for (std::size_t i = 0; i < args.size(); ++i) m.stack.push_back(coerce(top.formal_types[i], args[i]));
    RunResult r;
    r.value = enter(m, 0, -1, 0);
    r.cap_hit = m.st.cap_hit;
    r.exhausted = m.st.exhausted;
    if (r.exhausted) r.value = NAN;
    return r;
  }

 private:
  struct Node {
    ExprKind kind = ExprKind::kConst;
    Prim prim = Prim::kAdd;
    TypeTag decl = TypeTag::kReal;
    double value = 0.0;
    int slot = 0;  // kVar, kLetVal
    int hops = 0;  // kVar, kCall
    int fn = 0;    // kCall
    uint32_t first_kid = 0;
    uint32_t n_kids = 0;
  };

  struct Fn {
    std::vector<TypeTag> formal_types;
    TypeTag ret = TypeTag::kReal;
    int n_slots = 0;
    int body = 0;
  };

  struct Frame {
    uint32_t base;
    int32_t link;
    int32_t depth;
    int32_t fn;
  };

  struct Machine {
    std::vector<double> stack;
    std::vector<Frame> frames;
    EvalState st;
    const EvalConfig* cfg = nullptr;
    Rng* rng = nullptr;
  };

  struct Compiler {
    struct Sym {
      std::string name;
      bool is_proc;
      int index;  // slot or fn id
    };
    struct FnScope {
      std::vector<Sym> syms;
      int next_slot = 0;
      int fn = 0;
    };

    CompiledProgram& out;
    std::vector<FnScope> scopes;

    int compile_fn(const std::vector<Formal>& formals, TypeTag ret, const Expr& body) {
      const int id = static_cast<int>(out.fns_.size());
      out.fns_.emplace_back();
      FnScope s;
      s.fn = id;
      for (const auto& f : formals) {
        s.syms.push_back({f.name, false, s.next_slot++});
        out.fns_[id].formal_types.push_back(f.type);
      }
      scopes.push_back(std::move(s));
      const int b = compile(body);
      out.fns_[id].ret = ret;
      out.fns_[id].body = b;
      out.fns_[id].n_slots = scopes.back().next_slot;
      scopes.pop_back();
      return id;
    }

    // Innermost binding of `name`, and the number of function scopes crossed.
    std::pair<const Sym*, int> resolve(const std::string& name) const {
      for (int i = static_cast<int>(scopes.size()) - 1; i >= 0; --i) {
        const auto& syms = scopes[i].syms;
        for (auto it = syms.rbegin(); it != syms.rend(); ++it)
          if (it->name == name) return {&*it, static_cast<int>(scopes.size()) - 1 - i};
      }
      throw std::logic_error("unbound name during compilation: " + name);
    }

    int compile(const Expr& e) {
      Node n;
      n.kind = e.kind;
      n.prim = e.prim;
      n.decl = e.decl_type;
      n.value = e.value;
      std::vector<int> kids;
      switch (e.kind) {
        case ExprKind::kVar: {
          auto [sym, hops] = resolve(e.name);
          n.slot = sym->index;
          n.hops = hops;
          break;
        }
        case ExprKind::kCall: {
          auto [sym, hops] = resolve(e.name);
          n.fn = sym->index;
          n.hops = hops;
          for (const auto& k : e.kids) kids.push_back(compile(*k));
          break;
        }
        case ExprKind::kLetVal: {
          kids.push_back(compile(e.kid(0)));
          auto& s = scopes.back();
          n.slot = s.next_slot++;
          s.syms.push_back({e.name, false, n.slot});
          kids.push_back(compile(e.kid(1)));
          scopes.back().syms.pop_back();
          break;
        }
        case ExprKind::kLetFn: {
          const int fn = compile_fn(e.formals, e.decl_type, e.kid(0));
          scopes.back().syms.push_back({e.name, true, fn});
          kids.push_back(compile(e.kid(1)));
          scopes.back().syms.pop_back();
          break;
        }
        default:
          for (const auto& k : e.kids) kids.push_back(compile(*k));
          break;
      }
      n.first_kid = static_cast<uint32_t>(out.kid_index_.size());
      n.n_kids = static_cast<uint32_t>(kids.size());
      out.kid_index_.insert(out.kid_index_.end(), kids.begin(), kids.end());
      out.nodes_.push_back(n);
      return static_cast<int>(out.nodes_.size()) - 1;
    }
  };

  int kid(const Node& n, uint32_t i) const { return kid_index_[n.first_kid + i]; }

  static int32_t follow(const Machine& m, int32_t frame, int hops) {
    for (int h = 0; h < hops; ++h) frame = m.frames[frame].link;
    return frame;
  }

  // Arguments are already on top of the stack.
  double enter(Machine& m, int fn_id, int32_t link, int depth) const {
    const Fn& fn = fns_[fn_id];
    const uint32_t base = static_cast<uint32_t>(m.stack.size() - fn.formal_types.size());
    m.stack.resize(base + fn.n_slots);
    m.frames.push_back({base, link, depth, fn_id});
    const double v = eval(m, fn.body, static_cast<int32_t>(m.frames.size()) - 1);
    m.frames.pop_back();
    m.stack.resize(base);
    return coerce(fn.ret, v);
  }

  double call(Machine& m, const Node& n, int32_t frame, int fn_id, int32_t link, int depth) const {
    const Fn& fn = fns_[fn_id];
    for (uint32_t i = 0; i < n.n_kids; ++i) {
      const double v = eval(m, kid(n, i), frame);
      m.stack.push_back(coerce(fn.formal_types[i], v));
    }
    return enter(m, fn_id, link, depth);
  }

  double eval(Machine& m, int idx, int32_t frame) const {
    if (!m.st.tick()) return NAN;
    const Node& n = nodes_[idx];
    switch (n.kind) {
      case ExprKind::kConst:
        return n.value;
      case ExprKind::kVar:
        return m.stack[m.frames[follow(m, frame, n.hops)].base + n.slot];
      case ExprKind::kPrimApp: {
        const double a = eval(m, kid(n, 0), frame);
        const double b = n.n_kids > 1 ? eval(m, kid(n, 1), frame) : 0.0;
        return apply_prim(n.prim, a, b, *m.rng);
      }
      case ExprKind::kIf:
        return eval(m, kid(n, 0), frame) != 0.0 ? eval(m, kid(n, 1), frame) : eval(m, kid(n, 2), frame);
      case ExprKind::kLetVal: {
        const double v = coerce(n.decl, eval(m, kid(n, 0), frame));
        m.stack[m.frames[frame].base + n.slot] = v;
        return eval(m, kid(n, 1), frame);
      }
      case ExprKind::kLetFn:
        return eval(m, kid(n, 0), frame);
      case ExprKind::kCall:
        return call(m, n, frame, n.fn, follow(m, frame, n.hops), 0);
      case ExprKind::kRecur: {
        const Frame f = m.frames[frame];
        if (f.depth + 1 >= m.cfg->recursion_cap) {
          m.st.cap_hit = true;
          return 0.0;
        }
        return call(m, n, frame, f.fn, f.link, f.depth + 1);
      }
    }
    return NAN;
  }

  std::vector<Node> nodes_;
  std::vector<int> kid_index_;
  std::vector<Fn> fns_;
  std::size_t n_args_ = 0;
};

inline RunResult run_program(const Program& p, const std::vector<double>& args, const EvalConfig& cfg, Rng& rng) {
  return CompiledProgram(p).run(args, cfg, rng);
}

// Outcome of drawing repeated samples from one program.
struct SampleSet {
  std::vector<double> values;
  int non_finite = 0;  // NaN or infinite outputs, including exhausted runs
  int cap_hits = 0;    // runs in which some recur hit the recursion cap
  int exhausted = 0;   // runs that ran out of fuel
};

inline SampleSet draw_samples(const CompiledProgram& prog, const std::vector<double>& args, int n,
                              const EvalConfig& cfg, Rng& rng) {
  SampleSet s;
  s.values.reserve(n);
  for (int i = 0; i < n; ++i) {
    const RunResult r = prog.run(args, cfg, rng);
    s.values.push_back(r.value);
    if (!std::isfinite(r.value)) ++s.non_finite;
    if (r.cap_hit) ++s.cap_hits;
    if (r.exhausted) ++s.exhausted;
  }
  return s;
}

inline SampleSet draw_samples(const Program& p, const std::vector<double>& args, int n, const EvalConfig& cfg,
                              Rng& rng) {
  return draw_samples(CompiledProgram(p), args, n, cfg, rng);
}

}  // namespace sampler_smith

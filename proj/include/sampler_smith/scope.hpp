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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sampler_smith/expr.hpp"

namespace sampler_smith {

struct ProcSig {
  std::string name;
  std::vector<TypeTag> args;
  TypeTag ret = TypeTag::kReal;
};

struct ScopeEntry {
  std::string name;
  bool is_proc = false;
  TypeTag type = TypeTag::kReal;  // variable type, or return type for procedures
  std::vector<TypeTag> args;      // procedures only
};

// Lexical scope; variables and procedures share one namespace and inner
// bindings shadow outer ones.
class Scope {
 public:
  void push_var(std::string name, TypeTag t) { entries_.push_back({std::move(name), false, t, {}}); }

  void push_proc(const ProcSig& sig) { entries_.push_back({sig.name, true, sig.ret, sig.args}); }

  const ScopeEntry* lookup(std::string_view name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
      if (it->name == name) return &*it;
    return nullptr;
  }

  // Unshadowed entries of the given kind whose (return) type has class `cls`,
  // ordered outermost first.
  std::vector<const ScopeEntry*> visible(bool procs, TypeTag cls) const {
    std::vector<const ScopeEntry*> out;
    std::vector<std::string_view> seen;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      bool shadowed = false;
      for (auto s : seen) shadowed = shadowed || s == it->name;
      if (shadowed) continue;
      seen.push_back(it->name);
      if (it->is_proc == procs && same_class(it->type, cls)) out.push_back(&*it);
    }
    return {out.rbegin(), out.rend()};
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<ScopeEntry>& entries() const { return entries_; }

 private:
  std::vector<ScopeEntry> entries_;
};

// Everything generation needs to know about a position in a program.
struct GenContext {
  Scope scope;
  std::optional<ProcSig> enclosing;  // target of `recur`
  int depth = 0;
};

inline ProcSig program_sig(const Program& p) {
  ProcSig sig;
  sig.name = "";
  for (const auto& f : p.formals) sig.args.push_back(f.type);
  sig.ret = p.ret;
  return sig;
}

inline GenContext root_context(const std::vector<Formal>& formals, TypeTag ret) {
  GenContext ctx;
  ProcSig sig;
  for (const auto& f : formals) {
    ctx.scope.push_var(f.name, f.type);
    sig.args.push_back(f.type);
  }
  sig.ret = ret;
  ctx.enclosing = sig;
  return ctx;
}

inline GenContext root_context(const Program& p) { return root_context(p.formals, p.ret); }

// Contexts of the children of `e` given the context of `e`; mirrors the order
// in which generation creates them. Children are one level deeper, except the
// body of a `let`, which continues at the depth of the `let` itself so that a
// run of bindings does not count as nesting.
inline std::vector<GenContext> child_contexts(const Expr& e, const GenContext& ctx) {
  std::vector<GenContext> out(e.kids.size(), ctx);
  for (auto& c : out) c.depth = ctx.depth + 1;
  switch (e.kind) {
    case ExprKind::kLetVal:
      out[1].depth = ctx.depth;
      out[1].scope.push_var(e.name, e.decl_type);
      break;
    case ExprKind::kLetFn: {
      ProcSig sig{e.name, {}, e.decl_type};
      for (const auto& f : e.formals) {
        out[0].scope.push_var(f.name, f.type);
        sig.args.push_back(f.type);
      }
      out[0].enclosing = sig;
      out[1].depth = ctx.depth;
      out[1].scope.push_proc(sig);
      break;
    }
    default:
      break;
  }
  return out;
}

// Type required at each child position of `e`.
inline std::vector<TypeTag> child_types(const Expr& e, const GenContext& ctx, TypeTag self_type) {
  std::vector<TypeTag> out;
  switch (e.kind) {
    case ExprKind::kConst:
    case ExprKind::kVar:
      break;
    case ExprKind::kPrimApp:
      out.assign(e.kids.size(), kPrimArgType);
      break;
    case ExprKind::kCall: {
      const ScopeEntry* p = ctx.scope.lookup(e.name);
      for (std::size_t i = 0; i < e.kids.size(); ++i)
        out.push_back(p && p->is_proc && i < p->args.size() ? p->args[i] : TypeTag::kReal);
      break;
    }
    case ExprKind::kRecur:
      for (std::size_t i = 0; i < e.kids.size(); ++i)
        out.push_back(ctx.enclosing && i < ctx.enclosing->args.size() ? ctx.enclosing->args[i]
                                                                      : TypeTag::kReal);
      break;
    case ExprKind::kLetVal:
      out = {e.decl_type, self_type};
      break;
    case ExprKind::kLetFn:
      out = {e.decl_type, self_type};
      break;
    case ExprKind::kIf:
      out = {TypeTag::kBool, self_type, self_type};
      break;
  }
  return out;
}

}  // namespace sampler_smith

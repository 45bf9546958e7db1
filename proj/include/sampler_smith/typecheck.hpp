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

#include <stdexcept>
#include <string>

#include "sampler_smith/expr.hpp"
#include "sampler_smith/scope.hpp"

namespace sampler_smith {

class TypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void fail_type(const std::string& msg) { throw TypeError(msg); }

inline void check_expr(const Expr& e, TypeTag required, const GenContext& ctx) {
  if (!same_class(e.type, required))
    fail_type("expected " + std::string(type_name(required)) + ", found " +
              std::string(type_name(e.type)));
  switch (e.kind) {
    case ExprKind::kConst:
      if (e.type == TypeTag::kBool && e.value != 0.0 && e.value != 1.0) fail_type("bad bool constant");
      if (e.type == TypeTag::kInt) fail_type("int constants are written as reals");
      break;
    case ExprKind::kVar: {
      const ScopeEntry* s = ctx.scope.lookup(e.name);
      if (!s) fail_type("unbound variable '" + e.name + "'");
      if (s->is_proc) fail_type("procedure '" + e.name + "' used as a value");
      if (s->type != e.type) fail_type("variable '" + e.name + "' has inconsistent type");
      break;
    }
    case ExprKind::kPrimApp:
      if (static_cast<int>(e.kids.size()) != prim_info(e.prim).arity)
        fail_type("arity mismatch for " + std::string(prim_info(e.prim).name));
      if (e.type != prim_info(e.prim).result) fail_type("primitive result type mismatch");
      break;
    case ExprKind::kCall: {
      const ScopeEntry* s = ctx.scope.lookup(e.name);
      if (!s) fail_type("unbound procedure '" + e.name + "'");
      if (!s->is_proc) fail_type("'" + e.name + "' is not a procedure");
      if (s->args.size() != e.kids.size()) fail_type("arity mismatch calling '" + e.name + "'");
      if (s->type != e.type) fail_type("call result type mismatch for '" + e.name + "'");
      break;
    }
    case ExprKind::kRecur:
      if (!ctx.enclosing) fail_type("recur outside of a procedure");
      if (ctx.enclosing->args.size() != e.kids.size()) fail_type("arity mismatch in recur");
      if (ctx.enclosing->ret != e.type) fail_type("recur result type mismatch");
      break;
    case ExprKind::kLetVal:
      if (e.type != e.kid(1).type) fail_type("let type mismatch");
      break;
    case ExprKind::kLetFn:
      if (e.type != e.kid(1).type) fail_type("let type mismatch");
      for (std::size_t i = 0; i < e.formals.size(); ++i)
        for (std::size_t j = i + 1; j < e.formals.size(); ++j)
          if (e.formals[i].name == e.formals[j].name) fail_type("duplicate formal '" + e.formals[i].name + "'");
      break;
    case ExprKind::kIf:
      if (e.type != join_types(e.kid(1).type, e.kid(2).type)) fail_type("if type mismatch");
      break;
  }
  const auto kid_ctx = child_contexts(e, ctx);
  const auto kid_types = child_types(e, ctx, e.kind == ExprKind::kIf ? e.type : required);
  for (std::size_t i = 0; i < e.kids.size(); ++i) {
    // Branches and let bodies must agree with the node, not only the position.
    TypeTag want = kid_types[i];
    if (e.kind == ExprKind::kLetVal || e.kind == ExprKind::kLetFn) want = i == 0 ? e.decl_type : e.type;
    check_expr(e.kid(i), want, kid_ctx[i]);
  }
}

}  // namespace detail

// Throws TypeError if `e` is not well typed at a position requiring `required`.
inline void type_check(const Expr& e, TypeTag required, const GenContext& ctx) {
  detail::check_expr(e, required, ctx);
}

inline void type_check(const Program& p) {
  if (!p.body) throw TypeError("program has no body");
  for (std::size_t i = 0; i < p.formals.size(); ++i)
    for (std::size_t j = i + 1; j < p.formals.size(); ++j)
      if (p.formals[i].name == p.formals[j].name) throw TypeError("duplicate formal '" + p.formals[i].name + "'");
  detail::check_expr(*p.body, p.ret, root_context(p));
}

inline bool is_well_typed(const Program& p) {
  try {
    type_check(p);
    return true;
  } catch (const TypeError&) {
    return false;
  }
}

}  // namespace sampler_smith

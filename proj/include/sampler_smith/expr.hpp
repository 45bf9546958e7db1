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

// Typed AST of the sampler language.
//
// Programs are a top-level `fn` with typed formals and a body expression.
// Expressions are immutable and shared through `ExprPtr`, so rewriting a
// subtree copies only the path from the root.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sampler_smith {

enum class TypeTag : uint8_t { kReal, kBool, kInt };

// Int is a rounded Real; generation and type compatibility work on classes.
inline TypeTag type_class(TypeTag t) { return t == TypeTag::kBool ? TypeTag::kBool : TypeTag::kReal; }
inline bool same_class(TypeTag a, TypeTag b) { return type_class(a) == type_class(b); }

inline std::string_view type_name(TypeTag t) {
  switch (t) {
    case TypeTag::kReal: return "real";
    case TypeTag::kBool: return "bool";
    case TypeTag::kInt: return "int";
  }
  return "?";
}

inline std::optional<TypeTag> parse_type_name(std::string_view s) {
  if (s == "real") return TypeTag::kReal;
  if (s == "bool") return TypeTag::kBool;
  if (s == "int") return TypeTag::kInt;
  return std::nullopt;
}

enum class Prim : uint8_t {
  kAdd, kSub, kMul, kSafeDiv, kSafeUc, kCos, kSafeSqrt, kSafeLog, kExp, kInc, kDec,
  kLess,
};

inline constexpr std::size_t kNumPrims = 12;
inline constexpr std::size_t kNumRealPrims = 11;  // every primitive except `<`

struct PrimInfo {
  std::string_view name;
  int arity;
  TypeTag result;
};

inline constexpr std::array<PrimInfo, kNumPrims> kPrimTable = {{
    {"+", 2, TypeTag::kReal},
    {"-", 2, TypeTag::kReal},
    {"*", 2, TypeTag::kReal},
    {"safe-div", 2, TypeTag::kReal},
    {"safe-uc", 2, TypeTag::kReal},
    {"cos", 1, TypeTag::kReal},
    {"safe-sqrt", 1, TypeTag::kReal},
    {"safe-log", 1, TypeTag::kReal},
    {"exp", 1, TypeTag::kReal},
    {"inc", 1, TypeTag::kReal},
    {"dec", 1, TypeTag::kReal},
    {"<", 2, TypeTag::kBool},
}};

inline const PrimInfo& prim_info(Prim p) { return kPrimTable[static_cast<std::size_t>(p)]; }

inline std::optional<Prim> prim_by_name(std::string_view s) {
  for (std::size_t i = 0; i < kNumPrims; ++i)
    if (kPrimTable[i].name == s) return static_cast<Prim>(i);
  return std::nullopt;
}

// All primitive arguments are Real.
inline constexpr TypeTag kPrimArgType = TypeTag::kReal;

enum class ExprKind : uint8_t { kConst, kVar, kPrimApp, kCall, kLetVal, kLetFn, kIf, kRecur };

struct Formal {
  std::string name;
  TypeTag type = TypeTag::kReal;
  bool operator==(const Formal&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Child layout by kind:
//   kPrimApp, kCall, kRecur: arguments
//   kLetVal: [bound, body]
//   kLetFn:  [fn_body, body]
//   kIf:     [cond, then, else]
struct Expr {
  ExprKind kind = ExprKind::kConst;
  TypeTag type = TypeTag::kReal;
  double value = 0.0;             // kConst; Bool stored as 0/1
  std::string name;               // kVar, kCall, kLetVal, kLetFn
  Prim prim = Prim::kAdd;         // kPrimApp
  TypeTag decl_type = TypeTag::kReal;  // kLetVal bound type, kLetFn return type
  std::vector<Formal> formals;    // kLetFn
  std::vector<ExprPtr> kids;

  const Expr& kid(std::size_t i) const { return *kids[i]; }
};

struct Program {
  std::vector<Formal> formals;
  TypeTag ret = TypeTag::kReal;
  ExprPtr body;
};

// ---------------------------------------------------------------------------
// Constructors. They compute the node's TypeTag from its parts but do not check
// well-typedness; see typecheck.hpp.

inline ExprPtr make_real(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kConst;
  e->type = TypeTag::kReal;
  e->value = v;
  return e;
}

inline ExprPtr make_bool(bool b) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kConst;
  e->type = TypeTag::kBool;
  e->value = b ? 1.0 : 0.0;
  return e;
}

inline ExprPtr make_var(std::string name, TypeTag t) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kVar;
  e->type = t;
  e->name = std::move(name);
  return e;
}

inline ExprPtr make_prim(Prim p, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kPrimApp;
  e->prim = p;
  e->type = prim_info(p).result;
  e->kids = std::move(args);
  return e;
}

inline ExprPtr make_call(std::string name, TypeTag ret, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kCall;
  e->name = std::move(name);
  e->type = ret;
  e->kids = std::move(args);
  return e;
}

inline ExprPtr make_let_val(std::string name, TypeTag bound_type, ExprPtr bound, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kLetVal;
  e->name = std::move(name);
  e->decl_type = bound_type;
  e->type = body->type;
  e->kids = {std::move(bound), std::move(body)};
  return e;
}

inline ExprPtr make_let_fn(std::string name, std::vector<Formal> formals, TypeTag ret,
                           ExprPtr fn_body, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kLetFn;
  e->name = std::move(name);
  e->formals = std::move(formals);
  e->decl_type = ret;
  e->type = body->type;
  e->kids = {std::move(fn_body), std::move(body)};
  return e;
}

inline TypeTag join_types(TypeTag a, TypeTag b) { return a == b ? a : type_class(a); }

inline ExprPtr make_if(ExprPtr c, ExprPtr t, ExprPtr f) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kIf;
  e->type = join_types(t->type, f->type);
  e->kids = {std::move(c), std::move(t), std::move(f)};
  return e;
}

inline ExprPtr make_recur(TypeTag ret, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kRecur;
  e->type = ret;
  e->kids = std::move(args);
  return e;
}

// Shallow copy with a replaced child list; used for path-copying rewrites.
inline ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids) {
  auto c = std::make_shared<Expr>(e);
  c->kids = std::move(kids);
  if (c->kind == ExprKind::kLetVal || c->kind == ExprKind::kLetFn) c->type = c->kids[1]->type;
  if (c->kind == ExprKind::kIf) c->type = join_types(c->kids[1]->type, c->kids[2]->type);
  return c;
}

// ---------------------------------------------------------------------------
// Structural queries.

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.type != b.type || a.kids.size() != b.kids.size()) return false;
  switch (a.kind) {
    case ExprKind::kConst:
      if (a.value != b.value) return false;
      break;
    case ExprKind::kVar:
    case ExprKind::kCall:
      if (a.name != b.name) return false;
      break;
    case ExprKind::kPrimApp:
      if (a.prim != b.prim) return false;
      break;
    case ExprKind::kLetVal:
      if (a.name != b.name || a.decl_type != b.decl_type) return false;
      break;
    case ExprKind::kLetFn:
      if (a.name != b.name || a.decl_type != b.decl_type || a.formals != b.formals) return false;
      break;
    case ExprKind::kIf:
    case ExprKind::kRecur:
      break;
  }
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!structurally_equal(*a.kids[i], *b.kids[i])) return false;
  return true;
}

inline bool structurally_equal(const Program& a, const Program& b) {
  return a.formals == b.formals && a.ret == b.ret && structurally_equal(*a.body, *b.body);
}

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& k : e.kids) n += node_count(*k);
  return n;
}

// Depth of the deepest node, the root being depth 0.
inline int expr_depth(const Expr& e) {
  int d = 0;
  for (const auto& k : e.kids) d = std::max(d, 1 + expr_depth(*k));
  return d;
}

// Path of child indices from the program body.
using Path = std::vector<uint32_t>;

inline const Expr& expr_at(const Expr& root, const Path& path) {
  const Expr* e = &root;
  for (uint32_t i : path) e = e->kids.at(i).get();
  return *e;
}

inline ExprPtr replace_subtree(const ExprPtr& root, const Path& path, std::size_t pos,
                               ExprPtr replacement) {
  if (pos == path.size()) return replacement;
  std::vector<ExprPtr> kids = root->kids;
  kids.at(path[pos]) = replace_subtree(kids[path[pos]], path, pos + 1, std::move(replacement));
  return with_kids(*root, std::move(kids));
}

inline Program replace_at(const Program& p, const Path& path, ExprPtr replacement) {
  Program out = p;
  out.body = replace_subtree(p.body, path, 0, std::move(replacement));
  return out;
}

}  // namespace sampler_smith

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


// S-expression surface syntax for programs (`.psmp` files).
//
//   program := (fn [formal*] expr) | (fn ^type [formal*] expr)
//   formal  := name | ^type name
//   expr    := number | true | false | pi | name
//            | (prim expr*) | (name expr*) | (recur expr*)
//            | (if expr expr expr)
//            | (let [binding+] expr)
//   binding := name expr | ^type name expr | name (fn [formal*] expr)
//
// `lambda` is accepted for `fn` and `(...)` for argument vectors. `;` starts a
// comment. A `^type` hint is printed only where it differs from the inferred
// type (procedure return types are written whenever they are not Real), so
// printing is canonical: single spaces, one binding per `let`.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sampler_smith/expr.hpp"
#include "sampler_smith/rng.hpp"
#include "sampler_smith/scope.hpp"
#include "sampler_smith/typecheck.hpp"

namespace sampler_smith {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// ---------------------------------------------------------------------------
// Printing

// Shortest text that reads back to the same double, always with a '.' or
// exponent so it is visibly real.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline void print_hint(std::string& out, TypeTag t) {
  out += '^';
  out += type_name(t);
  out += ' ';
}

// Int is never inferred, so it is always written out.
inline bool needs_hint(TypeTag declared, TypeTag inferred) {
  return declared != inferred || declared == TypeTag::kInt;
}

// A procedure whose body's type comes only from `recur` could be read back as
// Real, so non-Real return types are always written out.
inline bool needs_return_hint(TypeTag declared, TypeTag inferred) {
  return needs_hint(declared, inferred) || declared != TypeTag::kReal;
}

inline void print_formals(std::string& out, const std::vector<Formal>& formals) {
  out += '[';
  for (std::size_t i = 0; i < formals.size(); ++i) {
    if (i) out += ' ';
    if (formals[i].type != TypeTag::kReal) print_hint(out, formals[i].type);
    out += formals[i].name;
  }
  out += ']';
}

inline void print_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case ExprKind::kConst:
      if (e.type == TypeTag::kBool)
        out += e.value != 0.0 ? "true" : "false";
      else
        out += format_real(e.value);
      return;
    case ExprKind::kVar:
      out += e.name;
      return;
    case ExprKind::kPrimApp:
    case ExprKind::kCall:
    case ExprKind::kRecur:
      out += '(';
      if (e.kind == ExprKind::kPrimApp)
        out += prim_info(e.prim).name;
      else if (e.kind == ExprKind::kCall)
        out += e.name;
      else
        out += "recur";
      for (const auto& k : e.kids) {
        out += ' ';
        print_expr(out, *k);
      }
      out += ')';
      return;
    case ExprKind::kIf:
      out += "(if ";
      print_expr(out, e.kid(0));
      out += ' ';
      print_expr(out, e.kid(1));
      out += ' ';
      print_expr(out, e.kid(2));
      out += ')';
      return;
    case ExprKind::kLetVal:
      out += "(let [";
      if (needs_hint(e.decl_type, e.kid(0).type)) print_hint(out, e.decl_type);
      out += e.name;
      out += ' ';
      print_expr(out, e.kid(0));
      out += "] ";
      print_expr(out, e.kid(1));
      out += ')';
      return;
    case ExprKind::kLetFn:
      out += "(let [";
      out += e.name;
      out += " (fn ";
      if (needs_return_hint(e.decl_type, e.kid(0).type)) print_hint(out, e.decl_type);
      print_formals(out, e.formals);
      out += ' ';
      print_expr(out, e.kid(0));
      out += ")] ";
      print_expr(out, e.kid(1));
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string print_expr(const Expr& e) {
  std::string out;
  detail::print_expr(out, e);
  return out;
}

inline std::string print_program(const Program& p) {
  std::string out = "(fn ";
  if (detail::needs_return_hint(p.ret, p.body->type)) detail::print_hint(out, p.ret);
  detail::print_formals(out, p.formals);
  out += ' ';
  detail::print_expr(out, *p.body);
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct SExpr {
  enum class Kind { kAtom, kList, kVector } kind = Kind::kAtom;
  std::string atom;
  std::vector<SExpr> items;
  std::optional<TypeTag> hint;
  int line = 1;
  int col = 1;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  int line() const { return line_; }
  int column() const { return col_; }

  SExpr read() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(line_, col_, "unexpected end of input");
    const int line = line_, col = col_;
    char c = text_[pos_];
    if (c == '^') {
      advance();
      SExpr type_atom = read();
      if (type_atom.kind != SExpr::Kind::kAtom) throw ParseError(line, col, "type hint must be a name");
      auto t = parse_type_name(type_atom.atom);
      if (!t) throw ParseError(type_atom.line, type_atom.col, "unknown type '" + type_atom.atom + "'");
      SExpr target = read();
      if (target.hint) throw ParseError(line, col, "duplicate type hint");
      target.hint = *t;
      return target;
    }
    if (c == '(' || c == '[') {
      const char close = c == '(' ? ')' : ']';
      advance();
      SExpr list;
      list.kind = c == '(' ? SExpr::Kind::kList : SExpr::Kind::kVector;
      list.line = line;
      list.col = col;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError(line, col, std::string("unclosed '") + c + "'");
        if (text_[pos_] == close) {
          advance();
          return list;
        }
        if (text_[pos_] == ')' || text_[pos_] == ']')
          throw ParseError(line_, col_, std::string("mismatched '") + text_[pos_] + "'");
        list.items.push_back(read());
      }
    }
    if (c == ')' || c == ']') throw ParseError(line, col, std::string("unexpected '") + c + "'");
    SExpr atom;
    atom.line = line;
    atom.col = col;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) {
      atom.atom += text_[pos_];
      advance();
    }
    return atom;
  }

 private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == '[' || c == ']' || c == ';' || c == '^' || c == ',' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline bool is_keyword(std::string_view s) {
  return s == "fn" || s == "lambda" || s == "let" || s == "if" || s == "recur" || s == "true" ||
         s == "false" || s == "pi" || prim_by_name(s).has_value();
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  const char c = s[0];
  if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) return std::nullopt;
  if (s == "-" || s == "+") return std::nullopt;
  std::string_view body = s[0] == '+' ? s.substr(1) : s;
  double v = 0.0;
  auto res = std::from_chars(body.data(), body.data() + body.size(), v);
  if (res.ec != std::errc() || res.ptr != body.data() + body.size()) return std::nullopt;
  return v;
}

class Builder {
 public:
  std::vector<Formal> formals(const SExpr& v) {
    if (v.kind == SExpr::Kind::kAtom) throw ParseError(v.line, v.col, "expected argument vector");
    std::vector<Formal> out;
    for (const auto& a : v.items) {
      if (a.kind != SExpr::Kind::kAtom) throw ParseError(a.line, a.col, "expected argument name");
      check_name(a);
      for (const auto& f : out)
        if (f.name == a.atom) throw ParseError(a.line, a.col, "duplicate argument '" + a.atom + "'");
      out.push_back({a.atom, a.hint.value_or(TypeTag::kReal)});
    }
    return out;
  }

  // `required` is empty where any type is allowed (an unannotated let binding).
  ExprPtr expr(const SExpr& s, std::optional<TypeTag> required, const GenContext& ctx) {
    ExprPtr e = build(s, required, ctx);
    if (required && !same_class(e->type, *required))
      throw ParseError(s.line, s.col, "expected " + std::string(type_name(*required)) + " expression, found " +
                                          std::string(type_name(e->type)));
    return e;
  }

 private:
  static void check_name(const SExpr& a) {
    if (is_keyword(a.atom) || parse_number(a.atom))
      throw ParseError(a.line, a.col, "'" + a.atom + "' cannot be used as a name");
  }

  ExprPtr build(const SExpr& s, std::optional<TypeTag> required, const GenContext& ctx) {
    if (s.kind == SExpr::Kind::kVector) throw ParseError(s.line, s.col, "unexpected '['");
    if (s.kind == SExpr::Kind::kAtom) return atom(s, ctx);
    if (s.items.empty()) throw ParseError(s.line, s.col, "empty application");
    const SExpr& head = s.items[0];
    if (head.kind != SExpr::Kind::kAtom) throw ParseError(head.line, head.col, "expected operator name");
    const std::string& op = head.atom;
    GenContext kid_ctx = ctx;
    kid_ctx.depth = ctx.depth + 1;
    if (op == "if") {
      if (s.items.size() != 4) throw ParseError(s.line, s.col, "if takes 3 arguments");
      auto c = expr(s.items[1], TypeTag::kBool, kid_ctx);
      auto t = expr(s.items[2], required, kid_ctx);
      auto f = expr(s.items[3], required, kid_ctx);
      if (!same_class(t->type, f->type)) throw ParseError(s.line, s.col, "if branches differ in type");
      return make_if(std::move(c), std::move(t), std::move(f));
    }
    if (op == "let") return let(s, 1, required, ctx);
    if (op == "fn" || op == "lambda") throw ParseError(s.line, s.col, "fn is only allowed in a let binding");
    std::vector<TypeTag> arg_types;
    TypeTag result = TypeTag::kReal;
    std::optional<Prim> prim;
    if (op == "recur") {
      if (!ctx.enclosing) throw ParseError(head.line, head.col, "recur outside of a procedure");
      arg_types = ctx.enclosing->args;
      result = ctx.enclosing->ret;
    } else if ((prim = prim_by_name(op))) {
      arg_types.assign(prim_info(*prim).arity, kPrimArgType);
      result = prim_info(*prim).result;
    } else {
      const ScopeEntry* p = ctx.scope.lookup(op);
      if (!p) throw ParseError(head.line, head.col, "unknown procedure '" + op + "'");
      if (!p->is_proc) throw ParseError(head.line, head.col, "'" + op + "' is not a procedure");
      arg_types = p->args;
      result = p->type;
    }
    if (s.items.size() - 1 != arg_types.size())
      throw ParseError(s.line, s.col, "'" + op + "' expects " + std::to_string(arg_types.size()) +
                                          " arguments, got " + std::to_string(s.items.size() - 1));
    std::vector<ExprPtr> args;
    for (std::size_t i = 0; i < arg_types.size(); ++i) args.push_back(expr(s.items[i + 1], arg_types[i], kid_ctx));
    if (op == "recur") return make_recur(result, std::move(args));
    if (prim) return make_prim(*prim, std::move(args));
    return make_call(op, result, std::move(args));
  }

  ExprPtr atom(const SExpr& s, const GenContext& ctx) {
    if (s.atom == "true") return make_bool(true);
    if (s.atom == "false") return make_bool(false);
    if (s.atom == "pi") return make_real(kPi);
    if (auto v = parse_number(s.atom)) return make_real(*v);
    const ScopeEntry* e = ctx.scope.lookup(s.atom);
    if (!e) throw ParseError(s.line, s.col, "unbound variable '" + s.atom + "'");
    if (e->is_proc) throw ParseError(s.line, s.col, "procedure '" + s.atom + "' used as a value");
    return make_var(s.atom, e->type);
  }

  // (let [b1 e1 b2 e2 ...] body) desugars to nested single-binding lets.
  ExprPtr let(const SExpr& s, std::size_t binding, std::optional<TypeTag> required, const GenContext& ctx) {
    if (s.items.size() != 3) throw ParseError(s.line, s.col, "let takes a binding vector and a body");
    const SExpr& bindings = s.items[1];
    if (bindings.kind != SExpr::Kind::kVector || bindings.items.empty() || bindings.items.size() % 2 != 0)
      throw ParseError(bindings.line, bindings.col, "let bindings must be name/expression pairs");
    const std::size_t idx = 2 * (binding - 1);
    if (idx >= bindings.items.size()) return expr(s.items[2], required, ctx);
    const SExpr& name = bindings.items[idx];
    const SExpr& value = bindings.items[idx + 1];
    if (name.kind != SExpr::Kind::kAtom) throw ParseError(name.line, name.col, "expected binding name");
    check_name(name);
    GenContext kid_ctx = ctx;
    kid_ctx.depth = ctx.depth + 1;
    const bool is_fn = value.kind == SExpr::Kind::kList && !value.items.empty() &&
                       value.items[0].kind == SExpr::Kind::kAtom &&
                       (value.items[0].atom == "fn" || value.items[0].atom == "lambda");
    if (is_fn) {
      if (name.hint) throw ParseError(name.line, name.col, "type hints on procedures go on the argument vector");
      if (value.items.size() != 3) throw ParseError(value.line, value.col, "fn takes an argument vector and a body");
      auto formals_v = formals(value.items[1]);
      GenContext fn_ctx = kid_ctx;
      ProcSig sig{name.atom, {}, TypeTag::kReal};
      for (const auto& f : formals_v) {
        fn_ctx.scope.push_var(f.name, f.type);
        sig.args.push_back(f.type);
      }
      ExprPtr fn_body;
      if (value.items[1].hint) {
        sig.ret = *value.items[1].hint;
        fn_ctx.enclosing = sig;
        fn_body = expr(value.items[2], sig.ret, fn_ctx);
      } else {
        // Return type is the body's type, needed before the body is built when
        // the body recurs; infer it from a first pass without recur support.
        sig.ret = infer_fn_type(value.items[2], fn_ctx, sig);
        fn_ctx.enclosing = sig;
        fn_body = expr(value.items[2], sig.ret, fn_ctx);
      }
      GenContext body_ctx = kid_ctx;
      body_ctx.scope.push_proc(sig);
      ExprPtr body = let(s, binding + 1, required, body_ctx);
      return make_let_fn(name.atom, std::move(formals_v), sig.ret, std::move(fn_body), std::move(body));
    }
    ExprPtr bound = expr(value, name.hint, kid_ctx);
    const TypeTag bound_type = name.hint.value_or(bound->type);
    GenContext body_ctx = kid_ctx;
    body_ctx.scope.push_var(name.atom, bound_type);
    ExprPtr body = let(s, binding + 1, required, body_ctx);
    return make_let_val(name.atom, bound_type, std::move(bound), std::move(body));
  }

  // Type of a procedure body whose return type is not annotated. Tries Real
  // then Bool as the recur result type and keeps the one that is consistent.
  TypeTag infer_fn_type(const SExpr& body, const GenContext& ctx, ProcSig sig) {
    for (TypeTag t : {TypeTag::kReal, TypeTag::kBool}) {
      GenContext c = ctx;
      sig.ret = t;
      c.enclosing = sig;
      try {
        ExprPtr e = build(body, t, c);
        if (same_class(e->type, t)) return e->type;
      } catch (const ParseError&) {
      }
    }
    GenContext c = ctx;
    sig.ret = TypeTag::kReal;
    c.enclosing = sig;
    return build(body, TypeTag::kReal, c)->type;  // rethrows the real error
  }
};

inline Program build_program(const SExpr& s) {
  if (s.kind != SExpr::Kind::kList || s.items.empty() || s.items[0].kind != SExpr::Kind::kAtom ||
      (s.items[0].atom != "fn" && s.items[0].atom != "lambda"))
    throw ParseError(s.line, s.col, "expected (fn [args] body)");
  if (s.items.size() != 3) throw ParseError(s.line, s.col, "fn takes an argument vector and a body");
  Builder b;
  Program p;
  p.formals = b.formals(s.items[1]);
  GenContext ctx = root_context(p.formals, s.items[1].hint.value_or(TypeTag::kReal));
  if (s.items[1].hint) {
    p.ret = *s.items[1].hint;
    p.body = b.expr(s.items[2], p.ret, ctx);
  } else {
    // Unannotated programs return whatever the body produces; a recurring body
    // is assumed Real first, then Bool.
    std::optional<ParseError> first_error;
    for (TypeTag t : {TypeTag::kReal, TypeTag::kBool}) {
      ctx.enclosing->ret = t;
      try {
        p.body = b.expr(s.items[2], t, ctx);
        p.ret = p.body->type;
        break;
      } catch (const ParseError& e) {
        if (!first_error) first_error = e;
      }
    }
    if (!p.body) throw *first_error;
  }
  type_check(p);
  return p;
}

}  // namespace detail

inline Program parse_program(std::string_view text) {
  detail::Reader r(text);
  detail::SExpr s = r.read();
  if (!r.at_end()) throw ParseError(r.line(), r.column(), "trailing input after program");
  return detail::build_program(s);
}

// A file may hold several programs one after another.
inline std::vector<Program> parse_programs(std::string_view text) {
  detail::Reader r(text);
  std::vector<Program> out;
  while (!r.at_end()) out.push_back(detail::build_program(r.read()));
  return out;
}

}  // namespace sampler_smith

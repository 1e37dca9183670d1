#ifndef EFFROW_CHECK_HPP
#define EFFROW_CHECK_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrow/env.hpp"
#include "effrow/expr.hpp"
#include "effrow/infer.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"

namespace effrow {

struct check_error : error {
  check_error(const std::string& rule_, const std::string& msg)
      : error("(" + rule_ + ") " + msg), rule(rule_) {}
  std::string rule;
};

// One-sided matching: finds a substitution over `bindable` pattern variables
// making the pattern equal to the target (modulo row equivalence).
namespace detail {

inline bool match_rec(const Type& pattern, const Type& target,
                      const std::set<int>& bindable,
                      std::map<int, Type>& binding);

inline bool match_row(const Type& pattern, const Type& target,
                      const std::set<int>& bindable,
                      std::map<int, Type>& binding) {
  auto [pls, ptail] = split_row(pattern);
  auto [tls, ttail] = split_row(target);
  std::vector<bool> used(tls.size(), false);
  for (const Type& pl : pls) {
    bool found = false;
    for (std::size_t j = 0; j < tls.size(); ++j) {
      if (used[j] || !label_eq(pl, tls[j])) continue;
      used[j] = true;
      if (!match_rec(pl, tls[j], bindable, binding)) return false;
      found = true;
      break;
    }
    if (!found) return false;
  }
  std::vector<Type> rest;
  for (std::size_t j = 0; j < tls.size(); ++j)
    if (!used[j]) rest.push_back(tls[j]);
  if (ptail.is_var() && bindable.count(ptail.var_id()))
    return match_rec(ptail, make_row(rest, ttail), bindable, binding);
  if (!rest.empty()) return false;
  return match_rec(ptail, ttail, bindable, binding);
}

inline bool match_rec(const Type& pattern, const Type& target,
                      const std::set<int>& bindable,
                      std::map<int, Type>& binding) {
  if (pattern.is_var() && bindable.count(pattern.var_id())) {
    if (!(pattern.kind() == target.kind())) return false;
    auto it = binding.find(pattern.var_id());
    if (it != binding.end()) return type_eq_modulo_rows(it->second, target);
    binding.emplace(pattern.var_id(), target);
    return true;
  }
  if (pattern.is_var())
    return target.is_var() && target.var_id() == pattern.var_id();
  if (is_row(pattern) && is_row(target) &&
      (pattern.is_app(TypeCon::row_extend) ||
       target.is_app(TypeCon::row_extend)))
    return match_row(pattern, target, bindable, binding);
  if (pattern.tag() != target.tag()) return false;
  switch (pattern.tag()) {
    case Type::Tag::var: return pattern.var_id() == target.var_id();
    case Type::Tag::con: return pattern.head() == target.head();
    case Type::Tag::app: {
      if (pattern.head() != target.head()) return false;
      for (std::size_t i = 0; i < pattern.args().size(); ++i)
        if (!match_rec(pattern.args()[i], target.args()[i], bindable, binding))
          return false;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline bool match_types(const Type& pattern, const Type& target,
                        const std::set<int>& bindable,
                        std::map<int, Type>& binding) {
  return detail::match_rec(pattern, target, bindable, binding);
}

// Instance check: exists an instantiation of the scheme equal to t.
inline bool instance_of(const Scheme& s, const Type& t) {
  std::set<int> bindable;
  for (auto& [id, k] : s.vars) bindable.insert(id);
  std::map<int, Type> binding;
  return match_types(s.body, t, bindable, binding);
}

// A validated derivation in the declarative system.
struct Derivation {
  std::string rule;
  Expr expr;
  Type type;
  Type effect;
  std::vector<Derivation> premises;
};

namespace detail {

// Rows obtainable by removing st labels from `row`, original first. The
// st-extend rule lets a derivation assume extra stateful effects, so checking
// a node against a target may first strip them.
inline std::vector<Type> st_strip_variants(const Type& row) {
  auto [labels, tail] = split_row(row);
  std::vector<std::size_t> st_positions;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (label_head(labels[i]) == TypeCon::st) st_positions.push_back(i);
  std::vector<Type> out;
  std::size_t n = st_positions.size();
  if (n > 4) n = 4;
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    std::set<std::size_t> removed;
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::size_t(1) << b)) removed.insert(st_positions[b]);
    std::vector<Type> kept;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!removed.count(i)) kept.push_back(labels[i]);
    out.push_back(make_row(kept, tail));
  }
  return out;
}

class Checker {
 public:
  explicit Checker(Session& fresh) : fresh_(fresh) {}

  Derivation check(const Env& env, const Expr& e, const Type& type,
                   const Type& eff, const Elab& guide) {
    switch (e.tag()) {
      case Expr::Tag::var: {
        const Env::Binding* b = env.lookup(e.name());
        if (!b) throw check_error("var", "unbound variable " + e.name());
        if (!instance_of(b->check, type))
          throw check_error("var/inst", "type of " + e.name() +
                                            " is not an instance of its scheme");
        return leaf("var", e, type, eff);
      }
      case Expr::Tag::con: {
        if (!instance_of(typeof_const(e.con_id()), type))
          throw check_error("const",
                            std::string("type is not an instance of typeof(") +
                                term_con_name(e.con_id()) + ")");
        return leaf("const", e, type, eff);
      }
      case Expr::Tag::refname: {
        const Type* rt = env.lookup_ref(e.ref_id());
        if (!rt) throw check_error("var", "unbound reference");
        if (!type_eq_modulo_rows(*rt, type))
          throw check_error("var", "reference type mismatch");
        return leaf("var", e, type, eff);
      }
      case Expr::Tag::passign: {
        const Type* rt = env.lookup_ref(e.ref_id());
        if (!rt) throw check_error("var", "unbound reference");
        if (!type.is_app(TypeCon::fn))
          throw check_error("write", "partial assignment must have a function type");
        const Type& h = rt->args()[0];
        const Type& v = rt->args()[1];
        if (!type_eq_modulo_rows(type.args()[0], v) ||
            !type.args()[2].is_con(TypeCon::unit))
          throw check_error("write", "partial assignment type mismatch");
        if (!row_has_st_of(type.args()[1], h))
          throw check_error("write",
                            "partial assignment effect lacks st on its heap");
        return leaf("write", e, type, eff);
      }
      case Expr::Tag::lam: {
        if (!type.is_app(TypeCon::fn))
          throw check_error("lam", "lambda checked at a non-function type");
        Env inner = env.with_lambda(e.name(), type.args()[0]);
        Derivation body = check(inner, e.kid(0), type.args()[2],
                                type.args()[1], child(guide, 0));
        return node("lam", e, type, eff, {std::move(body)});
      }
      case Expr::Tag::pcatch: {
        // catch e1 : (() -> eps t) -> eps t  with  e1 : t | <exn|eps>
        if (!type.is_app(TypeCon::fn))
          throw check_error("catch", "partial catch at a non-function type");
        const Type& handler = type.args()[0];
        const Type& eps = type.args()[1];
        const Type& t = type.args()[2];
        if (!handler.is_app(TypeCon::fn) ||
            !handler.args()[0].is_con(TypeCon::unit) ||
            !effect_eq(handler.args()[1], eps) ||
            !type_eq_modulo_rows(handler.args()[2], t))
          throw check_error("catch", "partial catch handler type mismatch");
        Derivation body =
            check(env, e.kid(0), t, t_row(t_exn(), eps), child(guide, 0));
        return node("catch", e, type, eff, {std::move(body)});
      }
      case Expr::Tag::pconst:
        return pconst_case(env, e, type, eff, guide);
      case Expr::Tag::app:
        return app_case(env, e, type, eff, guide);
      case Expr::Tag::let_:
        return let_case(env, e, type, eff, guide);
      case Expr::Tag::catch_:
        return catch_case(env, e, type, eff, guide);
      case Expr::Tag::run:
        return run_case(env, e, type, eff, guide);
      case Expr::Tag::heap:
        return heap_case(env, e, type, eff, guide);
      case Expr::Tag::bind:
        throw check_error("bind", "bind nodes must be desugared before checking");
    }
    throw check_error("?", "bad expression tag");
  }

 private:
  static Derivation leaf(const char* rule, const Expr& e, Type t, Type eff) {
    return Derivation{rule, e, std::move(t), std::move(eff), {}};
  }

  static Derivation node(const char* rule, const Expr& e, Type t, Type eff,
                         std::vector<Derivation> prem) {
    return Derivation{rule, e, std::move(t), std::move(eff), std::move(prem)};
  }

  static Elab child(const Elab& guide, std::size_t i) {
    if (!guide || i >= guide->children.size()) return nullptr;
    return guide->children[i];
  }

  static bool row_has_st_of(const Type& row, const Type& heap) {
    auto [labels, tail] = split_row(row);
    for (const Type& l : labels)
      if (l.is_app(TypeCon::st) && type_eq_modulo_rows(l.args()[0], heap))
        return true;
    return false;
  }

  Derivation app_case(const Env& env, const Expr& e, const Type& type,
                      const Type& eff, const Elab& guide) {
    Type arg_type;
    if (guide && guide->children.size() == 2) {
      arg_type = guide->children[1]->type;
    } else if (e.kid(1).is_con(TermCon::unit)) {
      arg_type = t_unit();
    } else if (e.kid(1).is_con(TermCon::lit)) {
      arg_type = t_int();
    } else {
      throw check_error("app", "application checking needs elaboration guidance");
    }
    std::string fail_msg = "no rule instance fits";
    for (const Type& ev : st_strip_variants(eff)) {
      Type fn_type = t_fn(arg_type, ev, type);
      try {
        Derivation f = check(env, e.kid(0), fn_type, ev, child(guide, 0));
        Derivation a = check(env, e.kid(1), arg_type, ev, child(guide, 1));
        return node("app", e, type, eff, {std::move(f), std::move(a)});
      } catch (const check_error& ce) {
        fail_msg = ce.what();
      }
    }
    throw check_error("app", fail_msg);
  }

  Derivation let_case(const Env& env, const Expr& e, const Type& type,
                      const Type& eff, const Elab& guide) {
    if (!guide || !guide->let_scheme)
      throw check_error("let", "let checking needs the generalized scheme");
    const Scheme& sigma = *guide->let_scheme;
    std::set<int> env_ftv = env.ftv();
    for (auto& [id, k] : sigma.vars)
      if (env_ftv.count(id))
        throw check_error("gen", "quantified variable occurs free in the environment");
    Derivation bound = check(env, e.kid(0), sigma.body, t_row_nil(), child(guide, 0));
    Env inner = env.with_let(e.name(), sigma, sigma);
    Derivation body = check(inner, e.kid(1), type, eff, child(guide, 1));
    return node("let", e, type, eff, {std::move(bound), std::move(body)});
  }

  Derivation catch_case(const Env& env, const Expr& e, const Type& type,
                        const Type& eff, const Elab& guide) {
    std::string fail_msg = "no rule instance fits";
    for (const Type& ev : st_strip_variants(eff)) {
      try {
        Derivation e1 = check(env, e.kid(0), type, t_row(t_exn(), ev),
                              child(guide, 0));
        Derivation e2 = check(env, e.kid(1), t_fn(t_unit(), ev, type), ev,
                              child(guide, 1));
        return node("catch", e, type, eff, {std::move(e1), std::move(e2)});
      } catch (const check_error& ce) {
        fail_msg = ce.what();
      }
    }
    throw check_error("catch", fail_msg);
  }

  Derivation run_case(const Env& env, const Expr& e, const Type& type,
                      const Type& eff, const Elab& guide) {
    // candidate heaps: st labels recorded for the body, plus a fresh one for
    // bodies that need no state at all
    std::vector<Type> candidates;
    if (guide && !guide->children.empty()) {
      auto [labels, tail] = split_row(guide->children[0]->effect);
      for (const Type& l : labels)
        if (l.is_app(TypeCon::st)) candidates.push_back(l.args()[0]);
    }
    candidates.push_back(fresh_.fresh_heap());
    std::set<int> banned = env.ftv();
    for (auto& [id, k] : ftv(type)) banned.insert(id);
    for (auto& [id, k] : ftv(eff)) banned.insert(id);
    std::string fail_msg = "no admissible heap variable";
    for (const Type& h : candidates) {
      if (!h.is_var() || banned.count(h.var_id())) continue;
      for (const Type& ev : st_strip_variants(eff)) {
        if (ftv_set(ev).count(h.var_id())) continue;
        try {
          Derivation body = check(env, e.kid(0), type, t_row(t_st(h), ev),
                                  child(guide, 0));
          return node("run", e, type, eff, {std::move(body)});
        } catch (const check_error& ce) {
          fail_msg = ce.what();
        }
      }
    }
    throw check_error("run", fail_msg);
  }

  Derivation heap_case(const Env& env, const Expr& e, const Type& type,
                       const Type& eff, const Elab& guide) {
    const Heap& heap = e.heap_bindings();
    // the bound heap is tied to the conclusion effect: <st<h>|eps>
    std::vector<Type> candidates;
    if (guide && guide->heap_type) candidates.push_back(*guide->heap_type);
    auto [labels, tail] = split_row(eff);
    for (const Type& l : labels)
      if (l.is_app(TypeCon::st)) candidates.push_back(l.args()[0]);
    std::string fail_msg = "conclusion effect lacks st on the bound heap";
    for (const Type& h : candidates) {
      if (!h.is_var() || !row_has_st_of(eff, h)) continue;
      std::vector<Type> value_types;
      if (guide && guide->heap_type && guide->heap_type->same(h) &&
          guide->heap_value_types.size() == heap.size()) {
        value_types = guide->heap_value_types;
      } else {
        try {
          Env solved = reference_env(heap, h, env, fresh_);
          for (auto& [r, v] : heap.bindings()) {
            const Type* rt = solved.lookup_ref(r);
            if (!rt) throw check_error("heap", "reference typing failed");
            value_types.push_back(rt->args()[1]);
          }
        } catch (const TypeError& te) {
          fail_msg = std::string("heap values are untypeable: ") + te.what();
          continue;
        }
      }
      Env inner = env;
      std::size_t i = 0;
      for (auto& [r, v] : heap.bindings())
        inner = inner.with_ref(r, t_ref(h, value_types[i++]));
      try {
        std::vector<Derivation> prems;
        i = 0;
        for (auto& [r, v] : heap.bindings()) {
          if (!is_value(v))
            throw check_error("heap", "heap bindings must be syntactic values");
          prems.push_back(
              check(inner, v, value_types[i], t_row_nil(), child(guide, i)));
          ++i;
        }
        prems.push_back(
            check(inner, e.kid(0), type, eff, child(guide, heap.size())));
        return node("heap", e, type, eff, std::move(prems));
      } catch (const check_error& ce) {
        fail_msg = ce.what();
      }
    }
    throw check_error("heap", fail_msg);
  }

  Derivation pconst_case(const Env& env, const Expr& e, const Type& type,
                         const Type& eff, const Elab& guide) {
    if (e.con_id() == TermCon::add && e.kids().size() == 1) {
      if (!type.is_app(TypeCon::fn) || !type.args()[0].is_con(TypeCon::int_) ||
          !type.args()[2].is_con(TypeCon::int_))
        throw check_error("const", "partial add must map int to int");
      Derivation v = check(env, e.kid(0), t_int(), t_row_nil(), child(guide, 0));
      return node("const", e, type, eff, {std::move(v)});
    }
    if (e.con_id() == TermCon::if0 && e.kids().size() == 1) {
      if (!type.is_app(TypeCon::fn) || !type.args()[2].is_app(TypeCon::fn))
        throw check_error("const", "partial if0 type mismatch");
      const Type& a1 = type.args()[0];
      const Type& inner = type.args()[2];
      if (!type_eq_modulo_rows(a1, inner.args()[0]) ||
          !type_eq_modulo_rows(a1, inner.args()[2]))
        throw check_error("const", "partial if0 branches disagree");
      Derivation v = check(env, e.kid(0), t_int(), t_row_nil(), child(guide, 0));
      return node("const", e, type, eff, {std::move(v)});
    }
    if (e.con_id() == TermCon::if0 && e.kids().size() == 2) {
      if (!type.is_app(TypeCon::fn) ||
          !type_eq_modulo_rows(type.args()[0], type.args()[2]))
        throw check_error("const", "partial if0 branches disagree");
      Derivation n0 = check(env, e.kid(0), t_int(), t_row_nil(), child(guide, 0));
      Derivation v = check(env, e.kid(1), type.args()[0], t_row_nil(),
                           child(guide, 1));
      return node("const", e, type, eff, {std::move(n0), std::move(v)});
    }
    throw check_error("const", "malformed partial constant");
  }

  Session& fresh_;
};

}  // namespace detail

// Validates a declarative derivation for e at the given type and effect,
// guided by elaboration annotations where the rules are not syntax directed.
inline Derivation check(const Env& env, const Expr& e, const Type& type,
                        const Type& eff, Session& fresh,
                        const Elab& guide = nullptr) {
  detail::Checker c(fresh);
  return c.check(env, desugar_binds(e), type, eff, guide);
}

}  // namespace effrow

#endif

#ifndef EFFROW_INFER_HPP
#define EFFROW_INFER_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "effrow/env.hpp"
#include "effrow/expr.hpp"
#include "effrow/print.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"
#include "effrow/unify.hpp"

namespace effrow {

struct TypeError : error {
  enum class Code {
    unbound_variable,
    unbound_reference,
    unification,
    run_escape,
    value_restriction,
    internal_form,
  };

  TypeError(Code c, const std::string& msg, SourceSpan sp = {},
            std::optional<UnifyFailure> f = std::nullopt)
      : error(msg), code(c), span(sp), failure(std::move(f)) {}

  Code code;
  SourceSpan span;
  std::optional<UnifyFailure> failure;
};

// Closed scheme for each term constant. The effects are open: every arrow
// carries its own quantified row variable.
inline const Scheme& typeof_const(TermCon c) {
  // scheme-local variable ids are negative so they can never collide with
  // session-supplied variables
  static const auto star = [](int i) { return Type::var(-i, Kind::star()); };
  static const auto rowv = [](int i) { return Type::var(-i, Kind::row()); };
  static const auto heapv = [](int i) { return Type::var(-i, Kind::heap()); };
  static const auto q = [](std::initializer_list<std::pair<int, Kind>> vs,
                           Type body) {
    std::vector<std::pair<int, Kind>> quant;
    for (auto& [i, k] : vs) quant.emplace_back(-i, k);
    return Scheme{std::move(quant), std::move(body)};
  };
  static const Kind S = Kind::star(), R = Kind::row(), H = Kind::heap();

  static const Scheme unit_s = Scheme::mono(t_unit());
  static const Scheme lit_s = Scheme::mono(t_int());
  static const Scheme inc_s = q({{1, R}}, t_fn(t_int(), rowv(1), t_int()));
  static const Scheme add_s =
      q({{1, R}, {2, R}},
        t_fn(t_int(), rowv(1), t_fn(t_int(), rowv(2), t_int())));
  static const Scheme if0_s =
      q({{1, S}, {2, R}, {3, R}, {4, R}},
        t_fn(t_int(), rowv(2),
             t_fn(star(1), rowv(3), t_fn(star(1), rowv(4), star(1)))));
  static const Scheme throw_s =
      q({{1, S}, {2, R}}, t_fn(t_unit(), t_row(t_exn(), rowv(2)), star(1)));
  static const Scheme ref_s =
      q({{1, H}, {2, S}, {3, R}},
        t_fn(star(2), t_row(t_st(heapv(1)), rowv(3)), t_ref(heapv(1), star(2))));
  static const Scheme read_s =
      q({{1, H}, {2, S}, {3, R}},
        t_fn(t_ref(heapv(1), star(2)),
             t_row(t_st(heapv(1)), t_row(t_div(), rowv(3))), star(2)));
  static const Scheme assign_s =
      q({{1, H}, {2, S}, {3, R}, {4, R}},
        t_fn(t_ref(heapv(1), star(2)), rowv(3),
             t_fn(star(2), t_row(t_st(heapv(1)), rowv(4)), t_unit())));
  static const Scheme fix_s = [] {
    Type f = t_fn(star(1), t_row(t_div(), rowv(3)), star(2));
    return q({{1, S}, {2, S}, {3, R}, {4, R}},
             t_fn(t_fn(f, rowv(4), f), rowv(4), f));
  }();

  switch (c) {
    case TermCon::unit: return unit_s;
    case TermCon::lit: return lit_s;
    case TermCon::inc:
    case TermCon::dec: return inc_s;
    case TermCon::add: return add_s;
    case TermCon::if0: return if0_s;
    case TermCon::throw_: return throw_s;
    case TermCon::ref: return ref_s;
    case TermCon::read: return read_s;
    case TermCon::assign: return assign_s;
    case TermCon::fix: return fix_s;
  }
  throw TypeError(TypeError::Code::internal_form, "unknown constant");
}

// gen(G,t) = forall (ftv t - ftv G). t, in first-occurrence order
inline Scheme generalize(const Env& env, const Type& t) {
  std::set<int> env_ftv = env.ftv();
  std::vector<std::pair<int, Kind>> quant;
  for (auto& [id, k] : ftv(t))
    if (!env_ftv.count(id)) quant.emplace_back(id, k);
  return Scheme{std::move(quant), t};
}

inline Type instantiate(const Scheme& s, Session& fresh) {
  if (s.vars.empty()) return s.body;
  Subst sub;
  for (auto& [id, k] : s.vars)
    sub = compose(Subst::single(id, k, fresh.fresh(k)), sub);
  return sub(s.body);
}

// Rewrites forall mu as. t1 -> <l1..lm|mu> t2 to forall as. t1 -> <l1..lm> t2
// when mu occurs nowhere else. Applied to let-bound schemes only.
inline Scheme close_type(const Scheme& s) {
  if (!s.body.is_app(TypeCon::fn)) return s;
  const Type& arg = s.body.args()[0];
  const Type& eff = s.body.args()[1];
  const Type& res = s.body.args()[2];
  auto [labels, tail] = split_row(eff);
  if (!tail.is_var()) return s;
  int mu = tail.var_id();
  bool quantified = false;
  for (auto& [id, k] : s.vars)
    if (id == mu) quantified = true;
  if (!quantified) return s;
  std::set<int> rest = ftv_set(arg);
  for (auto& [id, k] : ftv(res)) rest.insert(id);
  for (const Type& l : labels)
    for (auto& [id, k] : ftv(l)) rest.insert(id);
  if (rest.count(mu)) return s;
  std::vector<std::pair<int, Kind>> quant;
  for (auto& [id, k] : s.vars)
    if (id != mu) quant.emplace_back(id, k);
  return Scheme{std::move(quant),
                t_fn(arg, make_row(labels, t_row_nil()), res)};
}

// Reintroduces a fresh tail for each closed row on the arrow spine; applied
// when instantiating let-bound names.
inline Type open_type(const Type& t, Session& fresh) {
  if (!t.is_app(TypeCon::fn)) return t;
  const Type& arg = t.args()[0];
  const Type& eff = t.args()[1];
  const Type& res = t.args()[2];
  auto [labels, tail] = split_row(eff);
  Type eff2 = tail.is_con(TypeCon::row_empty)
                  ? make_row(labels, fresh.fresh_row())
                  : eff;
  return t_fn(arg, std::move(eff2), open_type(res, fresh));
}

// Expression annotated at every node with its final type and effect; the
// checker replays the derivation from these.
struct ElabNode;
using Elab = std::shared_ptr<ElabNode>;

struct ElabNode {
  Expr expr;
  Type type = t_unit();
  Type effect = t_row_nil();
  std::vector<Elab> children;
  std::optional<Scheme> let_scheme;       // generalization at a let binding
  std::optional<Type> heap_type;          // heap nodes: the heap's type
  std::vector<Type> heap_value_types;     // heap nodes: per-binding types
};

struct InferOptions {
  bool simplify = true;        // close let-bound schemes, open at use
  bool allow_internal = false; // accept heap forms, references, partials
};

struct InferResult {
  Subst subst;
  Type type;
  Type effect;
  Elab elab;
};

struct RefEnvResult {
  Env env;
  Subst subst;
  Type heap_type;
  std::vector<Type> value_types;
  std::vector<Elab> value_elabs;
};

namespace detail {

class Inferencer {
 public:
  Inferencer(Session& fresh, InferOptions opt) : fresh_(fresh), opt_(opt) {}

  struct Out {
    Subst subst;
    Type type;
    Type effect;
    Elab elab;
  };

  Out rec(const Env& env, const Expr& e) {
    switch (e.tag()) {
      case Expr::Tag::var: return var_case(env, e);
      case Expr::Tag::con: return con_case(env, e);
      case Expr::Tag::lam: return lam_case(env, e);
      case Expr::Tag::app: return app_case(env, e);
      case Expr::Tag::let_: return let_case(env, e);
      case Expr::Tag::catch_: return catch_case(env, e);
      case Expr::Tag::run: return run_case(env, e);
      case Expr::Tag::bind:
        throw TypeError(TypeError::Code::internal_form,
                        "bind nodes must be desugared before inference",
                        e.span());
      case Expr::Tag::heap: return heap_case(env, e);
      case Expr::Tag::refname: return refname_case(env, e);
      case Expr::Tag::pcatch: return pcatch_case(env, e);
      case Expr::Tag::passign: return passign_case(env, e);
      case Expr::Tag::pconst: return pconst_case(env, e);
    }
    throw TypeError(TypeError::Code::internal_form, "bad expression tag",
                    e.span());
  }

  RefEnvResult heap_env(const Env& env, const Heap& heap, const Type& h) {
    Env cur = env;
    std::vector<Type> placeholders;
    for (auto& [r, v] : heap.bindings()) {
      Type a = fresh_.fresh_star();
      placeholders.push_back(a);
      cur = cur.with_ref(r, t_ref(h, a));
    }
    Subst acc;
    std::vector<Elab> elabs;
    std::size_t i = 0;
    for (auto& [r, v] : heap.bindings()) {
      if (!is_value(v))
        throw TypeError(TypeError::Code::internal_form,
                        "heap bindings must be syntactic values", v.span());
      Out vo = rec(cur.apply(acc), v);
      acc = compose(vo.subst, acc);
      Subst se = unify_in(v, vo.effect, t_row_nil());
      acc = compose(se, acc);
      Subst sv = unify_in(v, acc(placeholders[i]), se(vo.type));
      acc = compose(sv, acc);
      elabs.push_back(vo.elab);
      ++i;
    }
    std::vector<Type> value_types;
    for (const Type& p : placeholders) value_types.push_back(acc(p));
    return RefEnvResult{cur.apply(acc), acc, acc(h), std::move(value_types),
                        std::move(elabs)};
  }

 private:
  Subst unify_in(const Expr& at, const Type& a, const Type& b) {
    try {
      return unify(a, b, fresh_);
    } catch (const unify_error& ue) {
      NameTable names;
      throw TypeError(TypeError::Code::unification,
                      "cannot unify " + print_type(ue.failure.left, names) +
                          " with " + print_type(ue.failure.right, names) +
                          " (" + reason_name(ue.failure.reason) + ")",
                      at.span(), ue.failure);
    }
  }

  Elab node(const Expr& e, Type t, Type eff, std::vector<Elab> kids = {}) {
    auto n = std::make_shared<ElabNode>();
    n->expr = e;
    n->type = std::move(t);
    n->effect = std::move(eff);
    n->children = std::move(kids);
    return n;
  }

  Out var_case(const Env& env, const Expr& e) {
    const Env::Binding* b = env.lookup(e.name());
    if (!b)
      throw TypeError(TypeError::Code::unbound_variable,
                      "unbound variable '" + e.name() + "'", e.span());
    Type t = instantiate(b->use, fresh_);
    if (opt_.simplify && b->origin == BindOrigin::let_bound)
      t = open_type(t, fresh_);
    Type eff = fresh_.fresh_row();
    return Out{Subst(), t, eff, node(e, t, eff)};
  }

  Out con_case(const Env&, const Expr& e) {
    Type t = instantiate(typeof_const(e.con_id()), fresh_);
    Type eff = fresh_.fresh_row();
    return Out{Subst(), t, eff, node(e, t, eff)};
  }

  Out lam_case(const Env& env, const Expr& e) {
    Type a = fresh_.fresh_star();
    Out body = rec(env.with_lambda(e.name(), a), e.kid(0));
    Type t = t_fn(body.subst(a), body.effect, body.type);
    Type eff = fresh_.fresh_row();
    return Out{body.subst, t, eff, node(e, t, eff, {body.elab})};
  }

  Out app_case(const Env& env, const Expr& e) {
    Out f = rec(env, e.kid(0));
    Out a = rec(env.apply(f.subst), e.kid(1));
    Type res = fresh_.fresh_star();
    Subst s3 = unify_in(e, a.subst(f.type), t_fn(a.type, a.effect, res));
    Subst s4 = unify_in(e, s3(a.subst(f.effect)), s3(a.effect));
    Subst total = compose(s4, compose(s3, compose(a.subst, f.subst)));
    Type t = s4(s3(res));
    Type eff = s4(s3(a.effect));
    return Out{total, t, eff, node(e, t, eff, {f.elab, a.elab})};
  }

  Out let_case(const Env& env, const Expr& e) {
    Out bound = rec(env, e.kid(0));
    Subst s2;
    try {
      s2 = unify(bound.effect, t_row_nil(), fresh_);
    } catch (const unify_error& ue) {
      NameTable names;
      throw TypeError(
          TypeError::Code::value_restriction,
          "cannot generalize '" + e.name() +
              "': the bound expression has effect " +
              print_type(bound.effect, names) +
              " which does not unify with <> (value restriction)",
          e.span(), ue.failure);
    }
    Env env2 = env.apply(compose(s2, bound.subst));
    Scheme gen = generalize(env2, s2(bound.type));
    Scheme use = opt_.simplify ? close_type(gen) : gen;
    Out body = rec(env2.with_let(e.name(), use, gen), e.kid(1));
    Subst total = compose(body.subst, compose(s2, bound.subst));
    Elab n = node(e, body.type, body.effect, {bound.elab, body.elab});
    n->let_scheme = gen;
    return Out{total, body.type, body.effect, n};
  }

  Out catch_case(const Env& env, const Expr& e) {
    Out e1 = rec(env, e.kid(0));
    Out e2 = rec(env.apply(e1.subst), e.kid(1));
    Subst s3 = unify_in(e, e2.subst(e1.effect), t_row(t_exn(), e2.effect));
    Subst s4 = unify_in(
        e, s3(e2.type), t_fn(t_unit(), s3(e2.effect), s3(e2.subst(e1.type))));
    Subst total = compose(s4, compose(s3, compose(e2.subst, e1.subst)));
    Type t = s4(s3(e2.subst(e1.type)));
    Type eff = s4(s3(e2.effect));
    return Out{total, t, eff, node(e, t, eff, {e1.elab, e2.elab})};
  }

  Out run_case(const Env& env, const Expr& e) {
    Out body = rec(env, e.kid(0));
    Type xi = fresh_.fresh_heap();
    Type mu = fresh_.fresh_row();
    Subst s2 = unify_in(e, body.effect, t_row(t_st(xi), mu));
    Type heap = s2(xi);
    Type t = s2(body.type);
    Type eff = s2(mu);
    Env env2 = env.apply(compose(s2, body.subst));
    NameTable names;
    if (!heap.is_var())
      throw TypeError(TypeError::Code::run_escape,
                      "run: the local heap resolved to a concrete heap " +
                          print_type(heap, names),
                      e.span());
    std::set<int> escape = env2.ftv();
    for (auto& [id, k] : ftv(t)) escape.insert(id);
    for (auto& [id, k] : ftv(eff)) escape.insert(id);
    if (escape.count(heap.var_id()))
      throw TypeError(TypeError::Code::run_escape,
                      "run: the local heap " + print_type(heap, names) +
                          " escapes into the result type " + print_type(t, names),
                      e.span());
    Subst total = compose(s2, body.subst);
    return Out{total, t, eff, node(e, t, eff, {body.elab})};
  }

  Out heap_case(const Env& env, const Expr& e) {
    Type h = fresh_.fresh_heap();
    RefEnvResult re = heap_env(env, e.heap_bindings(), h);
    Out body = rec(re.env, e.kid(0));
    Subst acc = compose(body.subst, re.subst);
    Type mu = fresh_.fresh_row();
    Subst sr = unify_in(e, body.effect, t_row(t_st(acc(h)), mu));
    acc = compose(sr, acc);
    Type t = sr(body.type);
    Type eff = sr(body.effect);
    std::vector<Elab> kids = re.value_elabs;
    kids.push_back(body.elab);
    Elab n = node(e, t, eff, std::move(kids));
    n->heap_type = acc(h);
    for (const Type& vt : re.value_types) n->heap_value_types.push_back(sr(vt));
    return Out{acc, t, eff, n};
  }

  Out refname_case(const Env& env, const Expr& e) {
    const Type* t = env.lookup_ref(e.ref_id());
    if (!t)
      throw TypeError(TypeError::Code::unbound_reference,
                      "unbound reference", e.span());
    Type eff = fresh_.fresh_row();
    return Out{Subst(), *t, eff, node(e, *t, eff)};
  }

  Out pcatch_case(const Env& env, const Expr& e) {
    Out body = rec(env, e.kid(0));
    Type mu = fresh_.fresh_row();
    Subst s2 = unify_in(e, body.effect, t_row(t_exn(), mu));
    Type handler = t_fn(t_unit(), s2(mu), s2(body.type));
    Type t = t_fn(handler, s2(mu), s2(body.type));
    Type eff = fresh_.fresh_row();
    Subst total = compose(s2, body.subst);
    return Out{total, t, eff, node(e, t, eff, {body.elab})};
  }

  Out passign_case(const Env& env, const Expr& e) {
    const Type* rt = env.lookup_ref(e.ref_id());
    if (!rt)
      throw TypeError(TypeError::Code::unbound_reference,
                      "unbound reference", e.span());
    const Type& h = rt->args()[0];
    const Type& v = rt->args()[1];
    Type t = t_fn(v, t_row(t_st(h), fresh_.fresh_row()), t_unit());
    Type eff = fresh_.fresh_row();
    return Out{Subst(), t, eff, node(e, t, eff)};
  }

  Out pconst_case(const Env& env, const Expr& e) {
    if (e.con_id() == TermCon::add && e.kids().size() == 1) {
      Out v = rec(env, e.kid(0));
      Subst s = compose(unify_in(e, v.type, t_int()), v.subst);
      Type t = t_fn(t_int(), fresh_.fresh_row(), t_int());
      Type eff = fresh_.fresh_row();
      return Out{s, t, eff, node(e, t, eff, {v.elab})};
    }
    if (e.con_id() == TermCon::if0 && e.kids().size() == 1) {
      Out v = rec(env, e.kid(0));
      Subst s = compose(unify_in(e, v.type, t_int()), v.subst);
      Type a = fresh_.fresh_star();
      Type t = t_fn(a, fresh_.fresh_row(), t_fn(a, fresh_.fresh_row(), a));
      Type eff = fresh_.fresh_row();
      return Out{s, t, eff, node(e, t, eff, {v.elab})};
    }
    if (e.con_id() == TermCon::if0 && e.kids().size() == 2) {
      Out n = rec(env, e.kid(0));
      Subst s = compose(unify_in(e, n.type, t_int()), n.subst);
      Out v = rec(env.apply(s), e.kid(1));
      s = compose(v.subst, s);
      Type t = t_fn(s(v.type), fresh_.fresh_row(), s(v.type));
      Type eff = fresh_.fresh_row();
      return Out{s, t, eff, node(e, t, eff, {n.elab, v.elab})};
    }
    throw TypeError(TypeError::Code::internal_form,
                    "malformed partial constant", e.span());
  }

  Session& fresh_;
  InferOptions opt_;
};

inline void patch_elab(const Elab& n, const Subst& total) {
  if (!n) return;
  n->type = total(n->type);
  n->effect = total(n->effect);
  if (n->let_scheme) n->let_scheme = total(*n->let_scheme);
  if (n->heap_type) n->heap_type = total(*n->heap_type);
  for (Type& t : n->heap_value_types) t = total(t);
  for (const Elab& k : n->children) patch_elab(k, total);
}

}  // namespace detail

// The type and effect inference algorithm. Returns the principal type and an
// open effect row, plus the elaborated tree the checker validates.
inline InferResult infer(const Env& env, const Expr& expr, Session& fresh,
                         InferOptions opt = {}) {
  Expr e = desugar_binds(expr);
  if (!opt.allow_internal && contains_internal_forms(e))
    throw TypeError(TypeError::Code::internal_form,
                    "internal forms are not accepted in surface programs",
                    e.span());
  detail::Inferencer inf(fresh, opt);
  auto out = inf.rec(env, e);
  detail::patch_elab(out.elab, out.subst);
  return InferResult{out.subst, out.subst(out.type), out.subst(out.effect),
                     out.elab};
}

// Conversion of a heap to a type environment: r_i : ref<h,t_i> with the t_i
// solved by one inference pass over the (mutually recursive) heap values.
inline Env reference_env(const Heap& heap, const Type& h, const Env& env,
                         Session& fresh, InferOptions opt = {}) {
  opt.allow_internal = true;
  detail::Inferencer inf(fresh, opt);
  return inf.heap_env(env, heap, h).env;
}

}  // namespace effrow

#endif

#include <doctest.h>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "effrow/check.hpp"
#include "effrow/infer.hpp"
#include "effrow/parse.hpp"
#include "effrow/print.hpp"
#include "testutil.hpp"

using namespace effrow;

namespace {

InferResult infer_text(const std::string& text, InferOptions opt = {}) {
  Session s;
  return infer(Env{}, parse_expr(text), s, opt);
}

std::string scheme_of(const std::string& text) {
  Session s;
  InferResult r = infer(Env{}, parse_expr(text), s);
  return print_scheme(generalize(Env{}, r.type));
}

bool accepts(const std::string& text, bool simplify) {
  try {
    InferOptions opt;
    opt.simplify = simplify;
    infer_text(text, opt);
    return true;
  } catch (const TypeError&) {
    return false;
  }
}

}  // namespace

TEST_CASE("typeof table golden entries") {
  CHECK(print_scheme(typeof_const(TermCon::throw_)) ==
        "forall a e1. () -> <exn|e1> a");
  CHECK(print_scheme(typeof_const(TermCon::unit)) == "()");
  Session s;
  Type read_t = instantiate(typeof_const(TermCon::read), s);
  REQUIRE(read_t.is_app(TypeCon::fn));
  CHECK(effect_contains(t_div(), read_t.args()[1]));
  CHECK(print_scheme(typeof_const(TermCon::ref)) ==
        "forall h1 a e1. a -> <st<h1>|e1> ref<h1,a>");
  CHECK(print_scheme(typeof_const(TermCon::assign)) ==
        "forall h1 a e1 e2. ref<h1,a> -> e1 a -> <st<h1>|e2> ()");
}

TEST_CASE("the identity gets its principal scheme") {
  CHECK(scheme_of("let id = \\x. x in id") == "forall a e1. a -> e1 a");
}

TEST_CASE("value restriction rejects effectful bindings") {
  try {
    infer_text("let r = ref () in r");
    FAIL("expected a value restriction error");
  } catch (const TypeError& te) {
    CHECK(te.code == TypeError::Code::value_restriction);
  }
}

TEST_CASE("run rejects escaping references") {
  try {
    infer_text("run (x <- ref 1; x)");
    FAIL("expected a run escape error");
  } catch (const TypeError& te) {
    CHECK(te.code == TypeError::Code::run_escape);
  }
}

TEST_CASE("throw produces a fresh result type and an exn effect") {
  InferResult r = infer_text("throw ()");
  CHECK(r.type.is_var());
  CHECK(effect_contains(t_exn(), r.effect));
  CHECK(effect_tail(r.effect).is_var());
}

TEST_CASE("catch removes the exn effect") {
  InferResult r = infer_text("catch (throw ()) (\\x. ())");
  CHECK(r.type.is_con(TypeCon::unit));
  CHECK(!effect_contains(t_exn(), r.effect));
  CHECK(effect_tail(r.effect).is_var());
}

TEST_CASE("run discharges the state effect") {
  InferResult r = infer_text("run (x <- ref 1; !x)");
  CHECK(r.type.is_con(TypeCon::int_));
  bool has_st = false;
  auto [labels, tail] = split_row(r.effect);
  for (const Type& l : labels)
    if (label_head(l) == TypeCon::st) has_st = true;
  CHECK(!has_st);
  CHECK(effect_contains(t_div(), r.effect));  // reads may diverge
}

TEST_CASE("generalize") {
  Session s;
  Type a = s.fresh_star();
  Type mu = s.fresh_row();
  Scheme g1 = generalize(Env{}, t_fn(a, mu, a));
  CHECK(g1.vars.size() == 2);
  CHECK(print_scheme(g1) == "forall a e1. a -> e1 a");

  Env env = Env{}.with_lambda("y", a);
  Scheme g2 = generalize(env, t_fn(a, t_row_nil(), a));
  CHECK(g2.vars.empty());

  Scheme g3 = generalize(Env{}, t_int());
  CHECK(g3.vars.empty());
}

TEST_CASE("instantiate freshens quantifiers") {
  Session s;
  Type i1 = instantiate(typeof_const(TermCon::throw_), s);
  Type i2 = instantiate(typeof_const(TermCon::throw_), s);
  std::set<int> v1 = ftv_set(i1);
  std::set<int> v2 = ftv_set(i2);
  for (int v : v1) CHECK(!v2.count(v));
  Scheme mono = Scheme::mono(t_int());
  CHECK(instantiate(mono, s).same(t_int()));
}

TEST_CASE("close_type and open_type") {
  Session s;
  Type a = s.fresh_star();
  Type mu = s.fresh_row();

  Scheme with_exn{{{a.var_id(), Kind::star()}, {mu.var_id(), Kind::row()}},
                  t_fn(a, t_row(t_exn(), mu), a)};
  Scheme closed = close_type(with_exn);
  CHECK(print_scheme(closed) == "forall a. a -> <exn> a");
  CHECK(closed.vars.size() == 1);

  Scheme plain{{{a.var_id(), Kind::star()}, {mu.var_id(), Kind::row()}},
               t_fn(a, mu, a)};
  CHECK(print_scheme(close_type(plain)) == "forall a. a -> a");

  Type opened = open_type(t_fn(a, t_row(t_exn(), t_row_nil()), a), s);
  REQUIRE(opened.is_app(TypeCon::fn));
  CHECK(effect_tail(opened.args()[1]).is_var());
  CHECK(effect_contains(t_exn(), opened.args()[1]));

  // a row variable elsewhere blocks closing
  Scheme mu_in_arg{{{mu.var_id(), Kind::row()}},
                   t_fn(t_fn(t_unit(), mu, t_unit()), mu, t_unit())};
  CHECK(close_type(mu_in_arg).vars.size() == 1);
}

TEST_CASE("simplification does not change which programs are accepted") {
  const char* corpus[] = {
      "let id = \\x. x in id",
      "let id = \\x. x in id id",
      "let id = \\x. x in id (throw ())",
      "let f = \\x. inc x in f 3",
      "let k = \\x. \\y. x in k () 42",
      "let r = ref () in r",
      "run (x <- ref 1; x)",
      "run (x <- ref 1; !x)",
      "let g = \\f. catch (f ()) (\\x. 0) in g (\\u. throw ())",
      "catch (throw ()) (\\x. 42)",
      "(\\x. x x) (\\x. x x)",
      "let d = \\f. f (f ()) in d",
  };
  for (const char* text : corpus) {
    CAPTURE(text);
    CHECK(accepts(text, true) == accepts(text, false));
  }
}

TEST_CASE("inferred effects are open rows") {
  const char* corpus[] = {
      "let id = \\x. x in id ()",
      "inc 1",
      "throw ()",
      "catch (throw ()) (\\x. 42)",
      "run (x <- ref 1; !x)",
      "x <- ref 1; x := 2",
      "fix (\\f. \\x. f x)",
  };
  for (const char* text : corpus) {
    CAPTURE(text);
    InferResult r = infer_text(text);
    CHECK(effect_tail(r.effect).is_var());
  }
}

TEST_CASE("principality spot checks") {
  // each hand-written typing must be an instance of the inferred one
  struct Case {
    const char* term;
    const char* type;
    const char* effect;
  };
  const Case cases[] = {
      {"\\x. x", "int -> int", "<>"},
      {"\\f. f ()", "(() -> <exn> int) -> <exn> int", "<>"},
      {"throw ()", "int", "<exn>"},
      {"catch (throw ()) (\\x. 42)", "int", "<div>"},
      {"inc 1", "int", "<>"},
      {"let f = \\x. inc x in f 3", "int", "<>"},
      {"ref ()", "ref<h1,()>", "<st<h1>>"},
      {"run ((\\x. 42) (ref ()))", "int", "<div>"},
      {"\\x. \\y. x", "int -> (() -> int)", "<>"},
      {"fix (\\f. \\x. f x)", "int -> <div> int", "<>"},
      {"add 1", "int -> int", "<>"},
      {"x <- ref 1; !x", "int", "<st<h1>,div>"},
  };
  for (const Case& c : cases) {
    CAPTURE(c.term);
    InferResult r = infer_text(c.term);
    Type want_t = parse_type(c.type);
    Type want_e = parse_type(c.effect);
    std::set<int> bindable;
    for (auto& [id, k] : ftv(r.type)) bindable.insert(id);
    for (auto& [id, k] : ftv(r.effect)) bindable.insert(id);
    std::map<int, Type> binding;
    bool t_ok = match_types(r.type, want_t, bindable, binding);
    bool e_ok = match_types(r.effect, want_e, bindable, binding);
    CHECK(t_ok);
    CHECK(e_ok);
  }
}

TEST_CASE("inference over internal forms") {
  Session s;
  InferOptions opt;
  opt.allow_internal = true;

  // hp {r -> 1} !(#r)
  Expr e = parse_expr("hp {r -> 1} !(#r)", /*debug=*/true);
  InferResult r = infer(Env{}, e, s, opt);
  CHECK(r.type.is_con(TypeCon::int_));
  auto [labels, tail] = split_row(r.effect);
  bool has_st = false;
  for (const Type& l : labels)
    if (label_head(l) == TypeCon::st) has_st = true;
  CHECK(has_st);

  // surface entry rejects internal forms
  Session s2;
  CHECK_THROWS_AS(infer(Env{}, e, s2, InferOptions{}), TypeError);
}

TEST_CASE("reference_env solves heap typings") {
  Session s;
  Type h = s.fresh_heap();

  Env e1 = reference_env(Heap({{0, Expr::lit(1)}}), h, Env{}, s);
  REQUIRE(e1.lookup_ref(0) != nullptr);
  CHECK(e1.lookup_ref(0)->args()[1].is_con(TypeCon::int_));

  Env e2 = reference_env(Heap({{1, Expr::lam("x", Expr::var("x"))}}), h, Env{}, s);
  REQUIRE(e2.lookup_ref(1) != nullptr);
  Type vt = e2.lookup_ref(1)->args()[1];
  REQUIRE(vt.is_app(TypeCon::fn));
  CHECK(vt.args()[0].same(vt.args()[2]));

  // mutually referring heap bindings: r1 -> (r2 :=), r2 -> ()
  Env e3 = reference_env(Heap({{2, Expr::passign(3)}, {3, Expr::con(TermCon::unit)}}),
                         h, Env{}, s);
  REQUIRE(e3.lookup_ref(2) != nullptr);
  REQUIRE(e3.lookup_ref(3) != nullptr);
  CHECK(e3.lookup_ref(3)->args()[1].is_con(TypeCon::unit));
  Type assign_t = e3.lookup_ref(2)->args()[1];
  REQUIRE(assign_t.is_app(TypeCon::fn));
  CHECK(assign_t.args()[0].is_con(TypeCon::unit));
  CHECK(assign_t.args()[2].is_con(TypeCon::unit));
  CHECK(effect_contains(t_st(h), assign_t.args()[1]));
}

TEST_CASE("elaboration erases to the desugared input") {
  Session s;
  Expr e = desugar_binds(parse_expr("let id = \\x. x in id (inc 1)"));
  InferResult r = infer(Env{}, e, s);
  std::function<void(const Elab&, const Expr&)> walk = [&](const Elab& n,
                                                           const Expr& x) {
    REQUIRE(n != nullptr);
    CHECK(n->expr.tag() == x.tag());
    if (x.tag() == Expr::Tag::heap) return;
    REQUIRE(n->children.size() == x.kids().size());
    for (std::size_t i = 0; i < x.kids().size(); ++i)
      walk(n->children[i], x.kid(i));
  };
  walk(r.elab, e);
}

TEST_CASE("unknown variables are reported distinctly") {
  try {
    infer_text("nope ()");
    FAIL("expected unbound variable");
  } catch (const TypeError& te) {
    CHECK(te.code == TypeError::Code::unbound_variable);
  }
}

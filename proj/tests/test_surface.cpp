#include <doctest.h>

#include <random>
#include <string>

#include "effrow/parse.hpp"
#include "effrow/print.hpp"
#include "testutil.hpp"

using namespace effrow;

TEST_CASE("parsing the core surface forms") {
  Expr e = parse_expr("let id = \\x. x in id ()");
  REQUIRE(e.tag() == Expr::Tag::let_);
  CHECK(e.name() == "id");
  CHECK(e.kid(0).tag() == Expr::Tag::lam);
  REQUIRE(e.kid(1).tag() == Expr::Tag::app);
  CHECK(e.kid(1).kid(0).name() == "id");
  CHECK(e.kid(1).kid(1).is_con(TermCon::unit));
}

TEST_CASE("bind sugar is the application of a lambda") {
  Expr e = parse_expr("x <- ref 1; !x");
  Expr expect = Expr::app(
      Expr::lam("x", Expr::app(Expr::con(TermCon::read), Expr::var("x"))),
      Expr::app(Expr::con(TermCon::ref), Expr::lit(1)));
  CHECK(alpha_eq(e, expect));
}

TEST_CASE("sequence sugar binds an unused variable") {
  Expr e = parse_expr("inc 1; ()");
  REQUIRE(e.tag() == Expr::Tag::app);
  REQUIRE(e.kid(0).tag() == Expr::Tag::lam);
  CHECK(fv(e.kid(0).kid(0)).count(e.kid(0).name()) == 0);
}

TEST_CASE("catch parses with two arguments") {
  Expr e = parse_expr("catch (throw ()) (\\x. 42)");
  REQUIRE(e.tag() == Expr::Tag::catch_);
  CHECK(is_exception(e.kid(0)));
  CHECK(e.kid(1).tag() == Expr::Tag::lam);
}

TEST_CASE("assignment sugar and precedence") {
  Expr e = parse_expr("x := inc 1");
  REQUIRE(e.tag() == Expr::Tag::app);
  REQUIRE(e.kid(0).tag() == Expr::Tag::app);
  CHECK(e.kid(0).kid(0).is_con(TermCon::assign));
  CHECK(e.kid(0).kid(1).name() == "x");
  // application binds tighter than :=
  CHECK(e.kid(1).tag() == Expr::Tag::app);
}

TEST_CASE("throw payload is restricted to unit at parse time") {
  CHECK_THROWS_AS(parse_expr("throw 1"), parse_error);
  CHECK_NOTHROW(parse_expr("throw ()"));
}

TEST_CASE("debug syntax parses heaps and references") {
  Expr e = parse_expr("hp {r1 -> 1, r2 -> ()} !(#r1)", /*debug=*/true);
  REQUIRE(e.tag() == Expr::Tag::heap);
  CHECK(e.heap_bindings().size() == 2);
  CHECK_THROWS_AS(parse_expr("hp {r1 -> 1} #r1", /*debug=*/false), parse_error);
}

TEST_CASE("type printing golden forms") {
  Session s;
  Type a = s.fresh_star();
  Type mu = s.fresh_row();
  Scheme id_scheme{{{a.var_id(), Kind::star()}, {mu.var_id(), Kind::row()}},
                   t_fn(a, mu, a)};
  CHECK(print_scheme(id_scheme) == "forall a e1. a -> e1 a");

  Type sqr = t_fn(t_int(), make_row({t_exn(), t_div()}, t_row_nil()), t_int());
  CHECK(print_type(sqr) == "int -> <exn,div> int");

  Type total = t_fn(a, t_row_nil(), a);
  NameTable names;
  CHECK(print_type(total, names) == "a -> a");
}

TEST_CASE("type parsing inverts printing") {
  for (const char* text :
       {"int -> <exn,div> int", "a -> a", "a -> e1 a", "ref<h1,int>",
        "int -> <div,st<h1>|e1> int", "(a -> e1 b) -> e1 b", "<exn,exn|e1>",
        "()"}) {
    Type t = parse_type(text);
    NameTable names;
    CHECK(print_type(t, names) == text);
  }
  Scheme sc = parse_scheme("forall a e1. a -> e1 a");
  CHECK(print_scheme(sc) == "forall a e1. a -> e1 a");
  CHECK(sc.vars.size() == 2);
}

TEST_CASE("a plain arrow means the empty effect") {
  Type t = parse_type("a -> a");
  REQUIRE(t.is_app(TypeCon::fn));
  CHECK(t.args()[1].same(t_row_nil()));
}

TEST_CASE("print then parse round-trips generated expressions") {
  testutil::Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    Expr e = testutil::random_surface_expr(rng, 4);
    std::string text = print_expr(e);
    Expr back = parse_expr(text);
    if (!alpha_eq(desugar_binds(e), desugar_binds(back))) {
      CAPTURE(text);
      CHECK(alpha_eq(desugar_binds(e), desugar_binds(back)));
      break;
    }
  }
}

TEST_CASE("internal forms print and reparse in debug mode") {
  Expr e = Expr::heap(Heap({{0, Expr::lit(1)}, {1, Expr::passign(0)}}),
                      Expr::app(Expr::passign(1), Expr::con(TermCon::unit)));
  std::string text = print_expr(e);
  Expr back = parse_expr(text, /*debug=*/true);
  CHECK(alpha_eq(e, back));
}

TEST_CASE("parse errors carry spans and never crash on noise") {
  try {
    parse_expr("let x = in x");
    FAIL("expected a parse error");
  } catch (const parse_error& pe) {
    CHECK(pe.span.start <= pe.span.end);
    CHECK(pe.span.start >= 0);
  }

  testutil::Rng rng(43);
  const std::string alphabet = "\\.()<>|;:=!#{}-> abcdefgh0123456789\xff\x01";
  for (int i = 0; i < 3000; ++i) {
    std::string junk;
    int n = testutil::pick(rng, 30);
    for (int j = 0; j < n; ++j)
      junk += alphabet[testutil::pick(rng, static_cast<int>(alphabet.size()))];
    try {
      parse_expr(junk, testutil::pick(rng, 2) == 0);
    } catch (const parse_error&) {
    }
    try {
      parse_type(junk);
    } catch (const parse_error&) {
    }
  }
}

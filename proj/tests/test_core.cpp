#include <doctest.h>

#include <random>

#include "effrow/expr.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"
#include "testutil.hpp"

using namespace effrow;

TEST_CASE("kinds of built-in constructions") {
  Session s;
  Type mu = s.fresh_row();
  Type xi = s.fresh_heap();
  CHECK(kind_of(t_row(t_exn(), mu)) == Kind::row());
  CHECK(kind_of(t_st(xi)) == Kind::label());
  CHECK(kind_of(t_fn(t_int(), t_row(t_exn(), t_row_nil()), t_int())) ==
        Kind::star());
  CHECK(kind_of(t_ref(xi, t_int())) == Kind::star());
  CHECK(kind_of(t_row_nil()) == Kind::row());
}

TEST_CASE("malformed applications are rejected") {
  Session s;
  CHECK_THROWS_AS(Type::app(TypeCon::st, {t_int()}), kind_error);
  CHECK_THROWS_AS(Type::app(TypeCon::fn, {t_int(), t_int(), t_int()}),
                  kind_error);
  CHECK_THROWS_AS(Type::app(TypeCon::ref, {s.fresh_heap()}), kind_error);
  CHECK_THROWS_AS(Type::var(0, Kind::label()), kind_error);
  CHECK_THROWS_AS(Kind::arrow({}, Kind::star()), kind_error);
}

TEST_CASE("free type variables") {
  Session s;
  Type a = s.fresh_star();
  Type mu = s.fresh_row();
  Type xi = s.fresh_heap();

  // forall a. a -> mu a has only mu free
  Scheme sc{{{a.var_id(), Kind::star()}}, t_fn(a, mu, a)};
  auto f = ftv(sc);
  REQUIRE(f.size() == 1);
  CHECK(f[0].first == mu.var_id());

  auto g = ftv(t_row(t_st(xi), mu));
  REQUIRE(g.size() == 2);
  CHECK(g[0].first == xi.var_id());
  CHECK(g[1].first == mu.var_id());

  CHECK(ftv(t_int()).empty());
}

TEST_CASE("frv of expressions") {
  Expr r0 = Expr::refname(0);
  CHECK(frv(r0) == std::set<int>{0});
  Expr hb = Expr::heap(Heap({{0, Expr::lit(1)}}), Expr::refname(0));
  CHECK(frv(hb).empty());
  CHECK(frv(Expr::passign(3)) == std::set<int>{3});
}

TEST_CASE("substitution application and composition") {
  Session s;
  Type a = s.fresh_star();
  Type mu = s.fresh_row();
  Subst close_mu = Subst::single(mu.var_id(), Kind::row(), t_row_nil());
  Type t = t_fn(a, t_row(t_exn(), mu), a);
  Type expect = t_fn(a, t_row(t_exn(), t_row_nil()), a);
  CHECK(close_mu(t).same(expect));

  Type b = s.fresh_star();
  Subst s1 = Subst::single(b.var_id(), Kind::star(), a);
  Subst s2 = Subst::single(a.var_id(), Kind::star(), t_int());
  Subst both = compose(s2, s1);
  CHECK(both(b).same(t_int()));

  Subst id;
  CHECK(compose(id, s2)(a).same(t_int()));
  CHECK(compose(s2, id)(a).same(t_int()));
}

TEST_CASE("substitutions are kind preserving") {
  Session s;
  Type a = s.fresh_star();
  CHECK_THROWS_AS(Subst::single(a.var_id(), Kind::star(), t_row_nil()),
                  kind_error);
}

TEST_CASE("composition law and idempotence on random types") {
  testutil::Rng rng(7);
  Session s;
  s.reserve_vars(100);
  for (int i = 0; i < 500; ++i) {
    Type t = testutil::random_type(rng, 3);
    Type img1 = testutil::random_type(rng, 2);
    if (!(img1.kind() == Kind::star())) continue;
    if (occurs(0, img1)) continue;
    Subst s1 = Subst::single(0, Kind::star(), img1);
    Subst s2 = Subst::single(10, Kind::row(),
                             testutil::random_row(rng, 2, false, false));
    Subst c = compose(s2, s1);
    CHECK(c(t).same(s2(s1(t))));
    CHECK(c(c(t)).same(c(t)));
    CHECK(kind_of(c(t)) == kind_of(t));
  }
}

TEST_CASE("heap alpha equivalence is an equivalence and frv-invariant") {
  Expr h1 = Expr::heap(Heap({{0, Expr::lit(1)}, {1, Expr::refname(0)}}),
                       Expr::refname(1));
  Expr h2 = Expr::heap(Heap({{5, Expr::lit(1)}, {7, Expr::refname(5)}}),
                       Expr::refname(7));
  Expr h3 = Expr::heap(Heap({{2, Expr::lit(1)}, {3, Expr::refname(2)}}),
                       Expr::refname(3));
  CHECK(alpha_eq(h1, h1));
  CHECK(alpha_eq(h1, h2));
  CHECK(alpha_eq(h2, h1));
  CHECK(alpha_eq(h2, h3));
  CHECK(alpha_eq(h1, h3));
  CHECK(frv(h1) == frv(h2));

  Expr open1 = Expr::heap(Heap({{0, Expr::lit(1)}}), Expr::refname(9));
  Expr open2 = Expr::heap(Heap({{4, Expr::lit(1)}}), Expr::refname(9));
  CHECK(alpha_eq(open1, open2));
  Expr open3 = Expr::heap(Heap({{4, Expr::lit(1)}}), Expr::refname(8));
  CHECK(!alpha_eq(open1, open3));
}

TEST_CASE("capture-avoiding substitution renames binders") {
  // [y := x](\x. y x) must not capture the substituted x
  Expr body = Expr::lam("x", Expr::app(Expr::var("y"), Expr::var("x")));
  Expr out = subst_var(body, "y", Expr::var("x"));
  REQUIRE(out.tag() == Expr::Tag::lam);
  CHECK(out.name() != "x");
  CHECK(out.kid(0).kid(0).name() == "x");
  CHECK(out.kid(0).kid(1).name() == out.name());
}

TEST_CASE("bind desugars to application of a lambda") {
  Expr b = Expr::bind("x", Expr::lit(1), Expr::var("x"));
  Expr d = desugar_binds(b);
  REQUIRE(d.tag() == Expr::Tag::app);
  CHECK(d.kid(0).tag() == Expr::Tag::lam);
  CHECK(alpha_eq(d, Expr::app(Expr::lam("x", Expr::var("x")), Expr::lit(1))));
}

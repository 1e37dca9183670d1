#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "effrow/eval.hpp"
#include "effrow/infer.hpp"
#include "effrow/parse.hpp"
#include "effrow/print.hpp"
#include "testutil.hpp"

using namespace effrow;

namespace {

std::vector<std::pair<Rule, std::string>> trace_of(const Expr& e, long fuel) {
  std::vector<std::pair<Rule, std::string>> out;
  evaluate(e, fuel, [&](long, Rule r, const Expr& next) {
    NameTable names;
    out.emplace_back(r, print_expr(next, names));
  });
  return out;
}

std::vector<Rule> rules_of(const Expr& e, long fuel) {
  std::vector<Rule> out;
  evaluate(e, fuel, [&](long, Rule r, const Expr&) { out.push_back(r); });
  return out;
}

bool heap_binders_distinct(const Expr& e) {
  if (e.tag() == Expr::Tag::heap) {
    std::set<int> seen;
    for (auto& [r, v] : e.heap_bindings().bindings())
      if (!seen.insert(r).second) return false;
    for (auto& [r, v] : e.heap_bindings().bindings())
      if (!heap_binders_distinct(v)) return false;
  }
  for (const Expr& k : e.kids())
    if (!heap_binders_distinct(k)) return false;
  return true;
}

}  // namespace

TEST_CASE("delta table") {
  CHECK(delta(Expr::con(TermCon::inc), Expr::lit(41))->lit_value() == 42);
  CHECK(delta(Expr::con(TermCon::dec), Expr::lit(0))->lit_value() == -1);
  Expr if02 = Expr::pconst(TermCon::if0, {Expr::lit(0), Expr::lit(7)});
  CHECK(delta(if02, Expr::lit(9))->lit_value() == 7);
  Expr if02b = Expr::pconst(TermCon::if0, {Expr::lit(3), Expr::lit(7)});
  CHECK(delta(if02b, Expr::lit(9))->lit_value() == 9);
  CHECK(!delta(Expr::con(TermCon::inc), Expr::con(TermCon::unit)).has_value());
  CHECK(delta(Expr::con(TermCon::add), Expr::lit(1)).has_value());
  Expr padd = *delta(Expr::con(TermCon::add), Expr::lit(1));
  CHECK(delta(padd, Expr::lit(2))->lit_value() == 3);
}

TEST_CASE("answer classification") {
  Expr he = Expr::heap(Heap({{0, Expr::con(TermCon::unit)}}),
                       Expr::app(Expr::con(TermCon::throw_),
                                 Expr::con(TermCon::unit)));
  CHECK(classify(he) == AnswerKind::heap_exception);
  CHECK(classify(Expr::lam("x", Expr::var("x"))) == AnswerKind::value);
  CHECK(classify(Expr::app(Expr::con(TermCon::ref), Expr::con(TermCon::unit))) ==
        AnswerKind::not_answer);
  Expr hv = Expr::heap(Heap({{0, Expr::lit(1)}}), Expr::refname(0));
  CHECK(classify(hv) == AnswerKind::heap_value);
}

TEST_CASE("catch of a throw runs the handler") {
  Expr e = parse_expr("catch (throw ()) (\\x. 42)");
  StepResult s1 = step(e);
  REQUIRE(s1.kind == StepResult::Kind::reduced);
  CHECK(s1.rule == Rule::catcht);
  StepResult s2 = step(s1.term);
  REQUIRE(s2.kind == StepResult::Kind::reduced);
  CHECK(s2.rule == Rule::beta);
  CHECK(s2.term.lit_value() == 42);

  EvalOutcome out = evaluate(parse_expr("catch (throw ()) (\\x. ())"), 10);
  CHECK(out.kind == EvalOutcome::Kind::finished);
  CHECK(out.answer == AnswerKind::value);
  CHECK(out.steps <= 3);
}

TEST_CASE("exceptions propagate through X contexts one frame at a time") {
  Expr e = parse_expr("inc (throw ())");
  StepResult s1 = step(e);
  REQUIRE(s1.kind == StepResult::Kind::reduced);
  CHECK(s1.rule == Rule::throw_);
  CHECK(is_exception(s1.term));

  // depth <= 4 contexts reduce to throw () in <= depth steps
  const char* stacked[] = {
      "inc (throw ())",
      "inc (inc (throw ()))",
      "inc (inc (inc (throw ())))",
      "let x = inc (inc (inc (throw ()))) in x",
  };
  long depth = 1;
  for (const char* text : stacked) {
    EvalOutcome out = evaluate(parse_expr(text), 100);
    CHECK(out.kind == EvalOutcome::Kind::finished);
    CHECK(out.answer == AnswerKind::exception);
    CHECK(out.steps <= depth);
    ++depth;
  }
}

TEST_CASE("the canonical stateful trace") {
  Expr e = parse_expr("run (x <- ref 1; !x)");
  std::vector<Rule> rules = rules_of(e, 100);
  std::vector<Rule> expect = {Rule::alloc, Rule::lift, Rule::beta, Rule::read,
                              Rule::runh};
  CHECK(rules == expect);
  EvalOutcome out = evaluate(e, 100);
  CHECK(out.kind == EvalOutcome::Kind::finished);
  CHECK(out.term.lit_value() == 1);
}

TEST_CASE("writes update the nearest enclosing heap") {
  Expr e = parse_expr("run (x <- ref 1; x := 2; !x)");
  EvalOutcome out = evaluate(e, 100);
  REQUIRE(out.kind == EvalOutcome::Kind::finished);
  CHECK(out.term.lit_value() == 2);
}

TEST_CASE("escaping references are faulty") {
  // surface program whose result would leak the fresh reference
  Expr e = parse_expr("run (x <- ref 1; x)");
  EvalOutcome out = evaluate(e, 100);
  REQUIRE(out.kind == EvalOutcome::Kind::faulty);
  CHECK(out.reason == FaultyReason::escaping_reference);

  // prebuilt internal forms: reads and writes outside the local heap
  Expr read_esc = Expr::run(Expr::heap(
      Heap({{0, Expr::lit(1)}}),
      Expr::app(Expr::con(TermCon::read), Expr::refname(9))));
  EvalOutcome o2 = evaluate(read_esc, 10);
  REQUIRE(o2.kind == EvalOutcome::Kind::faulty);
  CHECK(o2.reason == FaultyReason::escaping_read);

  Expr write_esc = Expr::run(Expr::heap(
      Heap({{0, Expr::lit(1)}}),
      Expr::app(Expr::passign(9), Expr::lit(2))));
  EvalOutcome o3 = evaluate(write_esc, 10);
  REQUIRE(o3.kind == EvalOutcome::Kind::faulty);
  CHECK(o3.reason == FaultyReason::escaping_write);
}

TEST_CASE("the remaining faulty shapes") {
  EvalOutcome nf = evaluate(parse_expr("() 1"), 10);
  REQUIRE(nf.kind == EvalOutcome::Kind::faulty);
  CHECK(nf.reason == FaultyReason::not_a_function);

  EvalOutcome nr = evaluate(parse_expr("!42"), 10);
  REQUIRE(nr.kind == EvalOutcome::Kind::faulty);
  CHECK(nr.reason == FaultyReason::not_a_reference);

  EvalOutcome nr2 = evaluate(parse_expr("42 := 1"), 10);
  REQUIRE(nr2.kind == EvalOutcome::Kind::faulty);
  CHECK(nr2.reason == FaultyReason::not_a_reference);

  EvalOutcome ud = evaluate(parse_expr("inc ()"), 10);
  REQUIRE(ud.kind == EvalOutcome::Kind::faulty);
  CHECK(ud.reason == FaultyReason::undefined);

  Expr throw_bad = Expr::app(Expr::con(TermCon::throw_), Expr::lit(3));
  EvalOutcome ne = evaluate(throw_bad, 10);
  REQUIRE(ne.kind == EvalOutcome::Kind::faulty);
  CHECK(ne.reason == FaultyReason::not_an_exception);
}

TEST_CASE("evaluation of an answer takes no steps") {
  EvalOutcome out = evaluate(Expr::lit(42), 100);
  CHECK(out.kind == EvalOutcome::Kind::finished);
  CHECK(out.steps == 0);
}

TEST_CASE("a fix loop exhausts fuel") {
  Expr loop = parse_expr("fix (\\f. \\x. f x) ()");
  EvalOutcome out = evaluate(loop, 1000);
  CHECK(out.kind == EvalOutcome::Kind::fuel_exhausted);
  CHECK(out.steps == 1000);
}

TEST_CASE("run pushes into lambdas and partial catches") {
  Expr e = parse_expr("run (\\x. x)");
  StepResult s1 = step(e);
  REQUIRE(s1.kind == StepResult::Kind::reduced);
  CHECK(s1.rule == Rule::runl);
  CHECK(s1.term.tag() == Expr::Tag::lam);

  Expr pc = Expr::run(Expr::pcatch(Expr::lit(1)));
  StepResult s2 = step(pc);
  REQUIRE(s2.kind == StepResult::Kind::reduced);
  CHECK(s2.rule == Rule::runc);
  CHECK(s2.term.tag() == Expr::Tag::pcatch);

  // with a heap: run (hp {r -> 1} \x. !(#r)) keeps the heap inside
  Expr withheap = parse_expr("run (hp {r -> 1} (\\x. !(#r)))", true);
  StepResult s3 = step(withheap);
  REQUIRE(s3.kind == StepResult::Kind::reduced);
  CHECK(s3.rule == Rule::runl);
  REQUIRE(s3.term.tag() == Expr::Tag::lam);
  CHECK(s3.term.kid(0).tag() == Expr::Tag::run);
  CHECK(s3.term.kid(0).kid(0).tag() == Expr::Tag::heap);
}

TEST_CASE("merge renames colliding inner heap binders") {
  Expr inner = Expr::heap(Heap({{0, Expr::lit(2)}}), Expr::refname(0));
  Expr outer = Expr::heap(Heap({{0, Expr::lit(1)}}), inner);
  StepResult s1 = step(outer);
  REQUIRE(s1.kind == StepResult::Kind::reduced);
  CHECK(s1.rule == Rule::merge);
  REQUIRE(s1.term.tag() == Expr::Tag::heap);
  const Heap& merged = s1.term.heap_bindings();
  REQUIRE(merged.size() == 2);
  CHECK(merged.bindings()[0].first != merged.bindings()[1].first);
  // the body still points at the inner binding (value 2)
  int body_ref = s1.term.kid(0).ref_id();
  CHECK(merged.lookup(body_ref)->lit_value() == 2);
  CHECK(heap_binders_distinct(s1.term));
}

TEST_CASE("determinism: replayed evaluations give identical traces") {
  testutil::Rng rng(47);
  int evaluated = 0;
  for (int i = 0; i < 10000; ++i) {
    Expr e = testutil::random_surface_expr(rng, 4);
    if (!fv(e).empty()) continue;
    ++evaluated;
    auto t1 = trace_of(e, 150);
    auto t2 = trace_of(e, 150);
    REQUIRE(t1 == t2);
  }
  CHECK(evaluated > 2000);
}

TEST_CASE("heap hygiene is preserved by every step") {
  const char* corpus[] = {
      "run (x <- ref 1; y <- ref 2; x := !y; !x)",
      "x <- ref 1; y <- ref (\\u. !x); (!y) ()",
      "run (x <- ref 1; run (y <- ref 2; !y))",
  };
  for (const char* text : corpus) {
    CAPTURE(text);
    Expr cur = desugar_binds(parse_expr(text));
    int next_ref = max_ref_id(cur) + 1;
    for (int i = 0; i < 300; ++i) {
      StepResult r = step(cur, &next_ref);
      if (r.kind != StepResult::Kind::reduced) break;
      cur = r.term;
      REQUIRE(heap_binders_distinct(cur));
    }
  }
}

TEST_CASE("lift and merge commute within two steps") {
  Session dummy;
  int built = 0;
  testutil::Rng rng(53);
  for (int i = 0; i < 400 && built < 100; ++i) {
    // hp {a -> ()} (hp {b -> ()} ((\x. x) (hp {c -> n} #c)))
    Expr inner_app = Expr::app(
        Expr::lam("x", Expr::var("x")),
        Expr::heap(Heap({{2, Expr::lit(testutil::pick(rng, 50))}}),
                   Expr::refname(2)));
    Expr e = Expr::heap(
        Heap({{0, Expr::con(TermCon::unit)}}),
        Expr::heap(Heap({{1, Expr::con(TermCon::unit)}}), inner_app));
    auto apps = lift_merge_applications(e);
    bool has_lift = false, has_merge = false;
    for (auto& [t, r] : apps) {
      if (r == Rule::lift) has_lift = true;
      if (r == Rule::merge) has_merge = true;
    }
    REQUIRE(has_lift);
    REQUIRE(has_merge);
    ++built;
    for (auto& [t1, r1] : apps) {
      for (auto& [t2, r2] : apps) {
        // both orders converge to alpha-equivalent terms within 2 steps
        std::vector<Expr> reach1{t1}, reach2{t2};
        Expr c1 = t1, c2 = t2;
        for (int k = 0; k < 2; ++k) {
          StepResult s1 = step(c1);
          if (s1.kind == StepResult::Kind::reduced) {
            c1 = s1.term;
            reach1.push_back(c1);
          }
          StepResult s2 = step(c2);
          if (s2.kind == StepResult::Kind::reduced) {
            c2 = s2.term;
            reach2.push_back(c2);
          }
        }
        bool converged = false;
        for (const Expr& x : reach1)
          for (const Expr& y : reach2)
            if (alpha_eq(x, y)) converged = true;
        REQUIRE(converged);
      }
    }
  }
  CHECK(built == 100);
}

TEST_CASE("well-typed closed programs never get stuck or faulty") {
  const char* corpus[] = {
      "let id = \\x. x in id (id 42)",
      "catch ((\\x. throw ()) ()) (\\u. 7)",
      "run (x <- ref (\\n. inc n); (!x) 4)",
      "run (x <- ref 1; y <- ref 2; x := !y; !x)",
      "if0 0 (inc 1) (dec 1)",
      "add (if0 1 2 3) 10",
  };
  Session s;
  for (const char* text : corpus) {
    CAPTURE(text);
    Expr e = parse_expr(text);
    infer(Env{}, e, s);  // must be well-typed
    EvalOutcome out = evaluate(e, 100000);
    CHECK(out.kind == EvalOutcome::Kind::finished);
  }
}

#include <doctest.h>

#include <string>
#include <vector>

#include "effrow/gen.hpp"
#include "effrow/metatheory.hpp"
#include "effrow/check.hpp"
#include "effrow/print.hpp"
#include "testutil.hpp"

using namespace effrow;

TEST_CASE("generated terms are closed, surface-only and well typed") {
  GenConfig cfg;
  cfg.seed = 101;
  cfg.max_depth = 5;
  for (int i = 0; i < 60; ++i) {
    cfg.seed = 101 + i;
    Expr e = gen_well_typed(cfg, t_int());
    CHECK(fv(e).empty());
    CHECK(!contains_internal_forms(e));
    Session s;
    InferResult r = infer(Env{}, e, s);
    CHECK(effect_within(r.effect, cfg));
  }
}

TEST_CASE("generation respects the allowed feature set") {
  GenConfig pure;
  pure.allow_exn = pure.allow_st = pure.allow_div = false;
  for (int i = 0; i < 40; ++i) {
    pure.seed = 500 + i;
    Expr e = gen_well_typed(pure, t_int());
    Session s;
    InferResult r = infer(Env{}, e, s);
    auto [labels, tail] = split_row(r.effect);
    CHECK(labels.empty());
  }

  GenConfig exn_only;
  exn_only.allow_st = exn_only.allow_div = false;
  bool saw_exn = false;
  for (int i = 0; i < 60; ++i) {
    exn_only.seed = 900 + i;
    Expr e = gen_well_typed(exn_only, t_unit());
    Session s;
    InferResult r = infer(Env{}, e, s);
    auto [labels, tail] = split_row(r.effect);
    for (const Type& l : labels) {
      CHECK(label_head(l) == TypeCon::exn);
      saw_exn = true;
    }
  }
  CHECK(saw_exn);
}

TEST_CASE("the same seed reproduces the same corpus") {
  GenConfig cfg;
  cfg.seed = 2024;
  std::vector<std::string> first, second;
  for (int i = 0; i < 25; ++i) {
    GenConfig c = cfg;
    c.seed = cfg.seed + i;
    first.push_back(print_expr(gen_well_typed(c, t_int())));
  }
  for (int i = 0; i < 25; ++i) {
    GenConfig c = cfg;
    c.seed = cfg.seed + i;
    second.push_back(print_expr(gen_well_typed(c, t_int())));
  }
  CHECK(first == second);
}

TEST_CASE("an empty suite run passes") {
  GenConfig cfg;
  SuiteReport r = run_metatheory_suite(0, cfg);
  CHECK(r.ok());
  CHECK(r.terms_generated == 0);
}

TEST_CASE("the classic polymorphic reference is rejected") {
  // the template behind the catalogue's generalization bullet
  Session s;
  CHECK_THROWS_AS(
      infer(Env{}, parse_expr("let r = ref (\\x. x) in r"), s),
      TypeError);
}

TEST_CASE("the faulty catalogue is rejected by inference and faults at runtime") {
  for (const FaultyCase& fc : faulty_catalogue()) {
    CAPTURE(fc.name);
    Session s;
    InferOptions opt;
    opt.allow_internal = true;
    CHECK_THROWS_AS(infer(fc.env, fc.term, s, opt), TypeError);

    EvalOutcome out = evaluate(fc.term, 1000);
    REQUIRE(out.kind == EvalOutcome::Kind::faulty);
    CHECK(out.reason == fc.reason);
  }
}

TEST_CASE("generated corpus: open effects and simplification round-trip") {
  GenConfig cfg;
  cfg.max_depth = 5;
  for (int i = 0; i < 150; ++i) {
    cfg.seed = 3000 + i;
    Expr e = gen_well_typed(cfg, i % 2 ? t_int() : t_unit());
    CAPTURE(print_expr(e));

    // the inferred effect of any surface expression is an open row
    Session s1;
    InferResult r1 = infer(Env{}, e, s1);
    CHECK(effect_tail(r1.effect).is_var());

    // closing let-bound schemes and opening at use accepts the same programs
    Session s2;
    InferOptions no_simplify;
    no_simplify.simplify = false;
    InferResult r2 = infer(Env{}, e, s2, no_simplify);

    // and the results agree up to variable renaming
    CHECK(match_instance(r1.type, r1.effect, r2.type, r2.effect).has_value());
    CHECK(match_instance(r2.type, r2.effect, r1.type, r1.effect).has_value());
  }
}

TEST_CASE("a small suite run is clean") {
  GenConfig cfg;
  cfg.seed = 7;
  cfg.max_depth = 4;
  SuiteOptions opts;
  opts.fuel = 20000;
  SuiteReport r = run_metatheory_suite(60, cfg, opts);
  if (!r.ok()) {
    MESSAGE(report_to_text(r));
  }
  CHECK(r.ok());
  CHECK(r.terms_generated == 60);
}

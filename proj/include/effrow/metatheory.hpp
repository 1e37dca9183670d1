#ifndef EFFROW_METATHEORY_HPP
#define EFFROW_METATHEORY_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrow/check.hpp"
#include "effrow/eval.hpp"
#include "effrow/gen.hpp"
#include "effrow/infer.hpp"
#include "effrow/parse.hpp"
#include "effrow/print.hpp"

namespace effrow {

// One-sided instance matching of an inferred (type, effect) pair onto a
// required one; the substitution witnesses the instantiation.
inline std::optional<Subst> match_instance(const Type& pat_type,
                                           const Type& pat_eff,
                                           const Type& target_type,
                                           const Type& target_eff) {
  std::set<int> bindable;
  for (auto& [id, k] : ftv(pat_type)) bindable.insert(id);
  for (auto& [id, k] : ftv(pat_eff)) bindable.insert(id);
  std::map<int, Type> binding;
  if (!match_types(pat_type, target_type, bindable, binding)) return std::nullopt;
  if (!match_types(pat_eff, target_eff, bindable, binding)) return std::nullopt;
  Subst out;
  for (auto& [id, t] : binding)
    out = compose(Subst::single(id, t.kind(), t), out);
  return out;
}

struct FaultyCase {
  std::string name;
  Expr term;
  Env env;  // free references enter through here
  FaultyReason reason;
};

// Fixed catalogue instantiating the seven faulty shapes; each one must be
// rejected by inference and, when evaluated, reported with its reason.
inline std::vector<FaultyCase> faulty_catalogue() {
  std::vector<FaultyCase> out;
  Type h0 = Type::var(900001, Kind::heap());
  Env with_outer_ref = Env{}.with_ref(77, t_ref(h0, t_int()));
  auto unit = [] { return Expr::con(TermCon::unit); };
  auto refv = [] { return Expr::refname(77); };

  // undefined delta
  out.push_back({"undefined: inc ()", Expr::app(Expr::con(TermCon::inc), unit()),
                 Env{}, FaultyReason::undefined});
  out.push_back({"undefined: dec (\\x. x)",
                 Expr::app(Expr::con(TermCon::dec), Expr::lam("x", Expr::var("x"))),
                 Env{}, FaultyReason::undefined});
  out.push_back({"undefined: add ()", Expr::app(Expr::con(TermCon::add), unit()),
                 Env{}, FaultyReason::undefined});
  out.push_back({"undefined: if0 ()", Expr::app(Expr::con(TermCon::if0), unit()),
                 Env{}, FaultyReason::undefined});

  // escaping read: run (hp {r1 -> 1} R[!r2]) with r2 outside the heap
  Expr read_out = Expr::app(Expr::con(TermCon::read), refv());
  out.push_back({"escaping read",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}), read_out)),
                 with_outer_ref, FaultyReason::escaping_read});
  out.push_back({"escaping read under a context",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}),
                                      Expr::app(Expr::con(TermCon::inc), read_out))),
                 with_outer_ref, FaultyReason::escaping_read});

  // escaping write
  Expr write_out = Expr::app(Expr::passign(77), Expr::lit(2));
  out.push_back({"escaping write",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}), write_out)),
                 with_outer_ref, FaultyReason::escaping_write});
  out.push_back({"escaping write under a context",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}),
                                      Expr::app(Expr::con(TermCon::inc),
                                                Expr::bind("_", write_out,
                                                           Expr::lit(0))))),
                 with_outer_ref, FaultyReason::escaping_write});

  // escaping reference: run (hp phi w) with frv(w) inside the heap
  out.push_back({"escaping reference",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}), Expr::refname(1))),
                 Env{}, FaultyReason::escaping_reference});
  out.push_back({"escaping partial assignment",
                 Expr::run(Expr::heap(Heap({{1, Expr::lit(1)}}), Expr::passign(1))),
                 Env{}, FaultyReason::escaping_reference});

  // not a function
  out.push_back({"not a function: () 1", Expr::app(unit(), Expr::lit(1)), Env{},
                 FaultyReason::not_a_function});
  out.push_back({"not a function: 42 ()", Expr::app(Expr::lit(42), unit()), Env{},
                 FaultyReason::not_a_function});
  out.push_back({"not a function: reference applied",
                 Expr::app(refv(), Expr::lit(1)), with_outer_ref,
                 FaultyReason::not_a_function});

  // not a reference
  out.push_back({"not a reference: !42",
                 Expr::app(Expr::con(TermCon::read), Expr::lit(42)), Env{},
                 FaultyReason::not_a_reference});
  out.push_back({"not a reference: () := 1",
                 Expr::app(Expr::app(Expr::con(TermCon::assign), unit()),
                           Expr::lit(1)),
                 Env{}, FaultyReason::not_a_reference});
  out.push_back({"not a reference: lambda assigned",
                 Expr::app(Expr::app(Expr::con(TermCon::assign),
                                     Expr::lam("x", Expr::var("x"))),
                           Expr::lit(3)),
                 Env{}, FaultyReason::not_a_reference});

  // not an exception
  out.push_back({"not an exception: throw 42",
                 Expr::app(Expr::con(TermCon::throw_), Expr::lit(42)), Env{},
                 FaultyReason::not_an_exception});
  out.push_back({"not an exception: throw inc",
                 Expr::app(Expr::con(TermCon::throw_), Expr::con(TermCon::inc)),
                 Env{}, FaultyReason::not_an_exception});

  return out;
}

struct PropertyReport {
  std::string name;
  long checked = 0;
  long violations = 0;
  std::vector<std::string> counterexamples;

  void fail(const std::string& witness) {
    ++violations;
    if (counterexamples.size() < 10) counterexamples.push_back(witness);
  }
};

struct SuiteReport {
  std::vector<PropertyReport> properties;
  long terms_generated = 0;
  long max_steps_seen = 0;

  bool ok() const {
    for (const PropertyReport& p : properties)
      if (p.violations != 0) return false;
    return true;
  }

  PropertyReport& property(const std::string& name) {
    for (PropertyReport& p : properties)
      if (p.name == name) return p;
    properties.push_back(PropertyReport{name});
    return properties.back();
  }
};

struct SuiteOptions {
  long fuel = 100000;
  int subject_reduction_step_cap = 150;
};

namespace detail {

inline bool heap_binders_distinct(const Expr& e) {
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

// Subject reduction for one step: the reduct types at the original type and
// effect. Re-elaborates the reduct, matches it onto the original pair, then
// validates declaratively.
inline bool recheck_at(const Expr& reduct, const Type& type, const Type& eff,
                       Session& session, std::string* why) {
  InferOptions opt;
  opt.allow_internal = true;
  InferResult r;
  try {
    r = infer(Env{}, reduct, session, opt);
  } catch (const TypeError& te) {
    if (why) *why = std::string("reduct no longer types: ") + te.what();
    return false;
  }
  auto theta = match_instance(r.type, r.effect, type, eff);
  if (!theta) {
    if (why) {
      NameTable names;
      *why = "reduct's principal pair " + print_type(r.type, names) + " | " +
             print_type(r.effect, names) + " does not instantiate to the original";
    }
    return false;
  }
  detail::patch_elab(r.elab, *theta);
  try {
    check(Env{}, desugar_binds(reduct), type, eff, session, r.elab);
  } catch (const check_error& ce) {
    if (why) *why = std::string("declarative re-check failed: ") + ce.what();
    return false;
  }
  return true;
}

}  // namespace detail

// Runs the metatheory properties over n generated terms:
//   (a) every reduction step re-checks at the same type and effect
//   (b) terms without exn never evaluate to an exception answer
//   (c) terms without st never evaluate to a heap answer
//   (d) terms without div finish within the fuel bound
//   (e) the faulty catalogue is rejected by inference
inline SuiteReport run_metatheory_suite(int n, const GenConfig& cfg,
                                        const SuiteOptions& opts = {}) {
  SuiteReport report;
  report.properties.reserve(8);
  PropertyReport& gen_ok = report.property("generator-soundness");
  PropertyReport& sr = report.property("subject-reduction");
  PropertyReport& sound = report.property("semantic-soundness");
  PropertyReport& thm_exn = report.property("exceptions");
  PropertyReport& thm_st = report.property("state");
  PropertyReport& thm_div = report.property("divergence");
  PropertyReport& faulty = report.property("faulty-untypeable");

  std::vector<Type> targets = {t_int(), t_unit(),
                               t_fn(t_int(), t_row_nil(), t_int())};

  for (int i = 0; i < n; ++i) {
    GenConfig gcfg = cfg;
    gcfg.seed = cfg.seed + static_cast<unsigned long long>(i) * 1000003ull;
    Expr term = Expr::con(TermCon::unit);
    ++gen_ok.checked;
    try {
      term = gen_well_typed(gcfg, targets[i % targets.size()]);
    } catch (const generation_error& ge) {
      gen_ok.fail(ge.what());
      continue;
    }
    report.terms_generated++;

    Session session;
    Expr desugared = desugar_binds(term);
    InferResult inferred;
    try {
      inferred = infer(Env{}, desugared, session);
    } catch (const TypeError& te) {
      gen_ok.fail(print_expr(term) + " : " + te.what());
      continue;
    }

    auto [labels, tail] = split_row(inferred.effect);
    bool has_exn = false, has_st = false, has_div = false;
    for (const Type& l : labels) {
      if (label_head(l) == TypeCon::exn) has_exn = true;
      if (label_head(l) == TypeCon::st) has_st = true;
      if (label_head(l) == TypeCon::div) has_div = true;
    }

    // (a) subject reduction, step by step, bounded
    ++sr.checked;
    {
      std::string why;
      try {
        check(Env{}, desugared, inferred.type, inferred.effect, session,
              inferred.elab);
      } catch (const check_error& ce) {
        sr.fail(print_expr(term) + " : initial check failed: " + ce.what());
      }
      Expr cur = desugared;
      int next_ref = max_ref_id(cur) + 1;
      for (int k = 0; k < opts.subject_reduction_step_cap; ++k) {
        StepResult r = step(cur, &next_ref);
        if (r.kind != StepResult::Kind::reduced) break;
        cur = r.term;
        if (!detail::heap_binders_distinct(cur)) {
          sr.fail(print_expr(term) + " : heap hygiene broken at " +
                  print_expr(cur));
          break;
        }
        if (!detail::recheck_at(cur, inferred.type, inferred.effect, session,
                                &why)) {
          sr.fail(print_expr(term) + " -> " + print_expr(cur) + " : " + why);
          break;
        }
      }
    }

    // (b)-(d) by evaluation; a well-typed term never goes wrong at all
    EvalOutcome out = evaluate(desugared, opts.fuel);
    if (out.steps > report.max_steps_seen) report.max_steps_seen = out.steps;

    ++sound.checked;
    if (out.kind == EvalOutcome::Kind::faulty)
      sound.fail(print_expr(term) + " became faulty: " +
                 faulty_name(out.reason));
    if (out.kind == EvalOutcome::Kind::stuck)
      sound.fail(print_expr(term) + " got stuck");

    if (!has_exn) {
      ++thm_exn.checked;
      if (out.kind == EvalOutcome::Kind::finished &&
          (out.answer == AnswerKind::exception ||
           out.answer == AnswerKind::heap_exception))
        thm_exn.fail(print_expr(term) + " evaluated to an exception answer");
      if (out.kind == EvalOutcome::Kind::faulty ||
          out.kind == EvalOutcome::Kind::stuck)
        thm_exn.fail(print_expr(term) + " went wrong");
    }
    if (!has_st) {
      ++thm_st.checked;
      if (out.kind == EvalOutcome::Kind::finished &&
          (out.answer == AnswerKind::heap_value ||
           out.answer == AnswerKind::heap_exception))
        thm_st.fail(print_expr(term) + " evaluated to a heap answer");
      if (out.kind == EvalOutcome::Kind::faulty ||
          out.kind == EvalOutcome::Kind::stuck)
        thm_st.fail(print_expr(term) + " went wrong");
    }
    if (!has_div) {
      ++thm_div.checked;
      if (out.kind != EvalOutcome::Kind::finished)
        thm_div.fail(print_expr(term) + " did not finish within fuel");
    }
  }

  // (e) the fixed faulty catalogue
  if (n == 0) return report;
  for (const FaultyCase& fc : faulty_catalogue()) {
    ++faulty.checked;
    Session session;
    InferOptions opt;
    opt.allow_internal = true;
    bool rejected = false;
    try {
      infer(fc.env, fc.term, session, opt);
    } catch (const TypeError&) {
      rejected = true;
    }
    if (!rejected) faulty.fail(fc.name + " was accepted by inference");
  }

  return report;
}

inline std::string report_to_text(const SuiteReport& r) {
  std::string out;
  for (const PropertyReport& p : r.properties) {
    out += p.name + ": " + std::to_string(p.checked) + " checked, " +
           std::to_string(p.violations) + " violations\n";
    for (const std::string& c : p.counterexamples) out += "  counterexample: " + c + "\n";
  }
  out += "terms generated: " + std::to_string(r.terms_generated) + "\n";
  out += "max evaluation steps: " + std::to_string(r.max_steps_seen) + "\n";
  out += r.ok() ? "suite: PASS\n" : "suite: FAIL\n";
  return out;
}

}  // namespace effrow

#endif

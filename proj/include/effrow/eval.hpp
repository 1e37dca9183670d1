#ifndef EFFROW_EVAL_HPP
#define EFFROW_EVAL_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrow/expr.hpp"

namespace effrow {

enum class Rule {
  delta,
  beta,
  let_,
  fix,
  throw_,
  catcht,
  catchv,
  alloc,
  read,
  write,
  merge,
  lift,
  runl,
  runc,
  runh,
};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::delta: return "delta";
    case Rule::beta: return "beta";
    case Rule::let_: return "let";
    case Rule::fix: return "fix";
    case Rule::throw_: return "throw";
    case Rule::catcht: return "catcht";
    case Rule::catchv: return "catchv";
    case Rule::alloc: return "alloc";
    case Rule::read: return "read";
    case Rule::write: return "write";
    case Rule::merge: return "merge";
    case Rule::lift: return "lift";
    case Rule::runl: return "runl";
    case Rule::runc: return "runc";
    case Rule::runh: return "runh";
  }
  return "?";
}

enum class AnswerKind { value, exception, heap_value, heap_exception, not_answer };

enum class FaultyReason {
  undefined,
  escaping_read,
  escaping_write,
  escaping_reference,
  not_a_function,
  not_a_reference,
  not_an_exception,
};

inline const char* faulty_name(FaultyReason r) {
  switch (r) {
    case FaultyReason::undefined: return "undefined delta";
    case FaultyReason::escaping_read: return "escaping read";
    case FaultyReason::escaping_write: return "escaping write";
    case FaultyReason::escaping_reference: return "escaping reference";
    case FaultyReason::not_a_function: return "not a function";
    case FaultyReason::not_a_reference: return "not a reference";
    case FaultyReason::not_an_exception: return "not an exception";
  }
  return "?";
}

// Exact answer grammar: v | throw c | hp phi v | hp phi (throw c)
inline AnswerKind classify(const Expr& e) {
  if (is_exception(e)) return AnswerKind::exception;
  if (is_value(e)) return AnswerKind::value;
  if (e.tag() == Expr::Tag::heap) {
    const Expr& body = e.kid(0);
    if (is_exception(body)) return AnswerKind::heap_exception;
    if (is_value(body)) return AnswerKind::heap_value;
  }
  return AnswerKind::not_answer;
}

// Interpretation of constants on closed values; nullopt when undefined.
inline std::optional<Expr> delta(const Expr& fn, const Expr& arg) {
  if (fn.tag() == Expr::Tag::con) {
    switch (fn.con_id()) {
      case TermCon::inc:
        if (arg.is_con(TermCon::lit)) return Expr::lit(arg.lit_value() + 1);
        return std::nullopt;
      case TermCon::dec:
        if (arg.is_con(TermCon::lit)) return Expr::lit(arg.lit_value() - 1);
        return std::nullopt;
      case TermCon::add:
        if (arg.is_con(TermCon::lit)) return Expr::pconst(TermCon::add, {arg});
        return std::nullopt;
      case TermCon::if0:
        if (arg.is_con(TermCon::lit)) return Expr::pconst(TermCon::if0, {arg});
        return std::nullopt;
      case TermCon::assign:
        // (:=) r is the partial assignment value (r :=)
        if (arg.tag() == Expr::Tag::refname)
          return Expr::passign(arg.ref_id());
        return std::nullopt;
      default:
        return std::nullopt;
    }
  }
  if (fn.tag() == Expr::Tag::pconst) {
    if (fn.con_id() == TermCon::add && fn.kids().size() == 1 &&
        arg.is_con(TermCon::lit))
      return Expr::lit(fn.kid(0).lit_value() + arg.lit_value());
    if (fn.con_id() == TermCon::if0 && fn.kids().size() == 1)
      return Expr::pconst(TermCon::if0, {fn.kid(0), arg});
    if (fn.con_id() == TermCon::if0 && fn.kids().size() == 2)
      return fn.kid(0).lit_value() == 0 ? fn.kid(1) : arg;
  }
  return std::nullopt;
}

struct StepResult {
  enum class Kind { reduced, answer, faulty, stuck };
  Kind kind;
  Expr term;  // reduced: the next term; faulty/stuck: the offending term
  Rule rule = Rule::beta;
  AnswerKind answer = AnswerKind::not_answer;
  FaultyReason reason = FaultyReason::undefined;

  static StepResult reduced_to(Expr next, Rule r) {
    return StepResult{Kind::reduced, std::move(next), r,
                      AnswerKind::not_answer, FaultyReason::undefined};
  }
  static StepResult answer_of(const Expr& e, AnswerKind k) {
    return StepResult{Kind::answer, e, Rule::beta, k, FaultyReason::undefined};
  }
  static StepResult faulty_at(Expr at, FaultyReason r) {
    return StepResult{Kind::faulty, std::move(at), Rule::beta,
                      AnswerKind::not_answer, r};
  }
  static StepResult stuck_at(Expr at) {
    return StepResult{Kind::stuck, std::move(at), Rule::beta,
                      AnswerKind::not_answer, FaultyReason::undefined};
  }
};

namespace detail {

inline bool function_like(const Expr& v) {
  switch (v.tag()) {
    case Expr::Tag::lam:
    case Expr::Tag::passign:
    case Expr::Tag::pconst:
      return true;
    case Expr::Tag::con:
      switch (v.con_id()) {
        case TermCon::unit:
        case TermCon::lit:
          return false;
        default:
          return true;
      }
    default:
      return false;  // refnames, unit, literals, variables
  }
}

class Stepper {
 public:
  explicit Stepper(int next_ref) : next_ref_(next_ref) {}

  struct Out {
    enum class K {
      stepped,
      value,
      exception,
      blocked_read,
      blocked_write,
      heap_blocked_read,
      heap_blocked_write,
      faulty,
      stuck,
    };
    K k;
    Expr term = Expr::con(TermCon::unit);  // stepped result / faulty position
    Rule rule = Rule::beta;
    int ref = 0;
    Expr write_val = Expr::con(TermCon::unit);
    std::function<Expr(Expr)> plug;  // rebuilds the blocked redex's context
    FaultyReason reason = FaultyReason::undefined;
  };

  Out decompose(const Expr& e) {
    if (is_exception(e)) return Out{Out::K::exception};
    if (is_value(e)) return Out{Out::K::value};
    switch (e.tag()) {
      case Expr::Tag::app: return app_node(e);
      case Expr::Tag::let_: return let_node(e);
      case Expr::Tag::catch_: return catch_node(e);
      case Expr::Tag::run: return run_node(e);
      case Expr::Tag::heap: return heap_node(e);
      case Expr::Tag::bind:
        // a bind node denotes this application
        return decompose(
            Expr::app(Expr::lam(e.name(), e.kid(1)), e.kid(0)));
      default:
        return Out{Out::K::stuck, e};
    }
  }

  int next_ref() const { return next_ref_; }

 private:
  static Out stepped(Expr next, Rule r) {
    Out o{Out::K::stepped};
    o.term = std::move(next);
    o.rule = r;
    return o;
  }

  static Out faulty(const Expr& at, FaultyReason r) {
    Out o{Out::K::faulty};
    o.term = at;
    o.reason = r;
    return o;
  }

  // Recurse into an R/X/E frame position, wrapping results.
  Out frame(const Expr& sub, const std::function<Expr(Expr)>& rebuild) {
    Out o = decompose(sub);
    switch (o.k) {
      case Out::K::stepped:
        o.term = rebuild(o.term);
        return o;
      case Out::K::blocked_read:
      case Out::K::blocked_write: {
        auto inner = o.plug;
        o.plug = [rebuild, inner](Expr h) { return rebuild(inner(std::move(h))); };
        return o;
      }
      default:
        return o;  // faulty, stuck, heap_blocked pass through unchanged
    }
  }

  Out app_node(const Expr& e) {
    const Expr& f = e.kid(0);
    const Expr& a = e.kid(1);
    if (!is_value(f)) {
      if (f.tag() == Expr::Tag::heap)  // (lift) with R = [] e
        return stepped(Expr::heap(f.heap_bindings(), Expr::app(f.kid(0), a)),
                       Rule::lift);
      if (is_exception(f))  // (throw) with X = [] e
        return stepped(f, Rule::throw_);
      return frame(f, [a](Expr h) { return Expr::app(std::move(h), a); });
    }
    if (!is_value(a)) {
      if (a.tag() == Expr::Tag::heap)  // (lift) with R = v []
        return stepped(Expr::heap(a.heap_bindings(), Expr::app(f, a.kid(0))),
                       Rule::lift);
      if (is_exception(a))  // (throw) with X = v []
        return stepped(a, Rule::throw_);
      return frame(a, [f](Expr h) { return Expr::app(f, std::move(h)); });
    }
    return apply_values(e, f, a);
  }

  Out apply_values(const Expr& e, const Expr& f, const Expr& a) {
    if (f.tag() == Expr::Tag::lam)
      return stepped(subst_var(f.kid(0), f.name(), a), Rule::beta);
    if (f.tag() == Expr::Tag::passign) {
      Out o{Out::K::blocked_write};
      o.ref = f.ref_id();
      o.write_val = a;
      o.plug = [](Expr h) { return h; };
      o.term = e;
      return o;
    }
    if (f.tag() == Expr::Tag::con) {
      switch (f.con_id()) {
        case TermCon::fix:
          // fix v -> v (\x. (fix v) x)
          return stepped(
              Expr::app(a, Expr::lam("x", Expr::app(Expr::app(f, a),
                                                    Expr::var("x")))),
              Rule::fix);
        case TermCon::ref: {
          int r = next_ref_++;
          return stepped(Expr::heap(Heap({{r, a}}), Expr::refname(r)),
                         Rule::alloc);
        }
        case TermCon::read: {
          if (a.tag() != Expr::Tag::refname)
            return faulty(e, FaultyReason::not_a_reference);
          Out o{Out::K::blocked_read};
          o.ref = a.ref_id();
          o.plug = [](Expr h) { return h; };
          o.term = e;
          return o;
        }
        case TermCon::assign:
          if (a.tag() != Expr::Tag::refname)
            return faulty(e, FaultyReason::not_a_reference);
          return stepped(*delta(f, a), Rule::delta);
        case TermCon::throw_:
          // throw () is the irreducible exception, caught by is_exception
          return faulty(e, FaultyReason::not_an_exception);
        case TermCon::unit:
        case TermCon::lit:
          return faulty(e, FaultyReason::not_a_function);
        default: {
          if (auto r = delta(f, a)) return stepped(std::move(*r), Rule::delta);
          return faulty(e, FaultyReason::undefined);
        }
      }
    }
    if (f.tag() == Expr::Tag::pconst) {
      if (auto r = delta(f, a)) return stepped(std::move(*r), Rule::delta);
      return faulty(e, FaultyReason::undefined);
    }
    return faulty(e, FaultyReason::not_a_function);
  }

  Out let_node(const Expr& e) {
    const Expr& bound = e.kid(0);
    if (is_value(bound))
      return stepped(subst_var(e.kid(1), e.name(), bound), Rule::let_);
    if (bound.tag() == Expr::Tag::heap)  // (lift) with R = let x = [] in e
      return stepped(Expr::heap(bound.heap_bindings(),
                                Expr::let_(e.name(), bound.kid(0), e.kid(1))),
                     Rule::lift);
    if (is_exception(bound))  // (throw) with X = let x = [] in e
      return stepped(bound, Rule::throw_);
    std::string x = e.name();
    Expr body = e.kid(1);
    return frame(bound, [x, body](Expr h) {
      return Expr::let_(x, std::move(h), body);
    });
  }

  Out catch_node(const Expr& e) {
    const Expr& e1 = e.kid(0);
    if (is_exception(e1))  // catch (throw c) e -> e c
      return stepped(Expr::app(e.kid(1), e1.kid(1)), Rule::catcht);
    if (is_value(e1))  // catch v e -> v
      return stepped(e1, Rule::catchv);
    if (e1.tag() == Expr::Tag::heap)  // (lift) with R = catch [] e
      return stepped(Expr::heap(e1.heap_bindings(),
                                Expr::catch_(e1.kid(0), e.kid(1))),
                     Rule::lift);
    Expr handler = e.kid(1);
    return frame(e1, [handler](Expr h) {
      return Expr::catch_(std::move(h), handler);
    });
  }

  Out run_node(const Expr& e) {
    const Expr& body = e.kid(0);
    if (body.tag() == Expr::Tag::lam)  // run \x.e -> \x. run e
      return stepped(Expr::lam(body.name(), Expr::run(body.kid(0))), Rule::runl);
    if (body.tag() == Expr::Tag::pcatch)  // run (catch e) -> catch (run e)
      return stepped(Expr::pcatch(Expr::run(body.kid(0))), Rule::runc);
    if (is_exception(body) || is_basic_value(body))
      return stepped(body, Rule::runh);  // no heap: frv(w) # {} holds
    if (body.tag() == Expr::Tag::heap) {
      const Heap& phi = body.heap_bindings();
      const Expr& inner = body.kid(0);
      if (inner.tag() == Expr::Tag::lam)
        return stepped(Expr::lam(inner.name(),
                                 Expr::run(Expr::heap(phi, inner.kid(0)))),
                       Rule::runl);
      if (inner.tag() == Expr::Tag::pcatch)
        return stepped(Expr::pcatch(Expr::run(Expr::heap(phi, inner.kid(0)))),
                       Rule::runc);
      if (is_exception(inner) || is_basic_value(inner)) {
        std::set<int> free = frv(inner);
        for (int r : phi.domain())
          if (free.count(r)) return faulty(e, FaultyReason::escaping_reference);
        return stepped(inner, Rule::runh);
      }
      Out o = decompose(body);
      switch (o.k) {
        case Out::K::stepped:
          o.term = Expr::run(o.term);
          return o;
        case Out::K::heap_blocked_read:
          return faulty(e, FaultyReason::escaping_read);
        case Out::K::heap_blocked_write:
          return faulty(e, FaultyReason::escaping_write);
        default:
          return o;
      }
    }
    return frame(body, [](Expr h) { return Expr::run(std::move(h)); });
  }

  Out heap_node(const Expr& e) {
    const Heap& phi = e.heap_bindings();
    const Expr& body = e.kid(0);
    if (body.tag() == Expr::Tag::heap) return merge_heaps(phi, body);
    Out o = decompose(body);
    switch (o.k) {
      case Out::K::stepped:
        o.term = Expr::heap(phi, o.term);
        return o;
      case Out::K::blocked_read: {
        const Expr* v = phi.lookup(o.ref);
        if (!v) {
          Out up{Out::K::heap_blocked_read};
          up.ref = o.ref;
          up.term = e;
          return up;
        }
        return stepped(Expr::heap(phi, o.plug(*v)), Rule::read);
      }
      case Out::K::blocked_write: {
        if (!phi.binds(o.ref)) {
          Out up{Out::K::heap_blocked_write};
          up.ref = o.ref;
          up.term = e;
          return up;
        }
        return stepped(Expr::heap(phi.updated(o.ref, o.write_val),
                                  o.plug(Expr::con(TermCon::unit))),
                       Rule::write);
      }
      default:
        return o;
    }
  }

  Out merge_heaps(const Heap& outer, const Expr& inner_heap) {
    const Heap& inner = inner_heap.heap_bindings();
    std::map<int, int> ren;
    std::set<int> outer_dom = outer.domain();
    for (auto& [r, v] : inner.bindings())
      if (outer_dom.count(r)) ren[r] = next_ref_++;
    std::vector<std::pair<int, Expr>> merged = outer.bindings();
    for (auto& [r, v] : inner.bindings()) {
      int name = ren.count(r) ? ren[r] : r;
      merged.emplace_back(name, rename_refs(v, ren));
    }
    return stepped(
        Expr::heap(Heap(std::move(merged)), rename_refs(inner_heap.kid(0), ren)),
        Rule::merge);
  }

  int next_ref_;
};

}  // namespace detail

// One leftmost-outermost reduction step. Fresh reference names for (alloc)
// come from next_ref; pass the running counter when iterating.
inline StepResult step(const Expr& e, int* next_ref = nullptr) {
  AnswerKind k = classify(e);
  if (k != AnswerKind::not_answer) return StepResult::answer_of(e, k);
  int start = next_ref ? *next_ref : max_ref_id(e) + 1;
  detail::Stepper s(start);
  auto out = s.decompose(e);
  if (next_ref) *next_ref = s.next_ref();
  using K = detail::Stepper::Out::K;
  switch (out.k) {
    case K::stepped:
      return StepResult::reduced_to(out.term, out.rule);
    case K::faulty:
      return StepResult::faulty_at(out.term, out.reason);
    default:
      return StepResult::stuck_at(e);
  }
}

struct EvalOutcome {
  enum class Kind { finished, faulty, fuel_exhausted, stuck };
  Kind kind;
  Expr term;  // answer / faulty position / last term
  AnswerKind answer = AnswerKind::not_answer;
  FaultyReason reason = FaultyReason::undefined;
  long steps = 0;
};

using TraceFn = std::function<void(long, Rule, const Expr&)>;

// Iterates step up to fuel times. Deterministic: the same input and fuel
// yield identical traces.
inline EvalOutcome evaluate(const Expr& e, long fuel,
                            const TraceFn& trace = nullptr) {
  Expr cur = desugar_binds(e);
  int next_ref = max_ref_id(cur) + 1;
  long steps = 0;
  while (true) {
    StepResult r = step(cur, &next_ref);
    switch (r.kind) {
      case StepResult::Kind::answer:
        return EvalOutcome{EvalOutcome::Kind::finished, cur, r.answer,
                           FaultyReason::undefined, steps};
      case StepResult::Kind::faulty:
        return EvalOutcome{EvalOutcome::Kind::faulty, r.term,
                           AnswerKind::not_answer, r.reason, steps};
      case StepResult::Kind::stuck:
        return EvalOutcome{EvalOutcome::Kind::stuck, cur,
                           AnswerKind::not_answer, FaultyReason::undefined,
                           steps};
      case StepResult::Kind::reduced:
        if (steps >= fuel)
          return EvalOutcome{EvalOutcome::Kind::fuel_exhausted, cur,
                             AnswerKind::not_answer, FaultyReason::undefined,
                             steps};
        ++steps;
        if (trace) trace(steps, r.rule, r.term);
        cur = r.term;
        break;
    }
  }
}

// All single (lift) or (merge) applications available at evaluation-context
// positions; used to exercise the reordering diamond.
inline void lift_merge_applications_rec(const Expr& e,
                                        const std::function<Expr(Expr)>& rebuild,
                                        std::vector<std::pair<Expr, Rule>>& out) {
  // merge rooted here
  if (e.tag() == Expr::Tag::heap && e.kid(0).tag() == Expr::Tag::heap) {
    int counter = max_ref_id(e) + 1;
    detail::Stepper s(counter);
    auto m = s.decompose(e);  // body is a heap, so this is exactly the merge
    if (m.k == detail::Stepper::Out::K::stepped && m.rule == Rule::merge)
      out.emplace_back(rebuild(m.term), Rule::merge);
  }
  // lift rooted here: an R frame holding a heap expression
  auto lift_from = [&](const Expr& sub, const std::function<Expr(Expr)>& put) {
    if (sub.tag() == Expr::Tag::heap)
      out.emplace_back(rebuild(Expr::heap(sub.heap_bindings(), put(sub.kid(0)))),
                       Rule::lift);
  };
  switch (e.tag()) {
    case Expr::Tag::app: {
      const Expr f = e.kid(0), a = e.kid(1);
      lift_from(f, [a](Expr h) { return Expr::app(std::move(h), a); });
      lift_merge_applications_rec(
          f, [rebuild, a](Expr h) { return rebuild(Expr::app(std::move(h), a)); },
          out);
      if (is_value(f)) {
        lift_from(a, [f](Expr h) { return Expr::app(f, std::move(h)); });
        lift_merge_applications_rec(
            a, [rebuild, f](Expr h) { return rebuild(Expr::app(f, std::move(h))); },
            out);
      }
      break;
    }
    case Expr::Tag::let_: {
      const Expr b = e.kid(0), body = e.kid(1);
      std::string x = e.name();
      lift_from(b, [x, body](Expr h) { return Expr::let_(x, std::move(h), body); });
      lift_merge_applications_rec(
          b,
          [rebuild, x, body](Expr h) {
            return rebuild(Expr::let_(x, std::move(h), body));
          },
          out);
      break;
    }
    case Expr::Tag::catch_: {
      const Expr e1 = e.kid(0), e2 = e.kid(1);
      lift_from(e1, [e2](Expr h) { return Expr::catch_(std::move(h), e2); });
      lift_merge_applications_rec(
          e1,
          [rebuild, e2](Expr h) { return rebuild(Expr::catch_(std::move(h), e2)); },
          out);
      break;
    }
    case Expr::Tag::run:
      lift_merge_applications_rec(
          e.kid(0), [rebuild](Expr h) { return rebuild(Expr::run(std::move(h))); },
          out);
      break;
    case Expr::Tag::heap: {
      Heap phi = e.heap_bindings();
      lift_merge_applications_rec(
          e.kid(0),
          [rebuild, phi](Expr h) { return rebuild(Expr::heap(phi, std::move(h))); },
          out);
      break;
    }
    default:
      break;
  }
}

inline std::vector<std::pair<Expr, Rule>> lift_merge_applications(const Expr& e) {
  std::vector<std::pair<Expr, Rule>> out;
  lift_merge_applications_rec(e, [](Expr x) { return x; }, out);
  return out;
}

}  // namespace effrow

#endif

#ifndef EFFROW_UNIFY_HPP
#define EFFROW_UNIFY_HPP

#include <string>
#include <utility>

#include "effrow/row.hpp"
#include "effrow/type.hpp"

namespace effrow {

struct UnifyFailure {
  enum class Reason {
    occurs_check,
    head_mismatch,
    kind_mismatch,
    missing_label,
    tail_escape,
  };
  Reason reason;
  Type left;
  Type right;
};

inline const char* reason_name(UnifyFailure::Reason r) {
  switch (r) {
    case UnifyFailure::Reason::occurs_check: return "occurs check";
    case UnifyFailure::Reason::head_mismatch: return "head mismatch";
    case UnifyFailure::Reason::kind_mismatch: return "kind mismatch";
    case UnifyFailure::Reason::missing_label: return "missing label";
    case UnifyFailure::Reason::tail_escape: return "tail escape";
  }
  return "?";
}

struct unify_error : error {
  unify_error(UnifyFailure f, const std::string& msg)
      : error(msg), failure(std::move(f)) {}
  UnifyFailure failure;
};

// uni-eff side condition: the left row's tail must stay out of the
// substitution computed for the right row, or unification may loop.
inline bool tail_guard(const Type& row, const Subst& s) {
  Type tail = effect_tail(row);
  if (!tail.is_var()) return true;
  return !s.contains(tail.var_id());
}

namespace detail {

struct UnifyBudget {
  long remaining = 1'000'000;
  void spend() {
    if (--remaining < 0)
      throw std::logic_error("unification budget exceeded; non-termination bug");
  }
};

[[noreturn]] inline void unify_fail(UnifyFailure::Reason r, const Type& a,
                                    const Type& b) {
  throw unify_error(UnifyFailure{r, a, b}, reason_name(r));
}

inline Subst unify_rec(const Type& t1, const Type& t2, Session& fresh,
                       UnifyBudget& budget);

// Matches a row against a label head: returns the residual tail and a
// substitution s with s(row) equivalent to <s(label) | s(tail)>.
inline std::pair<Type, Subst> unify_effect_rec(const Type& row,
                                               const Type& label,
                                               Session& fresh,
                                               UnifyBudget& budget) {
  budget.spend();
  if (row.is_app(TypeCon::row_extend)) {
    const Type& head = row.args()[0];
    const Type& rest = row.args()[1];
    if (label_eq(label, head)) {
      // eff-head: also unifies the matched labels' type arguments
      Subst s = unify_rec(label, head, fresh, budget);
      return {rest, std::move(s)};
    }
    // eff-swap: keep the non-matching head on the residual tail
    auto [tail, s] = unify_effect_rec(rest, label, fresh, budget);
    return {t_row(head, std::move(tail)), std::move(s)};
  }
  if (row.is_var()) {
    // eff-tail: extend an open row with a fresh tail
    Type tail = fresh.fresh_row();
    Subst s = Subst::single(row.var_id(), Kind::row(), t_row(label, tail));
    return {std::move(tail), std::move(s)};
  }
  unify_fail(UnifyFailure::Reason::missing_label, label, row);
}

inline Subst unify_rows(const Type& ext, const Type& other, Session& fresh,
                        UnifyBudget& budget) {
  const Type& label = ext.args()[0];
  const Type& rest = ext.args()[1];
  auto [tail, s1] = unify_effect_rec(other, label, fresh, budget);
  if (!tail_guard(rest, s1))
    unify_fail(UnifyFailure::Reason::tail_escape, ext, other);
  Subst s2 = unify_rec(s1(rest), s1(tail), fresh, budget);
  return compose(s2, s1);
}

inline Subst unify_rec(const Type& t1, const Type& t2, Session& fresh,
                       UnifyBudget& budget) {
  budget.spend();
  if (!(t1.kind() == t2.kind()))
    unify_fail(UnifyFailure::Reason::kind_mismatch, t1, t2);
  if (t1.is_var() && t2.is_var() && t1.var_id() == t2.var_id()) return Subst();
  if (t1.is_var()) {
    if (occurs(t1.var_id(), t2))
      unify_fail(UnifyFailure::Reason::occurs_check, t1, t2);
    return Subst::single(t1.var_id(), t1.kind(), t2);
  }
  if (t2.is_var()) {
    if (occurs(t2.var_id(), t1))
      unify_fail(UnifyFailure::Reason::occurs_check, t2, t1);
    return Subst::single(t2.var_id(), t2.kind(), t1);
  }
  if (t1.is_app(TypeCon::row_extend)) return unify_rows(t1, t2, fresh, budget);
  if (t2.is_app(TypeCon::row_extend)) return unify_rows(t2, t1, fresh, budget);
  if (t1.tag() == Type::Tag::con && t2.tag() == Type::Tag::con) {
    if (t1.head() == t2.head()) return Subst();
    unify_fail(UnifyFailure::Reason::head_mismatch, t1, t2);
  }
  if (t1.tag() == Type::Tag::app && t2.tag() == Type::Tag::app &&
      t1.head() == t2.head()) {
    // uni-con: argument lists left to right, threading substitutions
    Subst acc;
    for (std::size_t i = 0; i < t1.args().size(); ++i) {
      Subst si = unify_rec(acc(t1.args()[i]), acc(t2.args()[i]), fresh, budget);
      acc = compose(si, acc);
    }
    return acc;
  }
  unify_fail(UnifyFailure::Reason::head_mismatch, t1, t2);
}

}  // namespace detail

// Robinson unification extended with effect rows; returns a most general
// kind-preserving substitution or throws unify_error.
inline Subst unify(const Type& t1, const Type& t2, Session& fresh) {
  detail::UnifyBudget budget;
  return detail::unify_rec(t1, t2, fresh, budget);
}

inline std::pair<Type, Subst> unify_effect(const Type& row, const Type& label,
                                           Session& fresh) {
  detail::UnifyBudget budget;
  return detail::unify_effect_rec(row, label, fresh, budget);
}

}  // namespace effrow

#endif

#ifndef EFFROW_ROW_HPP
#define EFFROW_ROW_HPP

#include <cassert>
#include <utility>
#include <vector>

#include "effrow/type.hpp"

namespace effrow {

inline bool is_label(const Type& t) { return t.kind() == Kind::label(); }
inline bool is_row(const Type& t) { return t.kind() == Kind::row(); }

// Constructor head of a label; type arguments play no part.
inline TypeCon label_head(const Type& l) {
  assert(is_label(l));
  return l.head();
}

// Labels compare on constructor heads only, so st<h1> and st<h2> are equal
// labels even when h1 != h2.
inline bool label_eq(const Type& l1, const Type& l2) {
  return label_head(l1) == label_head(l2);
}

// Decompose a row into its labels (outermost first) and tail. The tail is
// either <> (closed row) or a row variable (open row).
inline std::pair<std::vector<Type>, Type> split_row(const Type& row) {
  assert(is_row(row));
  std::vector<Type> labels;
  Type cur = row;
  while (cur.is_app(TypeCon::row_extend)) {
    labels.push_back(cur.args()[0]);
    cur = cur.args()[1];
  }
  return {std::move(labels), std::move(cur)};
}

inline Type make_row(const std::vector<Type>& labels, Type tail) {
  Type out = std::move(tail);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it)
    out = t_row(*it, out);
  return out;
}

// tl(<l1,...,ln | mu>) = mu ; tl(<l1,...,ln>) = <>
inline Type effect_tail(const Type& row) {
  return split_row(row).second;
}

inline bool effect_contains(const Type& label, const Type& row) {
  assert(is_label(label) && is_row(row));
  Type cur = row;
  while (cur.is_app(TypeCon::row_extend)) {
    if (label_eq(cur.args()[0], label)) return true;
    cur = cur.args()[1];
  }
  return false;
}

inline bool type_eq_modulo_rows(const Type& a, const Type& b);

// The congruence of row equivalence: labels with distinct heads commute,
// duplicates are significant, and tails must agree. Occurrences of the same
// head cannot swap past each other, so they pair up positionally and their
// argument types must agree.
inline bool effect_eq(const Type& e1, const Type& e2) {
  assert(is_row(e1) && is_row(e2));
  auto [ls1, tail1] = split_row(e1);
  auto [ls2, tail2] = split_row(e2);
  if (!tail1.same(tail2)) return false;
  if (ls1.size() != ls2.size()) return false;
  std::vector<bool> used(ls2.size(), false);
  for (const Type& l : ls1) {
    bool found = false;
    for (std::size_t j = 0; j < ls2.size(); ++j) {
      if (used[j] || !label_eq(l, ls2[j])) continue;
      used[j] = true;  // first unused occurrence of the same head
      if (!type_eq_modulo_rows(l, ls2[j])) return false;
      found = true;
      break;
    }
    if (!found) return false;
  }
  return true;
}

// Syntactic equality except that row-kinded positions compare by effect_eq.
inline bool type_eq_modulo_rows(const Type& a, const Type& b) {
  if (is_row(a) && is_row(b)) return effect_eq(a, b);
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case Type::Tag::var: return a.var_id() == b.var_id();
    case Type::Tag::con: return a.head() == b.head();
    case Type::Tag::app: {
      if (a.head() != b.head()) return false;
      if (a.args().size() != b.args().size()) return false;
      for (std::size_t i = 0; i < a.args().size(); ++i)
        if (!type_eq_modulo_rows(a.args()[i], b.args()[i])) return false;
      return true;
    }
  }
  return false;
}

}  // namespace effrow

#endif

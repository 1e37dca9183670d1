#ifndef EFFROW_PRINT_HPP
#define EFFROW_PRINT_HPP

#include <map>
#include <string>
#include <vector>

#include "effrow/expr.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"

namespace effrow {

// Display names assigned at print time, in first-occurrence order:
// a,b,c,d,a1,... for value types, e1,e2,... for rows, h1,h2,... for heaps,
// r1,r2,... for references.
class NameTable {
 public:
  std::string var_name(int id, const Kind& k) {
    auto it = vars_.find(id);
    if (it != vars_.end()) return it->second;
    std::string name;
    if (k == Kind::row()) {
      name = "e" + std::to_string(++rows_);
    } else if (k == Kind::heap()) {
      name = "h" + std::to_string(++heaps_);
    } else {
      static const char letters[] = {'a', 'b', 'c', 'd'};
      int n = stars_++;
      name = std::string(1, letters[n % 4]);
      if (n / 4 > 0) name += std::to_string(n / 4);
    }
    vars_.emplace(id, name);
    return name;
  }

  std::string ref_name(int id) {
    auto it = refs_.find(id);
    if (it != refs_.end()) return it->second;
    std::string name = "r" + std::to_string(++ref_count_);
    refs_.emplace(id, name);
    return name;
  }

 private:
  std::map<int, std::string> vars_;
  std::map<int, std::string> refs_;
  int stars_ = 0;
  int rows_ = 0;
  int heaps_ = 0;
  int ref_count_ = 0;
};

namespace detail {

inline std::string print_type_rec(const Type& t, NameTable& names, bool atom);

inline std::string print_row_rec(const Type& row, NameTable& names) {
  auto [labels, tail] = split_row(row);
  if (labels.empty() && tail.is_var())
    return names.var_name(tail.var_id(), tail.kind());
  // display order: exn, div, st, first occurrence within each; never used
  // semantically
  std::vector<Type> ordered;
  for (TypeCon head : {TypeCon::exn, TypeCon::div, TypeCon::st})
    for (const Type& l : labels)
      if (label_head(l) == head) ordered.push_back(l);
  std::string s = "<";
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (i) s += ",";
    s += print_type_rec(ordered[i], names, false);
  }
  if (tail.is_var()) {
    s += "|" + names.var_name(tail.var_id(), tail.kind());
  }
  s += ">";
  return s;
}

inline std::string print_type_rec(const Type& t, NameTable& names, bool atom) {
  if (is_row(t)) return print_row_rec(t, names);
  switch (t.tag()) {
    case Type::Tag::var:
      return names.var_name(t.var_id(), t.kind());
    case Type::Tag::con:
      return con_name(t.head());
    case Type::Tag::app: {
      switch (t.head()) {
        case TypeCon::fn: {
          const Type& arg = t.args()[0];
          const Type& eff = t.args()[1];
          const Type& res = t.args()[2];
          std::string s = print_type_rec(arg, names, true) + " -> ";
          if (!eff.is_con(TypeCon::row_empty))
            s += print_row_rec(eff, names) + " ";
          s += print_type_rec(res, names, false);
          if (atom) return "(" + s + ")";
          return s;
        }
        case TypeCon::ref:
          return "ref<" + print_type_rec(t.args()[0], names, false) + "," +
                 print_type_rec(t.args()[1], names, false) + ">";
        case TypeCon::st:
          return "st<" + print_type_rec(t.args()[0], names, false) + ">";
        default:
          return print_row_rec(t, names);
      }
    }
  }
  return "?";
}

}  // namespace detail

inline std::string print_type(const Type& t, NameTable& names) {
  return detail::print_type_rec(t, names, false);
}

inline std::string print_type(const Type& t) {
  NameTable names;
  return print_type(t, names);
}

inline std::string print_scheme(const Scheme& s, NameTable& names) {
  if (s.vars.empty()) return print_type(s.body, names);
  std::string out = "forall";
  for (auto& [id, k] : s.vars) out += " " + names.var_name(id, k);
  out += ". " + print_type(s.body, names);
  return out;
}

inline std::string print_scheme(const Scheme& s) {
  NameTable names;
  return print_scheme(s, names);
}

namespace detail {

// precedence: 0 binder bodies, 1 assignment, 2 application, 3 prefix, 4 atom
inline std::string print_expr_rec(const Expr& e, NameTable& names, int prec);

inline std::string wrap(std::string s, int node, int prec) {
  if (node < prec) return "(" + std::move(s) + ")";
  return s;
}

inline std::string print_expr_rec(const Expr& e, NameTable& names, int prec) {
  switch (e.tag()) {
    case Expr::Tag::var:
      return e.name();
    case Expr::Tag::con:
      if (e.con_id() == TermCon::lit) return std::to_string(e.lit_value());
      if (e.con_id() == TermCon::read) return "(!)";
      if (e.con_id() == TermCon::assign) return "(:=)";
      return term_con_name(e.con_id());
    case Expr::Tag::refname:
      return "#" + names.ref_name(e.ref_id());
    case Expr::Tag::passign:
      return "(#" + names.ref_name(e.ref_id()) + " :=)";
    case Expr::Tag::lam:
      return wrap("\\" + e.name() + ". " + print_expr_rec(e.kid(0), names, 0),
                  0, prec);
    case Expr::Tag::let_:
      return wrap("let " + e.name() + " = " +
                      print_expr_rec(e.kid(0), names, 1) + " in " +
                      print_expr_rec(e.kid(1), names, 0),
                  0, prec);
    case Expr::Tag::bind: {
      std::string head =
          e.name() == "_" ? "" : e.name() + " <- ";
      return wrap(head + print_expr_rec(e.kid(0), names, 1) + "; " +
                      print_expr_rec(e.kid(1), names, 0),
                  0, prec);
    }
    case Expr::Tag::app: {
      // resugar reads, writes, throw and ref applications
      if (e.kid(0).is_con(TermCon::read))
        return wrap("!" + print_expr_rec(e.kid(1), names, 4), 3, prec);
      if (e.kid(0).is_con(TermCon::throw_))
        return wrap("throw " + print_expr_rec(e.kid(1), names, 4), 3, prec);
      if (e.kid(0).is_con(TermCon::ref))
        return wrap("ref " + print_expr_rec(e.kid(1), names, 4), 3, prec);
      if (e.kid(0).tag() == Expr::Tag::app &&
          e.kid(0).kid(0).is_con(TermCon::assign))
        return wrap(print_expr_rec(e.kid(0).kid(1), names, 2) + " := " +
                        print_expr_rec(e.kid(1), names, 1),
                    1, prec);
      if (e.kid(0).tag() == Expr::Tag::passign)
        return wrap(print_expr_rec(e.kid(0), names, 4) + " " +
                        print_expr_rec(e.kid(1), names, 4),
                    2, prec);
      return wrap(print_expr_rec(e.kid(0), names, 2) + " " +
                      print_expr_rec(e.kid(1), names, 4),
                  2, prec);
    }
    case Expr::Tag::catch_:
      return wrap("catch " + print_expr_rec(e.kid(0), names, 4) + " " +
                      print_expr_rec(e.kid(1), names, 4),
                  3, prec);
    case Expr::Tag::pcatch:
      return wrap("catch " + print_expr_rec(e.kid(0), names, 4), 3, prec);
    case Expr::Tag::run:
      return wrap("run " + print_expr_rec(e.kid(0), names, 4), 3, prec);
    case Expr::Tag::heap: {
      std::string s = "hp {";
      bool first = true;
      for (auto& [r, v] : e.heap_bindings().bindings()) {
        if (!first) s += ", ";
        first = false;
        s += names.ref_name(r) + " -> " + print_expr_rec(v, names, 1);
      }
      s += "} " + print_expr_rec(e.kid(0), names, 4);
      return wrap(std::move(s), 3, prec);
    }
    case Expr::Tag::pconst: {
      std::string s = term_con_name(e.con_id());
      for (const Expr& k : e.kids()) s += " " + print_expr_rec(k, names, 4);
      return "(" + s + ")";
    }
  }
  return "?";
}

}  // namespace detail

inline std::string print_expr(const Expr& e, NameTable& names) {
  return detail::print_expr_rec(e, names, 0);
}

inline std::string print_expr(const Expr& e) {
  NameTable names;
  return print_expr(e, names);
}

}  // namespace effrow

#endif

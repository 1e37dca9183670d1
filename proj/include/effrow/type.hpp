#ifndef EFFROW_TYPE_HPP
#define EFFROW_TYPE_HPP

#include <map>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "effrow/kind.hpp"

namespace effrow {

// Built-in type constants. Effect rows are ordinary types built from
// row_empty and row_extend; labels are exn, div and st<h>.
enum class TypeCon {
  unit,        // () :: *
  int_,        // int :: *
  fn,          // (_ -> _ _) :: (*,e,*) -> *
  row_empty,   // <> :: e
  row_extend,  // <_|_> :: (k,e) -> e
  ref,         // ref :: (h,*) -> *
  exn,         // exn :: k
  div,         // div :: k
  st,          // st :: h -> k
};

inline Kind con_kind(TypeCon c) {
  switch (c) {
    case TypeCon::unit: return Kind::star();
    case TypeCon::int_: return Kind::star();
    case TypeCon::fn:
      return Kind::arrow({Kind::star(), Kind::row(), Kind::star()}, Kind::star());
    case TypeCon::row_empty: return Kind::row();
    case TypeCon::row_extend:
      return Kind::arrow({Kind::label(), Kind::row()}, Kind::row());
    case TypeCon::ref:
      return Kind::arrow({Kind::heap(), Kind::star()}, Kind::star());
    case TypeCon::exn: return Kind::label();
    case TypeCon::div: return Kind::label();
    case TypeCon::st: return Kind::arrow({Kind::heap()}, Kind::label());
  }
  throw kind_error("unknown type constant");
}

inline const char* con_name(TypeCon c) {
  switch (c) {
    case TypeCon::unit: return "()";
    case TypeCon::int_: return "int";
    case TypeCon::fn: return "->";
    case TypeCon::row_empty: return "<>";
    case TypeCon::row_extend: return "<|>";
    case TypeCon::ref: return "ref";
    case TypeCon::exn: return "exn";
    case TypeCon::div: return "div";
    case TypeCon::st: return "st";
  }
  return "?";
}

// Kinded type tree: variables, constants and constructor applications.
// Immutable; cheap to copy and share.
class Type {
 public:
  enum class Tag { var, con, app };

  Type() : Type(shared_unit()) {}

  static Type var(int id, Kind k) {
    if (k == Kind::label())
      throw kind_error("type variables cannot have label kind");
    auto r = std::make_shared<Rep>();
    r->tag = Tag::var;
    r->id = id;
    r->var_kind = std::make_shared<Kind>(std::move(k));
    return Type(std::move(r));
  }

  static Type con(TypeCon c) {
    auto r = std::make_shared<Rep>();
    r->tag = Tag::con;
    r->head = c;
    return Type(std::move(r));
  }

  static Type app(TypeCon head, std::vector<Type> args) {
    Kind hk = con_kind(head);
    if (!hk.is_arrow() || hk.params().size() != args.size())
      throw kind_error("malformed application: arity mismatch for " +
                       std::string(con_name(head)));
    for (std::size_t i = 0; i < args.size(); ++i)
      if (!(args[i].kind() == hk.params()[i]))
        throw kind_error("malformed application: argument kind mismatch for " +
                         std::string(con_name(head)));
    auto r = std::make_shared<Rep>();
    r->tag = Tag::app;
    r->head = head;
    r->args = std::move(args);
    return Type(std::move(r));
  }

  Tag tag() const { return rep_->tag; }
  bool is_var() const { return rep_->tag == Tag::var; }
  bool is_con(TypeCon c) const { return rep_->tag == Tag::con && rep_->head == c; }
  bool is_app(TypeCon c) const { return rep_->tag == Tag::app && rep_->head == c; }

  int var_id() const { return rep_->id; }
  TypeCon head() const { return rep_->head; }
  const std::vector<Type>& args() const { return rep_->args; }

  Kind kind() const {
    switch (rep_->tag) {
      case Tag::var: return *rep_->var_kind;
      case Tag::con: return con_kind(rep_->head);
      case Tag::app: return con_kind(rep_->head).result();
    }
    throw kind_error("bad type tag");
  }

  // syntactic equality
  bool same(const Type& o) const {
    if (rep_ == o.rep_) return true;
    if (rep_->tag != o.rep_->tag) return false;
    switch (rep_->tag) {
      case Tag::var: return rep_->id == o.rep_->id;
      case Tag::con: return rep_->head == o.rep_->head;
      case Tag::app: {
        if (rep_->head != o.rep_->head) return false;
        if (rep_->args.size() != o.rep_->args.size()) return false;
        for (std::size_t i = 0; i < rep_->args.size(); ++i)
          if (!rep_->args[i].same(o.rep_->args[i])) return false;
        return true;
      }
    }
    return false;
  }

 private:
  struct Rep {
    Tag tag = Tag::con;
    int id = 0;
    std::shared_ptr<Kind> var_kind;
    TypeCon head = TypeCon::unit;
    std::vector<Type> args;
  };

  explicit Type(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}

  static const std::shared_ptr<const Rep>& shared_unit() {
    static const std::shared_ptr<const Rep> r = std::make_shared<Rep>();
    return r;
  }

  std::shared_ptr<const Rep> rep_;
};

inline Kind kind_of(const Type& t) { return t.kind(); }

inline Type t_unit() { return Type::con(TypeCon::unit); }
inline Type t_int() { return Type::con(TypeCon::int_); }
inline Type t_row_nil() { return Type::con(TypeCon::row_empty); }
inline Type t_exn() { return Type::con(TypeCon::exn); }
inline Type t_div() { return Type::con(TypeCon::div); }
inline Type t_st(Type heap) { return Type::app(TypeCon::st, {std::move(heap)}); }
inline Type t_fn(Type arg, Type eff, Type res) {
  return Type::app(TypeCon::fn, {std::move(arg), std::move(eff), std::move(res)});
}
inline Type t_ref(Type heap, Type val) {
  return Type::app(TypeCon::ref, {std::move(heap), std::move(val)});
}
inline Type t_row(Type label, Type tail) {
  return Type::app(TypeCon::row_extend, {std::move(label), std::move(tail)});
}

// Universally quantified type.
struct Scheme {
  std::vector<std::pair<int, Kind>> vars;  // distinct, first-occurrence order
  Type body;

  static Scheme mono(Type t) { return Scheme{{}, std::move(t)}; }
};

inline void free_vars(const Type& t, std::vector<std::pair<int, Kind>>& out,
                      std::set<int>& seen) {
  switch (t.tag()) {
    case Type::Tag::var:
      if (seen.insert(t.var_id()).second) out.emplace_back(t.var_id(), t.kind());
      return;
    case Type::Tag::con: return;
    case Type::Tag::app:
      for (const Type& a : t.args()) free_vars(a, out, seen);
      return;
  }
}

// free type variables, first-occurrence order
inline std::vector<std::pair<int, Kind>> ftv(const Type& t) {
  std::vector<std::pair<int, Kind>> out;
  std::set<int> seen;
  free_vars(t, out, seen);
  return out;
}

inline std::vector<std::pair<int, Kind>> ftv(const Scheme& s) {
  std::vector<std::pair<int, Kind>> out;
  std::set<int> bound_seen;
  for (auto& [id, k] : s.vars) bound_seen.insert(id);
  std::vector<std::pair<int, Kind>> all;
  std::set<int> seen;
  free_vars(s.body, all, seen);
  for (auto& p : all)
    if (!bound_seen.count(p.first)) out.push_back(p);
  return out;
}

inline std::set<int> ftv_set(const Type& t) {
  std::set<int> seen;
  std::vector<std::pair<int, Kind>> out;
  free_vars(t, out, seen);
  return seen;
}

inline bool occurs(int var, const Type& t) {
  switch (t.tag()) {
    case Type::Tag::var: return t.var_id() == var;
    case Type::Tag::con: return false;
    case Type::Tag::app:
      for (const Type& a : t.args())
        if (occurs(var, a)) return true;
      return false;
  }
  return false;
}

// Kind-preserving, idempotent finite map from type variables to types.
class Subst {
 public:
  Subst() = default;

  static Subst single(int var, Kind k, const Type& t) {
    if (!(t.kind() == k))
      throw kind_error("substitution violates kind preservation");
    Subst s;
    s.map_.emplace(var, t);
    return s;
  }

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  bool contains(int var) const { return map_.count(var) != 0; }

  const Type* lookup(int var) const {
    auto it = map_.find(var);
    return it == map_.end() ? nullptr : &it->second;
  }

  Type operator()(const Type& t) const {
    if (map_.empty()) return t;
    switch (t.tag()) {
      case Type::Tag::var: {
        auto it = map_.find(t.var_id());
        if (it == map_.end()) return t;
        if (!(it->second.kind() == t.kind()))
          throw kind_error("substitution violates kind preservation");
        return it->second;
      }
      case Type::Tag::con: return t;
      case Type::Tag::app: {
        std::vector<Type> args;
        args.reserve(t.args().size());
        for (const Type& a : t.args()) args.push_back((*this)(a));
        return Type::app(t.head(), std::move(args));
      }
    }
    return t;
  }

  // Quantified variables are globally unique, so no capture is possible.
  Scheme operator()(const Scheme& s) const {
    return Scheme{s.vars, (*this)(s.body)};
  }

  const std::map<int, Type>& mapping() const { return map_; }

  // apply(compose(s2,s1), t) == apply(s2, apply(s1, t))
  friend Subst compose(const Subst& s2, const Subst& s1) {
    Subst out;
    for (auto& [v, t] : s1.map_) out.map_.emplace(v, s2(t));
    for (auto& [v, t] : s2.map_) out.map_.emplace(v, t);  // s1 wins on overlap
    return out;
  }

 private:
  std::map<int, Type> map_;
};

// Fresh type-variable and reference-name supply. One session per thread.
class Session {
 public:
  Type fresh(Kind k) { return Type::var(next_var_++, std::move(k)); }
  Type fresh_star() { return fresh(Kind::star()); }
  Type fresh_row() { return fresh(Kind::row()); }
  Type fresh_heap() { return fresh(Kind::heap()); }
  int fresh_ref() { return next_ref_++; }

  int var_count() const { return next_var_; }
  void reserve_vars(int upto) {
    if (upto > next_var_) next_var_ = upto;
  }
  void reserve_refs(int upto) {
    if (upto > next_ref_) next_ref_ = upto;
  }

 private:
  int next_var_ = 0;
  int next_ref_ = 0;
};

}  // namespace effrow

#endif

#ifndef EFFROW_EXPR_HPP
#define EFFROW_EXPR_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrow/type.hpp"

namespace effrow {

struct SourceSpan {
  int start = 0;
  int end = 0;
  int line = 0;
  int column = 0;
};

// Term-level constants. Integer literals carry their value; arithmetic
// constants keep the delta function non-trivial.
enum class TermCon {
  unit,
  fix,
  throw_,
  ref,
  read,    // (!)
  assign,  // (:=)
  inc,
  dec,
  add,
  if0,
  lit,  // integer literal
};

inline const char* term_con_name(TermCon c) {
  switch (c) {
    case TermCon::unit: return "()";
    case TermCon::fix: return "fix";
    case TermCon::throw_: return "throw";
    case TermCon::ref: return "ref";
    case TermCon::read: return "!";
    case TermCon::assign: return ":=";
    case TermCon::inc: return "inc";
    case TermCon::dec: return "dec";
    case TermCon::add: return "add";
    case TermCon::if0: return "if0";
    case TermCon::lit: return "<int>";
  }
  return "?";
}

class Expr;
class Heap;
using Exprs = std::vector<Expr>;

// Full expression syntax including the internal forms that appear during
// evaluation: heap bindings, reference names, and partial applications.
class Expr {
 public:
  Expr() : Expr(shared_unit()) {}

  enum class Tag {
    var,
    con,
    lam,
    app,
    let_,
    bind,     // x <- e1; e2, sugar for (\x. e2) e1
    catch_,   // catch e1 e2
    run,
    heap,     // hp phi e
    refname,  // r
    pcatch,   // catch e, a value
    passign,  // (r :=), a value
    pconst,   // constant with captured arguments, a value
  };

  static Expr var(std::string name) {
    auto r = mk(Tag::var);
    r->name = std::move(name);
    return Expr(std::move(r));
  }

  static Expr con(TermCon c) {
    auto r = mk(Tag::con);
    r->con = c;
    return Expr(std::move(r));
  }

  static Expr lit(long value) {
    auto r = mk(Tag::con);
    r->con = TermCon::lit;
    r->lit = value;
    return Expr(std::move(r));
  }

  static Expr lam(std::string param, Expr body) {
    auto r = mk(Tag::lam);
    r->name = std::move(param);
    r->kids = {std::move(body)};
    return Expr(std::move(r));
  }

  // Applying a partial catch is the same term as the two-argument catch form.
  static Expr app(Expr f, Expr a) {
    if (f.tag() == Tag::pcatch) return catch_(f.kid(0), std::move(a));
    auto r = mk(Tag::app);
    r->kids = {std::move(f), std::move(a)};
    return Expr(std::move(r));
  }

  static Expr let_(std::string name, Expr bound, Expr body) {
    auto r = mk(Tag::let_);
    r->name = std::move(name);
    r->kids = {std::move(bound), std::move(body)};
    return Expr(std::move(r));
  }

  static Expr bind(std::string name, Expr bound, Expr body) {
    auto r = mk(Tag::bind);
    r->name = std::move(name);
    r->kids = {std::move(bound), std::move(body)};
    return Expr(std::move(r));
  }

  static Expr catch_(Expr e1, Expr e2) {
    auto r = mk(Tag::catch_);
    r->kids = {std::move(e1), std::move(e2)};
    return Expr(std::move(r));
  }

  static Expr run(Expr e) {
    auto r = mk(Tag::run);
    r->kids = {std::move(e)};
    return Expr(std::move(r));
  }

  static Expr heap(Heap h, Expr body);

  static Expr refname(int r_) {
    auto r = mk(Tag::refname);
    r->ref = r_;
    return Expr(std::move(r));
  }

  static Expr pcatch(Expr e) {
    auto r = mk(Tag::pcatch);
    r->kids = {std::move(e)};
    return Expr(std::move(r));
  }

  static Expr passign(int r_) {
    auto r = mk(Tag::passign);
    r->ref = r_;
    return Expr(std::move(r));
  }

  static Expr pconst(TermCon c, Exprs captured) {
    auto r = mk(Tag::pconst);
    r->con = c;
    r->kids = std::move(captured);
    return Expr(std::move(r));
  }

  Tag tag() const { return rep_->tag; }
  const std::string& name() const { return rep_->name; }
  TermCon con_id() const { return rep_->con; }
  long lit_value() const { return rep_->lit; }
  int ref_id() const { return rep_->ref; }
  const Heap& heap_bindings() const { return *rep_->heap_; }
  // defined after Heap below
  const Exprs& kids() const { return rep_->kids; }
  const Expr& kid(std::size_t i) const { return rep_->kids[i]; }

  bool is_con(TermCon c) const { return rep_->tag == Tag::con && rep_->con == c; }

  Expr with_span(SourceSpan s) const {
    auto r = std::make_shared<Rep>(*rep_);
    r->span = s;
    return Expr(std::move(r));
  }
  const SourceSpan& span() const { return rep_->span; }

  bool identical(const Expr& o) const { return rep_ == o.rep_; }

 private:
  struct Rep {
    Tag tag = Tag::con;
    std::string name;
    TermCon con = TermCon::unit;
    long lit = 0;
    int ref = 0;
    std::shared_ptr<const Heap> heap_;
    Exprs kids;
    SourceSpan span;
  };

  static std::shared_ptr<Rep> mk(Tag t) {
    auto r = std::make_shared<Rep>();
    r->tag = t;
    return r;
  }

  explicit Expr(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}

  static const std::shared_ptr<const Rep>& shared_unit() {
    static const std::shared_ptr<const Rep> r = std::make_shared<Rep>();
    return r;
  }

  std::shared_ptr<const Rep> rep_;
};

// Ordered finite map from reference names to values. Binder names are
// pairwise distinct; equality is modulo alpha-renaming of references.
class Heap {
 public:
  Heap() = default;
  explicit Heap(std::vector<std::pair<int, Expr>> bindings)
      : bindings_(std::move(bindings)) {}

  const std::vector<std::pair<int, Expr>>& bindings() const { return bindings_; }
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }

  const Expr* lookup(int r) const {
    for (auto& [name, v] : bindings_)
      if (name == r) return &v;
    return nullptr;
  }

  bool binds(int r) const { return lookup(r) != nullptr; }

  Heap updated(int r, Expr v) const {
    std::vector<std::pair<int, Expr>> out = bindings_;
    for (auto& [name, val] : out)
      if (name == r) {
        val = std::move(v);
        return Heap(std::move(out));
      }
    out.emplace_back(r, std::move(v));
    return Heap(std::move(out));
  }

  std::set<int> domain() const {
    std::set<int> out;
    for (auto& [name, v] : bindings_) out.insert(name);
    return out;
  }

 private:
  std::vector<std::pair<int, Expr>> bindings_;
};

inline Expr Expr::heap(Heap h, Expr body) {
  auto r = mk(Tag::heap);
  r->heap_ = std::make_shared<Heap>(std::move(h));
  r->kids = {std::move(body)};
  return Expr(std::move(r));
}

// Values per the full expression grammar. Variables count as basic values,
// which only matters for open terms.
inline bool is_value(const Expr& e) {
  switch (e.tag()) {
    case Expr::Tag::var:
    case Expr::Tag::con:
    case Expr::Tag::lam:
    case Expr::Tag::refname:
    case Expr::Tag::pcatch:
    case Expr::Tag::passign:
    case Expr::Tag::pconst:
      return true;
    default:
      return false;
  }
}

inline bool is_basic_value(const Expr& e) {
  switch (e.tag()) {
    case Expr::Tag::var:
    case Expr::Tag::con:
    case Expr::Tag::refname:
    case Expr::Tag::passign:
    case Expr::Tag::pconst:
      return true;
    default:
      return false;
  }
}

// throw () is the irreducible exception form. Exceptions carry only the unit
// value; throw applied to anything else is a faulty expression.
inline bool is_exception(const Expr& e) {
  return e.tag() == Expr::Tag::app && e.kid(0).is_con(TermCon::throw_) &&
         e.kid(1).is_con(TermCon::unit);
}

inline void free_term_vars(const Expr& e, std::set<std::string>& bound,
                           std::set<std::string>& out) {
  switch (e.tag()) {
    case Expr::Tag::var:
      if (!bound.count(e.name())) out.insert(e.name());
      return;
    case Expr::Tag::lam: {
      bool added = bound.insert(e.name()).second;
      free_term_vars(e.kid(0), bound, out);
      if (added) bound.erase(e.name());
      return;
    }
    case Expr::Tag::let_:
    case Expr::Tag::bind: {
      free_term_vars(e.kid(0), bound, out);
      bool added = bound.insert(e.name()).second;
      free_term_vars(e.kid(1), bound, out);
      if (added) bound.erase(e.name());
      return;
    }
    case Expr::Tag::heap:
      for (auto& [r, v] : e.heap_bindings().bindings())
        free_term_vars(v, bound, out);
      free_term_vars(e.kid(0), bound, out);
      return;
    default:
      for (const Expr& k : e.kids()) free_term_vars(k, bound, out);
      return;
  }
}

inline std::set<std::string> fv(const Expr& e) {
  std::set<std::string> bound, out;
  free_term_vars(e, bound, out);
  return out;
}

// Reference names occurring free; heap binders scope over their values and
// the body.
inline void free_refs(const Expr& e, std::set<int>& bound, std::set<int>& out) {
  switch (e.tag()) {
    case Expr::Tag::refname:
    case Expr::Tag::passign:
      if (!bound.count(e.ref_id())) out.insert(e.ref_id());
      return;
    case Expr::Tag::heap: {
      std::set<int> added;
      for (auto& [r, v] : e.heap_bindings().bindings())
        if (bound.insert(r).second) added.insert(r);
      for (auto& [r, v] : e.heap_bindings().bindings()) free_refs(v, bound, out);
      free_refs(e.kid(0), bound, out);
      for (int r : added) bound.erase(r);
      return;
    }
    default:
      for (const Expr& k : e.kids()) free_refs(k, bound, out);
      return;
  }
}

inline std::set<int> frv(const Expr& e) {
  std::set<int> bound, out;
  free_refs(e, bound, out);
  return out;
}

inline int max_ref_id(const Expr& e) {
  int best = -1;
  if (e.tag() == Expr::Tag::refname || e.tag() == Expr::Tag::passign)
    best = e.ref_id();
  if (e.tag() == Expr::Tag::heap)
    for (auto& [r, v] : e.heap_bindings().bindings()) {
      best = std::max(best, r);
      best = std::max(best, max_ref_id(v));
    }
  for (const Expr& k : e.kids()) best = std::max(best, max_ref_id(k));
  return best;
}

namespace detail {

inline std::string pick_fresh_name(const std::string& base,
                                   const std::set<std::string>& avoid) {
  std::string cand = base + "'";
  while (avoid.count(cand)) cand += "'";
  return cand;
}

}  // namespace detail

namespace detail {

inline Expr subst_var_rec(const Expr& e, const std::string& x, const Expr& v,
                          const std::set<std::string>& free_v) {
  switch (e.tag()) {
    case Expr::Tag::var:
      return e.name() == x ? v : e;
    case Expr::Tag::con:
    case Expr::Tag::refname:
    case Expr::Tag::passign:
      return e;
    case Expr::Tag::lam: {
      if (e.name() == x) return e;
      if (free_v.count(e.name())) {
        std::set<std::string> avoid = free_v;
        auto fb = fv(e.kid(0));
        avoid.insert(fb.begin(), fb.end());
        std::string fresh = pick_fresh_name(e.name(), avoid);
        Expr renamed = subst_var_rec(e.kid(0), e.name(), Expr::var(fresh), {});
        return Expr::lam(fresh, subst_var_rec(renamed, x, v, free_v));
      }
      return Expr::lam(e.name(), subst_var_rec(e.kid(0), x, v, free_v));
    }
    case Expr::Tag::let_:
    case Expr::Tag::bind: {
      Expr bound = subst_var_rec(e.kid(0), x, v, free_v);
      if (e.name() == x) {
        return e.tag() == Expr::Tag::let_
                   ? Expr::let_(e.name(), std::move(bound), e.kid(1))
                   : Expr::bind(e.name(), std::move(bound), e.kid(1));
      }
      std::string binder = e.name();
      Expr body = e.kid(1);
      if (free_v.count(binder)) {
        std::set<std::string> avoid = free_v;
        auto fb = fv(body);
        avoid.insert(fb.begin(), fb.end());
        std::string fresh = pick_fresh_name(binder, avoid);
        body = subst_var_rec(body, binder, Expr::var(fresh), {});
        binder = fresh;
      }
      body = subst_var_rec(body, x, v, free_v);
      return e.tag() == Expr::Tag::let_
                 ? Expr::let_(binder, std::move(bound), std::move(body))
                 : Expr::bind(binder, std::move(bound), std::move(body));
    }
    case Expr::Tag::app:
      return Expr::app(subst_var_rec(e.kid(0), x, v, free_v),
                       subst_var_rec(e.kid(1), x, v, free_v));
    case Expr::Tag::catch_:
      return Expr::catch_(subst_var_rec(e.kid(0), x, v, free_v),
                          subst_var_rec(e.kid(1), x, v, free_v));
    case Expr::Tag::run:
      return Expr::run(subst_var_rec(e.kid(0), x, v, free_v));
    case Expr::Tag::pcatch:
      return Expr::pcatch(subst_var_rec(e.kid(0), x, v, free_v));
    case Expr::Tag::pconst: {
      Exprs kids;
      kids.reserve(e.kids().size());
      for (const Expr& k : e.kids())
        kids.push_back(subst_var_rec(k, x, v, free_v));
      return Expr::pconst(e.con_id(), std::move(kids));
    }
    case Expr::Tag::heap: {
      std::vector<std::pair<int, Expr>> bs;
      for (auto& [r, val] : e.heap_bindings().bindings())
        bs.emplace_back(r, subst_var_rec(val, x, v, free_v));
      return Expr::heap(Heap(std::move(bs)), subst_var_rec(e.kid(0), x, v, free_v));
    }
  }
  return e;
}

}  // namespace detail

// Capture-avoiding substitution of a term for a variable. Evaluation only
// substitutes closed values, but renaming keeps this total on open terms.
inline Expr subst_var(const Expr& e, const std::string& x, const Expr& v) {
  return detail::subst_var_rec(e, x, v, fv(v));
}

// Rename free reference occurrences; used for heap alpha-renaming on merge.
inline Expr rename_refs(const Expr& e, const std::map<int, int>& ren) {
  if (ren.empty()) return e;
  switch (e.tag()) {
    case Expr::Tag::refname: {
      auto it = ren.find(e.ref_id());
      return it == ren.end() ? e : Expr::refname(it->second);
    }
    case Expr::Tag::passign: {
      auto it = ren.find(e.ref_id());
      return it == ren.end() ? e : Expr::passign(it->second);
    }
    case Expr::Tag::var:
    case Expr::Tag::con:
      return e;
    case Expr::Tag::heap: {
      std::map<int, int> inner = ren;
      for (auto& [r, v] : e.heap_bindings().bindings()) inner.erase(r);
      if (inner.empty()) return e;
      std::vector<std::pair<int, Expr>> bs;
      for (auto& [r, v] : e.heap_bindings().bindings())
        bs.emplace_back(r, rename_refs(v, inner));
      return Expr::heap(Heap(std::move(bs)), rename_refs(e.kid(0), inner));
    }
    case Expr::Tag::lam:
      return Expr::lam(e.name(), rename_refs(e.kid(0), ren));
    case Expr::Tag::let_:
      return Expr::let_(e.name(), rename_refs(e.kid(0), ren),
                        rename_refs(e.kid(1), ren));
    case Expr::Tag::bind:
      return Expr::bind(e.name(), rename_refs(e.kid(0), ren),
                        rename_refs(e.kid(1), ren));
    case Expr::Tag::app:
      return Expr::app(rename_refs(e.kid(0), ren), rename_refs(e.kid(1), ren));
    case Expr::Tag::catch_:
      return Expr::catch_(rename_refs(e.kid(0), ren), rename_refs(e.kid(1), ren));
    case Expr::Tag::run:
      return Expr::run(rename_refs(e.kid(0), ren));
    case Expr::Tag::pcatch:
      return Expr::pcatch(rename_refs(e.kid(0), ren));
    case Expr::Tag::pconst: {
      Exprs kids;
      for (const Expr& k : e.kids()) kids.push_back(rename_refs(k, ren));
      return Expr::pconst(e.con_id(), std::move(kids));
    }
  }
  return e;
}

namespace detail {

// Alpha equivalence over both term binders and heap reference binders.
inline bool alpha_eq_rec(const Expr& a, const Expr& b,
                         std::map<std::string, std::string>& vmap,
                         std::map<int, int>& rmap) {
  if (a.tag() != b.tag()) return false;
  switch (a.tag()) {
    case Expr::Tag::var: {
      auto it = vmap.find(a.name());
      if (it != vmap.end()) return it->second == b.name();
      return a.name() == b.name();
    }
    case Expr::Tag::con:
      return a.con_id() == b.con_id() && a.lit_value() == b.lit_value();
    case Expr::Tag::refname:
    case Expr::Tag::passign: {
      auto it = rmap.find(a.ref_id());
      if (it != rmap.end()) return it->second == b.ref_id();
      return a.ref_id() == b.ref_id();
    }
    case Expr::Tag::lam: {
      auto saved = vmap;
      vmap[a.name()] = b.name();
      bool ok = alpha_eq_rec(a.kid(0), b.kid(0), vmap, rmap);
      vmap = saved;
      return ok;
    }
    case Expr::Tag::let_:
    case Expr::Tag::bind: {
      if (!alpha_eq_rec(a.kid(0), b.kid(0), vmap, rmap)) return false;
      auto saved = vmap;
      vmap[a.name()] = b.name();
      bool ok = alpha_eq_rec(a.kid(1), b.kid(1), vmap, rmap);
      vmap = saved;
      return ok;
    }
    case Expr::Tag::heap: {
      auto& ba = a.heap_bindings().bindings();
      auto& bb = b.heap_bindings().bindings();
      if (ba.size() != bb.size()) return false;
      auto saved = rmap;
      for (std::size_t i = 0; i < ba.size(); ++i) rmap[ba[i].first] = bb[i].first;
      bool ok = true;
      for (std::size_t i = 0; i < ba.size() && ok; ++i)
        ok = alpha_eq_rec(ba[i].second, bb[i].second, vmap, rmap);
      if (ok) ok = alpha_eq_rec(a.kid(0), b.kid(0), vmap, rmap);
      rmap = saved;
      return ok;
    }
    default: {
      if (a.kids().size() != b.kids().size()) return false;
      if (a.tag() == Expr::Tag::pconst && a.con_id() != b.con_id()) return false;
      for (std::size_t i = 0; i < a.kids().size(); ++i)
        if (!alpha_eq_rec(a.kid(i), b.kid(i), vmap, rmap)) return false;
      return true;
    }
  }
}

}  // namespace detail

inline bool alpha_eq(const Expr& a, const Expr& b) {
  std::map<std::string, std::string> vmap;
  std::map<int, int> rmap;
  return detail::alpha_eq_rec(a, b, vmap, rmap);
}

// bind(x, e1, e2) denotes (\x. e2) e1; inference and evaluation work on the
// desugared form.
inline Expr desugar_binds(const Expr& e) {
  switch (e.tag()) {
    case Expr::Tag::bind:
      return Expr::app(Expr::lam(e.name(), desugar_binds(e.kid(1))),
                       desugar_binds(e.kid(0)));
    case Expr::Tag::var:
    case Expr::Tag::con:
    case Expr::Tag::refname:
    case Expr::Tag::passign:
      return e;
    case Expr::Tag::lam:
      return Expr::lam(e.name(), desugar_binds(e.kid(0)));
    case Expr::Tag::let_:
      return Expr::let_(e.name(), desugar_binds(e.kid(0)),
                        desugar_binds(e.kid(1)));
    case Expr::Tag::app:
      return Expr::app(desugar_binds(e.kid(0)), desugar_binds(e.kid(1)));
    case Expr::Tag::catch_:
      return Expr::catch_(desugar_binds(e.kid(0)), desugar_binds(e.kid(1)));
    case Expr::Tag::run:
      return Expr::run(desugar_binds(e.kid(0)));
    case Expr::Tag::pcatch:
      return Expr::pcatch(desugar_binds(e.kid(0)));
    case Expr::Tag::pconst: {
      Exprs kids;
      for (const Expr& k : e.kids()) kids.push_back(desugar_binds(k));
      return Expr::pconst(e.con_id(), std::move(kids));
    }
    case Expr::Tag::heap: {
      std::vector<std::pair<int, Expr>> bs;
      for (auto& [r, v] : e.heap_bindings().bindings())
        bs.emplace_back(r, desugar_binds(v));
      return Expr::heap(Heap(std::move(bs)), desugar_binds(e.kid(0)));
    }
  }
  return e;
}

inline bool contains_internal_forms(const Expr& e) {
  switch (e.tag()) {
    case Expr::Tag::heap:
    case Expr::Tag::refname:
    case Expr::Tag::pcatch:
    case Expr::Tag::passign:
    case Expr::Tag::pconst:
      return true;
    default:
      for (const Expr& k : e.kids())
        if (contains_internal_forms(k)) return true;
      return false;
  }
}

}  // namespace effrow

#endif

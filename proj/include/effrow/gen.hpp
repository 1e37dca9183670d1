#ifndef EFFROW_GEN_HPP
#define EFFROW_GEN_HPP

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "effrow/env.hpp"
#include "effrow/expr.hpp"
#include "effrow/infer.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"

namespace effrow {

struct GenConfig {
  unsigned long long seed = 1;
  int max_depth = 5;  // desk scale; capped at 8
  bool allow_exn = true;
  bool allow_st = true;
  bool allow_div = true;
  int retry_budget = 64;
};

struct generation_error : error {
  using error::error;
};

inline bool effect_within(const Type& eff, const GenConfig& cfg) {
  auto [labels, tail] = split_row(eff);
  for (const Type& l : labels) {
    switch (label_head(l)) {
      case TypeCon::exn:
        if (!cfg.allow_exn) return false;
        break;
      case TypeCon::div:
        if (!cfg.allow_div) return false;
        break;
      case TypeCon::st:
        if (!cfg.allow_st) return false;
        break;
      default:
        return false;
    }
  }
  return true;
}

namespace detail {

// Top-down generation guided by target shapes. Effect components of the
// shape types are placeholders; the verifying inference run is the arbiter.
class TermGen {
 public:
  explicit TermGen(const GenConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), depth_cap_(cfg.max_depth > 8 ? 8 : cfg.max_depth) {}

  Expr generate(const Type& target) {
    for (int attempt = 0; attempt < cfg_.retry_budget; ++attempt) {
      name_counter_ = 0;
      Expr candidate = gen({}, target, depth_cap_, false);
      try {
        Session s;
        InferResult r = infer(Env{}, candidate, s);
        if (effect_within(r.effect, cfg_)) return candidate;
      } catch (const TypeError&) {
      }
    }
    throw generation_error("generation budget exhausted; configuration too restrictive");
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  struct VarEntry {
    std::string name;
    Type type;
  };
  using Scope = std::vector<VarEntry>;

  int roll(int n) { return static_cast<int>(rng_() % static_cast<unsigned>(n)); }
  bool chance(int percent) { return roll(100) < percent; }

  std::string fresh_name() { return "v" + std::to_string(name_counter_++); }

  std::vector<Type> shape_pool(int depth) {
    std::vector<Type> pool = {t_unit(), t_int()};
    if (depth >= 2) pool.push_back(t_fn(t_int(), t_row_nil(), t_int()));
    return pool;
  }

  Expr base(const Scope& scope, const Type& target) {
    if (chance(30)) {
      std::vector<const VarEntry*> hits;
      for (const VarEntry& v : scope)
        if (v.type.same(target)) hits.push_back(&v);
      if (!hits.empty()) return Expr::var(hits[roll((int)hits.size())]->name);
    }
    if (target.is_con(TypeCon::int_)) return Expr::lit(roll(20) - 5);
    if (target.is_con(TypeCon::unit)) return Expr::con(TermCon::unit);
    if (target.is_app(TypeCon::fn)) {
      std::string x = fresh_name();
      Scope inner = scope;
      inner.push_back({x, target.args()[0]});
      return Expr::lam(x, base(inner, target.args()[2]));
    }
    return Expr::con(TermCon::unit);
  }

  // a syntactic value, safe to let-bind under the value restriction
  Expr value_of(const Scope& scope, const Type& target, int depth) {
    if (target.is_app(TypeCon::fn)) {
      std::string x = fresh_name();
      Scope inner = scope;
      inner.push_back({x, target.args()[0]});
      return Expr::lam(x, gen(inner, target.args()[2], depth - 1, false));
    }
    return base(scope, target);
  }

  Expr gen_int_arith(const Scope& scope, int depth) {
    switch (roll(3)) {
      case 0:
        return Expr::app(Expr::con(roll(2) ? TermCon::inc : TermCon::dec),
                         gen(scope, t_int(), depth - 1, false));
      case 1:
        return Expr::app(
            Expr::app(Expr::con(TermCon::add), gen(scope, t_int(), depth - 1, false)),
            gen(scope, t_int(), depth - 1, false));
      default:
        return Expr::app(
            Expr::app(Expr::app(Expr::con(TermCon::if0),
                                gen(scope, t_int(), depth - 1, false)),
                      gen(scope, t_int(), depth - 1, false)),
            gen(scope, t_int(), depth - 1, false));
    }
  }

  Expr gen_run_block(const Scope& scope, const Type& target, int depth) {
    std::string x = fresh_name();
    Scope inner = scope;
    // the reference itself stays out of scope shapes: ref types never match
    // the pool so the variable is only used through the statements below
    Expr body = cfg_.allow_div && target.is_con(TypeCon::int_)
                    ? Expr::app(Expr::con(TermCon::read), Expr::var(x))
                    : gen(inner, target, depth - 1, false);
    int writes = roll(2);
    for (int i = 0; i < writes; ++i)
      body = Expr::bind("_", Expr::app(Expr::app(Expr::con(TermCon::assign),
                                                 Expr::var(x)),
                                       gen(inner, t_int(), depth - 1, false)),
                        body);
    return Expr::run(
        Expr::bind(x, Expr::app(Expr::con(TermCon::ref), Expr::lit(roll(10))), body));
  }

  Expr gen_open_state(const Scope& scope, const Type& target, int depth) {
    std::string x = fresh_name();
    Expr body = cfg_.allow_div && target.is_con(TypeCon::int_) && chance(50)
                    ? Expr::app(Expr::con(TermCon::read), Expr::var(x))
                    : gen(scope, target, depth - 1, false);
    if (chance(60))
      body = Expr::bind("_", Expr::app(Expr::app(Expr::con(TermCon::assign),
                                                 Expr::var(x)),
                                       gen(scope, t_int(), depth - 1, false)),
                        body);
    return Expr::bind(x, Expr::app(Expr::con(TermCon::ref), Expr::lit(roll(10))),
                      body);
  }

  Expr gen_fix() {
    // a terminating countdown typed with the divergence effect; the branches
    // are thunked since if0 is call by value
    Expr base_thunk = Expr::lam("u", Expr::lit(0));
    Expr rec_thunk = Expr::lam(
        "u", Expr::app(Expr::var("f"),
                       Expr::app(Expr::con(TermCon::dec), Expr::var("n"))));
    Expr select = Expr::app(
        Expr::app(Expr::app(Expr::con(TermCon::if0), Expr::var("n")), base_thunk),
        rec_thunk);
    Expr countdown = Expr::app(
        Expr::con(TermCon::fix),
        Expr::lam("f", Expr::lam("n", Expr::app(select, Expr::con(TermCon::unit)))));
    if (chance(5))  // a genuine loop, rarely
      return Expr::app(Expr::app(Expr::con(TermCon::fix),
                                 Expr::lam("f", Expr::lam("x",
                                                          Expr::app(Expr::var("f"),
                                                                    Expr::var("x"))))),
                       Expr::con(TermCon::unit));
    // a non-negative argument keeps the countdown terminating
    return Expr::app(countdown, Expr::lit(roll(8)));
  }

  Expr gen(const Scope& scope, const Type& target, int depth, bool in_catch) {
    if (depth <= 0) return base(scope, target);

    // variables of the right shape first, occasionally
    if (chance(15)) {
      std::vector<const VarEntry*> hits;
      for (const VarEntry& v : scope)
        if (v.type.same(target)) hits.push_back(&v);
      if (!hits.empty()) return Expr::var(hits[roll((int)hits.size())]->name);
    }

    if (target.is_app(TypeCon::fn) && chance(70)) {
      std::string x = fresh_name();
      Scope inner = scope;
      inner.push_back({x, target.args()[0]});
      return Expr::lam(x, gen(inner, target.args()[2], depth - 1, false));
    }

    switch (roll(12)) {
      case 0: {  // application at a picked argument shape
        std::vector<Type> pool = shape_pool(depth);
        Type arg_shape = pool[roll((int)pool.size())];
        Expr f = gen(scope, t_fn(arg_shape, t_row_nil(), target), depth - 1, false);
        Expr a = gen(scope, arg_shape, depth - 1, false);
        return Expr::app(std::move(f), std::move(a));
      }
      case 1: {  // let with a value binding
        std::vector<Type> pool = shape_pool(depth);
        Type bound_shape = pool[roll((int)pool.size())];
        std::string x = fresh_name();
        Expr bound = value_of(scope, bound_shape, depth);
        Scope inner = scope;
        inner.push_back({x, bound_shape});
        return Expr::let_(x, std::move(bound),
                          gen(inner, target, depth - 1, in_catch));
      }
      case 2:
        if (target.is_con(TypeCon::int_)) return gen_int_arith(scope, depth);
        break;
      case 3: {  // catch: the caught body may throw even when exn is banned
        std::string x = fresh_name();
        Scope inner = scope;
        inner.push_back({x, t_unit()});
        return Expr::catch_(gen(scope, target, depth - 1, true),
                            Expr::lam(x, gen(inner, target, depth - 1, in_catch)));
      }
      case 4:
        if (in_catch || cfg_.allow_exn)
          return Expr::app(Expr::con(TermCon::throw_), Expr::con(TermCon::unit));
        break;
      case 5:
        return gen_run_block(scope, target, depth);
      case 6:
        if (cfg_.allow_st) return gen_open_state(scope, target, depth);
        break;
      case 7:
        if (cfg_.allow_div && target.is_con(TypeCon::int_)) return gen_fix();
        break;
      case 8: {  // sequencing
        Expr first = gen(scope, t_unit(), depth - 1, in_catch);
        return Expr::bind("_", std::move(first),
                          gen(scope, target, depth - 1, in_catch));
      }
      default:
        break;
    }
    return base(scope, target);
  }

  GenConfig cfg_;
  std::mt19937_64 rng_;
  int depth_cap_;
  int name_counter_ = 0;
};

}  // namespace detail

// Generates a closed surface term accepted by inference whose visible effect
// labels stay within the configured feature set. Deterministic per seed.
inline Expr gen_well_typed(const GenConfig& cfg, const Type& target) {
  detail::TermGen g(cfg);
  return g.generate(target);
}

}  // namespace effrow

#endif

#ifndef EFFROW_ENV_HPP
#define EFFROW_ENV_HPP

#include <map>
#include <set>
#include <string>
#include <utility>

#include "effrow/type.hpp"

namespace effrow {

enum class BindOrigin { let_bound, lambda_bound };

// Type environment: term variables to schemes, plus reference-name typings
// r : ref<h,t> that enter via heap typing. Let-bound entries carry both the
// scheme uses instantiate (possibly closed) and the plain generalization the
// checker validates against.
class Env {
 public:
  struct Binding {
    Scheme use;
    Scheme check;
    BindOrigin origin = BindOrigin::lambda_bound;
  };

  Env() = default;

  const Binding* lookup(const std::string& name) const {
    auto it = vars_.find(name);
    return it == vars_.end() ? nullptr : &it->second;
  }

  const Type* lookup_ref(int r) const {
    auto it = refs_.find(r);
    return it == refs_.end() ? nullptr : &it->second;
  }

  Env with_var(const std::string& name, Binding b) const {
    Env out = *this;
    out.vars_[name] = std::move(b);
    return out;
  }

  Env with_lambda(const std::string& name, Type t) const {
    Scheme m = Scheme::mono(std::move(t));
    return with_var(name, Binding{m, m, BindOrigin::lambda_bound});
  }

  Env with_let(const std::string& name, Scheme use, Scheme check) const {
    return with_var(name,
                    Binding{std::move(use), std::move(check), BindOrigin::let_bound});
  }

  Env with_ref(int r, Type t) const {
    Env out = *this;
    out.refs_[r] = std::move(t);
    return out;
  }

  Env apply(const Subst& s) const {
    if (s.empty()) return *this;
    Env out;
    for (auto& [name, b] : vars_)
      out.vars_.emplace(name, Binding{s(b.use), s(b.check), b.origin});
    for (auto& [r, t] : refs_) out.refs_.emplace(r, s(t));
    return out;
  }

  std::set<int> ftv() const {
    std::set<int> out;
    for (auto& [name, b] : vars_) {
      for (auto& [id, k] : effrow::ftv(b.use)) out.insert(id);
      for (auto& [id, k] : effrow::ftv(b.check)) out.insert(id);
    }
    for (auto& [r, t] : refs_)
      for (auto& [id, k] : effrow::ftv(t)) out.insert(id);
    return out;
  }

  const std::map<std::string, Binding>& vars() const { return vars_; }
  const std::map<int, Type>& refs() const { return refs_; }

 private:
  std::map<std::string, Binding> vars_;
  std::map<int, Type> refs_;
};

}  // namespace effrow

#endif

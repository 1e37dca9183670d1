#ifndef EFFROW_KIND_HPP
#define EFFROW_KIND_HPP

#include <cassert>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace effrow {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct kind_error : error {
  using error::error;
};

namespace detail {
struct KindArrow;
}

// Kinds classify types: values (*), effect rows (e), effect labels (k),
// heaps (h), and n-ary constructors.
class Kind {
 public:
  enum class Tag { star, row, label, heap, arrow };

  static Kind star() { return Kind(Tag::star); }
  static Kind row() { return Kind(Tag::row); }
  static Kind label() { return Kind(Tag::label); }
  static Kind heap() { return Kind(Tag::heap); }

  static Kind arrow(std::vector<Kind> params, Kind result);

  Tag tag() const { return tag_; }
  bool is_arrow() const { return tag_ == Tag::arrow; }

  const std::vector<Kind>& params() const;
  const Kind& result() const;

  friend bool operator==(const Kind& a, const Kind& b);
  friend bool operator!=(const Kind& a, const Kind& b) { return !(a == b); }

 private:
  explicit Kind(Tag t) : tag_(t) {}

  Tag tag_;
  std::shared_ptr<const detail::KindArrow> arrow_;
};

namespace detail {
struct KindArrow {
  std::vector<Kind> params;
  Kind result;
};
}  // namespace detail

inline Kind Kind::arrow(std::vector<Kind> params, Kind result) {
  if (params.empty()) throw kind_error("constructor kind needs parameters");
  Kind k(Tag::arrow);
  k.arrow_ = std::make_shared<const detail::KindArrow>(
      detail::KindArrow{std::move(params), std::move(result)});
  return k;
}

inline const std::vector<Kind>& Kind::params() const {
  assert(is_arrow());
  return arrow_->params;
}

inline const Kind& Kind::result() const {
  assert(is_arrow());
  return arrow_->result;
}

inline bool operator==(const Kind& a, const Kind& b) {
  if (a.tag_ != b.tag_) return false;
  if (a.tag_ != Kind::Tag::arrow) return true;
  if (a.arrow_->params.size() != b.arrow_->params.size()) return false;
  for (std::size_t i = 0; i < a.arrow_->params.size(); ++i)
    if (!(a.arrow_->params[i] == b.arrow_->params[i])) return false;
  return a.arrow_->result == b.arrow_->result;
}

inline std::string to_string(const Kind& k) {
  switch (k.tag()) {
    case Kind::Tag::star: return "*";
    case Kind::Tag::row: return "e";
    case Kind::Tag::label: return "k";
    case Kind::Tag::heap: return "h";
    case Kind::Tag::arrow: {
      std::string s = "(";
      for (std::size_t i = 0; i < k.params().size(); ++i) {
        if (i) s += ",";
        s += to_string(k.params()[i]);
      }
      s += ")->" + to_string(k.result());
      return s;
    }
  }
  return "?";
}

}  // namespace effrow

#endif

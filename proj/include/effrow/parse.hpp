#ifndef EFFROW_PARSE_HPP
#define EFFROW_PARSE_HPP

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "effrow/expr.hpp"
#include "effrow/row.hpp"
#include "effrow/type.hpp"

namespace effrow {

struct parse_error : error {
  parse_error(const std::string& msg, SourceSpan s,
              std::vector<std::string> expect = {})
      : error(msg), span(s), expected(std::move(expect)) {}
  SourceSpan span;
  std::vector<std::string> expected;
};

namespace detail {

enum class Tok {
  ident,
  number,
  lambda,    // '\'
  dot,
  lparen,
  rparen,
  lbrace,
  rbrace,
  comma,
  semi,
  eq,
  arrow,     // ->
  bind_arrow,  // <-
  assign,    // :=
  bang,      // !
  hash,      // #
  langle,
  rangle,
  pipe,
  eof,
};

struct Token {
  Tok kind;
  std::string text;
  long number = 0;
  SourceSpan span;
};

class Lexer {
 public:
  Lexer(const std::string& src, bool type_mode)
      : src_(src), type_mode_(type_mode) {
    scan_all();
  }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  Token next() {
    Token t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    else pos_ = toks_.size() - 1;
    return t;
  }

 private:
  void scan_all() {
    std::size_t i = 0;
    int line = 1, col = 1;
    auto here = [&](std::size_t start, int sline, int scol) {
      SourceSpan s;
      s.start = static_cast<int>(start);
      s.end = static_cast<int>(i);
      s.line = sline;
      s.column = scol;
      return s;
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '\n') {
        ++i;
        ++line;
        col = 1;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        ++col;
        continue;
      }
      std::size_t start = i;
      int sline = line, scol = col;
      auto push = [&](Tok k, std::string text) {
        col += static_cast<int>(i - start);
        toks_.push_back(Token{k, std::move(text), 0, here(start, sline, scol)});
      };
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (!type_mode_ && c == '-' && i + 1 < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
        std::size_t j = i + (c == '-' ? 1 : 0);
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j])))
          ++j;
        std::string text = src_.substr(i, j - i);
        i = j;
        col += static_cast<int>(i - start);
        Token t{Tok::number, text, std::stol(text), here(start, sline, scol)};
        toks_.push_back(t);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[j])) ||
                src_[j] == '_' || src_[j] == '\''))
          ++j;
        std::string text = src_.substr(i, j - i);
        i = j;
        push(Tok::ident, std::move(text));
        continue;
      }
      switch (c) {
        case '\\': ++i; push(Tok::lambda, "\\"); continue;
        case '.': ++i; push(Tok::dot, "."); continue;
        case '(': ++i; push(Tok::lparen, "("); continue;
        case ')': ++i; push(Tok::rparen, ")"); continue;
        case '{': ++i; push(Tok::lbrace, "{"); continue;
        case '}': ++i; push(Tok::rbrace, "}"); continue;
        case ',': ++i; push(Tok::comma, ","); continue;
        case ';': ++i; push(Tok::semi, ";"); continue;
        case '!': ++i; push(Tok::bang, "!"); continue;
        case '#': ++i; push(Tok::hash, "#"); continue;
        case '|': ++i; push(Tok::pipe, "|"); continue;
        case '=': ++i; push(Tok::eq, "="); continue;
        case ':':
          if (i + 1 < src_.size() && src_[i + 1] == '=') {
            i += 2;
            push(Tok::assign, ":=");
            continue;
          }
          break;
        case '-':
          if (i + 1 < src_.size() && src_[i + 1] == '>') {
            i += 2;
            push(Tok::arrow, "->");
            continue;
          }
          break;
        case '<':
          if (!type_mode_ && i + 1 < src_.size() && src_[i + 1] == '-') {
            i += 2;
            push(Tok::bind_arrow, "<-");
            continue;
          }
          ++i;
          push(Tok::langle, "<");
          continue;
        case '>': ++i; push(Tok::rangle, ">"); continue;
        default: break;
      }
      SourceSpan s;
      s.start = static_cast<int>(i);
      s.end = static_cast<int>(i + 1);
      s.line = line;
      s.column = col;
      throw parse_error("unexpected character '" + std::string(1, c) + "'", s);
    }
    SourceSpan s;
    s.start = static_cast<int>(src_.size());
    s.end = static_cast<int>(src_.size());
    s.line = line;
    s.column = col;
    toks_.push_back(Token{Tok::eof, "", 0, s});
  }

  std::string src_;
  bool type_mode_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

class ExprParser {
 public:
  ExprParser(const std::string& src, bool debug)
      : lex_(src, false), debug_(debug) {}

  Expr parse() {
    Expr e = expr();
    expect(Tok::eof, "end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg,
                         std::vector<std::string> expected = {}) {
    throw parse_error(msg + " at '" + lex_.peek().text + "'",
                      lex_.peek().span, std::move(expected));
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail("expected " + what, {what});
    return lex_.next();
  }

  Token expect_binder(const std::string& what) {
    Token t = expect(Tok::ident, what);
    if (is_keyword(t.text))
      throw parse_error("'" + t.text + "' is a keyword and cannot bind",
                        t.span);
    return t;
  }

  bool at_ident(const char* kw) const {
    return lex_.peek().kind == Tok::ident && lex_.peek().text == kw;
  }

  static bool is_keyword(const std::string& s) {
    return s == "let" || s == "in" || s == "catch" || s == "run" ||
           s == "throw" || s == "ref" || s == "fix" || s == "inc" ||
           s == "dec" || s == "add" || s == "if0" || s == "hp";
  }

  // lowest level: lambda, let, bind, sequencing
  Expr expr() {
    SourceSpan sp = lex_.peek().span;
    if (lex_.peek().kind == Tok::lambda) {
      lex_.next();
      Token x = expect_binder("parameter name");
      expect(Tok::dot, "'.'");
      return Expr::lam(x.text, expr()).with_span(sp);
    }
    if (at_ident("let")) {
      lex_.next();
      Token x = expect_binder("binder name");
      expect(Tok::eq, "'='");
      Expr bound = expr();
      if (!at_ident("in")) fail("expected 'in'", {"in"});
      lex_.next();
      return Expr::let_(x.text, std::move(bound), expr()).with_span(sp);
    }
    if (lex_.peek().kind == Tok::ident && !is_keyword(lex_.peek().text) &&
        lex_.peek(1).kind == Tok::bind_arrow) {
      Token x = lex_.next();
      lex_.next();  // <-
      Expr bound = assign_level();
      expect(Tok::semi, "';'");
      // x <- e1; e2 is the application (\x. e2) e1
      return Expr::app(Expr::lam(x.text, expr()), std::move(bound))
          .with_span(sp);
    }
    Expr first = assign_level();
    if (lex_.peek().kind == Tok::semi) {
      lex_.next();
      return Expr::app(Expr::lam("_", expr()), std::move(first)).with_span(sp);
    }
    return first;
  }

  // e1 := e2, right associative, looser than application
  Expr assign_level() {
    Expr lhs = application();
    if (lex_.peek().kind == Tok::assign) {
      SourceSpan sp = lex_.next().span;
      Expr rhs = assign_level();
      return Expr::app(Expr::app(Expr::con(TermCon::assign), std::move(lhs))
                           .with_span(sp),
                       std::move(rhs))
          .with_span(sp);
    }
    return lhs;
  }

  bool starts_primary() const {
    switch (lex_.peek().kind) {
      case Tok::ident:
        return lex_.peek().text != "in";
      case Tok::number:
      case Tok::lparen:
      case Tok::bang:
        return true;
      case Tok::hash:
      case Tok::lbrace:
        return debug_;
      case Tok::lambda:
        return false;
      default:
        return false;
    }
  }

  Expr application() {
    Expr f = primary();
    while (starts_primary()) {
      SourceSpan sp = lex_.peek().span;
      f = Expr::app(std::move(f), primary()).with_span(sp);
    }
    return f;
  }

  Expr primary() {
    SourceSpan sp = lex_.peek().span;
    if (lex_.peek().kind == Tok::bang) {
      lex_.next();
      return Expr::app(Expr::con(TermCon::read), primary()).with_span(sp);
    }
    if (at_ident("ref")) {
      lex_.next();
      return Expr::app(Expr::con(TermCon::ref), primary()).with_span(sp);
    }
    if (at_ident("throw")) {
      lex_.next();
      Expr payload = primary();
      if (!payload.is_con(TermCon::unit))
        throw parse_error("throw takes the unit value () as payload", sp);
      return Expr::app(Expr::con(TermCon::throw_), std::move(payload))
          .with_span(sp);
    }
    if (at_ident("run")) {
      lex_.next();
      return Expr::run(primary()).with_span(sp);
    }
    if (at_ident("catch")) {
      lex_.next();
      Expr e1 = primary();
      if (!starts_primary()) {
        if (debug_) return Expr::pcatch(std::move(e1)).with_span(sp);
        fail("catch needs a handler argument", {"expression"});
      }
      Expr e2 = primary();
      return Expr::catch_(std::move(e1), std::move(e2)).with_span(sp);
    }
    if (at_ident("hp")) {
      if (!debug_) fail("heap bindings need debug syntax");
      lex_.next();
      expect(Tok::lbrace, "'{'");
      std::vector<std::pair<int, Expr>> bs;
      if (lex_.peek().kind != Tok::rbrace) {
        while (true) {
          Token r = expect(Tok::ident, "reference name");
          expect(Tok::arrow, "'->'");
          bs.emplace_back(ref_id(r.text), assign_level());
          if (lex_.peek().kind != Tok::comma) break;
          lex_.next();
        }
      }
      expect(Tok::rbrace, "'}'");
      return Expr::heap(Heap(std::move(bs)), primary()).with_span(sp);
    }
    return atom();
  }

  Expr atom() {
    Token t = lex_.peek();
    switch (t.kind) {
      case Tok::number:
        lex_.next();
        return Expr::lit(t.number).with_span(t.span);
      case Tok::hash: {
        if (!debug_) fail("reference names need debug syntax");
        lex_.next();
        Token r = expect(Tok::ident, "reference name");
        return Expr::refname(ref_id(r.text)).with_span(t.span);
      }
      case Tok::ident: {
        lex_.next();
        if (t.text == "fix") return Expr::con(TermCon::fix).with_span(t.span);
        if (t.text == "inc") return Expr::con(TermCon::inc).with_span(t.span);
        if (t.text == "dec") return Expr::con(TermCon::dec).with_span(t.span);
        if (t.text == "add") return Expr::con(TermCon::add).with_span(t.span);
        if (t.text == "if0") return Expr::con(TermCon::if0).with_span(t.span);
        if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
        return Expr::var(t.text).with_span(t.span);
      }
      case Tok::lparen: {
        lex_.next();
        if (lex_.peek().kind == Tok::rparen) {
          lex_.next();
          return Expr::con(TermCon::unit).with_span(t.span);
        }
        if (debug_ && lex_.peek().kind == Tok::bang &&
            lex_.peek(1).kind == Tok::rparen) {
          lex_.next();
          lex_.next();
          return Expr::con(TermCon::read).with_span(t.span);
        }
        if (debug_ && lex_.peek().kind == Tok::assign) {
          lex_.next();
          expect(Tok::rparen, "')'");
          return Expr::con(TermCon::assign).with_span(t.span);
        }
        if (debug_ && lex_.peek().kind == Tok::hash &&
            lex_.peek(1).kind == Tok::ident &&
            lex_.peek(2).kind == Tok::assign) {
          // (#r :=) partial assignment value
          lex_.next();
          Token r = expect(Tok::ident, "reference name");
          expect(Tok::assign, "':='");
          expect(Tok::rparen, "')'");
          return Expr::passign(ref_id(r.text)).with_span(t.span);
        }
        Expr inner = expr();
        expect(Tok::rparen, "')'");
        return inner;
      }
      default:
        fail("expected an expression", {"expression"});
    }
  }

  int ref_id(const std::string& name) {
    auto it = ref_ids_.find(name);
    if (it != ref_ids_.end()) return it->second;
    int id = static_cast<int>(ref_ids_.size());
    ref_ids_.emplace(name, id);
    return id;
  }

  Lexer lex_;
  bool debug_;
  std::map<std::string, int> ref_ids_;
};

class TypeParser {
 public:
  explicit TypeParser(const std::string& src) : lex_(src, true) {}

  Type parse_type_all() {
    Type t = type();
    expect(Tok::eof, "end of input");
    return t;
  }

  Scheme parse_scheme_all() {
    std::vector<std::pair<int, Kind>> quant;
    if (at_ident("forall")) {
      lex_.next();
      while (lex_.peek().kind == Tok::ident && lex_.peek().text != ".") {
        Token v = lex_.next();
        Kind k = kind_for_name(v.text, v.span);
        quant.emplace_back(var_id(v.text, k), k);
      }
      expect(Tok::dot, "'.'");
    }
    Type body = type();
    expect(Tok::eof, "end of input");
    return Scheme{std::move(quant), std::move(body)};
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw parse_error(msg + " at '" + lex_.peek().text + "'", lex_.peek().span);
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail("expected " + what);
    return lex_.next();
  }

  bool at_ident(const char* kw) const {
    return lex_.peek().kind == Tok::ident && lex_.peek().text == kw;
  }

  static bool row_var_name(const std::string& s) {
    if (s.size() < 2 || s[0] != 'e') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  }

  static bool heap_var_name(const std::string& s) {
    if (s.size() < 2 || s[0] != 'h') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  }

  static bool star_var_name(const std::string& s) {
    if (s.empty()) return false;
    if (s[0] < 'a' || s[0] > 'd') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  }

  Kind kind_for_name(const std::string& s, SourceSpan sp) {
    if (row_var_name(s)) return Kind::row();
    if (heap_var_name(s)) return Kind::heap();
    if (star_var_name(s)) return Kind::star();
    throw parse_error("unknown type variable '" + s + "'", sp);
  }

  int var_id(const std::string& name, const Kind& k) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    int id = next_id_++;
    ids_.emplace(name, id);
    kinds_.emplace(name, k);
    return id;
  }

  Type type() {
    Type lhs = atom_type();
    if (lex_.peek().kind == Tok::arrow) {
      lex_.next();
      Type eff = t_row_nil();
      if (lex_.peek().kind == Tok::langle) {
        eff = row();
      } else if (lex_.peek().kind == Tok::ident &&
                 row_var_name(lex_.peek().text)) {
        Token v = lex_.next();
        eff = Type::var(var_id(v.text, Kind::row()), Kind::row());
      }
      Type res = type();
      return t_fn(std::move(lhs), std::move(eff), std::move(res));
    }
    return lhs;
  }

  Type atom_type() {
    Token t = lex_.peek();
    if (t.kind == Tok::lparen) {
      lex_.next();
      if (lex_.peek().kind == Tok::rparen) {
        lex_.next();
        return t_unit();
      }
      Type inner = type();
      expect(Tok::rparen, "')'");
      return inner;
    }
    if (t.kind == Tok::langle) return row();
    if (t.kind == Tok::ident) {
      lex_.next();
      if (t.text == "int") return t_int();
      if (t.text == "ref") {
        expect(Tok::langle, "'<'");
        Type h = type();
        expect(Tok::comma, "','");
        Type v = type();
        expect(Tok::rangle, "'>'");
        if (!(h.kind() == Kind::heap()))
          throw parse_error("ref needs a heap argument", t.span);
        return t_ref(std::move(h), std::move(v));
      }
      if (t.text == "exn" || t.text == "div" || t.text == "st")
        return label_from(t);
      Kind k = kind_for_name(t.text, t.span);
      return Type::var(var_id(t.text, k), k);
    }
    fail("expected a type");
  }

  Type label_from(const Token& t) {
    if (t.text == "exn") return t_exn();
    if (t.text == "div") return t_div();
    // st<h>
    expect(Tok::langle, "'<'");
    Type h = atom_type();
    expect(Tok::rangle, "'>'");
    if (!(h.kind() == Kind::heap()))
      throw parse_error("st needs a heap argument", t.span);
    return t_st(std::move(h));
  }

  Type row() {
    expect(Tok::langle, "'<'");
    std::vector<Type> labels;
    Type tail = t_row_nil();
    if (lex_.peek().kind != Tok::rangle && lex_.peek().kind != Tok::pipe) {
      while (true) {
        Token t = lex_.peek();
        if (t.kind != Tok::ident) fail("expected an effect label");
        lex_.next();
        if (t.text != "exn" && t.text != "div" && t.text != "st")
          throw parse_error("unknown effect label '" + t.text + "'", t.span);
        labels.push_back(label_from(t));
        if (lex_.peek().kind != Tok::comma) break;
        lex_.next();
      }
    }
    if (lex_.peek().kind == Tok::pipe) {
      lex_.next();
      Token v = expect(Tok::ident, "row variable");
      if (!row_var_name(v.text))
        throw parse_error("row tail must be a row variable", v.span);
      tail = Type::var(var_id(v.text, Kind::row()), Kind::row());
    }
    expect(Tok::rangle, "'>'");
    return make_row(labels, std::move(tail));
  }

  Lexer lex_;
  std::map<std::string, int> ids_;
  std::map<std::string, Kind> kinds_;
  int next_id_ = 0;
};

}  // namespace detail

inline Expr parse_expr(const std::string& text, bool debug_syntax = false) {
  detail::ExprParser p(text, debug_syntax);
  return p.parse();
}

inline Type parse_type(const std::string& text) {
  detail::TypeParser p(text);
  return p.parse_type_all();
}

inline Scheme parse_scheme(const std::string& text) {
  detail::TypeParser p(text);
  return p.parse_scheme_all();
}

}  // namespace effrow

#endif

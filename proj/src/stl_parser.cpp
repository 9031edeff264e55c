// Formula grammar (whitespace-insensitive):
//
//   formula  := or
//   or       := and ("or" and)*
//   and      := until ("and" until)*
//   until    := unary ("U" "[" int "," int "]" unary)*
//   unary    := "not" unary | ("F" | "G") "[" int "," int "]" unary | primary
//   primary  := "true" | "(" formula ")" | atom
//   atom     := affine cmp affine,   cmp in { <, <=, >, >= }
//   affine   := term (("+" | "-") term)*
//   term     := [sign] number ["*" name] | [sign] name
//
// `name` is a state variable (user name or x<i>) or a registered function.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <optional>

#include "qpm/error.hpp"
#include "qpm/stl.hpp"

namespace qpm::stl {
namespace {

struct Affine {
  std::vector<Atom::LinearTerm> linear;
  std::vector<Atom::FunctionTerm> functions;
  double constant = 0.0;

  void add(const Affine& other, double sign) {
    for (auto t : other.linear) linear.push_back({t.index, sign * t.coef});
    for (auto f : other.functions) functions.push_back({f.fn, sign * f.weight});
    constant += sign * other.constant;
  }
};

class Parser {
public:
  Parser(std::string_view text, std::span<const std::string> vars, const FunctionRegistry* fns)
      : text_(text), vars_(vars), fns_(fns) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  // Reads an identifier without consuming it.
  std::string_view peek_word() {
    skip_ws();
    std::size_t end = pos_;
    if (end < text_.size() && ident_start(text_[end])) {
      while (end < text_.size() && ident_char(text_[end])) ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  bool consume_keyword(std::string_view kw) {
    if (peek_word() != kw) return false;
    pos_ += kw.size();
    return true;
  }

  // Temporal operator letter followed by '['.
  bool consume_temporal(char letter) {
    if (peek_word() != std::string_view(&letter, 1)) return false;
    std::size_t save = pos_;
    ++pos_;
    if (peek() == '[') return true;
    pos_ = save;
    return false;
  }

  std::pair<int, int> parse_interval() {
    expect('[');
    const int a = parse_int();
    expect(',');
    const int b = parse_int();
    const std::size_t close = pos_;
    expect(']');
    if (a > b) throw ParseError("interval [" + std::to_string(a) + "," + std::to_string(b) +
                                    "] has lower bound above upper bound", close);
    return {a, b};
  }

  int parse_int() {
    skip_ws();
    int v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a nonnegative integer");
    if (v < 0) fail("interval bounds must be nonnegative");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (consume_keyword("or")) f = Formula::disjunction(std::move(f), parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_until();
    while (consume_keyword("and")) f = Formula::conjunction(std::move(f), parse_until());
    return f;
  }

  Formula parse_until() {
    Formula f = parse_unary();
    while (consume_temporal('U')) {
      auto [a, b] = parse_interval();
      f = Formula::until(std::move(f), parse_unary(), a, b);
    }
    return f;
  }

  Formula parse_unary() {
    if (consume_keyword("not")) return Formula::negation(parse_unary());
    if (consume_temporal('F')) {
      auto [a, b] = parse_interval();
      return Formula::eventually(parse_unary(), a, b);
    }
    if (consume_temporal('G')) {
      auto [a, b] = parse_interval();
      return Formula::globally(parse_unary(), a, b);
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (at_end()) fail("unexpected end of formula");
    if (consume_keyword("true")) return Formula::truth();
    if (consume('(')) {
      Formula f = parse_or();
      expect(')');
      return f;
    }
    return parse_atom();
  }

  Formula parse_atom() {
    Affine lhs = parse_affine();
    skip_ws();
    enum class Cmp { Lt, Le, Gt, Ge } cmp;
    if (consume('<'))
      cmp = (pos_ < text_.size() && text_[pos_] == '=') ? (++pos_, Cmp::Le) : Cmp::Lt;
    else if (consume('>'))
      cmp = (pos_ < text_.size() && text_[pos_] == '=') ? (++pos_, Cmp::Ge) : Cmp::Gt;
    else
      fail("expected a comparison operator");
    Affine rhs = parse_affine();
    Affine g;
    if (cmp == Cmp::Gt || cmp == Cmp::Ge) {
      g.add(lhs, 1.0);
      g.add(rhs, -1.0);
    } else {
      g.add(rhs, 1.0);
      g.add(lhs, -1.0);
    }
    return Formula::atom(Atom(std::move(g.linear), g.constant, std::move(g.functions)));
  }

  Affine parse_affine() {
    Affine out;
    parse_term(out, 1.0);
    for (;;) {
      if (consume('+'))
        parse_term(out, 1.0);
      else if (consume('-'))
        parse_term(out, -1.0);
      else
        break;
    }
    return out;
  }

  void parse_term(Affine& out, double sign) {
    skip_ws();
    while (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      if (text_[pos_] == '-') sign = -sign;
      ++pos_;
      skip_ws();
    }
    if (std::optional<double> num = parse_number()) {
      if (consume('*')) {
        add_name(out, sign * *num);
      } else {
        out.constant += sign * *num;
      }
      return;
    }
    add_name(out, sign);
  }

  std::optional<double> parse_number() {
    skip_ws();
    if (pos_ >= text_.size()) return std::nullopt;
    const char c = text_[pos_];
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  void add_name(Affine& out, double coef) {
    const std::size_t start = pos_;
    std::string_view word = peek_word();
    if (word.empty()) fail("expected a number or identifier");
    if (word == "true" || word == "not" || word == "and" || word == "or")
      fail("unexpected keyword '" + std::string(word) + "'");
    pos_ += word.size();
    if (auto idx = lookup_var(word)) {
      out.linear.push_back({*idx, coef});
      return;
    }
    if (fns_ != nullptr) {
      if (const NamedFunction* fn = fns_->find(word)) {
        out.functions.push_back({std::make_shared<const NamedFunction>(*fn), coef});
        return;
      }
    }
    throw ParseError("unknown identifier '" + std::string(word) + "'", start);
  }

  std::optional<std::size_t> lookup_var(std::string_view word) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == word) return i;
    if (word.size() > 1 && word[0] == 'x') {
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(word.data() + 1, word.data() + word.size(), idx);
      if (ec == std::errc() && ptr == word.data() + word.size() && idx < vars_.size()) return idx;
    }
    return std::nullopt;
  }

  std::string_view text_;
  std::span<const std::string> vars_;
  const FunctionRegistry* fns_;
  std::size_t pos_ = 0;
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Formula& f, std::span<const std::string> vars, std::string& out) {
  auto wrap = [&](const Formula& g) {
    out += '(';
    print(g, vars, out);
    out += ')';
  };
  auto interval = [&](const char* op) {
    out += op;
    out += '[' + std::to_string(f.lower()) + ',' + std::to_string(f.upper()) + "] ";
  };
  switch (f.op()) {
    case Op::True:
      out += "true";
      return;
    case Op::Atom: {
      const Atom& a = f.predicate();
      std::string lhs;
      for (const auto& t : a.linear()) {
        if (!lhs.empty()) lhs += " + ";
        lhs += number(t.coef) + "*" +
               (t.index < vars.size() ? vars[t.index] : "x" + std::to_string(t.index));
      }
      for (const auto& t : a.functions()) {
        if (!lhs.empty()) lhs += " + ";
        lhs += number(t.weight) + "*" + t.fn->name;
      }
      if (lhs.empty()) lhs = "0";
      out += lhs + " > " + number(-a.constant());
      return;
    }
    case Op::Not:
      out += "not ";
      wrap(f.child());
      return;
    case Op::And:
    case Op::Or:
      wrap(f.left());
      out += f.op() == Op::And ? " and " : " or ";
      wrap(f.right());
      return;
    case Op::Until:
      wrap(f.left());
      out += ' ';
      interval("U");
      wrap(f.right());
      return;
    case Op::Eventually:
      interval("F");
      wrap(f.child());
      return;
    case Op::Globally:
      interval("G");
      wrap(f.child());
      return;
  }
}

}  // namespace

Formula parse_formula(std::string_view text, std::span<const std::string> var_names,
                      const FunctionRegistry* functions) {
  return Parser(text, var_names, functions).parse();
}

std::string to_string(const Formula& phi, std::span<const std::string> var_names) {
  std::string out;
  print(phi, var_names, out);
  return out;
}

}  // namespace qpm::stl

#include "hclbf/stl.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace hclbf::stl {

namespace {

enum class Tok {
  Always,
  Eventually,
  AxisX,
  AxisY,
  LBracket,
  RBracket,
  Comma,
  LParen,
  RParen,
  And,
  Not,
  Ge,
  Gt,
  Eq,
  Less,
  Number,
  Pipe,
  Arrow,
  Ident,
  End,
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::size_t length;
  double value = 0.0;
};

std::string describe(Tok kind) {
  switch (kind) {
    case Tok::Always: return "'G'";
    case Tok::Eventually: return "'F'";
    case Tok::AxisX: return "'x'";
    case Tok::AxisY: return "'y'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::And: return "'&'";
    case Tok::Not: return "'!'";
    case Tok::Ge: return "'>='";
    case Tok::Gt: return "'>'";
    case Tok::Eq: return "'='";
    case Tok::Less: return "'<'";
    case Tok::Number: return "number";
    case Tok::Pipe: return "'|'";
    case Tok::Arrow: return "'->'";
    case Tok::Ident: return "identifier";
    case Tok::End: return "end of input";
  }
  return "token";
}

bool starts_with(std::string_view text, std::size_t pos, std::string_view prefix) {
  return text.substr(pos, prefix.size()) == prefix;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::End, pos_, 0});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  struct Spelling {
    std::string_view text;
    Tok kind;
  };

  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  Token next() {
    // Longest spellings first.
    static constexpr std::array<Spelling, 26> kSpellings{{
        {"<->", Tok::Arrow},
        {"\xE2\x88\xA7", Tok::And},    // ∧
        {"\xE2\x88\xA8", Tok::Pipe},   // ∨
        {"\xC2\xAC", Tok::Not},        // ¬
        {"\xE2\x89\xA5", Tok::Ge},     // ≥
        {"\xE2\x89\xA4", Tok::Less},   // ≤
        {"\xE2\x87\x92", Tok::Arrow},  // ⇒
        {"\xE2\x86\x92", Tok::Arrow},  // →
        {"&&", Tok::And},
        {"||", Tok::Pipe},
        {"->", Tok::Arrow},
        {"=>", Tok::Arrow},
        {">=", Tok::Ge},
        {"<=", Tok::Less},
        {"==", Tok::Eq},
        {"&", Tok::And},
        {"|", Tok::Pipe},
        {"!", Tok::Not},
        {"~", Tok::Not},
        {">", Tok::Gt},
        {"<", Tok::Less},
        {"=", Tok::Eq},
        {"[", Tok::LBracket},
        {"]", Tok::RBracket},
        {"(", Tok::LParen},
        {")", Tok::RParen},
    }};

    const std::size_t start = pos_;
    const char c = text_[pos_];

    if (is_digit(c) || c == '.' || ((c == '-' || c == '+') && pos_ + 1 < text_.size() &&
                                     (is_digit(text_[pos_ + 1]) || text_[pos_ + 1] == '.'))) {
      return number();
    }
    if (c == ',') {
      ++pos_;
      return {Tok::Comma, start, 1};
    }
    for (const auto& s : kSpellings) {
      if (starts_with(text_, pos_, s.text)) {
        pos_ += s.text.size();
        return {s.kind, start, s.text.size()};
      }
    }
    if (is_alpha(c)) {
      while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      Tok kind = Tok::Ident;
      if (word == "G") kind = Tok::Always;
      else if (word == "F") kind = Tok::Eventually;
      else if (word == "x") kind = Tok::AxisX;
      else if (word == "y") kind = Tok::AxisY;
      return {kind, start, word.size()};
    }
    throw SyntaxError("unexpected character", start);
  }

  Token number() {
    const std::size_t start = pos_;
    if (text_[pos_] == '+' || text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && is_digit(text_[p])) {
        pos_ = p;
        while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      }
    }
    std::string_view lexeme = text_.substr(start, pos_ - start);
    if (!lexeme.empty() && lexeme.front() == '+') lexeme.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc{} || end != lexeme.data() + lexeme.size() || !std::isfinite(value)) {
      throw SyntaxError("malformed number", start);
    }
    return {Tok::Number, start, pos_ - start, value};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ParseResult run() {
    // These connectives are never part of the fragment, wherever they appear.
    for (const Token& t : toks_) {
      if (t.kind == Tok::Pipe) throw FragmentViolation(FragmentRule::Disjunction, t.offset);
      if (t.kind == Tok::Arrow) throw FragmentViolation(FragmentRule::Implication, t.offset);
    }

    ParseResult result;
    result.formula.conjuncts.push_back(temporal_conjunct());
    while (peek().kind == Tok::And) {
      advance();
      result.formula.conjuncts.push_back(temporal_conjunct());
    }
    if (peek().kind != Tok::End) {
      fail("expected '&' or end of input");
    }
    result.warnings = std::move(warnings_);
    return result;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& advance() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what + ", found " + describe(peek().kind), peek().offset);
  }

  const Token& expect(Tok kind) {
    if (peek().kind != kind) fail("expected " + describe(kind));
    return advance();
  }

  static bool is_temporal(Tok k) { return k == Tok::Always || k == Tok::Eventually; }
  static bool is_axis(Tok k) { return k == Tok::AxisX || k == Tok::AxisY; }

  TemporalConjunct temporal_conjunct() {
    const Token& head = peek();
    if (!is_temporal(head.kind)) {
      if (head.kind == Tok::Not) {
        std::size_t k = 1;
        while (peek(k).kind == Tok::LParen) ++k;
        if (is_temporal(peek(k).kind)) {
          throw FragmentViolation(FragmentRule::NegatedNonAtom, head.offset,
                                  "a temporal formula cannot be negated");
        }
      }
      if (is_axis(head.kind) || head.kind == Tok::Not || head.kind == Tok::LParen) {
        throw FragmentViolation(FragmentRule::UnquantifiedTopLevel, head.offset);
      }
      fail("expected 'G' or 'F'");
    }
    advance();

    TemporalConjunct tc;
    tc.op = head.kind == Tok::Always ? TemporalOp::Always : TemporalOp::Eventually;
    const Token& open = expect(Tok::LBracket);
    tc.t1 = expect(Tok::Number).value;
    expect(Tok::Comma);
    tc.t2 = expect(Tok::Number).value;
    expect(Tok::RBracket);
    if (!(tc.t1 >= 0.0) || !(tc.t1 < tc.t2)) {
      std::ostringstream os;
      os << "window [" << tc.t1 << ", " << tc.t2 << "]";
      throw FragmentViolation(FragmentRule::InvalidWindow, open.offset, os.str());
    }

    expect(Tok::LParen);
    tc.body.push_back(literal());
    while (peek().kind == Tok::And) {
      advance();
      tc.body.push_back(literal());
    }
    expect(Tok::RParen);
    return tc;
  }

  Literal literal() {
    const Token& head = peek();
    if (is_temporal(head.kind)) {
      throw FragmentViolation(FragmentRule::NestedTemporal, head.offset);
    }
    if (head.kind == Tok::Not) {
      advance();
      const Token& operand = peek();
      if (is_temporal(operand.kind)) {
        throw FragmentViolation(FragmentRule::NestedTemporal, operand.offset);
      }
      if (operand.kind == Tok::Not) {
        throw FragmentViolation(FragmentRule::NegatedNonAtom, head.offset, "double negation");
      }
      if (operand.kind == Tok::LParen) {
        advance();
        const Token& inner = peek();
        if (is_temporal(inner.kind)) {
          throw FragmentViolation(FragmentRule::NestedTemporal, inner.offset);
        }
        if (inner.kind == Tok::Not || inner.kind == Tok::LParen) {
          throw FragmentViolation(FragmentRule::NegatedNonAtom, head.offset);
        }
        Atom a = atom();
        if (peek().kind == Tok::And) {
          throw FragmentViolation(FragmentRule::NegatedNonAtom, head.offset,
                                  "negation applied to a conjunction");
        }
        expect(Tok::RParen);
        return {a, true};
      }
      return {atom(), true};
    }
    if (head.kind == Tok::LParen) {
      advance();
      if (is_temporal(peek().kind)) {
        throw FragmentViolation(FragmentRule::NestedTemporal, peek().offset);
      }
      Atom a = atom();
      if (peek().kind == Tok::And) {
        fail("a parenthesized group must contain a single atom");
      }
      expect(Tok::RParen);
      return {a, false};
    }
    return {atom(), false};
  }

  Atom atom() {
    const Token& axis = peek();
    if (!is_axis(axis.kind)) fail("expected 'x' or 'y'");
    advance();
    Atom a;
    a.axis = axis.kind == Tok::AxisX ? Axis::X : Axis::Y;
    const Token& rel = peek();
    switch (rel.kind) {
      case Tok::Ge: a.relation = Relation::GE; break;
      case Tok::Gt: a.relation = Relation::GT; break;
      case Tok::Eq: a.relation = Relation::EQ; break;
      case Tok::Less:
        throw FragmentViolation(FragmentRule::UnsupportedRelation, rel.offset);
      default:
        fail("expected '>=', '>' or '='");
    }
    advance();
    a.threshold = expect(Tok::Number).value;
    if (a.relation == Relation::EQ) {
      warnings_.push_back({axis.offset,
                           "equality atom denotes a measure-zero set on continuous "
                           "trajectories; intended for grid-snapped values"});
    }
    return a;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic> warnings_;
};

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ec == std::errc{} ? end : buf.data());
}

}  // namespace

SyntaxError::SyntaxError(const std::string& message, std::size_t offset)
    : std::runtime_error("syntax error at byte " + std::to_string(offset) + ": " + message),
      offset_(offset) {}

std::string_view rule_name(FragmentRule rule) {
  switch (rule) {
    case FragmentRule::Disjunction: return "no-disjunction";
    case FragmentRule::Implication: return "no-implication";
    case FragmentRule::NestedTemporal: return "no-nesting";
    case FragmentRule::NegatedNonAtom: return "atomic-negation-only";
    case FragmentRule::InvalidWindow: return "window-order";
    case FragmentRule::UnquantifiedTopLevel: return "top-level-quantified";
    case FragmentRule::UnsupportedRelation: return "relation-set";
  }
  return "unknown";
}

std::string_view rule_description(FragmentRule rule) {
  switch (rule) {
    case FragmentRule::Disjunction:
      return "disjunction is not allowed; literals combine only through conjunction";
    case FragmentRule::Implication:
      return "implication is not allowed; literals combine only through conjunction";
    case FragmentRule::NestedTemporal:
      return "nesting of temporal operators is not allowed";
    case FragmentRule::NegatedNonAtom:
      return "only atomic formulas can be negated";
    case FragmentRule::InvalidWindow:
      return "temporal windows must satisfy 0 <= t1 < t2";
    case FragmentRule::UnquantifiedTopLevel:
      return "every top-level conjunct must be quantified by G[t1,t2] or F[t1,t2]";
    case FragmentRule::UnsupportedRelation:
      return "atoms compare with >=, > or = only";
  }
  return "";
}

FragmentViolation::FragmentViolation(FragmentRule rule, std::size_t offset, const std::string& detail)
    : std::runtime_error("fragment violation [" + std::string(rule_name(rule)) + "] at byte " +
                         std::to_string(offset) + ": " + std::string(rule_description(rule)) +
                         (detail.empty() ? "" : " (" + detail + ")")),
      rule_(rule),
      offset_(offset) {}

double Formula::max_time() const {
  double m = 0.0;
  for (const auto& c : conjuncts) m = std::max(m, c.t2);
  return m;
}

ParseResult parse_with_diagnostics(std::string_view text) {
  return Parser(Lexer(text).run()).run();
}

Formula parse(std::string_view text) { return parse_with_diagnostics(text).formula; }

std::string strip_comments(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    out.append(line);
    out.push_back('\n');
    pos = eol + 1;
  }
  return out;
}

std::string pretty_print(const Literal& l) {
  std::string out = l.atom.axis == Axis::X ? "x" : "y";
  switch (l.atom.relation) {
    case Relation::GE: out += " >= "; break;
    case Relation::GT: out += " > "; break;
    case Relation::EQ: out += " = "; break;
  }
  out += format_number(l.atom.threshold);
  return l.negated ? "!(" + out + ")" : out;
}

std::string pretty_print(const Formula& f) {
  std::string out;
  for (std::size_t k = 0; k < f.conjuncts.size(); ++k) {
    const auto& c = f.conjuncts[k];
    if (k > 0) out += " & ";
    out += c.op == TemporalOp::Always ? "G[" : "F[";
    out += format_number(c.t1) + "," + format_number(c.t2) + "](";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i > 0) out += " & ";
      out += pretty_print(c.body[i]);
    }
    out += ")";
  }
  return out;
}

}  // namespace hclbf::stl

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hclbf::stl {

enum class Axis { X, Y };
enum class Relation { GE, GT, EQ };
enum class TemporalOp { Always, Eventually };

/// Axis-threshold predicate `x >= c`, `x > c` or `x = c` (same for y).
struct Atom {
  Axis axis = Axis::X;
  Relation relation = Relation::GT;
  double threshold = 0.0;

  bool operator==(const Atom&) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  bool operator==(const Literal&) const = default;
};

/// A single bounded G or F applied to a conjunction of literals.
struct TemporalConjunct {
  TemporalOp op = TemporalOp::Always;
  double t1 = 0.0;
  double t2 = 0.0;
  std::vector<Literal> body;

  bool operator==(const TemporalConjunct&) const = default;
};

/// Conjunction of temporal conjuncts. Always non-empty when produced by parse().
struct Formula {
  std::vector<TemporalConjunct> conjuncts;

  bool operator==(const Formula&) const = default;

  /// Largest window end over all conjuncts.
  double max_time() const;
};

// ---------------------------------------------------------------------------
// Errors

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Rules of the restricted fragment. Each rejection names exactly one.
enum class FragmentRule {
  Disjunction,
  Implication,
  NestedTemporal,
  NegatedNonAtom,
  InvalidWindow,
  UnquantifiedTopLevel,
  UnsupportedRelation,
};

std::string_view rule_name(FragmentRule rule);
std::string_view rule_description(FragmentRule rule);

class FragmentViolation : public std::runtime_error {
 public:
  FragmentViolation(FragmentRule rule, std::size_t offset, const std::string& detail = {});
  FragmentRule rule() const { return rule_; }
  std::size_t offset() const { return offset_; }

 private:
  FragmentRule rule_;
  std::size_t offset_;
};

class HorizonTooShort : public std::runtime_error {
 public:
  HorizonTooShort(double required, double available);
  double required() const { return required_; }
  double available() const { return available_; }

 private:
  double required_;
  double available_;
};

// ---------------------------------------------------------------------------
// Parsing and printing

struct Diagnostic {
  std::size_t offset = 0;
  std::string message;
};

struct ParseResult {
  Formula formula;
  std::vector<Diagnostic> warnings;
};

/// Parses the restricted fragment:
///
///   formula := tconj ('&' tconj)*
///   tconj   := ('G'|'F') '[' num ',' num ']' '(' lit ('&' lit)* ')'
///   lit     := ['!'] '(' atom ')' | ['!'] atom
///   atom    := ('x'|'y') ('>='|'>'|'=') num
///
/// The UTF-8 spellings ∧ ¬ ≥ are accepted as aliases. Throws SyntaxError or
/// FragmentViolation. Equality atoms produce a warning.
ParseResult parse_with_diagnostics(std::string_view text);
Formula parse(std::string_view text);

/// Reads a formula file: one formula, `#` starts a line comment.
std::string strip_comments(std::string_view text);

/// Canonical form, e.g. "G[0,10](x > 0 & y > 0)".
std::string pretty_print(const Formula& f);
std::string pretty_print(const Literal& l);

// ---------------------------------------------------------------------------
// Boolean semantics over sampled signals

bool evaluate_literal(const Literal& l, double x, double y);
bool evaluate_body(const std::vector<Literal>& body, double x, double y);

struct Sample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Uniformly sampled planar signal.
class Signal {
 public:
  /// Throws std::invalid_argument unless there are at least two samples with
  /// strictly increasing, uniformly spaced (1e-9 relative) timestamps.
  explicit Signal(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const { return samples_; }
  double period() const { return period_; }
  double start_time() const { return samples_.front().t; }
  double end_time() const { return samples_.back().t; }

 private:
  std::vector<Sample> samples_;
  double period_;
};

struct ConjunctVerdict {
  std::size_t index = 0;
  bool satisfied = false;
  /// First satisfying sample (Eventually) or first violating sample (Always).
  std::optional<double> time;
};

struct MonitorVerdict {
  bool satisfied = false;
  std::vector<ConjunctVerdict> per_conjunct;
};

/// Evaluates `f` at t = 0 over the samples of `s`. A sample belongs to a
/// window [t1, t2] iff t1 - p/2 <= t <= t2 + p/2 for sample period p.
/// Throws HorizonTooShort if the signal ends before some window does.
MonitorVerdict monitor(const Formula& f, const Signal& s);

}  // namespace hclbf::stl

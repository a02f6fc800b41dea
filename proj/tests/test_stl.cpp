#include <gtest/gtest.h>

#include <random>
#include <string>

#include "hclbf/stl.hpp"
#include "oracles.hpp"

using namespace hclbf::stl;

namespace {

struct Invalid {
  const char* text;
  const char* rule;
};

const Invalid kInvalid[] = {
#include "invalid_formulas.inc"
};

Literal lit(Axis a, Relation r, double c, bool neg = false) { return {{a, r, c}, neg}; }

std::string classify(const std::string& text) {
  try {
    parse(text);
  } catch (const FragmentViolation& e) {
    return std::string(rule_name(e.rule()));
  } catch (const SyntaxError&) {
    return "syntax";
  }
  return "accepted";
}

Signal ramp(double period, double horizon, double x0) {
  std::vector<Sample> s;
  const int n = static_cast<int>(std::lround(horizon / period));
  for (int k = 0; k <= n; ++k) s.push_back({k * period, x0 + k * period, 0.0});
  return Signal(s);
}

}  // namespace

TEST(Parse, EventuallyWithNegatedAtom) {
  const Formula f = parse("F[2,5](x>0 & !(x>2))");
  ASSERT_EQ(f.conjuncts.size(), 1u);
  const auto& c = f.conjuncts[0];
  EXPECT_EQ(c.op, TemporalOp::Eventually);
  EXPECT_EQ(c.t1, 2.0);
  EXPECT_EQ(c.t2, 5.0);
  ASSERT_EQ(c.body.size(), 2u);
  EXPECT_EQ(c.body[0], lit(Axis::X, Relation::GT, 0.0));
  EXPECT_EQ(c.body[1], lit(Axis::X, Relation::GT, 2.0, true));
}

TEST(Parse, AlwaysConjunction) {
  const Formula f = parse("G[0,10](x>0 & y>0)");
  ASSERT_EQ(f.conjuncts.size(), 1u);
  EXPECT_EQ(f.conjuncts[0].op, TemporalOp::Always);
  EXPECT_EQ(f.conjuncts[0].body, (std::vector<Literal>{lit(Axis::X, Relation::GT, 0), lit(Axis::Y, Relation::GT, 0)}));
}

TEST(Parse, DisjunctionRejected) {
  try {
    parse("G[0,1](x>0) | F[0,1](y>0)");
    FAIL();
  } catch (const FragmentViolation& e) {
    EXPECT_EQ(e.rule(), FragmentRule::Disjunction);
    EXPECT_EQ(e.offset(), 12u);
  }
}

TEST(Parse, NestedTemporalNamesRule) {
  try {
    parse("G[0,1](F[0,1](x>0))");
    FAIL();
  } catch (const FragmentViolation& e) {
    EXPECT_EQ(e.rule(), FragmentRule::NestedTemporal);
    EXPECT_NE(std::string(e.what()).find("no-nesting"), std::string::npos);
  }
}

TEST(Parse, SyntaxErrorCarriesOffset) {
  try {
    parse("G[0,1](x>)");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 9u);
  }
}

TEST(Parse, UnicodeAliases) {
  EXPECT_EQ(parse("G[0,1](x \xE2\x89\xA5 1 \xE2\x88\xA7 \xC2\xAC y > 2)"), parse("G[0,1](x >= 1 & !y > 2)"));
}

TEST(Parse, EqualityWarns) {
  const auto r = parse_with_diagnostics("G[0,1](x = 2)");
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_TRUE(parse_with_diagnostics("G[0,1](x >= 2)").warnings.empty());
}

TEST(Parse, CommentsStripped) {
  EXPECT_EQ(parse(strip_comments("# header\nG[0,1](x>0) # tail\n& F[0,2](y>1)\n")),
            parse("G[0,1](x>0) & F[0,2](y>1)"));
}

TEST(Parse, HandWrittenInvalidStrings) {
  ASSERT_EQ(std::size(kInvalid), 100u);
  for (const auto& c : kInvalid) {
    EXPECT_EQ(classify(c.text), c.rule) << "input: " << c.text;
  }
}

TEST(PrettyPrint, CanonicalForm) {
  Formula f;
  f.conjuncts.push_back({TemporalOp::Always, 0, 10, {lit(Axis::X, Relation::GT, 0), lit(Axis::Y, Relation::GT, 0)}});
  EXPECT_EQ(pretty_print(f), "G[0,10](x > 0 & y > 0)");
}

TEST(PrettyPrint, RoundTripExample) {
  const Formula f = parse("F[2,5](x>0 & !(x>2))");
  EXPECT_EQ(parse(pretty_print(f)), f);
}

TEST(PrettyPrint, RandomRoundTripAndFixedPoint) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 1000; ++n) {
    const Formula f = oracle::random_formula(rng);
    const std::string once = pretty_print(f);
    const Formula back = parse(once);
    ASSERT_EQ(back, f) << once;
    EXPECT_EQ(pretty_print(back), once);
  }
}

TEST(EvaluateLiteral, Examples) {
  EXPECT_TRUE(evaluate_literal(lit(Axis::X, Relation::GE, 2), 2, 0));
  EXPECT_TRUE(evaluate_literal(lit(Axis::X, Relation::GT, 2, true), 2, 0));
  EXPECT_FALSE(evaluate_literal(lit(Axis::Y, Relation::EQ, 3), 0, 3.0000001));
  EXPECT_TRUE(evaluate_literal(lit(Axis::Y, Relation::EQ, 3), 0, 3.0));
}

TEST(Signal, RejectsBadTimestamps) {
  EXPECT_THROW(Signal({{0, 0, 0}}), std::invalid_argument);
  EXPECT_THROW(Signal({{0, 0, 0}, {0, 0, 0}}), std::invalid_argument);
  EXPECT_THROW(Signal({{0, 0, 0}, {1, 0, 0}, {1.5, 0, 0}}), std::invalid_argument);
  EXPECT_NO_THROW(Signal({{0, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}}));
}

TEST(Monitor, ConstantSignal) {
  std::vector<Sample> s;
  for (int k = 0; k <= 50; ++k) s.push_back({k * 0.1, 1, 1});
  EXPECT_TRUE(monitor(parse("G[0,5](x>0)"), Signal(s)).satisfied);
}

TEST(Monitor, RampWitness) {
  const Signal s = ramp(0.5, 5, -3);
  const auto v = monitor(parse("F[0,5](x>0)"), s);
  EXPECT_TRUE(v.satisfied);
  ASSERT_TRUE(v.per_conjunct[0].time.has_value());
  EXPECT_DOUBLE_EQ(*v.per_conjunct[0].time, 3.5);
}

TEST(Monitor, RampViolation) {
  const auto v = monitor(parse("G[0,5](x>0)"), ramp(0.5, 5, -3));
  EXPECT_FALSE(v.satisfied);
  ASSERT_TRUE(v.per_conjunct[0].time.has_value());
  EXPECT_DOUBLE_EQ(*v.per_conjunct[0].time, 0.0);
}

TEST(Monitor, HorizonTooShort) {
  EXPECT_THROW(monitor(parse("G[0,10](x>0)"), ramp(0.5, 5, 1)), HorizonTooShort);
  // Half a period of slack at the window end.
  EXPECT_NO_THROW(monitor(parse("G[0,5.2](x>0)"), ramp(0.5, 5, 1)));
}

TEST(Monitor, HalfPeriodWindowMembership) {
  // x(t) = t - 2.5 equals -2 only at the sample t = 0.5.
  const Signal s = ramp(0.5, 5, -2.5);
  const auto in = monitor(parse("F[0.7,2](x >= -2 & !(x > -2))"), s);
  EXPECT_TRUE(in.satisfied);
  EXPECT_EQ(in.per_conjunct[0].time, 0.5);
  EXPECT_FALSE(monitor(parse("F[0.8,2](x >= -2 & !(x > -2))"), s).satisfied);
}

TEST(Monitor, AgreesWithPerSampleOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 1000; ++n) {
    const double period = (n % 3 == 0) ? 0.5 : 0.25;
    const auto samples = oracle::random_signal(rng, 12.0, period);
    const Formula f = oracle::random_monitor_formula(rng, 12.0);
    const auto got = monitor(f, Signal(samples));
    const auto want = oracle::brute_monitor(f, samples);
    ASSERT_EQ(got.satisfied, want.satisfied) << pretty_print(f);
    for (std::size_t k = 0; k < f.conjuncts.size(); ++k) {
      EXPECT_EQ(got.per_conjunct[k].satisfied, want.per_conjunct[k]);
      EXPECT_EQ(got.per_conjunct[k].time, want.times[k]);
    }
  }
}

TEST(Monitor, EventuallyMonotoneInWindow) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    const auto samples = oracle::random_signal(rng, 10.0, 0.25);
    Formula f = oracle::random_monitor_formula(rng, 10.0);
    f.conjuncts.resize(1);
    f.conjuncts[0].op = TemporalOp::Eventually;
    if (!monitor(f, Signal(samples)).satisfied) continue;
    Formula wider = f;
    wider.conjuncts[0].t1 = f.conjuncts[0].t1 * u(rng);
    wider.conjuncts[0].t2 = f.conjuncts[0].t2 + (10.0 - f.conjuncts[0].t2) * u(rng);
    EXPECT_TRUE(monitor(wider, Signal(samples)).satisfied);
  }
}

TEST(Formula, MaxTime) { EXPECT_EQ(parse("G[0,3](x>0) & F[2,7](y>0)").max_time(), 7.0); }

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hclbf/stl.hpp"

namespace hclbf::stl {

namespace {

std::string horizon_message(double required, double available) {
  std::ostringstream os;
  os << "signal ends at t=" << available << " but the formula needs samples up to t=" << required;
  return os.str();
}

}  // namespace

HorizonTooShort::HorizonTooShort(double required, double available)
    : std::runtime_error(horizon_message(required, available)),
      required_(required),
      available_(available) {}

bool evaluate_literal(const Literal& l, double x, double y) {
  const double v = l.atom.axis == Axis::X ? x : y;
  bool holds = false;
  switch (l.atom.relation) {
    case Relation::GE: holds = v >= l.atom.threshold; break;
    case Relation::GT: holds = v > l.atom.threshold; break;
    case Relation::EQ: holds = v == l.atom.threshold; break;
  }
  return l.negated ? !holds : holds;
}

bool evaluate_body(const std::vector<Literal>& body, double x, double y) {
  for (const auto& l : body) {
    if (!evaluate_literal(l, x, y)) return false;
  }
  return true;
}

Signal::Signal(std::vector<Sample> samples) : samples_(std::move(samples)), period_(0.0) {
  if (samples_.size() < 2) {
    throw std::invalid_argument("signal needs at least two samples");
  }
  for (const auto& s : samples_) {
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw std::invalid_argument("signal samples must be finite");
    }
  }
  period_ = (samples_.back().t - samples_.front().t) / static_cast<double>(samples_.size() - 1);
  if (!(period_ > 0.0)) {
    throw std::invalid_argument("signal timestamps must be strictly increasing");
  }
  for (std::size_t k = 1; k < samples_.size(); ++k) {
    const double d = samples_[k].t - samples_[k - 1].t;
    if (!(d > 0.0)) {
      throw std::invalid_argument("signal timestamps must be strictly increasing");
    }
    if (std::abs(d - period_) > 1e-9 * period_) {
      throw std::invalid_argument("signal timestamps are not uniformly spaced");
    }
  }
}

MonitorVerdict monitor(const Formula& f, const Signal& s) {
  const double eps = 0.5 * s.period();
  for (const auto& c : f.conjuncts) {
    if (s.end_time() + eps < c.t2) throw HorizonTooShort(c.t2, s.end_time());
  }

  MonitorVerdict verdict;
  verdict.satisfied = true;
  for (std::size_t k = 0; k < f.conjuncts.size(); ++k) {
    const auto& c = f.conjuncts[k];
    ConjunctVerdict cv;
    cv.index = k;
    // Always: looking for a counterexample. Eventually: looking for a witness.
    const bool seek = c.op == TemporalOp::Eventually;
    cv.satisfied = !seek;
    for (const auto& sample : s.samples()) {
      if (sample.t < c.t1 - eps) continue;
      if (sample.t > c.t2 + eps) break;
      if (evaluate_body(c.body, sample.x, sample.y) == seek) {
        cv.satisfied = seek;
        cv.time = sample.t;
        break;
      }
    }
    verdict.satisfied = verdict.satisfied && cv.satisfied;
    verdict.per_conjunct.push_back(cv);
  }
  return verdict;
}

}  // namespace hclbf::stl

#include "scatter/scoring.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "scatter/quadrature.hpp"

namespace scatter {

ScoringRule ScoringRule::beta(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0))
    throw std::invalid_argument("ScoringRule::beta: parameters must exceed -1");
  return ScoringRule(ScoreKind::beta, alpha, beta);
}

ScoringRule ScoringRule::with_affine(double scale, double offset) const {
  if (!(scale > 0.0)) throw std::invalid_argument("ScoringRule::with_affine: scale must be positive");
  ScoringRule r = *this;
  r.scale_ = scale_ * scale;
  r.offset_ = offset_ * scale + offset;
  return r;
}

bool ScoringRule::condition1_holds() const {
  if (!smooth()) return false;
  return std::abs(alpha_ - beta_) < 1.0;
}

std::string ScoringRule::name() const {
  switch (kind_) {
    case ScoreKind::log_score: return "log";
    case ScoreKind::quadratic: return "quadratic";
    case ScoreKind::boosting: return "boosting";
    case ScoreKind::zero_one: return "zero_one";
    case ScoreKind::beta:
      return "beta(" + std::to_string(alpha_) + "," + std::to_string(beta_) + ")";
  }
  return "unknown";
}

namespace {

// int_t^1 c^(a-1) (1-c)^b dc; both endpoint powers exceed -1, which
// tanh-sinh integrates without any splitting.
double upper_tail_integral(double a, double b, double t) {
  return tanh_sinh(
      [a, b](double c) { return std::pow(c, a - 1.0) * std::pow(1.0 - c, b); }, t, 1.0, 1e-11);
}

// int_0^t c^a (1-c)^(b-1) dc.
double lower_tail_integral(double a, double b, double t) {
  return tanh_sinh(
      [a, b](double c) { return std::pow(c, a) * std::pow(1.0 - c, b - 1.0); }, 0.0, t, 1e-11);
}

}  // namespace

ScoreEval score(const ScoringRule& rule, double t) {
  if (!rule.smooth())
    throw std::invalid_argument("score: zero_one has no smooth evaluation; use score_value_zero_one");
  if (!(t > 0.0 && t < 1.0)) throw std::domain_error("score: t must lie strictly in (0,1)");

  const double a = rule.alpha(), b = rule.beta_param();
  ScoreEval e;
  e.ds1 = std::pow(t, a - 1.0) * std::pow(1.0 - t, b);
  e.ds0 = -std::pow(t, a) * std::pow(1.0 - t, b - 1.0);

  switch (rule.kind()) {
    case ScoreKind::log_score:
      e.s1 = std::log(t);
      e.s0 = std::log(1.0 - t);
      break;
    case ScoreKind::quadratic:
      e.s1 = -0.5 * (1.0 - t) * (1.0 - t);
      e.s0 = -0.5 * t * t;
      break;
    case ScoreKind::boosting:
      e.s1 = -2.0 * std::sqrt((1.0 - t) / t);
      e.s0 = -2.0 * std::sqrt(t / (1.0 - t));
      break;
    default:
      e.s1 = -upper_tail_integral(a, b, t);
      e.s0 = -lower_tail_integral(a, b, t);
      break;
  }

  const double sc = rule.scale(), off = rule.offset();
  e.s1 = sc * e.s1 + off;
  e.s0 = sc * e.s0 + off;
  e.ds1 *= sc;
  e.ds0 *= sc;
  return e;
}

double score_d1(const ScoringRule& rule, double t) {
  if (!rule.smooth()) throw std::invalid_argument("score_d1: zero_one is not differentiable");
  return rule.scale() * std::pow(t, rule.alpha() - 1.0) * std::pow(1.0 - t, rule.beta_param());
}

double score_d0(const ScoringRule& rule, double t) {
  if (!rule.smooth()) throw std::invalid_argument("score_d0: zero_one is not differentiable");
  return -rule.scale() * std::pow(t, rule.alpha()) * std::pow(1.0 - t, rule.beta_param() - 1.0);
}

std::pair<double, double> score_value_zero_one(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("score_value_zero_one: t must lie in [0,1]");
  double s1 = (t >= 0.5) ? 2.0 : 0.0;
  return {s1, 2.0 - s1};
}

double savage_g(const ScoringRule& rule, double t) {
  ScoreEval e = score(rule, t);
  return t * e.s1 + (1.0 - t) * e.s0;
}

Condition1Result condition1_margin(const ScoringRule& rule) {
  if (!rule.smooth())
    throw std::invalid_argument("condition1_margin: defined for smooth kinds only");
  const double a = rule.alpha(), b = rule.beta_param();
  // From G''(t) = t^(a-1) (1-t)^(b-1):
  //   G''(1/2)  = 2^(2-a-b)
  //   G'''(1/2) = (a-b) * 2^(3-a-b)
  double margin = rule.scale() * (1.0 - (a - b)) * std::pow(2.0, 3.0 - a - b);
  return {margin, std::abs(a - b) < 1.0};
}

}  // namespace scatter

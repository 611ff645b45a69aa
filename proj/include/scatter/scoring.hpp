#pragma once

#include <string>
#include <utility>

namespace scatter {

enum class ScoreKind { beta, log_score, quadratic, boosting, zero_one };

// Proper scoring rule for binary forecasts. The named smooth kinds coincide
// with Beta-family members (log = beta(0,0), quadratic = beta(1,1),
// boosting = beta(-1/2,-1/2)) under the integral normalization
//   S(t,1) = -int_t^1 c^(a-1) (1-c)^b dc,   S(t,0) = -int_0^t c^a (1-c)^(b-1) dc,
// so named-kind values differ from other textbook conventions by positive
// affine factors, which never move the induced argmin. An affine wrapper
// (scale * S + offset) is provided for invariance tests.
class ScoringRule {
 public:
  static ScoringRule log_score() { return ScoringRule(ScoreKind::log_score, 0.0, 0.0); }
  static ScoringRule quadratic() { return ScoringRule(ScoreKind::quadratic, 1.0, 1.0); }
  static ScoringRule boosting() { return ScoringRule(ScoreKind::boosting, -0.5, -0.5); }
  static ScoringRule beta(double alpha, double beta);
  static ScoringRule zero_one() { return ScoringRule(ScoreKind::zero_one, 0.0, 0.0); }

  ScoringRule with_affine(double scale, double offset) const;

  ScoreKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta_param() const { return beta_; }
  double scale() const { return scale_; }
  double offset() const { return offset_; }

  bool smooth() const { return kind_ != ScoreKind::zero_one; }
  bool condition1_holds() const;

  std::string name() const;

 private:
  ScoringRule(ScoreKind k, double a, double b) : kind_(k), alpha_(a), beta_(b) {}

  ScoreKind kind_;
  double alpha_, beta_;
  double scale_ = 1.0, offset_ = 0.0;
};

struct ScoreEval {
  double s1, s0;    // S(t,1), S(t,0)
  double ds1, ds0;  // d/dt of each
};

// Values and t-derivatives of a smooth rule at t in (0,1). Derivatives are
// closed-form; values are closed-form for the named kinds and adaptive
// quadrature (1e-9 absolute) for general beta parameters.
ScoreEval score(const ScoringRule& rule, double t);

// Derivative-only fast paths for the training loop (always closed form).
double score_d1(const ScoringRule& rule, double t);
double score_d0(const ScoringRule& rule, double t);

// Zero-one score values; the tie t = 1/2 counts as event 1.
std::pair<double, double> score_value_zero_one(double t);

// Savage convex function G(t) = t*S(t,1) + (1-t)*S(t,0).
double savage_g(const ScoringRule& rule, double t);

struct Condition1Result {
  double margin;     // 2*G''(1/2) - G'''(1/2)
  bool satisfiable;  // |alpha - beta| < 1
};

Condition1Result condition1_margin(const ScoringRule& rule);

}  // namespace scatter

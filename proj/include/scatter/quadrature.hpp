#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace scatter {

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
  if (depth > 60)
    throw std::runtime_error("adaptive_simpson: did not converge (recursion depth exceeded)");
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive Simpson quadrature; the integrand must be finite on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 0);
}

// Tanh-sinh (double exponential) quadrature over (a, b). The integrand is
// never evaluated at the endpoints, and integrable endpoint singularities
// (powers above -1) converge at the usual double-exponential rate.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (a == b) return 0.0;
  const double half_pi = 1.5707963267948966;
  const double center = 0.5 * (a + b), radius = 0.5 * (b - a);
  const double umax = 3.7;

  auto node = [&](double u, double& x, double& w) {
    double s = half_pi * std::sinh(u);
    double t = std::tanh(s);
    double ch = std::cosh(s);
    x = center + radius * t;
    w = radius * half_pi * std::cosh(u) / (ch * ch);
  };

  auto eval = [&](double u) {
    double x, w;
    node(u, x, w);
    if (!(x > a && x < b) || w == 0.0) return 0.0;
    double v = f(x) * w;
    return std::isfinite(v) ? v : 0.0;
  };

  double h = 1.0;
  double sum = eval(0.0);
  for (double u = h; u <= umax; u += h) sum += eval(u) + eval(-u);
  double prev = sum * h;

  for (int level = 1; level <= 12; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double u = h; u <= umax; u += 2.0 * h) add += eval(u) + eval(-u);
    sum += add;
    double cur = sum * h;
    if (level >= 3 && std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace scatter

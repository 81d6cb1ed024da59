#pragma once

#include <array>
#include <cmath>

namespace logpot::quad {

/// Five-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 9.
inline constexpr std::array<double, 5> kGaussNodes = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
    0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss5(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t k = 0; k < kGaussNodes.size(); ++k)
    s += kGaussWeights[k] * f(mid + half * kGaussNodes[k]);
  return s * half;
}

/// Composite five-point Gauss-Legendre on `panels` equal panels.
template <class F>
double gauss5_composite(F&& f, double a, double b, int panels) {
  const double w = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) s += gauss5(f, a + p * w, a + (p + 1) * w);
  return s;
}

namespace detail {
template <class F>
double adaptive_simpson(F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) * (fa + 4 * flm + fm) / 6.0;
  const double right = (b - m) * (fm + 4 * frm + fb) / 6.0;
  const double diff = left + right - whole;
  if (depth <= 0 || std::fabs(diff) <= 15.0 * eps)
    return left + right + diff / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance `eps`.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double eps = 1e-10,
                        int max_depth = 40) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) * (fa + 4 * fm + fb) / 6.0;
  return detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

}  // namespace logpot::quad

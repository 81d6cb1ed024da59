#pragma once

// Probability measures on the real line and exact one-dimensional transport
// distances between them.
//
// Three representations are provided:
//   GridMeasure       cell-averaged density on a uniform grid
//   PiecewiseMeasure  constant density on arbitrary sorted intervals
//   EmpiricalMeasure  N atoms of mass 1/N
// All of them expose their distribution function through `cdf()`, and every
// distance below is an exact piecewise integral over merged breakpoints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "logpot/error.hpp"
#include "logpot/quadrature.hpp"

namespace logpot {

/// Right-continuous distribution function, linear between breakpoints.
///
/// At breakpoint k the left limit is `left_values[k]` and the value is
/// `values[k]`; a jump encodes an atom. Between breakpoints k and k+1 the
/// function runs linearly from `values[k]` to `left_values[k+1]`.
struct CdfView {
  std::vector<double> breakpoints;
  std::vector<double> left_values;
  std::vector<double> values;

  double operator()(double x) const { return eval(x, false); }
  double left_limit(double x) const { return eval(x, true); }

 private:
  double eval(double x, bool left) const {
    if (breakpoints.empty() || x < breakpoints.front()) return 0.0;
    if (x > breakpoints.back()) return 1.0;
    const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
    const auto j = static_cast<std::size_t>(it - breakpoints.begin());
    if (breakpoints[j] == x) return left ? left_values[j] : values[j];
    const double x0 = breakpoints[j - 1];
    const double x1 = breakpoints[j];
    return values[j - 1] +
           (left_values[j] - values[j - 1]) * (x - x0) / (x1 - x0);
  }
};

class PiecewiseMeasure;

/// Cell-averaged density on `n` equal cells covering [lo, hi].
class GridMeasure {
 public:
  /// `density` must be non-negative with h * sum(density) = 1 up to 1e-8;
  /// the stored copy is rescaled to exact normalisation.
  GridMeasure(double lo, double hi, std::vector<double> density)
      : lo_(lo), hi_(hi), density_(std::move(density)) {
    if (!(hi_ > lo_) || !std::isfinite(lo_) || !std::isfinite(hi_))
      throw InvalidArgument("GridMeasure: need finite lo < hi");
    if (density_.empty()) throw InvalidArgument("GridMeasure: no cells");
    double total = 0.0;
    for (double d : density_) {
      if (!(d >= 0.0) || !std::isfinite(d))
        throw InvalidArgument("GridMeasure: density must be finite and >= 0");
      total += d;
    }
    total *= cell_width();
    if (std::fabs(total - 1.0) > 1e-8)
      throw InvalidArgument("GridMeasure: density does not integrate to 1 (got " +
                            std::to_string(total) + ")");
    for (double& d : density_) d /= total;
  }

  /// Builds a measure from non-negative cell weights of any positive total.
  static GridMeasure from_masses(double lo, double hi,
                                 std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw InvalidArgument("GridMeasure: zero total mass");
    const double h = (hi - lo) / static_cast<double>(weights.size());
    std::vector<double> density(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      density[i] = std::max(weights[i], 0.0) / (total * h);
    return GridMeasure(lo, hi, std::move(density));
  }

  /// Exact cell averages of the law with distribution function `F`,
  /// renormalised to the window.
  template <class Cdf>
  static GridMeasure from_cdf(double lo, double hi, std::size_t n, Cdf&& F) {
    std::vector<double> w(n);
    const double h = (hi - lo) / static_cast<double>(n);
    double prev = F(lo);
    for (std::size_t i = 0; i < n; ++i) {
      const double next = F(i + 1 == n ? hi : lo + static_cast<double>(i + 1) * h);
      w[i] = std::max(next - prev, 0.0);
      prev = next;
    }
    return from_masses(lo, hi, w);
  }

  /// Cell averages of an unnormalised density by composite Gauss quadrature.
  template <class Density>
  static GridMeasure from_density(double lo, double hi, std::size_t n,
                                  Density&& f) {
    std::vector<double> w(n);
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = lo + static_cast<double>(i) * h;
      w[i] = quad::gauss5(f, a, a + h);
    }
    return from_masses(lo, hi, w);
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return density_.size(); }
  double cell_width() const noexcept {
    return (hi_ - lo_) / static_cast<double>(density_.size());
  }
  double edge(std::size_t i) const noexcept {
    return i == density_.size() ? hi_ : lo_ + static_cast<double>(i) * cell_width();
  }
  double center(std::size_t i) const noexcept {
    return lo_ + (static_cast<double>(i) + 0.5) * cell_width();
  }
  const std::vector<double>& density() const noexcept { return density_; }
  double mass(std::size_t i) const noexcept { return density_[i] * cell_width(); }
  std::vector<double> masses() const {
    std::vector<double> m(density_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = mass(i);
    return m;
  }
  double density_at(double x) const noexcept {
    if (x < lo_ || x >= hi_) return 0.0;
    auto i = static_cast<std::size_t>((x - lo_) / cell_width());
    return density_[std::min(i, density_.size() - 1)];
  }

  /// Image under x -> scale * x + shift (scale > 0).
  GridMeasure affine_image(double scale, double shift) const {
    if (!(scale > 0.0)) throw InvalidArgument("affine_image: scale must be > 0");
    std::vector<double> d(density_);
    for (double& v : d) v /= scale;
    return GridMeasure(scale * lo_ + shift, scale * hi_ + shift, std::move(d));
  }

  /// Same law re-expressed on another uniform grid (exact CDF re-averaging).
  GridMeasure regrid(double lo, double hi, std::size_t n) const;

 private:
  double lo_;
  double hi_;
  std::vector<double> density_;
};

/// Constant density on each interval [breaks[k], breaks[k+1]).
class PiecewiseMeasure {
 public:
  PiecewiseMeasure(std::vector<double> breaks, std::vector<double> density)
      : breaks_(std::move(breaks)), density_(std::move(density)) {
    if (breaks_.size() != density_.size() + 1 || density_.empty())
      throw InvalidArgument("PiecewiseMeasure: need k+1 breaks for k pieces");
    double total = 0.0;
    for (std::size_t k = 0; k < density_.size(); ++k) {
      if (!(breaks_[k + 1] > breaks_[k]))
        throw InvalidArgument("PiecewiseMeasure: breaks must increase");
      if (!(density_[k] >= 0.0) || !std::isfinite(density_[k]))
        throw InvalidArgument("PiecewiseMeasure: density must be finite and >= 0");
      total += density_[k] * (breaks_[k + 1] - breaks_[k]);
    }
    if (std::fabs(total - 1.0) > 1e-8)
      throw InvalidArgument("PiecewiseMeasure: density does not integrate to 1");
    for (double& d : density_) d /= total;
  }

  explicit PiecewiseMeasure(const GridMeasure& g)
      : breaks_(g.size() + 1), density_(g.density()) {
    for (std::size_t i = 0; i <= g.size(); ++i) breaks_[i] = g.edge(i);
  }

  const std::vector<double>& breaks() const noexcept { return breaks_; }
  const std::vector<double>& density() const noexcept { return density_; }
  std::size_t size() const noexcept { return density_.size(); }
  double lo() const noexcept { return breaks_.front(); }
  double hi() const noexcept { return breaks_.back(); }
  double width(std::size_t k) const noexcept { return breaks_[k + 1] - breaks_[k]; }
  double mass(std::size_t k) const noexcept { return density_[k] * width(k); }

 private:
  std::vector<double> breaks_;
  std::vector<double> density_;
};

/// Uniform weights on a sorted point configuration. Ties are allowed.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("EmpiricalMeasure: need N >= 1");
    for (double x : points_)
      if (!std::isfinite(x)) throw InvalidArgument("EmpiricalMeasure: non-finite point");
    std::sort(points_.begin(), points_.end());
  }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double min() const noexcept { return points_.front(); }
  double max() const noexcept { return points_.back(); }
  bool has_ties() const noexcept {
    return std::adjacent_find(points_.begin(), points_.end()) != points_.end();
  }

 private:
  std::vector<double> points_;
};

// ---------------------------------------------------------------------------
// Distribution functions

inline CdfView cdf(const GridMeasure& m) {
  CdfView F;
  const std::size_t n = m.size();
  F.breakpoints.resize(n + 1);
  F.values.resize(n + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    F.breakpoints[i] = m.edge(i);
    F.values[i] = acc;
    if (i < n) acc += m.mass(i);
  }
  F.values[n] = 1.0;
  F.left_values = F.values;
  return F;
}

inline CdfView cdf(const PiecewiseMeasure& m) {
  CdfView F;
  const std::size_t n = m.size();
  F.breakpoints = m.breaks();
  F.values.resize(n + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    F.values[i] = acc;
    if (i < n) acc += m.mass(i);
  }
  F.values[n] = 1.0;
  F.left_values = F.values;
  return F;
}

inline CdfView cdf(const EmpiricalMeasure& m) {
  CdfView F;
  const auto& p = m.points();
  const double inv = 1.0 / static_cast<double>(p.size());
  std::size_t i = 0;
  while (i < p.size()) {
    std::size_t j = i;
    while (j < p.size() && p[j] == p[i]) ++j;
    F.breakpoints.push_back(p[i]);
    F.left_values.push_back(static_cast<double>(i) * inv);
    F.values.push_back(j == p.size() ? 1.0 : static_cast<double>(j) * inv);
    i = j;
  }
  return F;
}

inline CdfView cdf(const CdfView& F) { return F; }

namespace detail {

struct CdfSample {
  double left;
  double right;
};

/// Left and right values of F at each point of the ascending sequence xs.
inline std::vector<CdfSample> sample_sorted(const CdfView& F,
                                            std::span<const double> xs) {
  std::vector<CdfSample> out(xs.size());
  const auto& bp = F.breakpoints;
  const std::size_t m = bp.size();
  std::size_t j = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double x = xs[k];
    while (j < m && bp[j] < x) ++j;
    if (j < m && bp[j] == x) {
      out[k] = {F.left_values[j], F.values[j]};
    } else if (j == 0) {
      out[k] = {0.0, 0.0};
    } else if (j == m) {
      out[k] = {1.0, 1.0};
    } else {
      const double v = F.values[j - 1] + (F.left_values[j] - F.values[j - 1]) *
                                             (x - bp[j - 1]) / (bp[j] - bp[j - 1]);
      out[k] = {v, v};
    }
  }
  return out;
}

inline std::vector<double> merged_breakpoints(const CdfView& a, const CdfView& b) {
  std::vector<double> xs;
  xs.reserve(a.breakpoints.size() + b.breakpoints.size());
  std::merge(a.breakpoints.begin(), a.breakpoints.end(), b.breakpoints.begin(),
             b.breakpoints.end(), std::back_inserter(xs));
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

/// Integral over [0, len] of |d| where d runs linearly from d0 to d1.
inline double abs_linear_integral(double d0, double d1, double len) {
  if ((d0 >= 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0))
    return 0.5 * len * (std::fabs(d0) + std::fabs(d1));
  return 0.5 * len * (d0 * d0 + d1 * d1) / (std::fabs(d0) + std::fabs(d1));
}

/// Piece of a quantile function: Q runs linearly from q0 to q1 on [t0, t1].
struct QuantileSegment {
  double t0, t1, q0, q1;
  double at(double t) const {
    if (t1 <= t0) return q0;
    return q0 + (q1 - q0) * (t - t0) / (t1 - t0);
  }
};

inline std::vector<QuantileSegment> quantile_segments(const CdfView& F) {
  std::vector<QuantileSegment> segs;
  const auto& bp = F.breakpoints;
  for (std::size_t k = 0; k < bp.size(); ++k) {
    if (F.values[k] > F.left_values[k])
      segs.push_back({F.left_values[k], F.values[k], bp[k], bp[k]});
    if (k + 1 < bp.size() && F.left_values[k + 1] > F.values[k])
      segs.push_back({F.values[k], F.left_values[k + 1], bp[k], bp[k + 1]});
  }
  return segs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transport distances

/// W1 as the exact integral of |F_a - F_b| over merged breakpoints.
inline double w1(const CdfView& Fa, const CdfView& Fb) {
  const auto xs = detail::merged_breakpoints(Fa, Fb);
  const auto sa = detail::sample_sorted(Fa, xs);
  const auto sb = detail::sample_sorted(Fb, xs);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double d0 = sa[k].right - sb[k].right;
    const double d1 = sa[k + 1].left - sb[k + 1].left;
    total += detail::abs_linear_integral(d0, d1, xs[k + 1] - xs[k]);
  }
  return total;
}

/// W2 from the quantile coupling, (int_0^1 (Q_a - Q_b)^2 dt)^(1/2), exact
/// for piecewise-linear quantile functions.
inline double w2(const CdfView& Fa, const CdfView& Fb) {
  const auto A = detail::quantile_segments(Fa);
  const auto B = detail::quantile_segments(Fb);
  std::size_t ia = 0, ib = 0;
  double t = 0.0;
  double total = 0.0;
  while (ia < A.size() && ib < B.size()) {
    const double t_end = std::min(A[ia].t1, B[ib].t1);
    if (t_end > t) {
      const double d0 = A[ia].at(t) - B[ib].at(t);
      const double d1 = A[ia].at(t_end) - B[ib].at(t_end);
      total += (t_end - t) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
      t = t_end;
    }
    if (A[ia].t1 <= t_end) ++ia;
    if (B[ib].t1 <= t_end) ++ib;
  }
  return std::sqrt(std::max(total, 0.0));
}

/// Q((i + 1/2) / N) for i = 0..N-1, the N-point quantile discretisation.
inline EmpiricalMeasure quantile_points(const CdfView& F, std::size_t N) {
  if (N == 0) throw InvalidArgument("quantile_points: need N >= 1");
  const auto segs = detail::quantile_segments(F);
  std::vector<double> pts(N);
  std::size_t s = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
    while (s + 1 < segs.size() && segs[s].t1 < t) ++s;
    pts[i] = segs[s].at(t);
  }
  return EmpiricalMeasure(std::move(pts));
}

template <class M>
EmpiricalMeasure quantile_points(const M& m, std::size_t N) {
  return quantile_points(cdf(m), N);
}

template <class A, class B>
double w1(const A& a, const B& b) {
  return w1(cdf(a), cdf(b));
}

template <class A, class B>
double w2(const A& a, const B& b) {
  return w2(cdf(a), cdf(b));
}

// ---------------------------------------------------------------------------
// Convolution with the uniform law on [0, eps]

namespace detail {

/// Antiderivative I(x) = int_{-inf}^x F, exact for piecewise-linear F.
class CdfIntegral {
 public:
  explicit CdfIntegral(CdfView F) : F_(std::move(F)), acc_(F_.breakpoints.size()) {
    const auto& bp = F_.breakpoints;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k)
      acc_[k + 1] = acc_[k] + 0.5 * (bp[k + 1] - bp[k]) * (F_.values[k] + F_.left_values[k + 1]);
  }

  double operator()(double x) const {
    const auto& bp = F_.breakpoints;
    if (x <= bp.front()) return 0.0;
    if (x >= bp.back()) return acc_.back() + (x - bp.back());
    const auto j = static_cast<std::size_t>(
        std::upper_bound(bp.begin(), bp.end(), x) - bp.begin()) - 1;
    const double v0 = F_.values[j];
    const double v1 = F_.left_values[j + 1];
    const double s = (x - bp[j]) / (bp[j + 1] - bp[j]);
    const double vx = v0 + (v1 - v0) * s;
    return acc_[j] + 0.5 * (x - bp[j]) * (v0 + vx);
  }

 private:
  CdfView F_;
  std::vector<double> acc_;
};

inline GridMeasure convolve_cdf(const CdfView& F, double eps, double lo,
                                double h, std::size_t n) {
  if (!(eps > 0.0)) throw InvalidArgument("convolve_uniform: eps must be > 0");
  if (eps < h * (1.0 - 1e-12))
    throw InvalidArgument("convolve_uniform: eps is smaller than one output cell");
  const CdfIntegral I(F);
  auto G = [&](double x) { return (I(x) - I(x - eps)) / eps; };
  std::vector<double> w(n);
  double prev = G(lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double next = G(lo + static_cast<double>(i + 1) * h);
    w[i] = std::max(next - prev, 0.0);
    prev = next;
  }
  return GridMeasure::from_masses(lo, lo + static_cast<double>(n) * h, w);
}

}  // namespace detail

/// m * lambda_eps on a grid extending m's grid to the right by eps, same cell
/// width unless `cells` overrides the count.
inline GridMeasure convolve_uniform(const GridMeasure& m, double eps,
                                    std::size_t cells = 0) {
  const double span = m.hi() + eps - m.lo();
  double h = m.cell_width();
  std::size_t n = static_cast<std::size_t>(std::ceil(span / h - 1e-9));
  if (cells != 0) {
    n = cells;
    h = span / static_cast<double>(n);
  }
  return detail::convolve_cdf(cdf(m), eps, m.lo(), h, n);
}

/// Empirical version; by default four output cells per eps.
inline GridMeasure convolve_uniform(const EmpiricalMeasure& m, double eps,
                                    std::size_t cells = 0) {
  if (!(eps > 0.0)) throw InvalidArgument("convolve_uniform: eps must be > 0");
  const double span = m.max() + eps - m.min();
  if (cells == 0) {
    const double c = std::ceil(span / (0.25 * eps));
    if (c > static_cast<double>(1u << 24))
      throw InvalidArgument("convolve_uniform: default grid too large, pass cells");
    cells = static_cast<std::size_t>(c);
  }
  return detail::convolve_cdf(cdf(m), eps, m.min(), span / static_cast<double>(cells),
                              cells);
}

inline GridMeasure GridMeasure::regrid(double lo, double hi, std::size_t n) const {
  const CdfView F = cdf(*this);
  return from_cdf(lo, hi, n, [&](double x) { return F(x); });
}

// ---------------------------------------------------------------------------
// Moments

inline double moment(const GridMeasure& m, int k) {
  if (k < 0) throw InvalidArgument("moment: k must be >= 0");
  if (k == 0) return 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m.edge(i);
    const double b = m.edge(i + 1);
    s += m.density()[i] * (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
  }
  return s;
}

inline double moment(const PiecewiseMeasure& m, int k) {
  if (k < 0) throw InvalidArgument("moment: k must be >= 0");
  if (k == 0) return 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m.breaks()[i];
    const double b = m.breaks()[i + 1];
    s += m.density()[i] * (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
  }
  return s;
}

inline double moment(const EmpiricalMeasure& m, int k) {
  if (k < 0) throw InvalidArgument("moment: k must be >= 0");
  if (k == 0) return 1.0;
  double s = 0.0;
  for (double x : m.points()) s += std::pow(x, k);
  return s / static_cast<double>(m.size());
}

// ---------------------------------------------------------------------------
// Reference laws

namespace laws {

/// Distribution function of the semicircle law of radius r centred at c.
inline double semicircle_cdf(double x, double c = 0.0, double r = 2.0) {
  const double u = (x - c) / r;
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / M_PI;
}

inline double semicircle_density(double x, double c = 0.0, double r = 2.0) {
  const double u = (x - c) / r;
  if (std::fabs(u) >= 1.0) return 0.0;
  return 2.0 / (M_PI * r) * std::sqrt(1.0 - u * u);
}

inline double uniform_cdf(double x, double a, double b) {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  return (x - a) / (b - a);
}

inline GridMeasure semicircle(double lo, double hi, std::size_t n, double c = 0.0,
                              double r = 2.0) {
  return GridMeasure::from_cdf(lo, hi, n, [=](double x) { return semicircle_cdf(x, c, r); });
}

inline GridMeasure uniform(double lo, double hi, std::size_t n, double a, double b) {
  return GridMeasure::from_cdf(lo, hi, n, [=](double x) { return uniform_cdf(x, a, b); });
}

}  // namespace laws

}  // namespace logpot

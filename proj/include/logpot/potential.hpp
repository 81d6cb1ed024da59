#pragma once

// Confining potentials with declared growth constants.
//
// A Potential is the sum of up to three parts:
//   * a polynomial sum_k c_k x^k,
//   * an optional base table, linearly interpolated and continued outside
//     its window by the declared quadratic tail,
//   * tabulated perturbations, continued by their edge values.
// The declared growth (alpha, beta, degree) says V(x) >= alpha x^2 + beta; it
// cannot be verified asymptotically, only certified on a probed range by
// growth_margin().

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "logpot/error.hpp"

namespace logpot {

struct Growth {
  double alpha = 0.5;
  double beta = 0.0;
  double degree = 2.0;
};

/// Samples of a function at m >= 2 equally spaced nodes on [lo, hi].
/// Evaluation interpolates linearly and holds the edge values outside.
class TabulatedFunction {
 public:
  TabulatedFunction(double lo, double hi, std::vector<double> values)
      : lo_(lo), hi_(hi), values_(std::move(values)) {
    if (!(hi_ > lo_)) throw InvalidArgument("TabulatedFunction: need lo < hi");
    if (values_.size() < 2) throw InvalidArgument("TabulatedFunction: need >= 2 nodes");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("TabulatedFunction: non-finite value");
  }

  template <class F>
  static TabulatedFunction sample(double lo, double hi, std::size_t nodes, F&& f) {
    std::vector<double> v(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      v[i] = f(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes - 1));
    return TabulatedFunction(lo, hi, std::move(v));
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t nodes() const noexcept { return values_.size(); }
  double step() const noexcept { return (hi_ - lo_) / static_cast<double>(values_.size() - 1); }
  double node(std::size_t i) const noexcept {
    return i + 1 == values_.size() ? hi_ : lo_ + static_cast<double>(i) * step();
  }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(double x) const noexcept {
    if (x <= lo_) return values_.front();
    if (x >= hi_) return values_.back();
    const double s = (x - lo_) / step();
    auto i = static_cast<std::size_t>(s);
    if (i + 1 >= values_.size()) i = values_.size() - 2;
    const double t = s - static_cast<double>(i);
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

  /// Slope of the linear piece containing x (0 outside the table).
  double slope_at(double x) const noexcept {
    if (x < lo_ || x >= hi_) return 0.0;
    auto i = static_cast<std::size_t>((x - lo_) / step());
    if (i + 1 >= values_.size()) i = values_.size() - 2;
    return (values_[i + 1] - values_[i]) / step();
  }

  TabulatedFunction scaled(double s) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= s;
    return TabulatedFunction(lo_, hi_, std::move(v));
  }

  TabulatedFunction shifted(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x += c;
    return TabulatedFunction(lo_, hi_, std::move(v));
  }

  /// Largest difference quotient between consecutive nodes.
  double max_slope() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i)
      m = std::max(m, std::fabs(values_[i + 1] - values_[i]) / step());
    return m;
  }

 private:
  double lo_;
  double hi_;
  std::vector<double> values_;
};

namespace poly {

inline double eval(const std::vector<double>& c, double x) noexcept {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

inline std::vector<double> derivative(const std::vector<double>& c) {
  if (c.size() <= 1) return {};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

inline void trim(std::vector<double>& c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

/// Real roots of odd multiplicity in [a, b], located by sign changes on a
/// mesh and refined by bisection.
inline std::vector<double> real_roots_in(std::vector<double> c, double a, double b,
                                         int mesh = 4096) {
  trim(c);
  std::vector<double> roots;
  if (c.size() <= 1) return roots;
  if (c.size() == 2) {
    const double r = -c[0] / c[1];
    if (r >= a && r <= b) roots.push_back(r);
    return roots;
  }
  const double dx = (b - a) / mesh;
  double x0 = a;
  double f0 = eval(c, x0);
  for (int i = 1; i <= mesh; ++i) {
    const double x1 = a + i * dx;
    const double f1 = eval(c, x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if ((f0 < 0.0) != (f1 < 0.0) && f1 != 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = eval(c, mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  if (f0 == 0.0) roots.push_back(x0);
  return roots;
}

}  // namespace poly

class Potential {
 public:
  enum class Kind { polynomial, perturbed, tabulated };

  static Potential polynomial(std::vector<double> coeffs, Growth g) {
    Potential V;
    V.coeffs_ = std::move(coeffs);
    V.growth_ = g;
    V.validate();
    return V;
  }

  static Potential perturbed(std::vector<double> coeffs,
                             std::vector<TabulatedFunction> perturbations, Growth g) {
    Potential V;
    V.coeffs_ = std::move(coeffs);
    V.perturbations_ = std::move(perturbations);
    V.growth_ = g;
    V.validate();
    return V;
  }

  static Potential tabulated(TabulatedFunction table, Growth g) {
    Potential V;
    V.table_ = std::move(table);
    V.growth_ = g;
    V.validate();
    return V;
  }

  /// x^2 / 2, the potential of the semicircle law.
  static Potential quadratic(double a = 0.5) {
    return polynomial({0.0, 0.0, a}, Growth{0.5 * a, 0.0, 2.0});
  }

  Kind kind() const noexcept {
    if (table_) return Kind::tabulated;
    if (!perturbations_.empty()) return Kind::perturbed;
    return Kind::polynomial;
  }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const std::optional<TabulatedFunction>& table() const noexcept { return table_; }
  const std::vector<TabulatedFunction>& perturbations() const noexcept {
    return perturbations_;
  }
  const Growth& growth() const noexcept { return growth_; }

  double operator()(double x) const noexcept {
    double v = poly::eval(coeffs_, x);
    if (table_) v += table_value(x);
    for (const auto& p : perturbations_) v += p(x);
    return v;
  }

  /// Derivative of the smooth part at x, with one-sided table slopes.
  double derivative(double x) const noexcept {
    double d = poly::eval(poly::derivative(coeffs_), x);
    if (table_) {
      if (x < table_->lo() || x > table_->hi())
        d += 2.0 * growth_.alpha * x;
      else
        d += table_->slope_at(std::min(x, std::nextafter(table_->hi(), table_->lo())));
    }
    for (const auto& p : perturbations_) d += p.slope_at(x);
    return d;
  }

  /// s * V with growth constants scaled alike (s > 0).
  Potential scaled(double s) const {
    if (!(s > 0.0)) throw InvalidArgument("Potential::scaled: need s > 0");
    Potential V(*this);
    for (double& c : V.coeffs_) c *= s;
    if (V.table_) V.table_ = V.table_->scaled(s);
    for (auto& p : V.perturbations_) p = p.scaled(s);
    V.growth_.alpha *= s;
    V.growth_.beta *= s;
    return V;
  }

  /// V + f, with f continued by its edge values. Bounded f leaves the
  /// declared alpha valid; beta is lowered by the minimum of f.
  Potential plus(const TabulatedFunction& f) const {
    Potential V(*this);
    V.perturbations_.push_back(f);
    const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
    (void)mx;
    V.growth_.beta += std::min(0.0, *mn);
    return V;
  }

  Potential plus_constant(double c) const {
    Potential V(*this);
    if (V.coeffs_.empty()) V.coeffs_.push_back(0.0);
    V.coeffs_[0] += c;
    V.growth_.beta += c;
    return V;
  }

  /// Breakpoints of the piecewise-smooth structure strictly inside (a, b).
  std::vector<double> kinks_in(double a, double b) const {
    std::vector<double> k;
    auto add_table = [&](const TabulatedFunction& t) {
      for (std::size_t i = 0; i < t.nodes(); ++i) {
        const double x = t.node(i);
        if (x > a && x < b) k.push_back(x);
      }
    };
    if (table_) add_table(*table_);
    for (const auto& p : perturbations_) add_table(p);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }

 private:
  Potential() = default;

  void validate() const {
    if (!(growth_.alpha > 0.0))
      throw InvalidArgument("Potential: declared growth alpha must be > 0");
    if (!(growth_.degree >= 2.0))
      throw InvalidArgument("Potential: declared growth degree must be >= 2");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw InvalidArgument("Potential: non-finite coefficient");
  }

  double table_value(double x) const noexcept {
    const auto& t = *table_;
    if (x < t.lo()) return t.values().front() + growth_.alpha * (x * x - t.lo() * t.lo());
    if (x > t.hi()) return t.values().back() + growth_.alpha * (x * x - t.hi() * t.hi());
    return t(x);
  }

  std::vector<double> coeffs_;
  std::optional<TabulatedFunction> table_;
  std::vector<TabulatedFunction> perturbations_;
  Growth growth_;
};

/// sup |V(s) - V(t)| / |s - t| over [a, b].
///
/// V is a polynomial plus piecewise-linear pieces (and a quadratic tail for
/// tabulated kinds), so V' is a polynomial on each sub-interval between table
/// knots and the supremum is taken exactly over endpoints and critical points.
inline double lipschitz_norm_on(const Potential& V, double a, double b) {
  if (!(a < b)) throw InvalidArgument("lipschitz_norm_on: need a < b");
  auto dp = poly::derivative(V.coeffs());
  auto ddp = poly::derivative(dp);
  std::vector<double> crit_inner = poly::real_roots_in(ddp, a, b);
  std::vector<double> crit_tail;
  if (V.table()) {
    auto dd_tail = ddp;
    if (dd_tail.empty()) dd_tail.push_back(0.0);
    dd_tail[0] += 2.0 * V.growth().alpha;
    crit_tail = poly::real_roots_in(dd_tail, a, b);
  }

  std::vector<double> cuts = V.kinks_in(a, b);
  cuts.insert(cuts.begin(), a);
  cuts.push_back(b);

  double best = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double s = cuts[k];
    const double t = cuts[k + 1];
    const double mid = 0.5 * (s + t);
    // V' on (s, t) is dp(x) + offset (+ 2 alpha x in the quadratic tail)
    double offset = 0.0;
    bool tail = false;
    if (V.table()) {
      const auto& tab = *V.table();
      if (mid < tab.lo() || mid > tab.hi())
        tail = true;
      else
        offset += tab.slope_at(mid);
    }
    for (const auto& p : V.perturbations()) offset += p.slope_at(mid);
    auto dv = [&](double x) {
      double d = poly::eval(dp, x) + offset;
      if (tail) d += 2.0 * V.growth().alpha * x;
      return std::fabs(d);
    };
    best = std::max({best, dv(s), dv(t)});
    for (double c : tail ? crit_tail : crit_inner)
      if (c > s && c < t) best = std::max(best, dv(c));
  }
  return best;
}

/// sup f - inf f over [a, b] for a piecewise-linear table (exact at knots).
inline double oscillation(const TabulatedFunction& f, double a, double b) {
  if (!(a < b)) throw InvalidArgument("oscillation: need a < b");
  double mn = std::min(f(a), f(b));
  double mx = std::max(f(a), f(b));
  for (std::size_t i = 0; i < f.nodes(); ++i) {
    const double x = f.node(i);
    if (x > a && x < b) {
      mn = std::min(mn, f.values()[i]);
      mx = std::max(mx, f.values()[i]);
    }
  }
  return mx - mn;
}

/// max - min of a callable over a uniform mesh of `mesh` + 1 points.
template <class F>
double oscillation(F&& f, double a, double b, int mesh) {
  if (!(a < b)) throw InvalidArgument("oscillation: need a < b");
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (int i = 0; i <= mesh; ++i) {
    const double v = f(a + (b - a) * i / mesh);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return mx - mn;
}

struct GrowthMargin {
  double margin;    ///< min of V(x) - alpha x^2 over L <= |x| <= 10 L
  double location;  ///< where the minimum is attained
  bool ok;          ///< margin >= beta - tolerance
};

/// Certifies the declared quadratic lower bound on L <= |x| <= 10 L.
inline GrowthMargin growth_margin(const Potential& V, double L, int mesh = 20000,
                                  double tolerance = 1e-9) {
  if (!(L > 0.0)) throw InvalidArgument("growth_margin: need L > 0");
  const double alpha = V.growth().alpha;
  GrowthMargin r{std::numeric_limits<double>::infinity(), L, true};
  for (int side : {-1, 1}) {
    for (int i = 0; i <= mesh; ++i) {
      const double x = side * (L + 9.0 * L * i / mesh);
      const double m = V(x) - alpha * x * x;
      if (m < r.margin) {
        r.margin = m;
        r.location = x;
      }
    }
  }
  const double scale = 1.0 + std::fabs(V.growth().beta);
  r.ok = r.margin >= V.growth().beta - tolerance * scale;
  return r;
}

/// Throws NotConfining when growth_margin() rejects the declaration.
inline void certify_growth(const Potential& V, double L) {
  const auto g = growth_margin(V, L);
  if (!g.ok)
    throw NotConfining("potential violates declared growth V >= alpha x^2 + beta near x = " +
                           std::to_string(g.location) + " (margin " +
                           std::to_string(g.margin) + ")",
                       g.location);
}

}  // namespace logpot

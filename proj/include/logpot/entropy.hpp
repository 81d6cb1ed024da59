#pragma once

// Free entropy functionals: J_V, Sigma_V = J_V - c_V, the potential-free
// Sigma_mu, the off-diagonal empirical surrogate, and relative entropy.

#include <cmath>
#include <limits>

#include "logpot/equilibrium.hpp"
#include "logpot/logkernel.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"
#include "logpot/quadrature.hpp"

namespace logpot {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct EntropyReport {
  double j_value = 0.0;
  double c_v = 0.0;
  double sigma = 0.0;  ///< j_value - c_v
  bool finite = true;
};

/// int V dm, cell by cell with 5-point Gauss.
inline double integrate_potential(const Potential& V, const GridMeasure& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double rho = m.density()[i];
    if (rho != 0.0) s += rho * quad::gauss5(V, m.edge(i), m.edge(i + 1));
  }
  return s;
}

inline double integrate_potential(const Potential& V, const PiecewiseMeasure& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double rho = m.density()[i];
    if (rho != 0.0) s += rho * quad::gauss5(V, m.breaks()[i], m.breaks()[i + 1]);
  }
  return s;
}

/// J_V(m) = int V dm - E(m, m); +inf if the potential integral overflows.
template <class M>
double j_functional(const Potential& V, const M& m) {
  const double iv = integrate_potential(V, m);
  if (!std::isfinite(iv)) return kInfinity;
  return iv - log_energy(m, m);
}

template <class M>
EntropyReport sigma_v(const Potential& V, const M& m, const EquilibriumResult& eq) {
  EntropyReport r;
  r.c_v = eq.c_v;
  r.j_value = j_functional(V, m);
  r.finite = std::isfinite(r.j_value);
  r.sigma = r.finite ? r.j_value - eq.c_v : kInfinity;
  return r;
}

namespace detail {

/// True when every support cell of m lies inside the support of base, using
/// the equilibrium module's support threshold.
inline bool support_nested(const GridMeasure& base, const GridMeasure& m) {
  const auto outer = support_of(base);
  const double slack = 1e-9 * std::max(base.cell_width(), m.cell_width());
  for (const auto& piece : support_of(m)) {
    bool inside = false;
    for (const auto& o : outer)
      if (piece.lo >= o.lo - slack && piece.hi <= o.hi + slack) inside = true;
    if (!inside) return false;
  }
  return true;
}

}  // namespace detail

/// Sigma_mu(nu) = -E(nu - mu, nu - mu) by the three-energy expansion;
/// +inf when nu charges cells outside supp mu.
inline double sigma_mu(const GridMeasure& base, const GridMeasure& m) {
  if (!detail::support_nested(base, m)) return kInfinity;
  return -(log_energy(m, m) - 2.0 * log_energy(m, base) + log_energy(base, base));
}

/// (1/N) sum V(x_i) - (1/N^2) sum_{i != j} ln|x_i - x_j| - c_v; +inf on ties.
inline double sigma_tilde_empirical(const Potential& V, const EmpiricalMeasure& e,
                                    double c_v) {
  if (e.has_ties()) return kInfinity;
  const auto& x = e.points();
  const double N = static_cast<double>(x.size());
  double sv = 0.0;
  for (double p : x) sv += V(p);
  double slog = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) slog += std::log(x[j] - x[i]);
  return sv / N - 2.0 * slog / (N * N) - c_v;
}

/// H(m | base) = sum_i h rho_m ln(rho_m / rho_base) on a shared grid.
inline double relative_entropy(const GridMeasure& m, const GridMeasure& base) {
  const double tol = 1e-12 * std::max(1.0, std::fabs(m.hi() - m.lo()));
  if (m.size() != base.size() || std::fabs(m.lo() - base.lo()) > tol ||
      std::fabs(m.hi() - base.hi()) > tol)
    throw InvalidArgument("relative_entropy: measures must share a grid");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m.density()[i];
    if (a == 0.0) continue;
    const double b = base.density()[i];
    if (b == 0.0) return kInfinity;
    s += m.mass(i) * std::log(a / b);
  }
  return s;
}

}  // namespace logpot

#pragma once

// Regularisation of empirical measures: spread the points to a minimum gap
// of N^-2, then smooth each atom into a uniform blob of width N^-3.

#include <algorithm>
#include <cmath>

#include "logpot/entropy.hpp"
#include "logpot/equilibrium.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"

namespace logpot {

struct SpreadResult {
  EmpiricalMeasure original;
  EmpiricalMeasure spread;    ///< y_1 = x_(1), y_{i+1} = y_i + max(x_(i+1) - x_(i), N^-2)
  PiecewiseMeasure smoothed;  ///< spread * uniform[0, N^-3], exact piecewise-uniform
  std::size_t N;
};

inline SpreadResult spread_points(const EmpiricalMeasure& e) {
  const auto& x = e.points();
  const std::size_t N = x.size();
  const double Nd = static_cast<double>(N);
  const double gap = 1.0 / (Nd * Nd);
  const double eps = gap / Nd;

  std::vector<double> y(N);
  y[0] = x[0];
  for (std::size_t i = 1; i < N; ++i) {
    y[i] = y[i - 1] + std::max(x[i] - x[i - 1], gap);
    // rounding must not eat into the guaranteed gap
    while (y[i] - y[i - 1] < gap) y[i] = std::nextafter(y[i], kInfinity);
  }

  // blobs [y_i, y_i + eps] separated by empty pieces
  std::vector<double> breaks, density;
  breaks.reserve(2 * N);
  density.reserve(2 * N - 1);
  const double rho = 1.0 / (Nd * eps);
  for (std::size_t i = 0; i < N; ++i) {
    breaks.push_back(y[i]);
    breaks.push_back(y[i] + eps);
    density.push_back(rho);
    if (i + 1 < N) density.push_back(0.0);
  }
  return SpreadResult{e, EmpiricalMeasure(y), PiecewiseMeasure(std::move(breaks), std::move(density)), N};
}

/// `stated`: W1^2 <= 2 B_hat s + 3 (Lip + B + ln N) / N.
/// `proof`: the chain of bounds actually proved, W1^2 <= 2 B_hat (s + 3 (Lip + B + ln N) / N) + 8 / N^2.
enum class ApproxT1Form { stated, proof };

struct ApproxT1Report {
  std::size_t N = 0;
  double w1_sq = 0.0;        ///< W1(e, mu_V)^2
  double sigma_tilde = 0.0;  ///< off-diagonal entropy of e (may be +inf or negative)
  double lipschitz = 0.0;    ///< ||V||_Lip on K widened by 1
  double slack = 0.0;        ///< 3 (||V||_Lip + B + ln N) / N
  double rhs = 0.0;          ///< 2 B_hat sigma_tilde + slack
  double margin = 0.0;       ///< rhs - w1_sq
  bool ties = false;         ///< sigma_tilde infinite: holds trivially
  bool holds = false;
  ApproxT1Form form = ApproxT1Form::stated;
};

/// Evaluates W1^2(e, mu_V) <= 2 B_hat sigma_tilde(e) + 3 (||V||_Lip + B + ln N) / N
/// with the Lipschitz norm taken on [K_lo - 1, K_hi + 1].
inline ApproxT1Report approx_t1_check(const Potential& V, const EmpiricalMeasure& e,
                                      const EquilibriumResult& eq, double B_hat, double B,
                                      double K_lo, double K_hi,
                                      ApproxT1Form form = ApproxT1Form::stated) {
  if (!(K_lo <= K_hi)) throw InvalidArgument("approx_t1_check: empty K");
  if (e.min() < K_lo || e.max() > K_hi)
    throw InvalidArgument("approx_t1_check: points must lie in K");
  ApproxT1Report r;
  r.form = form;
  r.N = e.size();
  const double Nd = static_cast<double>(r.N);
  const double d = w1(e, eq.measure);
  r.w1_sq = d * d;
  r.sigma_tilde = sigma_tilde_empirical(V, e, eq.c_v);
  r.lipschitz = lipschitz_norm_on(V, K_lo - 1.0, K_hi + 1.0);
  r.slack = 3.0 * (r.lipschitz + B + std::log(Nd)) / Nd;
  r.ties = !std::isfinite(r.sigma_tilde);
  if (r.ties) {
    r.rhs = kInfinity;
    r.margin = kInfinity;
    r.holds = true;
    return r;
  }
  r.rhs = form == ApproxT1Form::stated ? 2.0 * B_hat * r.sigma_tilde + r.slack
                                       : 2.0 * B_hat * (r.sigma_tilde + r.slack) + 8.0 / (Nd * Nd);
  r.margin = r.rhs - r.w1_sq;
  r.holds = r.margin >= 0.0;
  return r;
}

/// Smallest B making the inequality hold for this configuration.
inline double required_slack_constant(const ApproxT1Report& r, double B_hat) {
  if (r.ties) return -kInfinity;
  const double Nd = static_cast<double>(r.N);
  if (r.form == ApproxT1Form::proof)
    return Nd * (r.w1_sq - 8.0 / (Nd * Nd) - 2.0 * B_hat * r.sigma_tilde) / (6.0 * B_hat) - r.lipschitz -
           std::log(Nd);
  return Nd * (r.w1_sq - 2.0 * B_hat * r.sigma_tilde) / 3.0 - r.lipschitz - std::log(Nd);
}

}  // namespace logpot

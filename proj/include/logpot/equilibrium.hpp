#pragma once

// Equilibrium measures: minimisers of
//   J_V(mu) = int V dmu - iint ln|x - y| dmu(x) dmu(y)
// over probability measures, discretised as cell masses on a uniform grid.
//
// The discrete problem is a convex quadratic program on the simplex. It is
// solved in two phases:
//   1. monotone accelerated projected gradient (FISTA with the monotone
//      safeguard), tracking the Frank-Wolfe duality gap g.m - min_i g_i;
//   2. a primal active-set polish: on the current support S the KKT system
//      V_S - 2 E_SS m_S = C 1, sum m_S = 1 is solved exactly, infeasible
//      steps are cut at the first blocking cell, and off-support cells whose
//      gradient falls below C are added back.
// The reported gap certifies optimality of the returned masses.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logpot/error.hpp"
#include "logpot/logkernel.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"
#include "logpot/quadrature.hpp"

namespace logpot {

/// Cells with density above this over h (i.e. mass above 1e-8) are support.
inline constexpr double kSupportMass = 1e-8;

struct SupportInterval {
  double lo;
  double hi;
};

enum class SolverStart { uniform, gaussian };

struct SolverOptions {
  double tol = 1e-8;                  ///< Frank-Wolfe gap target
  std::size_t max_iterations = 4000;  ///< accelerated phase budget
  double phase1_gap = 1e-6;           ///< hand over to the polish below this gap
  SolverStart start = SolverStart::uniform;
  bool polish = true;
  bool check_growth = true;
};

struct EquilibriumResult {
  GridMeasure measure;
  double c_v = 0.0;  ///< min J_V
  double C_v = 0.0;  ///< Robin constant, 2 c_v - int V dmu_V
  std::vector<SupportInterval> support;
  double residual_on = 0.0;
  double residual_off = 0.0;
  double dual_gap = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_history;
};

struct EulerLagrangeReport {
  double residual_on;   ///< max over support of |-2U + C - V|
  double residual_off;  ///< min off support of V + 2U - C (+inf if none)
};

// ---------------------------------------------------------------------------

namespace detail {

/// Euclidean projection onto the probability simplex.
inline void project_simplex(std::vector<double>& x) {
  std::vector<double> s(x);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (k + 1 == s.size() || s[k + 1] <= t) {
      theta = t;
      break;
    }
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Cell averages of V.
inline std::vector<double> cell_average(const Potential& V, double lo, double h,
                                        std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lo + static_cast<double>(i) * h;
    v[i] = quad::gauss5(V, a, a + h) / h;
  }
  return v;
}

class QuadraticSimplexProblem {
 public:
  QuadraticSimplexProblem(std::vector<double> v, std::shared_ptr<const LogKernelMatrix> E)
      : v_(std::move(v)), E_(std::move(E)) {}

  std::size_t size() const noexcept { return v_.size(); }
  const std::vector<double>& linear() const noexcept { return v_; }
  const LogKernelMatrix& kernel() const noexcept { return *E_; }

  /// Objective and gradient from one kernel product.
  double evaluate(std::span<const double> m, std::vector<double>* grad) const {
    const auto Em = E_->apply(m);
    if (grad) {
      grad->resize(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) (*grad)[i] = v_[i] - 2.0 * Em[i];
    }
    return dot(v_, m) - dot(m, Em);
  }

  static double fw_gap(std::span<const double> m, std::span<const double> g) {
    return dot(g, m) - *std::min_element(g.begin(), g.end());
  }

  /// Largest eigenvalue of the Hessian -2E on zero-sum vectors (power method).
  double lipschitz_estimate(int iterations = 40) const {
    const std::size_t n = size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(1.0 + 7.0 * static_cast<double>(i));
    double lambda = 1.0;
    for (int it = 0; it < iterations; ++it) {
      const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
      for (double& v : x) v -= mean;
      const double norm = std::sqrt(dot(x, x));
      for (double& v : x) v /= norm;
      auto y = E_->apply(x);
      for (double& v : y) v *= -2.0;
      const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
      for (double& v : y) v -= ym;
      lambda = dot(x, y);
      x = std::move(y);
    }
    return std::max(lambda, 1e-12);
  }

 private:
  std::vector<double> v_;
  std::shared_ptr<const LogKernelMatrix> E_;
};

/// Minimises on the face S exactly; returns masses on S and success flag.
inline bool solve_face(const QuadraticSimplexProblem& P, const std::vector<std::size_t>& S,
                       double shift, Eigen::VectorXd& out) {
  const auto k = static_cast<Eigen::Index>(S.size());
  Eigen::MatrixXd A = P.kernel().dense(S);
  A = 2.0 * (Eigen::MatrixXd::Constant(k, k, shift) - A);
  Eigen::VectorXd vS(k);
  for (Eigen::Index i = 0; i < k; ++i) vS(i) = P.linear()[S[static_cast<std::size_t>(i)]];
  Eigen::MatrixXd rhs(k, 2);
  rhs.col(0) = Eigen::VectorXd::Ones(k);
  rhs.col(1) = vS;
  Eigen::MatrixXd sol;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    sol = llt.solve(rhs);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) return false;
    sol = ldlt.solve(rhs);
  }
  const double C = (1.0 + sol.col(1).sum()) / sol.col(0).sum();
  out = C * sol.col(0) - sol.col(1);
  return out.allFinite();
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline std::vector<SupportInterval> support_of(const GridMeasure& m) {
  std::vector<SupportInterval> s;
  const double thr = kSupportMass / m.cell_width();
  std::size_t i = 0;
  while (i < m.size()) {
    if (m.density()[i] > thr) {
      std::size_t j = i;
      while (j + 1 < m.size() && m.density()[j + 1] > thr) ++j;
      s.push_back({m.edge(i), m.edge(j + 1)});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return s;
}

inline bool in_support(const GridMeasure& m, std::size_t i) {
  return m.density()[i] > kSupportMass / m.cell_width();
}

/// Recomputes both Euler-Lagrange residuals at cell centres from U_mu.
inline EulerLagrangeReport euler_lagrange_report(const EquilibriumResult& r,
                                                 const Potential& V) {
  const GridMeasure& m = r.measure;
  EulerLagrangeReport rep{0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = m.center(i);
    const double U = log_potential(m, x);
    const double e = V(x) + 2.0 * U - r.C_v;
    if (in_support(m, i))
      rep.residual_on = std::max(rep.residual_on, std::fabs(e));
    else
      rep.residual_off = std::min(rep.residual_off, e);
  }
  return rep;
}

inline EquilibriumResult solve_equilibrium(const Potential& V, double lo, double hi,
                                           std::size_t n, const SolverOptions& opt = {}) {
  if (!(hi > lo) || n < 2) throw InvalidArgument("solve_equilibrium: bad window");
  if (opt.check_growth) certify_growth(V, std::max(std::fabs(lo), std::fabs(hi)));

  const double h = (hi - lo) / static_cast<double>(n);
  detail::QuadraticSimplexProblem P(detail::cell_average(V, lo, h, n),
                                    LogKernelMatrix::get(n, h));

  std::vector<double> x(n);
  if (opt.start == SolverStart::uniform) {
    std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
  } else {
    const double c = 0.5 * (lo + hi), s = (hi - lo) / 8.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (lo + (static_cast<double>(i) + 0.5) * h - c) / s;
      x[i] = std::exp(-0.5 * t * t);
    }
    const double tot = std::accumulate(x.begin(), x.end(), 0.0);
    for (double& v : x) v /= tot;
  }

  EquilibriumResult res{GridMeasure(lo, hi, std::vector<double>(n, 1.0 / (hi - lo)))};
  std::vector<double> g;
  double fx = P.evaluate(x, &g);
  double gap = detail::QuadraticSimplexProblem::fw_gap(x, g);
  res.objective_history.push_back(fx);

  // phase 1: monotone FISTA with gradient restarts
  const double L = 1.05 * P.lipschitz_estimate();
  std::vector<double> y(x), z(n), gy, gz, x_prev(x);
  double t = 1.0;
  std::size_t it = 0;
  for (; it < opt.max_iterations && gap > std::max(opt.tol, opt.phase1_gap); ++it) {
    P.evaluate(y, &gy);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - gy[i] / L;
    detail::project_simplex(z);
    const double fz = P.evaluate(z, &gz);
    x_prev = x;
    const bool improved = fz <= fx;
    if (improved) {
      x = z;
      fx = fz;
      gap = detail::QuadraticSimplexProblem::fw_gap(x, gz);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (!improved) {
      // restart momentum from the incumbent
      t = 1.0;
      y = x;
      res.objective_history.push_back(fx);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i)
      y[i] = x[i] + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
    t = t_next;
    res.objective_history.push_back(fx);
  }
  res.iterations = it;

  // phase 2: active-set polish
  if (opt.polish && gap > opt.tol) {
    const double shift = std::max(0.0, std::log(hi - lo)) + 1.0;
    std::vector<std::size_t> S;
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] > 0.0) S.push_back(i);
    for (int round = 0; round < 200; ++round) {
      Eigen::VectorXd face;
      if (!detail::solve_face(P, S, shift, face))
        throw ConvergenceFailure("solve_equilibrium: singular face system");
      double alpha = 1.0;
      std::size_t blocking = S.size();
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double target = face(static_cast<Eigen::Index>(k));
        if (target < 0.0) {
          const double cur = x[S[k]];
          const double a = cur / (cur - target);
          if (a < alpha) {
            alpha = a;
            blocking = k;
          }
        }
      }
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double target = face(static_cast<Eigen::Index>(k));
        x[S[k]] += alpha * (target - x[S[k]]);
      }
      if (blocking < S.size()) {
        x[S[blocking]] = 0.0;
        std::vector<std::size_t> keep;
        for (std::size_t i : S)
          if (x[i] > 0.0) keep.push_back(i);
          else x[i] = 0.0;
        S = std::move(keep);
        const double tot = std::accumulate(x.begin(), x.end(), 0.0);
        for (double& v : x) v /= tot;
        fx = P.evaluate(x, &g);
        res.objective_history.push_back(fx);
        continue;
      }
      fx = P.evaluate(x, &g);
      res.objective_history.push_back(fx);
      gap = detail::QuadraticSimplexProblem::fw_gap(x, g);
      if (gap <= opt.tol) break;
      double C = 0.0;
      for (std::size_t i : S) C += x[i] * g[i];
      std::vector<char> inS(n, 0);
      for (std::size_t i : S) inS[i] = 1;
      bool added = false;
      for (std::size_t i = 0; i < n; ++i)
        if (!inS[i] && g[i] < C - 0.5 * opt.tol) {
          S.push_back(i);
          added = true;
        }
      if (!added) break;
      std::sort(S.begin(), S.end());
    }
  }
  fx = P.evaluate(x, &g);
  gap = detail::QuadraticSimplexProblem::fw_gap(x, g);
  if (gap > opt.tol)
    throw ConvergenceFailure("solve_equilibrium: duality gap " + std::to_string(gap) +
                             " above tolerance");

  res.measure = GridMeasure::from_masses(lo, hi, x);
  res.dual_gap = gap;
  res.c_v = fx;
  res.C_v = 2.0 * fx - detail::dot(P.linear(), x);
  res.support = support_of(res.measure);

  const double thr = kSupportMass / h;
  const double edge = std::max(res.measure.density().front(), res.measure.density().back());
  if (edge > thr)
    throw SupportTouchesWindow("solve_equilibrium: support touches the window [" +
                                   std::to_string(lo) + ", " + std::to_string(hi) +
                                   "]; widen it",
                               edge);

  const auto el = euler_lagrange_report(res, V);
  res.residual_on = el.residual_on;
  res.residual_off = el.residual_off;
  return res;
}

// ---------------------------------------------------------------------------
// Confinement extension

struct ConfinedExtension {
  TabulatedFunction base;      ///< f shifted so that f(0) = u L
  double u;
  double L;
  double L_tilde;
  TabulatedFunction extended;  ///< constant outside [-L_tilde, L_tilde]
  std::optional<EquilibriumResult> equilibrium;  ///< mu_{V + extended}
};

/// The largest u-Lipschitz extension of f from [-L, L] that is constant
/// outside [-L_tilde, L_tilde].
inline TabulatedFunction extend_lipschitz(const TabulatedFunction& f, double u, double L,
                                          double L_tilde) {
  const double step = f.step();
  const auto k = static_cast<std::size_t>(std::ceil((L_tilde - L) / step - 1e-9));
  const double Lt = L + static_cast<double>(k) * step;
  const double fL = f(L), fmL = f(-L);
  std::vector<double> vals;
  vals.reserve(f.nodes() + 2 * k);
  for (std::size_t i = k; i >= 1; --i) vals.push_back(fmL + u * static_cast<double>(i) * step);
  for (double v : f.values()) vals.push_back(v);
  for (std::size_t i = 1; i <= k; ++i) vals.push_back(fL + u * static_cast<double>(i) * step);
  return TabulatedFunction(-Lt, Lt, std::move(vals));
}

struct ExtensionOptions {
  std::size_t cells = 1200;
  int max_doublings = 8;
  double initial_L_tilde = 0.0;  ///< 0: start from 2 L
  SolverOptions solver{};
};

inline ConfinedExtension confining_extension(const TabulatedFunction& f, double u,
                                             const Potential& V, double L,
                                             const ExtensionOptions& opt = {}) {
  if (!(L > 0.0) || !(u >= 0.0)) throw InvalidArgument("confining_extension: need L > 0, u >= 0");
  if (std::fabs(f.lo() + L) > 1e-9 * L || std::fabs(f.hi() - L) > 1e-9 * L)
    throw InvalidArgument("confining_extension: f must be tabulated on [-L, L]");
  if (f.max_slope() > u * (1.0 + 1e-9) + 1e-12)
    throw InvalidArgument("confining_extension: f is not u-Lipschitz on its mesh");
  const TabulatedFunction base = f.shifted(u * L - f(0.0));

  double Lt = opt.initial_L_tilde > L ? opt.initial_L_tilde : 2.0 * L;
  for (int d = 0; d <= opt.max_doublings; ++d, Lt *= 2.0) {
    TabulatedFunction ext = extend_lipschitz(base, u, L, Lt);
    const double Lt_eff = ext.hi();
    try {
      auto eq = solve_equilibrium(V.plus(ext), -1.5 * Lt_eff, 1.5 * Lt_eff, opt.cells,
                                  opt.solver);
      if (!eq.support.empty() && eq.support.front().lo > -Lt_eff &&
          eq.support.back().hi < Lt_eff)
        return ConfinedExtension{base, u, L, Lt_eff, std::move(ext), std::move(eq)};
    } catch (const SupportTouchesWindow&) {
      // widen and retry
    }
  }
  throw ConvergenceFailure("confining_extension: support not confined after doubling L_tilde");
}

// ---------------------------------------------------------------------------

/// V(x) = -2 U_m(x) + dist(x, supp m)^2, tabulated at cell edges and centres
/// over the window of m widened by half its length on each side.
inline Potential potential_from_measure(const GridMeasure& m) {
  const auto supp = support_of(m);
  if (supp.empty()) throw InvalidArgument("potential_from_measure: empty support");
  const double width = m.hi() - m.lo();
  const double lo = m.lo() - 0.5 * width;
  const double hi = m.hi() + 0.5 * width;
  const std::size_t nodes = 4 * m.size() + 1;
  auto dist = [&](double x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : supp) {
      if (x >= s.lo && x <= s.hi) return 0.0;
      d = std::min(d, x < s.lo ? s.lo - x : x - s.hi);
    }
    return d;
  };
  auto table = TabulatedFunction::sample(lo, hi, nodes, [&](double x) {
    const double d = dist(x);
    return -2.0 * log_potential(m, x) + d * d;
  });
  const double alpha = 0.5;
  double beta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.nodes(); ++i) {
    const double x = table.node(i);
    beta = std::min(beta, table.values()[i] - alpha * x * x);
  }
  return Potential::tabulated(std::move(table), Growth{alpha, beta, 2.0});
}

}  // namespace logpot

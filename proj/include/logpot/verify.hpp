#pragma once

// Experiment harnesses: T1 ratio scans, perturbation bounds, truncation,
// the entropy-gap comb, and beta-ensemble concentration tails.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logpot/entropy.hpp"
#include "logpot/equilibrium.hpp"
#include "logpot/format.hpp"
#include "logpot/measure.hpp"
#include "logpot/parallel.hpp"
#include "logpot/potential.hpp"
#include "logpot/regularize.hpp"
#include "logpot/sampler.hpp"

namespace logpot {

struct ExperimentRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;  ///< ordered key-value pairs
  double statistic = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
};

/// Solves on [-w, w], doubling w from `half_width` while the support touches the window.
inline EquilibriumResult solve_widening(const Potential& V, double half_width, std::size_t cells,
                                        const SolverOptions& opt = {}, int max_doublings = 6) {
  for (int d = 0;; ++d, half_width *= 2.0) {
    try {
      return solve_equilibrium(V, -half_width, half_width, cells, opt);
    } catch (const SupportTouchesWindow&) {
      if (d >= max_doublings) throw;
    }
  }
}

// ---------------------------------------------------------------------------
// T1 ratio scan

inline constexpr const char* kT1FamilyVersion = "t1-family-v1";

struct NamedMeasure {
  std::string name;
  GridMeasure measure;
};

/// The fixed 20-member test family on the grid (lo, hi, n): translates and
/// dilations of the semicircle, two-bump mixtures, uniform bumps and combs.
inline std::vector<NamedMeasure> t1_family(double lo, double hi, std::size_t n) {
  std::vector<NamedMeasure> f;
  auto add = [&](std::string name, GridMeasure m) { f.push_back({std::move(name), std::move(m)}); };
  for (double t : {0.1, 0.25, 0.5, 0.8})
    add("translate_" + format_number(t), laws::semicircle(lo, hi, n, t, 2.0));
  for (double r : {1.0, 1.5, 2.4, 2.8})
    add("dilate_" + format_number(r), laws::semicircle(lo, hi, n, 0.0, r));
  auto mixture = [&](double c1, double r1, double c2, double r2, double w) {
    return GridMeasure::from_cdf(lo, hi, n, [=](double x) {
      return w * laws::semicircle_cdf(x, c1, r1) + (1.0 - w) * laws::semicircle_cdf(x, c2, r2);
    });
  };
  add("bumps_sym", mixture(-1.0, 0.5, 1.0, 0.5, 0.5));
  add("bumps_wide", mixture(-1.5, 0.8, 1.5, 0.8, 0.5));
  add("bumps_skew", mixture(-1.0, 0.6, 1.2, 0.4, 0.7));
  add("bumps_near", mixture(-0.4, 0.6, 0.6, 0.9, 0.4));
  add("uniform_-2_2", laws::uniform(lo, hi, n, -2.0, 2.0));
  add("uniform_0_1", laws::uniform(lo, hi, n, 0.0, 1.0));
  add("uniform_-1_0.5", laws::uniform(lo, hi, n, -1.0, 0.5));
  add("uniform_-2.5_2.5", laws::uniform(lo, hi, n, -2.5, 2.5));
  auto comb = [&](double a, double b, int teeth, double fill) {
    const double period = (b - a) / teeth;
    return GridMeasure::from_cdf(lo, hi, n, [=](double x) {
      if (x <= a) return 0.0;
      if (x >= b) return 1.0;
      const double k = std::floor((x - a) / period);
      const double within = std::min((x - a) - k * period, fill * period);
      return (k * fill * period + within) / (teeth * fill * period);
    });
  };
  add("comb_4", comb(-2.0, 2.0, 4, 0.5));
  add("comb_8", comb(-2.0, 2.0, 8, 0.5));
  add("comb_3_narrow", comb(-1.5, 1.5, 3, 0.25));
  add("comb_6_wide", comb(-2.4, 2.4, 6, 0.75));
  return f;
}

struct T1Record {
  std::string name;
  double w1_sq = 0.0;
  double w2_sq = 0.0;
  double sigma = 0.0;
  double ratio = 0.0;     ///< w1_sq / sigma
  double w2_ratio = 0.0;  ///< w2_sq / sigma
  bool skipped = false;   ///< sigma below the quadrature floor (0/0)
};

struct T1Scan {
  double sup_ratio = 0.0;
  double sup_w2_ratio = 0.0;
  std::vector<T1Record> records;
};

inline T1Scan t1_ratio_scan(const Potential& V, const EquilibriumResult& eq,
                            const std::vector<NamedMeasure>& family, double sigma_floor = 1e-9,
                            unsigned threads = 1) {
  T1Scan scan;
  scan.records.resize(family.size());
  parallel_for(family.size(), threads, [&](std::size_t i) {
    T1Record r;
    r.name = family[i].name;
    const double a = w1(family[i].measure, eq.measure);
    const double b = w2(family[i].measure, eq.measure);
    r.w1_sq = a * a;
    r.w2_sq = b * b;
    r.sigma = sigma_v(V, family[i].measure, eq).sigma;
    r.skipped = !(r.sigma > sigma_floor);
    if (!r.skipped) {
      r.ratio = r.w1_sq / r.sigma;
      r.w2_ratio = r.w2_sq / r.sigma;
    }
    scan.records[i] = r;
  });
  for (const auto& r : scan.records) {
    if (r.skipped) continue;
    scan.sup_ratio = std::max(scan.sup_ratio, r.ratio);
    scan.sup_w2_ratio = std::max(scan.sup_w2_ratio, r.w2_ratio);
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Perturbation bound W1(mu_V, mu_{V+f}) <= K osc(f)

struct PerturbationRecord {
  double epsilon;
  double oscillation;
  double w1;
  double ratio;
};

struct PerturbationReport {
  std::vector<PerturbationRecord> records;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
};

/// Solves for V and V + eps f on [-L, L] for each eps; support escaping the
/// window propagates as SupportTouchesWindow.
inline PerturbationReport perturbation_check(const Potential& V, const TabulatedFunction& f,
                                             double L, std::vector<double> epsilons = {0.05, 0.1, 0.2, 0.4},
                                             std::size_t cells = 2000) {
  if (!(L > 0.0)) throw InvalidArgument("perturbation_check: need L > 0");
  const auto base = solve_equilibrium(V, -L, L, cells);
  const double osc_f = oscillation(f, -L - 1.0, L + 1.0);
  PerturbationReport rep;
  rep.min_ratio = kInfinity;
  for (double eps : epsilons) {
    const auto pert = solve_equilibrium(V.plus(f.scaled(eps)), -L, L, cells);
    PerturbationRecord r{eps, eps * osc_f, w1(base.measure, pert.measure), 0.0};
    r.ratio = r.oscillation > 0.0 ? r.w1 / r.oscillation : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    rep.min_ratio = std::min(rep.min_ratio, r.ratio);
    rep.records.push_back(r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Truncation: mass outside [-R, R] moved onto uniform[0, 1]

struct TruncationReport {
  GridMeasure truncated;
  double alpha = 0.0;          ///< mass of m outside [-R, R]
  double sigma_before = 0.0;   ///< Sigma_V(m)
  double sigma_after = 0.0;    ///< Sigma_V(truncated)
  double w1 = 0.0;             ///< W1(m, truncated)
  double transport_bound = 0.0;  ///< int_{|x|>R} (1 + |x|) dm
  double gamma_hat = 0.0;      ///< largest gamma with gamma W1^2 <= Sigma_V(m)
};

/// Radius from the truncation recipe: the last |x| where
/// V - 6 ln(1+|x|) - gamma (1+|x|)^2 - C_V <= 0, with
/// C_V = int (V - 4 ln(1+|x|)) dlambda + 2 sup_x |int ln|x-y| dlambda(y) - ln(1+|x|)|
/// and lambda uniform on [0, 1]. Scanned on [-x_max, x_max].
inline double truncation_radius(const Potential& V, double gamma, double x_max = 1000.0) {
  if (!(gamma >= 0.0)) throw InvalidArgument("truncation_radius: need gamma >= 0");
  constexpr int kMesh = 200000;
  double C = 0.0;
  for (int i = 0; i <= kMesh; ++i) {
    const double x = -x_max + 2.0 * x_max * i / kMesh;
    C = std::max(C, std::fabs(kernel::segment_integral(x, 0.0, 1.0) - std::log1p(std::fabs(x))));
  }
  const double CV = quad::gauss5_composite(
                        [&](double x) { return V(x) - 4.0 * std::log1p(std::fabs(x)); }, 0.0, 1.0, 64) +
                    2.0 * C;
  double R = 1.0;
  for (int i = 0; i <= kMesh; ++i) {
    const double r = x_max * i / kMesh;
    for (double x : {-r, r})
      if (V(x) - 6.0 * std::log1p(r) - gamma * (1.0 + r) * (1.0 + r) - CV <= 0.0) R = std::max(R, r);
  }
  return R;
}

inline TruncationReport truncation_map(const Potential& V, const GridMeasure& m, double R,
                                       const EquilibriumResult& eq) {
  if (!(R > 1.0)) throw InvalidArgument("truncation_map: need R > 1");
  if (m.lo() > 0.0 || m.hi() < 1.0)
    throw InvalidArgument("truncation_map: grid must contain [0, 1]");
  std::vector<double> mass(m.size(), 0.0);
  TruncationReport rep{m};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m.edge(i), b = m.edge(i + 1);
    const double overlap = std::max(0.0, std::min(b, R) - std::max(a, -R));
    mass[i] = m.density()[i] * overlap;
    rep.alpha += m.density()[i] * (b - a - overlap);
    // tail part of the cell, for the transport bound
    const double rho = m.density()[i];
    auto tail_piece = [&](double s, double t) {
      if (t > s) rep.transport_bound += rho * quad::gauss5([](double x) { return 1.0 + std::fabs(x); }, s, t);
    };
    tail_piece(a, std::min(b, -R));
    tail_piece(std::max(a, R), b);
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double a = m.edge(i), b = m.edge(i + 1);
    mass[i] += rep.alpha * std::max(0.0, std::min(b, 1.0) - std::max(a, 0.0));
  }
  rep.truncated = GridMeasure::from_masses(m.lo(), m.hi(), mass);
  rep.sigma_before = sigma_v(V, m, eq).sigma;
  rep.sigma_after = sigma_v(V, rep.truncated, eq).sigma;
  rep.w1 = w1(m, rep.truncated);
  rep.gamma_hat = rep.w1 > 0.0 ? rep.sigma_before / (rep.w1 * rep.w1) : kInfinity;
  return rep;
}

// ---------------------------------------------------------------------------
// Entropy gap: combs nu_n, uniform on the union of [i/n, i/n + 1/n^2]

struct GapRecord {
  std::size_t n;
  double relative_entropy;  ///< H(nu_n | lambda)
  double sigma;             ///< Sigma_lambda(nu_n)
  double ratio;             ///< H / Sigma
};

/// The comb on the grid of [0, 1] with n^2 cells.
inline GridMeasure comb_measure(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n] = static_cast<double>(n);
  return GridMeasure(0.0, 1.0, std::move(d));
}

inline std::vector<GapRecord> entropy_gap_demo(const std::vector<std::size_t>& n_values) {
  std::vector<GapRecord> out;
  for (std::size_t n : n_values) {
    if (n < 2) throw InvalidArgument("entropy_gap_demo: need n >= 2");
    const auto nu = comb_measure(n);
    const auto lam = laws::uniform(0.0, 1.0, n * n, 0.0, 1.0);
    GapRecord r{n, relative_entropy(nu, lam), sigma_mu(lam, nu), 0.0};
    r.ratio = r.relative_entropy / r.sigma;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Concentration of the empirical measure

struct ConcentrationConfig {
  double beta = 2.0;
  std::vector<std::size_t> Ns{8, 16, 32};
  std::vector<double> thetas{0.2, 0.3};
  std::size_t reps = 2000;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double floor_v = 0.1;        ///< cells with theta <= v sqrt(ln(1+N)/N) are flagged
  std::size_t cells = 3000;    ///< grid for the limiting measure
  double compact_M = kInfinity;  ///< restriction max |x_i| < M (compact variant)
  // Metropolis settings for potentials other than x^2 / 2
  std::size_t chains = 16;
  std::size_t burn_in = 2000;
  std::size_t thinning = 20;
};

struct ConcentrationCell {
  std::size_t N;
  double theta;
  TailEstimate tail;        ///< P(W1 >= theta)
  TailEstimate restricted;  ///< P(W1 >= theta, max |x_i| < M)
  bool below_floor = false;
  bool fitted = false;
};

struct ExponentFit {
  double slope = 0.0;  ///< u in -ln p = u N^2 theta^2 + c
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct ConcentrationResult {
  std::vector<ConcentrationCell> cells;
  std::vector<double> median_w1;       ///< per N
  std::vector<TailEstimate> complement;  ///< per N: P(max |x_i| >= M)
  ExponentFit fit;
  EquilibriumResult limit;             ///< mu_{2V/beta}
  std::string sampler;
};

inline bool is_gaussian_quadratic(const Potential& V) {
  if (V.kind() != Potential::Kind::polynomial) return false;
  auto c = V.coeffs();
  poly::trim(c);
  return c.size() == 3 && c[0] == 0.0 && c[1] == 0.0 && c[2] == 0.5;
}

/// Draws reps configurations of N particles; deterministic for a given seed
/// regardless of the thread count.
inline std::vector<EmpiricalMeasure> draw_ensemble(const Potential& V, double beta, std::size_t N,
                                                   const ConcentrationConfig& cfg) {
  std::vector<EmpiricalMeasure> out;
  out.reserve(cfg.reps);
  const std::uint64_t base = sub_seed(cfg.seed, N);
  if (is_gaussian_quadratic(V)) {
    std::vector<std::vector<double>> slots(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
      slots[r] = beta_hermite_sample(beta, N, sub_seed(base, r)).points();
    });
    for (auto& s : slots) out.emplace_back(std::move(s));
    return out;
  }
  const std::size_t chains = std::min(cfg.chains, cfg.reps);
  std::vector<std::vector<EmpiricalMeasure>> per(chains);
  parallel_for(chains, cfg.threads, [&](std::size_t c) {
    const std::size_t draws = cfg.reps / chains + (c < cfg.reps % chains ? 1 : 0);
    ChainConfig cc;
    cc.V = V;
    cc.beta = beta;
    cc.n_particles = N;
    cc.burn_in = cfg.burn_in;
    cc.steps = cfg.burn_in + draws * cfg.thinning;
    cc.seed = sub_seed(base, c);
    per[c] = metropolis_sample(cc, draws).configs;
  });
  for (auto& p : per)
    for (auto& e : p) out.push_back(std::move(e));
  return out;
}

inline ExponentFit fit_exponent(const std::vector<ConcentrationCell>& cells) {
  ExponentFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& c : cells) {
    if (!c.fitted) continue;
    const double x = static_cast<double>(c.N * c.N) * c.theta * c.theta;
    const double y = -std::log(c.tail.frequency);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++fit.points;
  }
  if (fit.points < 2) return fit;
  const double n = static_cast<double>(fit.points);
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  if (vx <= 0.0) return fit;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

inline ConcentrationResult concentration_experiment(const Potential& V, const ConcentrationConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw InvalidArgument("concentration: beta must be > 0");
  if (cfg.reps == 0 || cfg.Ns.empty()) throw InvalidArgument("concentration: nothing to sample");
  ConcentrationResult res{.limit = solve_widening(V.scaled(2.0 / cfg.beta), 3.0, cfg.cells)};
  res.sampler = is_gaussian_quadratic(V) ? "tridiagonal" : "metropolis";

  for (std::size_t N : cfg.Ns) {
    const auto configs = draw_ensemble(V, cfg.beta, N, cfg);
    std::vector<double> dist(configs.size()), maxabs(configs.size());
    parallel_for(configs.size(), cfg.threads, [&](std::size_t r) {
      dist[r] = w1(configs[r], res.limit.measure);
      maxabs[r] = std::max(std::fabs(configs[r].min()), std::fabs(configs[r].max()));
    });
    auto sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    res.median_w1.push_back(m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]));
    std::size_t outside = 0;
    for (double a : maxabs) outside += a >= cfg.compact_M;
    res.complement.push_back(wilson(outside, m));

    const double floor =
        cfg.floor_v * std::sqrt(std::log1p(static_cast<double>(N)) / static_cast<double>(N));
    for (double theta : cfg.thetas) {
      std::size_t hits = 0, joint = 0;
      for (std::size_t r = 0; r < m; ++r) {
        if (dist[r] >= theta) {
          ++hits;
          if (maxabs[r] < cfg.compact_M) ++joint;
        }
      }
      ConcentrationCell c{N, theta, wilson(hits, m), wilson(joint, m)};
      c.below_floor = theta <= floor;
      c.fitted = !c.below_floor && hits >= 5 && c.tail.frequency <= 0.5;
      res.cells.push_back(c);
    }
  }
  res.fit = fit_exponent(res.cells);
  return res;
}

/// Same statistics restricted to max |x_i| < M.
inline ConcentrationResult concentration_compact_variant(const Potential& V, ConcentrationConfig cfg,
                                                         double M) {
  cfg.compact_M = M;
  return concentration_experiment(V, cfg);
}

}  // namespace logpot

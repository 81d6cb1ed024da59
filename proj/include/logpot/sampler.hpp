#pragma once

// Samplers for the beta-ensemble
//   P(dx) ∝ prod_{i<j} |x_i - x_j|^beta exp(-N sum_i V(x_i)) dx
// plus the small-N partition function by nested quadrature.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "logpot/error.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"
#include "logpot/quadrature.hpp"

namespace logpot {

// ---------------------------------------------------------------------------
// Seeding

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream seed for (seed, stream), e.g. one per replica.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// ---------------------------------------------------------------------------
// Metropolis

struct ChainConfig {
  Potential V = Potential::quadratic();
  double beta = 2.0;
  std::size_t n_particles = 8;
  std::size_t steps = 20000;   ///< total sweeps, burn-in included
  std::size_t burn_in = 2000;  ///< sweeps discarded (and used for tuning)
  double proposal_scale = 0.5;
  std::uint64_t seed = 0;
  bool auto_tune = true;  ///< adapt the scale toward 0.35 acceptance during burn-in
};

struct SampleBatch {
  std::vector<EmpiricalMeasure> configs;
  double acceptance_rate = 0.0;  ///< over the post burn-in sweeps
  std::uint64_t seed_used = 0;
  double proposal_scale = 0.0;   ///< frozen value used after burn-in
};

namespace detail {

inline void validate(const ChainConfig& c) {
  if (!(c.beta > 0.0)) throw InvalidArgument("ChainConfig: beta must be > 0");
  if (c.n_particles == 0) throw InvalidArgument("ChainConfig: need N >= 1");
  if (!(c.steps > c.burn_in)) throw InvalidArgument("ChainConfig: need steps > burn_in");
  if (!(c.proposal_scale > 0.0)) throw InvalidArgument("ChainConfig: proposal_scale must be > 0");
}

}  // namespace detail

/// Single-site random-walk Metropolis. Draws are taken every
/// (steps - burn_in) / n_draws sweeps after burn-in.
inline SampleBatch metropolis_sample(const ChainConfig& cfg, std::size_t n_draws,
                                     std::vector<double> initial = {}) {
  detail::validate(cfg);
  if (n_draws == 0) throw InvalidArgument("metropolis_sample: need n_draws >= 1");
  const std::size_t N = cfg.n_particles;
  const std::size_t thinning = (cfg.steps - cfg.burn_in) / n_draws;
  if (thinning == 0)
    throw InvalidArgument("metropolis_sample: steps - burn_in must be >= n_draws");
  certify_growth(cfg.V, 1.0);

  std::vector<double> x = std::move(initial);
  if (x.empty()) {
    x.resize(N);
    for (std::size_t i = 0; i < N; ++i)
      x[i] = N == 1 ? 0.0 : -1.5 + 3.0 * static_cast<double>(i) / static_cast<double>(N - 1);
  }
  if (x.size() != N) throw InvalidArgument("metropolis_sample: initial state has wrong size");
  const double Nd = static_cast<double>(N);
  std::vector<double> vx(N);
  for (std::size_t i = 0; i < N; ++i) {
    vx[i] = cfg.V(x[i]);
    for (std::size_t j = 0; j < i; ++j)
      if (x[i] == x[j]) throw InvalidArgument("metropolis_sample: overlapping initial points");
    if (!std::isfinite(vx[i])) throw InvalidArgument("metropolis_sample: non-finite log-density");
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  double scale = cfg.proposal_scale;

  SampleBatch out;
  out.seed_used = cfg.seed;
  out.configs.reserve(n_draws);
  std::size_t accepted = 0, proposed = 0, window_acc = 0, window_prop = 0;

  for (std::size_t sweep = 0; sweep < cfg.steps; ++sweep) {
    const bool burning = sweep < cfg.burn_in;
    for (std::size_t i = 0; i < N; ++i) {
      const double y = x[i] + scale * normal(rng);
      const double vy = cfg.V(y);
      double delta = -Nd * (vy - vx[i]);
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        delta += cfg.beta * (std::log(std::fabs(y - x[j])) - std::log(std::fabs(x[i] - x[j])));
      }
      const bool ok = std::log(unif(rng)) < delta;
      if (ok) {
        x[i] = y;
        vx[i] = vy;
      }
      if (burning) {
        window_acc += ok;
        ++window_prop;
      } else {
        accepted += ok;
        ++proposed;
      }
    }
    if (burning && cfg.auto_tune && window_prop >= 50 * N) {
      const double rate = static_cast<double>(window_acc) / static_cast<double>(window_prop);
      scale *= std::exp(rate - 0.35);
      window_acc = window_prop = 0;
    }
    if (!burning && (sweep + 1 - cfg.burn_in) % thinning == 0 && out.configs.size() < n_draws) {
      EmpiricalMeasure e(x);
      if (e.has_ties()) {
        std::ostringstream msg;
        msg << "metropolis_sample: tied points at sweep " << sweep << " (seed " << cfg.seed
            << ", rng state " << rng << ")";
        throw Error(msg.str());
      }
      out.configs.push_back(std::move(e));
    }
  }
  out.acceptance_rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  out.proposal_scale = scale;
  return out;
}

// ---------------------------------------------------------------------------
// Tridiagonal model for V = x^2 / 2

/// Eigenvalues of the tridiagonal matrix with N(0, 1) diagonal and
/// chi_{k beta} / sqrt 2 off-diagonal (k = N-1, ..., 1), divided by sqrt N.
/// Their joint law is the beta-ensemble with V = x^2 / 2.
inline EmpiricalMeasure beta_hermite_sample(double beta, std::size_t N, std::uint64_t seed) {
  if (!(beta > 0.0)) throw InvalidArgument("beta_hermite_sample: beta must be > 0");
  if (N == 0) throw InvalidArgument("beta_hermite_sample: need N >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(N));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(N > 1 ? N - 1 : 0));
  for (std::size_t i = 0; i < N; ++i) diag(static_cast<Eigen::Index>(i)) = normal(rng);
  for (std::size_t k = 1; k < N; ++k) {
    std::chi_squared_distribution<double> chi2(beta * static_cast<double>(N - k));
    sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(0.5 * chi2(rng));
  }
  std::vector<double> ev(N);
  if (N == 1) {
    ev[0] = diag(0);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (std::size_t i = 0; i < N; ++i) ev[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (double& v : ev) v *= s;
  return EmpiricalMeasure(std::move(ev));
}

// ---------------------------------------------------------------------------
// Tail frequencies

struct TailEstimate {
  double frequency = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::size_t hits = 0;
  std::size_t total = 0;
};

/// Wilson score interval (z = 1.96 by default).
inline TailEstimate wilson(std::size_t hits, std::size_t total, double z = 1.96) {
  TailEstimate t;
  t.hits = hits;
  t.total = total;
  if (total == 0) return t;
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  t.frequency = p;
  t.ci_low = std::max(0.0, std::min(p, centre - half));
  t.ci_high = std::min(1.0, std::max(p, centre + half));
  return t;
}

/// Frequency of max_i |x_i| >= M over the batch.
inline TailEstimate max_abs_tail(const std::vector<EmpiricalMeasure>& configs, double M) {
  if (configs.empty()) throw InvalidArgument("max_abs_tail: empty batch");
  std::size_t hits = 0;
  for (const auto& c : configs)
    if (std::max(std::fabs(c.min()), std::fabs(c.max())) >= M) ++hits;
  return wilson(hits, configs.size());
}

inline TailEstimate max_abs_tail(const SampleBatch& batch, double M) {
  return max_abs_tail(batch.configs, M);
}

// ---------------------------------------------------------------------------
// Small-N partition function

struct PartitionEstimate {
  double log_z = 0.0;
  double truncation_error = 0.0;  ///< relative change of Z when the window grows 25%
  bool truncation_warning = false;
  int panels = 0;
};

namespace detail {

// Ordered-sector integral of prod |x_i - x_j|^beta exp(-N sum V) with
// composite 5-point Gauss at every nesting level.
class SectorIntegral {
 public:
  SectorIntegral(const Potential& V, double beta, std::size_t N, double lo, double hi, int panels)
      : V_(V), beta_(beta), N_(N), lo_(lo), hi_(hi), panels_(panels), x_(N) {}

  double run() { return level(0, lo_, 1.0); }

 private:
  double level(std::size_t k, double from, double weight) {
    if (k == N_) return weight;
    double total = 0.0;
    const double width = (hi_ - from) / panels_;
    const double Nd = static_cast<double>(N_);
    for (int p = 0; p < panels_; ++p) {
      const double a = from + p * width;
      const double half = 0.5 * width, mid = a + half;
      for (int q = 0; q < 5; ++q) {
        const double x = mid + half * quad::kGaussNodes[q];
        double w = weight * std::exp(-Nd * V_(x));
        if (beta_ == 2.0) {
          for (std::size_t j = 0; j < k; ++j) w *= (x - x_[j]) * (x - x_[j]);
        } else {
          for (std::size_t j = 0; j < k; ++j) w *= std::pow(std::fabs(x - x_[j]), beta_);
        }
        x_[k] = x;
        total += half * quad::kGaussWeights[q] * level(k + 1, x, w);
      }
    }
    return total;
  }

  const Potential& V_;
  double beta_;
  std::size_t N_;
  double lo_, hi_;
  int panels_;
  std::vector<double> x_;
};

inline double log_sector_z(const Potential& V, double beta, std::size_t N, double lo, double hi,
                           double rel_tol, int* panels_used) {
  double prev = std::numeric_limits<double>::quiet_NaN();
  double cur = 0.0;
  int panels = 2;
  const double budget = 2e8;  // integrand evaluations per run
  for (;; panels *= 2) {
    cur = std::log(SectorIntegral(V, beta, N, lo, hi, panels).run());
    if (std::isfinite(prev) && std::fabs(cur - prev) <= rel_tol) break;
    if (std::pow(10.0 * panels, static_cast<double>(N)) > budget) break;  // next level cost
    prev = cur;
  }
  if (panels_used) *panels_used = panels;
  return cur + std::lgamma(static_cast<double>(N) + 1.0);
}

}  // namespace detail

/// ln Z^N_{V,beta} over window^N for N <= 4.
inline PartitionEstimate log_partition_small_n(const Potential& V, double beta, std::size_t N,
                                               double lo, double hi, double rel_tol = 1e-9) {
  if (N < 1 || N > 4) throw InvalidArgument("log_partition_small_n: N must be in 1..4");
  if (!(beta > 0.0)) throw InvalidArgument("log_partition_small_n: beta must be > 0");
  if (!(hi > lo)) throw InvalidArgument("log_partition_small_n: empty window");
  PartitionEstimate r;
  r.log_z = detail::log_sector_z(V, beta, N, lo, hi, rel_tol, &r.panels);
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo) * 1.25;
  const double wide = detail::log_sector_z(V, beta, N, c - h, c + h, rel_tol, nullptr);
  r.truncation_error = std::fabs(std::expm1(wide - r.log_z));
  r.truncation_warning = r.truncation_error > 1e-6;
  return r;
}

}  // namespace logpot

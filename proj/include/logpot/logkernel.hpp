#pragma once

// Quadrature with the singular kernel ln|x - y|.
//
// Cell-pair averages of ln|x - y| are integrated in closed form through the
// second antiderivative phi(u) = u^2/2 ln|u| - 3u^2/4, so the diagonal of a
// uniform grid is exactly ln h - 3/2. Well-separated pairs use the moment
// expansion of ln|d + s| about the centre distance d, which avoids the
// cancellation of the closed form at large separation.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "logpot/error.hpp"
#include "logpot/measure.hpp"
#include "logpot/quadrature.hpp"

namespace logpot {

namespace kernel {

/// Second antiderivative of ln|u| vanishing at 0.
inline double phi(double u) noexcept {
  if (u == 0.0) return 0.0;
  return u * u * (0.5 * std::log(std::fabs(u)) - 0.75);
}

/// Antiderivative of ln|u| vanishing at 0.
inline double psi(double u) noexcept {
  if (u == 0.0) return 0.0;
  return u * (std::log(std::fabs(u)) - 1.0);
}

/// int_c^d ln|x - y| dy.
inline double segment_integral(double x, double c, double d) noexcept {
  return psi(x - c) - psi(x - d);
}

/// Average of ln|x - y| over x in [a, b], y in [c, d].
inline double pair_average(double a, double b, double c, double d) noexcept {
  const double wa = b - a;
  const double wb = d - c;
  const double dist = std::fabs(0.5 * (a + b) - 0.5 * (c + d));
  const double gap = dist - 0.5 * (wa + wb);
  if (gap > 8.0 * std::max(wa, wb)) {
    // x - y = dist + s with s a difference of two centred uniforms
    const double a2 = wa * wa, b2 = wb * wb;
    const double m2 = (a2 + b2) / 12.0;
    const double m4 = (a2 * a2 + b2 * b2) / 80.0 + a2 * b2 / 24.0;
    const double m6 = (a2 * a2 * a2 + b2 * b2 * b2) / 448.0 +
                      15.0 * (a2 * a2 / 80.0) * (b2 / 12.0) +
                      15.0 * (a2 / 12.0) * (b2 * b2 / 80.0);
    const double r2 = 1.0 / (dist * dist);
    return std::log(dist) - r2 * (m2 / 2.0 + r2 * (m4 / 4.0 + r2 * m6 / 6.0));
  }
  const double total = phi(b - c) - phi(a - c) - phi(b - d) + phi(a - d);
  return total / (wa * wb);
}

/// Average of ln|x - y| over two unit cells k apart (k >= 0), minus nothing:
/// the uniform-grid entry is ln h + unit_offset_average(k).
inline double unit_offset_average(std::size_t k) noexcept {
  if (k == 0) return -1.5;
  const double kd = static_cast<double>(k);
  if (k <= 32) return phi(kd + 1.0) - 2.0 * phi(kd) + phi(kd - 1.0);
  const double r2 = 1.0 / (kd * kd);
  return std::log(kd) - r2 * (1.0 / 12.0 + r2 * (1.0 / 60.0 + r2 * (1.0 / 168.0 + r2 / 360.0)));
}

}  // namespace kernel

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

/// Cell-pair averages of ln|x - y| on a uniform grid of n cells of width h.
///
/// The matrix is symmetric Toeplitz, stored by its first column. Instances are
/// shared through `get()`, which caches one matrix per (n, h).
class LogKernelMatrix {
 public:
  LogKernelMatrix(std::size_t n, double h) : n_(n), h_(h), column_(n) {
    if (n == 0 || !(h > 0.0)) throw InvalidArgument("LogKernelMatrix: need n >= 1, h > 0");
    const double lnh = std::log(h);
    for (std::size_t k = 0; k < n; ++k) column_[k] = lnh + kernel::unit_offset_average(k);
    if (n_ > kDirectLimit) {
      fft_size_ = detail::next_pow2(2 * n_);
      std::vector<std::complex<double>> c(fft_size_, 0.0);
      for (std::size_t k = 0; k < n_; ++k) c[k] = column_[k];
      for (std::size_t k = 1; k < n_; ++k) c[fft_size_ - k] = column_[k];
      Eigen::FFT<double> fft;
      fft.fwd(spectrum_, c);
    }
  }

  static std::shared_ptr<const LogKernelMatrix> get(std::size_t n, double h) {
    static std::shared_mutex mutex;
    static std::map<std::pair<std::size_t, std::uint64_t>,
                    std::shared_ptr<const LogKernelMatrix>>
        cache;
    std::uint64_t bits;
    std::memcpy(&bits, &h, sizeof bits);
    const auto key = std::make_pair(n, bits);
    {
      std::shared_lock lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const LogKernelMatrix>(n, h);
    std::unique_lock lock(mutex);
    auto [it, inserted] = cache.emplace(key, std::move(built));
    return it->second;
  }

  std::size_t size() const noexcept { return n_; }
  double cell_width() const noexcept { return h_; }
  double entry(std::size_t i, std::size_t j) const noexcept {
    return column_[i > j ? i - j : j - i];
  }
  const std::vector<double>& column() const noexcept { return column_; }

  /// y = E x.
  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != n_) throw InvalidArgument("LogKernelMatrix::apply: size mismatch");
    std::vector<double> y(n_, 0.0);
    if (n_ <= kDirectLimit) {
      for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += column_[i > j ? i - j : j - i] * x[j];
        y[i] = s;
      }
      return y;
    }
    std::vector<std::complex<double>> xs(fft_size_, 0.0), X, Y;
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x[i];
    Eigen::FFT<double> fft;
    fft.fwd(X, xs);
    for (std::size_t k = 0; k < fft_size_; ++k) X[k] *= spectrum_[k];
    fft.inv(Y, X);
    for (std::size_t i = 0; i < n_; ++i) y[i] = Y[i].real();
    return y;
  }

  /// a^T E b.
  double bilinear(std::span<const double> a, std::span<const double> b) const {
    const auto Eb = apply(b);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += a[i] * Eb[i];
    return s;
  }

  /// Dense submatrix on the given index set.
  Eigen::MatrixXd dense(std::span<const std::size_t> idx) const {
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd M(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c) M(r, c) = entry(idx[r], idx[c]);
    return M;
  }

 private:
  static constexpr std::size_t kDirectLimit = 256;
  std::size_t n_;
  double h_;
  std::vector<double> column_;
  std::size_t fft_size_ = 0;
  std::vector<std::complex<double>> spectrum_;
};

// ---------------------------------------------------------------------------
// Logarithmic potentials U_mu(x) = -int ln|x - y| dmu(y)

inline double log_potential(const GridMeasure& m, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double rho = m.density()[j];
    if (rho != 0.0) s += rho * kernel::segment_integral(x, m.edge(j), m.edge(j + 1));
  }
  return -s;
}

inline double log_potential(const PiecewiseMeasure& m, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double rho = m.density()[j];
    if (rho != 0.0) s += rho * kernel::segment_integral(x, m.breaks()[j], m.breaks()[j + 1]);
  }
  return -s;
}

/// Throws DivergentPotential when x is an atom.
inline double log_potential(const EmpiricalMeasure& m, double x) {
  double s = 0.0;
  for (double p : m.points()) {
    if (p == x) throw DivergentPotential("log_potential: evaluation point is an atom");
    s += std::log(std::fabs(x - p));
  }
  return -s / static_cast<double>(m.size());
}

/// U_mu at every point of xs.
template <class M>
std::vector<double> log_potential(const M& m, std::span<const double> xs) {
  std::vector<double> u(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) u[i] = log_potential(m, xs[i]);
  return u;
}

// ---------------------------------------------------------------------------
// Log energies E(a, b) = iint ln|x - y| da(x) db(y)

inline double log_energy(const PiecewiseMeasure& a, const PiecewiseMeasure& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ma = a.mass(i);
    if (ma == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double mb = b.mass(j);
      if (mb == 0.0) continue;
      row += mb * kernel::pair_average(a.breaks()[i], a.breaks()[i + 1], b.breaks()[j],
                                       b.breaks()[j + 1]);
    }
    s += ma * row;
  }
  return s;
}

/// Grid measures sharing a cell width and an aligned lattice go through the
/// cached Toeplitz kernel; anything else falls back to pairwise integration.
inline double log_energy(const GridMeasure& a, const GridMeasure& b) {
  const double h = a.cell_width();
  const double hb = b.cell_width();
  const double offset = (b.lo() - a.lo()) / h;
  const bool aligned = std::fabs(h - hb) <= 1e-12 * h &&
                       std::fabs(offset - std::round(offset)) <= 1e-9;
  if (!aligned) return log_energy(PiecewiseMeasure(a), PiecewiseMeasure(b));

  const auto shift = static_cast<long long>(std::llround(offset));
  const long long start = std::min<long long>(0, shift);
  const long long stop = std::max<long long>(static_cast<long long>(a.size()),
                                             shift + static_cast<long long>(b.size()));
  const auto n = static_cast<std::size_t>(stop - start);
  std::vector<double> ma(n, 0.0), mb(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    ma[static_cast<std::size_t>(static_cast<long long>(i) - start)] = a.mass(i);
  for (std::size_t i = 0; i < b.size(); ++i)
    mb[static_cast<std::size_t>(static_cast<long long>(i) + shift - start)] = b.mass(i);
  const auto E = LogKernelMatrix::get(n, h);
  // symmetrise so that log_energy(a, b) == log_energy(b, a) bit for bit
  if (&a == &b) return E->bilinear(ma, ma);
  return 0.5 * (E->bilinear(ma, mb) + E->bilinear(mb, ma));
}

inline double log_energy(const GridMeasure& a, const PiecewiseMeasure& b) {
  return log_energy(PiecewiseMeasure(a), b);
}
inline double log_energy(const PiecewiseMeasure& a, const GridMeasure& b) {
  return log_energy(a, PiecewiseMeasure(b));
}

// ---------------------------------------------------------------------------
// Hilbert transform (1/pi) PV int f(y) / (x - y) dy on sampled functions

/// Samples values[i] at lo + i * step.
struct SampledFunction {
  double lo = 0.0;
  double step = 1.0;
  std::vector<double> values;

  double x(std::size_t i) const noexcept { return lo + static_cast<double>(i) * step; }
  std::size_t size() const noexcept { return values.size(); }

  template <class F>
  static SampledFunction sample(double lo, double hi, std::size_t n, F&& f) {
    SampledFunction s{lo, (hi - lo) / static_cast<double>(n - 1), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) s.values[i] = f(s.x(i));
    return s;
  }
};

struct HilbertOptions {
  int padding = 4;            ///< zero-padded length / sample count
  int derivative = 0;         ///< 0: Hf, 1: (Hf)' = H(f')
  bool line_correction = false;  ///< add the smooth kernel difference between
                                 ///< the periodic and the line transform
};

struct HilbertResult {
  SampledFunction transform;
  bool edge_warning = false;  ///< |f| at the grid ends >= 1e-6 max|f|
};

namespace detail {

/// K(u) = 1/(pi u) - cot(pi u / P) / P and its derivative, the smooth part of
/// the line kernel left over by the period-P transform (|u| < P).
inline double periodic_kernel_gap(double u, double P, int derivative) {
  const double z = M_PI * u / P;
  const double z2 = z * z;
  if (derivative == 0) {
    if (std::fabs(z) < 0.1)
      return (z / 3.0 + z * z2 / 45.0 + 2.0 * z * z2 * z2 / 945.0 +
              z * z2 * z2 * z2 / 4725.0) / P;
    return (1.0 / z - std::cos(z) / std::sin(z)) / P;
  }
  double g;
  if (std::fabs(z) < 0.1) {
    g = 1.0 / 3.0 + z2 / 15.0 + 2.0 * z2 * z2 / 189.0 + z2 * z2 * z2 / 675.0;
  } else {
    const double s = std::sin(z);
    g = 1.0 / (s * s) - 1.0 / z2;
  }
  return g * M_PI / (P * P);
}

}  // namespace detail

inline HilbertResult hilbert_transform(const SampledFunction& f,
                                       const HilbertOptions& opt = {}) {
  const std::size_t n = f.size();
  if (n < 2) throw InvalidArgument("hilbert_transform: need >= 2 samples");
  if (opt.padding < 1) throw InvalidArgument("hilbert_transform: padding must be >= 1");
  if (opt.derivative < 0 || opt.derivative > 1)
    throw InvalidArgument("hilbert_transform: derivative order must be 0 or 1");

  HilbertResult r;
  double fmax = 0.0;
  for (double v : f.values) fmax = std::max(fmax, std::fabs(v));
  r.edge_warning = fmax > 0.0 && (std::fabs(f.values.front()) >= 1e-6 * fmax ||
                                  std::fabs(f.values.back()) >= 1e-6 * fmax);

  const std::size_t M = detail::next_pow2(static_cast<std::size_t>(opt.padding) * n);
  const double period = static_cast<double>(M) * f.step;
  std::vector<std::complex<double>> buf(M, 0.0), F, out;
  for (std::size_t i = 0; i < n; ++i) buf[i] = f.values[i];
  Eigen::FFT<double> fft;
  fft.fwd(F, buf);
  for (std::size_t k = 0; k < M; ++k) {
    if (k == 0 || 2 * k == M) {
      F[k] = 0.0;
      continue;
    }
    const bool positive = 2 * k < M;
    const double freq = 2.0 * M_PI * static_cast<double>(positive ? k : M - k) / period;
    if (opt.derivative == 0) {
      // -i sign(k)
      F[k] *= positive ? std::complex<double>(0.0, -1.0) : std::complex<double>(0.0, 1.0);
    } else {
      // (i omega)(-i sign omega) = |omega|
      F[k] *= freq;
    }
  }
  fft.inv(out, F);

  r.transform.lo = f.lo;
  r.transform.step = f.step;
  r.transform.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.transform.values[i] = out[i].real();

  if (opt.line_correction) {
    // linear convolution of f with the sampled kernel gap, via FFT
    const std::size_t L = detail::next_pow2(2 * n);
    std::vector<std::complex<double>> kb(L, 0.0), fb(L, 0.0), K, G, conv;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = static_cast<double>(k) * f.step;
      kb[k] = detail::periodic_kernel_gap(u, period, opt.derivative);
      if (k > 0) kb[L - k] = detail::periodic_kernel_gap(-u, period, opt.derivative);
    }
    for (std::size_t i = 0; i < n; ++i) fb[i] = f.values[i];
    fft.fwd(K, kb);
    fft.fwd(G, fb);
    for (std::size_t k = 0; k < L; ++k) G[k] *= K[k];
    fft.inv(conv, G);
    for (std::size_t i = 0; i < n; ++i) r.transform.values[i] += f.step * conv[i].real();
  }
  return r;
}

/// f' by the spectral multiplier i omega on the same padded grid.
inline SampledFunction spectral_derivative(const SampledFunction& f, int padding = 4) {
  const std::size_t n = f.size();
  const std::size_t M = detail::next_pow2(static_cast<std::size_t>(padding) * n);
  const double period = static_cast<double>(M) * f.step;
  std::vector<std::complex<double>> buf(M, 0.0), F, out;
  for (std::size_t i = 0; i < n; ++i) buf[i] = f.values[i];
  Eigen::FFT<double> fft;
  fft.fwd(F, buf);
  for (std::size_t k = 0; k < M; ++k) {
    if (k == 0 || 2 * k == M) {
      F[k] = 0.0;
      continue;
    }
    const double signed_k = 2 * k < M ? static_cast<double>(k) : -static_cast<double>(M - k);
    F[k] *= std::complex<double>(0.0, 2.0 * M_PI * signed_k / period);
  }
  fft.inv(out, F);
  SampledFunction d{f.lo, f.step, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) d.values[i] = out[i].real();
  return d;
}

// ---------------------------------------------------------------------------
// The Hilbert-transform identity  int g dmu = (1/pi) int (Hg)'(x) U_mu(x) dx

struct HilbertIdentityReport {
  double lhs = 0.0;  ///< int g dmu
  double rhs = 0.0;  ///< (1/pi) int (Hg)' U_mu
  double residual = 0.0;
  bool edge_warning = false;
};

/// Checks the identity for a C^1 function g supported in [g_lo, g_hi].
///
/// The left side integrates g against the cell densities of mu by Gauss
/// quadrature. The right side samples g at n points of [-R, R], forms (Hg)'
/// spectrally with the line correction, integrates (Hg)' U_mu by the
/// trapezoid rule on [-R, R], and adds the exact contribution of |x| > R from
/// the multipole expansions of (Hg)' and U_mu. Both supports must lie inside
/// |x| <= 0.75 R so that the expansions converge.
template <class G>
HilbertIdentityReport hilbert_identity_residual(G&& g, double g_lo, double g_hi,
                                                const GridMeasure& m, double R, std::size_t n) {
  if (!(g_lo < g_hi)) throw InvalidArgument("hilbert_identity_residual: empty support of g");
  double support = std::max(std::fabs(g_lo), std::fabs(g_hi));
  for (std::size_t j = 0; j < m.size(); ++j)
    if (m.density()[j] > 0.0)
      support = std::max({support, std::fabs(m.edge(j)), std::fabs(m.edge(j + 1))});
  if (support > 0.75 * R)
    throw InvalidArgument("hilbert_identity_residual: supports must lie inside |x| <= 0.75 R");

  HilbertIdentityReport rep;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double rho = m.density()[j];
    if (rho == 0.0) continue;
    const double a = std::max(m.edge(j), g_lo);
    const double b = std::min(m.edge(j + 1), g_hi);
    if (b > a) rep.lhs += rho * quad::gauss5(g, a, b);
  }

  const auto gs = SampledFunction::sample(-R, R, n, [&](double x) {
    return (x >= g_lo && x <= g_hi) ? g(x) : 0.0;
  });
  const auto dH = hilbert_transform(gs, {4, 1, true});
  rep.edge_warning = dH.edge_warning;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = gs.x(i);
  const auto U = log_potential(m, std::span<const double>(xs));
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    inner += w * dH.transform.values[i] * U[i];
  }
  inner *= gs.step;

  // scaled moments int (y/R)^k g and int (t/R)^k dmu
  constexpr int K = 160;
  std::vector<double> gk(K + 1, 0.0), mk(K + 1, 0.0);
  const int panels = 64;
  for (int k = 0; k <= K; ++k)
    gk[k] = quad::gauss5_composite([&](double y) { return std::pow(y / R, k) * g(y); },
                                   g_lo, g_hi, panels);
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double rho = m.density()[j];
    if (rho == 0.0) continue;
    const double a = m.edge(j) / R, b = m.edge(j + 1) / R;
    double pa = a, pb = b;  // a^(k+1), b^(k+1)
    for (int k = 0; k <= K; ++k) {
      mk[k] += rho * R * (pb - pa) / (k + 1);
      pa *= a;
      pb *= b;
    }
  }
  // (Hg)'(x) = -(1/pi) sum_k (k+1) g_k x^-(k+2);  U(x) = -ln|x| + sum_j mu_j / (j x^j)
  const double lnR = std::log(R);
  double tail = 0.0;
  for (int k = 0; k <= K; k += 2) {
    const double p1 = k + 1.0;
    tail += (k + 1.0) * gk[k] * 2.0 / R * (lnR / p1 + 1.0 / (p1 * p1));
  }
  for (int k = 0; k <= K; ++k) {
    for (int j = 1; j <= K - k; ++j) {
      if ((k + j) % 2 != 0) continue;
      tail -= (k + 1.0) / j * gk[k] * mk[j] * 2.0 / (R * (k + j + 1.0));
    }
  }
  tail /= M_PI;

  rep.rhs = (inner + tail) / M_PI;
  rep.residual = std::fabs(rep.lhs - rep.rhs);
  return rep;
}

}  // namespace logpot

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "logpot/logpot.hpp"

using namespace logpot;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double bump(double x) { return std::fabs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

const Potential kHalfSquare = Potential::quadratic();

// shared between the T1 scan and the approximate T1 calibration
double g_family_sup = 0.0;

// ---------------------------------------------------------------------------

Outcome semicircle_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_equilibrium(kHalfSquare, -3.0, 3.0, 4000);
  const double secs = seconds_since(t0);
  const double d = w1(r.measure, laws::semicircle(-3.0, 3.0, 60000));
  const bool ok = d <= 5e-3 && std::fabs(r.c_v - 0.75) <= 5e-3 && std::fabs(r.C_v - 1.0) <= 1e-2 &&
                  r.residual_on <= 1e-2 && secs <= 60.0;
  return {ok, "w1=" + fmt(d) + " c_v=" + fmt(r.c_v, 8) + " C_v=" + fmt(r.C_v, 8) +
                  " residual_on=" + fmt(r.residual_on) + " time=" + fmt(secs, 3) + "s"};
}

Outcome euler_lagrange() {
  const std::size_t n = 4000;
  const std::vector<std::pair<std::string, Potential>> pots{
      {"x^2/2", kHalfSquare},
      {"x^2", Potential::quadratic(1.0)},
      {"x^4", Potential::polynomial({0, 0, 0, 0, 1}, Growth{1.0, -1.0, 4.0})}};
  bool ok = true;
  std::string detail;
  std::vector<EquilibriumResult> res;
  for (const auto& [name, V] : pots) {
    res.push_back(solve_equilibrium(V, -3.0, 3.0, n));
    const auto& r = res.back();
    ok = ok && r.residual_on <= 1e-2 && r.residual_off >= -1e-2;
    detail += name + ": on=" + fmt(r.residual_on, 3) + " off=" + fmt(r.residual_off, 3) + "; ";
  }
  // mu_{x^2} is the image of mu_{x^2/2} under x -> x / sqrt 2
  const double h = 6.0 / static_cast<double>(n);
  const double d = w1(res[1].measure, res[0].measure.affine_image(1.0 / std::sqrt(2.0), 0.0));
  ok = ok && d <= 5.0 * h;
  return {ok, detail + "dilation w1=" + fmt(d, 3) + " (5h=" + fmt(5.0 * h, 3) + ")"};
}

Outcome hilbert_transform_checks() {
  auto f = SampledFunction::sample(
      -40.0, 40.0, 8193, [](double x) { return (4.0 * x * x * x - 6.0 * x) * std::exp(-x * x); });
  const auto Hf = hilbert_transform(f).transform;
  const auto HHf = hilbert_transform(Hf).transform;
  std::vector<double> sum(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) sum[i] = HHf.values[i] + f.values[i];
  const double iso = std::fabs(l2(Hf.values) / l2(f.values) - 1.0);
  const double inv = l2(sum) / l2(f.values);

  const double L = 1100.0;
  auto p = SampledFunction::sample(-L, L, 32769, [](double x) { return 1.0 / (M_PI * (1.0 + x * x)); });
  const auto r = hilbert_transform(p, {4, 0, true});
  double poisson = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p.x(i);
    if (std::fabs(x) <= 0.5 * L)
      poisson = std::max(poisson, std::fabs(r.transform.values[i] - x / (M_PI * (1.0 + x * x))));
  }
  return {iso <= 1e-6 && inv <= 1e-6 && poisson <= 1e-4,
          "isometry err=" + fmt(iso, 3) + " H^2+id rel=" + fmt(inv, 3) + " Poisson sup=" + fmt(poisson, 3)};
}

Outcome hilbert_identity() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, GridMeasure>> ms{
      {"semicircle", laws::semicircle(-2.5, 2.5, 2000)},
      {"uniform[0,1]", laws::uniform(-0.5, 1.5, 2000, 0.0, 1.0)}};
  for (const auto& [name, m] : ms) {
    const auto a = hilbert_identity_residual(bump, -1.0, 1.0, m, 4.0, 4096);
    const auto b = hilbert_identity_residual(bump, -1.0, 1.0, m, 4.0, 8192);
    const double factor = a.residual / b.residual;
    ok = ok && a.residual <= 1e-3 && factor >= 1.5;
    detail += name + ": residual=" + fmt(a.residual, 3) + " doubling factor=" + fmt(factor, 3) + "; ";
  }
  return {ok, detail};
}

Outcome log_energy_oracles() {
  auto lam = laws::uniform(0.0, 1.0, 1000, 0.0, 1.0);
  const double el = log_energy(lam, lam);
  auto e = [](std::size_t n) {
    auto s = laws::semicircle(-2.0, 2.0, n);
    return log_energy(s, s);
  };
  const double a = e(1000), b = e(2000);
  const double es = b + (b - a) / 3.0;
  return {std::fabs(el + 1.5) <= 1e-4 && std::fabs(es + 0.25) <= 1e-3,
          "E(lambda)=" + fmt(el, 10) + " E(sigma) Richardson=" + fmt(es, 10) + " (raw n=2000: " + fmt(b, 8) +
              ")"};
}

Outcome free_t1_scan() {
  const auto s1 = t1_ratio_scan(kHalfSquare, solve_equilibrium(kHalfSquare, -3.0, 3.0, 2000),
                                t1_family(-3.0, 3.0, 2000));
  const auto s2 = t1_ratio_scan(kHalfSquare, solve_equilibrium(kHalfSquare, -3.0, 3.0, 4000),
                                t1_family(-3.0, 3.0, 4000));
  bool ok = s1.records.size() == 20;
  std::size_t w2_violations = 0;
  double worst_w2 = 0.0;
  for (const auto* s : {&s1, &s2})
    for (const auto& r : s->records) {
      ok = ok && !r.skipped && std::isfinite(r.ratio);
      if (r.w2_sq > 2.0 * r.sigma * (1.0 + 1e-3) + 1e-6) ++w2_violations;
      worst_w2 = std::max(worst_w2, r.w2_ratio);
    }
  const double change = std::fabs(s2.sup_ratio - s1.sup_ratio) / s1.sup_ratio;
  ok = ok && change < 0.05 && w2_violations == 0;
  g_family_sup = s1.sup_ratio;
  return {ok, std::string(kT1FamilyVersion) + " sup W1^2/Sigma=" + fmt(s1.sup_ratio, 8) + " -> " +
                  fmt(s2.sup_ratio, 8) + " (change " + fmt(100.0 * change, 3) + "%), max W2^2/Sigma=" +
                  fmt(worst_w2, 8) + ", W2 violations=" + std::to_string(w2_violations)};
}

Outcome spreading_construction() {
  std::mt19937_64 rng(20240607);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> sizes(2, 64);
  std::size_t violations = 0, with_ties = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t N = sizes(rng);
    std::vector<double> x(N);
    for (auto& v : x) v = gauss(rng);
    // every other configuration is rounded to a coarse lattice and gets a duplicated point
    if (k % 2 == 0) {
      for (auto& v : x) v = std::round(v * 4.0) / 4.0;
      x[N - 1] = x[0];
    }
    const EmpiricalMeasure e(x);
    with_ties += e.has_ties();
    const auto s = spread_points(e);
    const double Nd = static_cast<double>(N);
    const auto& y = s.spread.points();
    for (std::size_t i = 1; i < N; ++i)
      if (!(y[i] - y[i - 1] >= 1.0 / (Nd * Nd))) ++violations;
    if (!(w1(e, s.spread) <= 1.0 / (2.0 * Nd))) ++violations;
    if (!(w1(e, s.smoothed) <= 2.0 / Nd)) ++violations;
  }
  return {violations == 0 && with_ties > 0,
          "100 configs (" + std::to_string(with_ties) + " with ties), violations=" + std::to_string(violations)};
}

Outcome approximate_t1() {
  const auto eq = solve_equilibrium(kHalfSquare, -3.0, 3.0, 2000);
  const double B_hat = 1.05 * g_family_sup;
  const double M = 3.0;  // K = [-M, M]; a replica leaving K counts as a failure
  auto calibrate = [&](ApproxT1Form form) {
    double B = -kInfinity;
    for (std::size_t r = 0; r < 250; ++r) {
      const auto e = beta_hermite_sample(2.0, 16, sub_seed(1001, r));
      if (e.min() < -M || e.max() > M) continue;
      B = std::max(B, required_slack_constant(approx_t1_check(kHalfSquare, e, eq, B_hat, 0.0, -M, M, form), B_hat));
    }
    return B;
  };
  auto held_out = [&](ApproxT1Form form, double B, std::size_t N) {
    std::size_t hold = 0;
    for (std::size_t r = 0; r < 500; ++r) {
      const auto e = beta_hermite_sample(2.0, N, sub_seed(2002 + N, r));
      if (e.min() < -M || e.max() > M) continue;
      hold += approx_t1_check(kHalfSquare, e, eq, B_hat, B, -M, M, form).holds;
    }
    return hold;
  };
  const double B = calibrate(ApproxT1Form::stated);
  bool ok = true;
  std::string detail = "B_hat=" + fmt(B_hat, 6) + " B=" + fmt(B, 6) + " held-out:";
  for (std::size_t N : {8u, 16u, 32u}) {
    const std::size_t h = held_out(ApproxT1Form::stated, B, N);
    ok = ok && h >= 495;
    detail += " N=" + std::to_string(N) + " " + std::to_string(h) + "/500";
  }
  // diagnostic: the form that the proof establishes, with the 2 B_V factor on the slack and 8/N^2
  const double Bp = calibrate(ApproxT1Form::proof);
  detail += " | proof form B=" + fmt(Bp, 6) + ":";
  for (std::size_t N : {8u, 16u, 32u})
    detail += " N=" + std::to_string(N) + " " + std::to_string(held_out(ApproxT1Form::proof, Bp, N)) + "/500";
  return {ok, detail};
}

// pooled single-particle moments of n_chains independent Metropolis chains;
// standard errors from the spread of per-chain means
struct MomentEstimate {
  double m2, se2, m4, se4;
};

MomentEstimate chain_moments(std::size_t N, std::size_t n_chains, std::size_t draws, std::uint64_t seed) {
  std::vector<double> c2(n_chains), c4(n_chains);
  parallel_for(n_chains, 4, [&](std::size_t c) {
    ChainConfig cfg;
    cfg.n_particles = N;
    cfg.burn_in = 2000;
    cfg.steps = cfg.burn_in + draws * 10;
    cfg.seed = sub_seed(seed, c);
    const auto b = metropolis_sample(cfg, draws);
    double s2 = 0.0, s4 = 0.0;
    for (const auto& e : b.configs)
      for (double x : e.points()) {
        s2 += x * x;
        s4 += x * x * x * x;
      }
    const double cnt = static_cast<double>(draws * N);
    c2[c] = s2 / cnt;
    c4[c] = s4 / cnt;
  });
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
  };
  const auto [m2, se2] = mean_se(c2);
  const auto [m4, se4] = mean_se(c4);
  return {m2, se2, m4, se4};
}

Outcome sampler_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kConfigs = 2000, kChains = 16;
  std::vector<std::vector<EmpiricalMeasure>> per(kChains);
  parallel_for(kChains, 4, [&](std::size_t c) {
    ChainConfig cfg;
    cfg.n_particles = 8;
    cfg.burn_in = 2000;
    cfg.steps = cfg.burn_in + (kConfigs / kChains) * 20;
    cfg.seed = sub_seed(12, c);
    per[c] = metropolis_sample(cfg, kConfigs / kChains).configs;
  });
  std::vector<double> met, tri;
  for (const auto& p : per)
    for (const auto& e : p) met.insert(met.end(), e.points().begin(), e.points().end());
  for (std::size_t r = 0; r < kConfigs; ++r) {
    const auto e = beta_hermite_sample(2.0, 8, sub_seed(11, r));
    tri.insert(tri.end(), e.points().begin(), e.points().end());
  }
  const double d = w1(EmpiricalMeasure(met), EmpiricalMeasure(tri));

  // N = 1: density prop. to exp(-x^2/2); N = 2: (a - b)^2 exp(-(a^2 + b^2))
  auto moment1 = [](int k) {
    auto w = [](double a) { return std::exp(-0.5 * a * a); };
    return quad::gauss5_composite([&](double a) { return std::pow(a, k) * w(a); }, -12.0, 12.0, 400) /
           quad::gauss5_composite(w, -12.0, 12.0, 400);
  };
  auto moment2 = [](int k) {
    auto dens = [](double a, double b) { return (a - b) * (a - b) * std::exp(-(a * a + b * b)); };
    auto outer = [&](int p) {
      return quad::gauss5_composite(
          [&](double a) {
            return quad::gauss5_composite([&](double b) { return std::pow(a, p) * dens(a, b); }, -8.0, 8.0, 160);
          },
          -8.0, 8.0, 160);
    };
    return outer(k) / outer(0);
  };
  bool ok = d <= 0.05;
  std::string detail = "pooled w1=" + fmt(d, 3);
  for (std::size_t N : {1u, 2u}) {
    const auto est = chain_moments(N, 16, 20000, 300 + N);
    const double o2 = N == 1 ? moment1(2) : moment2(2);
    const double o4 = N == 1 ? moment1(4) : moment2(4);
    const double z2 = (est.m2 - o2) / est.se2, z4 = (est.m4 - o4) / est.se4;
    ok = ok && std::fabs(z2) <= 3.0 && std::fabs(z4) <= 3.0;
    detail += "; N=" + std::to_string(N) + " E x^2=" + fmt(est.m2, 5) + " vs " + fmt(o2, 5) + " (z=" + fmt(z2, 2) +
              "), E x^4=" + fmt(est.m4, 5) + " vs " + fmt(o4, 5) + " (z=" + fmt(z4, 2) + ")";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs <= 600.0;
  return {ok, detail + "; time=" + fmt(secs, 3) + "s"};
}

Outcome concentration_scaling() {
  ConcentrationConfig cfg;
  cfg.beta = 2.0;
  cfg.Ns = {8, 16, 32};
  cfg.thetas = {0.15, 0.2, 0.3};
  cfg.reps = 2000;
  cfg.seed = 7;
  cfg.threads = 4;
  const auto res = concentration_experiment(kHalfSquare, cfg);
  const std::size_t T = cfg.thetas.size();
  bool median_ok = true;
  for (std::size_t i = 1; i < res.median_w1.size(); ++i)
    median_ok = median_ok && res.median_w1[i] < res.median_w1[i - 1];

  auto row = [&](std::size_t t, bool& strict, bool& superlinear) {
    strict = true;
    superlinear = true;
    std::string s;
    for (std::size_t i = 0; i < cfg.Ns.size(); ++i) {
      const auto& c = res.cells[i * T + t].tail;
      s += (i ? " > " : "") + std::to_string(c.hits);
      if (i == 0) continue;
      const auto& p = res.cells[(i - 1) * T + t].tail;
      strict = strict && c.hits < p.hits;
      const bool resolvable = p.hits >= 5 && c.hits >= 5 && p.frequency < 1.0;
      if (resolvable) superlinear = superlinear && std::log(c.frequency) / std::log(p.frequency) >= 1.5;
    }
    return s;
  };
  bool strict03 = false, super03 = false, strict015 = false, super015 = false;
  const std::string tail03 = row(2, strict03, super03);
  const std::string tail015 = row(0, strict015, super015);
  std::string med;
  for (std::size_t i = 0; i < res.median_w1.size(); ++i) med += (i ? " > " : "") + fmt(res.median_w1[i], 4);
  const bool ok = median_ok && strict03 && super03;
  return {ok, "median w1 " + med + "; theta=0.3 tail hits " + tail03 + " of 2000" +
                  (strict03 ? "" : " (not strictly decreasing)") + "; diagnostic theta=0.15 hits " + tail015 +
                  "; fit slope u=" + fmt(res.fit.slope, 4) + " over " + std::to_string(res.fit.points) + " cells"};
}

Outcome entropy_gap() {
  const auto recs = entropy_gap_demo({4, 16, 64, 256});
  bool ok = true;
  double lo = kInfinity, hi = 0.0;
  std::string detail;
  for (const auto& r : recs) {
    ok = ok && std::fabs(r.relative_entropy - std::log(static_cast<double>(r.n))) <= 1e-9;
    lo = std::min(lo, r.sigma);
    hi = std::max(hi, r.sigma);
    detail += "n=" + std::to_string(r.n) + " H=" + fmt(r.relative_entropy, 10) + " Sigma=" + fmt(r.sigma, 4) +
              " H/Sigma=" + fmt(r.ratio, 4) + "; ";
  }
  ok = ok && hi / lo <= 2.0;
  return {ok, detail + "Sigma max/min=" + fmt(hi / lo, 4)};
}

Outcome small_n_partition() {
  const double beta = 2.0;
  const double c = solve_equilibrium(kHalfSquare.scaled(2.0 / beta), -3.0, 3.0, 4000).c_v;
  double lo = kInfinity, hi = 0.0;
  std::string detail;
  bool warn = false;
  for (std::size_t N = 1; N <= 4; ++N) {
    const auto z = log_partition_small_n(kHalfSquare, beta, N, -6.0, 6.0);
    warn = warn || z.truncation_warning;
    const double Nd = static_cast<double>(N);
    const double g = std::fabs(z.log_z / (Nd * Nd) + 0.5 * beta * c) * Nd;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
    detail += "N=" + std::to_string(N) + ": " + fmt(g, 4) + "; ";
  }
  return {!warn && hi / lo <= 3.0, "N|ln Z/N^2 + c| " + detail + "max/min=" + fmt(hi / lo, 4)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("logpot_accept_" + std::to_string(::getpid()));
  const std::string cli = LOGPOT_CLI;
  const std::string pot = std::string(LOGPOT_DATA) + "/quadratic.json";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"concentrate", "concentrate --potential " + pot + " --n 8,16 --theta 0.2,0.3 --reps 400 --seed 7"},
      {"t1scan", "t1scan --potential " + pot + " --cells 800"},
      {"sample", "sample --potential " + pot + " --n 5 --count 50 --seed 3"},
      {"demo-gap", "demo-gap --n 4,16"},
      {"entropy", "entropy --potential " + pot + " --law uniform,-1,1 --cells 800"}};
  std::size_t mismatches = 0, failures = 0;
  std::string detail;
  for (const auto& [name, args] : runs) {
    std::string bodies[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / (name + std::to_string(k));
      fs::create_directories(dir);
      // the second run uses a different worker count; statistics must not depend on it
      const std::string cmd = "cd \"" + dir.string() + "\" && \"" + cli + "\" " + args + " --threads " +
                              (k ? "3" : "1") + " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) ++failures;
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".csv") bodies[k] += entry.path().filename().string() + "\n" + slurp(entry.path());
    }
    const bool same = !bodies[0].empty() && bodies[0] == bodies[1];
    mismatches += !same;
    detail += name + (same ? " identical" : " DIFFERS") + "; ";
  }
  fs::remove_all(root);
  return {mismatches == 0 && failures == 0, detail + "failed runs=" + std::to_string(failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"semicircle recovery", semicircle_recovery},
      {"Euler-Lagrange conditions", euler_lagrange},
      {"Hilbert transform", hilbert_transform_checks},
      {"Hilbert-potential identity", hilbert_identity},
      {"log-energy oracles", log_energy_oracles},
      {"free T1 scan", free_t1_scan},
      {"spreading construction", spreading_construction},
      {"approximate T1", approximate_t1},
      {"sampler equivalence", sampler_equivalence},
      {"concentration scaling", concentration_scaling},
      {"entropy-gap demo", entropy_gap},
      {"small-N partition", small_n_partition},
      {"determinism", cli_determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}

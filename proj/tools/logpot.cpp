// Batch front end. Exit codes: 0 ok, 1 bad input, 2 support touches the
// window, 3 failed --assert check.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logpot/logpot.hpp"

using namespace logpot;

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kSupportClipped = 2;
constexpr int kAssertFailed = 3;

struct Common {
  std::string potential_path;
  std::string out;
  std::uint64_t seed = 7;
  unsigned threads = 0;
  bool assert_mode = false;
};

struct Run {
  std::string command_line;
  std::string subcommand;
  Json potential = nullptr;
  Json grid = Json::object();
  Json extra = Json::object();
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<std::string> outputs;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_manifest(const Run& run, const std::string& prefix) {
  Json m;
  m["command"] = run.command_line;
  m["subcommand"] = run.subcommand;
  m["library_version"] = kLibraryVersion;
  m["created"] = timestamp();
  m["seed"] = run.seed;
  m["threads"] = run.threads;
  if (!run.potential.is_null()) {
    m["potential_hash"] = spec_hash(run.potential);
    m["potential"] = run.potential;
  }
  m["grid"] = run.grid;
  if (!run.extra.empty()) m["details"] = run.extra;
  m["outputs"] = run.outputs;
  const std::string path = prefix + ".manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << m.dump(2) << '\n';
}

void emit(Run& run, const std::string& path, const CsvWriter& csv) {
  csv.write(path);
  run.outputs.push_back(path);
}

Potential load_potential(const std::string& path, Run& run) {
  run.potential = read_json_file(path);
  return potential_from_json(run.potential);
}

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("LOGPOT_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw InvalidArgument("LOGPOT_SEED must be a non-negative integer");
    return v;
  }
  return flag;
}

void check_window(const std::vector<double>& w) {
  if (w.size() != 2 || !(w[0] < w[1])) throw InvalidArgument("--window needs two values lo < hi");
}

// ---------------------------------------------------------------------------

struct EqsolveArgs {
  std::vector<double> window{-3.0, 3.0};
  std::size_t cells = 4000;
  double tol = 1e-8;
  double residual_tol = 1e-2;
};

int cmd_eqsolve(const Common& c, const EqsolveArgs& a, Run& run) {
  check_window(a.window);
  const auto V = load_potential(c.potential_path, run);
  SolverOptions opt;
  opt.tol = a.tol;
  run.grid = {{"lo", a.window[0]}, {"hi", a.window[1]}, {"cells", a.cells}, {"tol", a.tol}};
  const auto r = solve_equilibrium(V, a.window[0], a.window[1], a.cells, opt);
  const std::string path = c.out + ".json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << to_json(r).dump(2) << '\n';
  run.outputs.push_back(path);
  const bool ok = r.residual_on <= a.residual_tol && r.residual_off >= -a.residual_tol;
  std::cout << "c_v=" << format_number(r.c_v) << " C_v=" << format_number(r.C_v)
            << " residual_on=" << format_number(r.residual_on)
            << " residual_off=" << format_number(r.residual_off) << '\n';
  if (!ok) std::cerr << "warning: Euler-Lagrange residuals exceed " << a.residual_tol << '\n';
  return c.assert_mode && !ok ? kAssertFailed : kOk;
}

// ---------------------------------------------------------------------------

struct EntropyArgs {
  std::vector<double> window{-3.0, 3.0};
  std::size_t cells = 2000;
  std::string measure_path;
  std::string law;  // semicircle,c,r | uniform,a,b
};

GridMeasure parse_law(const std::string& spec, double lo, double hi, std::size_t n) {
  std::stringstream ss(spec);
  std::string name, tok;
  std::getline(ss, name, ',');
  std::vector<double> p;
  while (std::getline(ss, tok, ',')) {
    try {
      p.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw InvalidArgument("--law: bad number '" + tok + "'");
    }
  }
  if (name == "semicircle" && p.size() == 2) return laws::semicircle(lo, hi, n, p[0], p[1]);
  if (name == "uniform" && p.size() == 2) return laws::uniform(lo, hi, n, p[0], p[1]);
  throw InvalidArgument("--law must be semicircle,c,r or uniform,a,b");
}

int cmd_entropy(const Common& c, const EntropyArgs& a, Run& run) {
  check_window(a.window);
  if (a.measure_path.empty() == a.law.empty())
    throw InvalidArgument("give exactly one of --measure and --law");
  const auto V = load_potential(c.potential_path, run);
  run.grid = {{"lo", a.window[0]}, {"hi", a.window[1]}, {"cells", a.cells}};
  const auto m = a.law.empty() ? grid_measure_from_json(read_json_file(a.measure_path))
                               : parse_law(a.law, a.window[0], a.window[1], a.cells);
  run.extra = {{"measure", a.law.empty() ? a.measure_path : a.law}};
  const auto eq = solve_equilibrium(V, a.window[0], a.window[1], a.cells);
  const auto rep = sigma_v(V, m, eq);
  CsvWriter csv({"j_value", "c_v", "sigma", "w1", "w2"});
  csv.row({cell(rep.j_value), cell(rep.c_v), cell(rep.sigma), cell(w1(m, eq.measure)),
           cell(w2(m, eq.measure))});
  emit(run, c.out + ".csv", csv);
  const bool ok = rep.sigma >= -1e-6;
  return c.assert_mode && !ok ? kAssertFailed : kOk;
}

// ---------------------------------------------------------------------------

struct T1Args {
  std::vector<double> window{-3.0, 3.0};
  std::size_t cells = 2000;
  double kappa = 0.0;  // > 0 enables the W2 companion check
};

int cmd_t1scan(const Common& c, const T1Args& a, Run& run) {
  check_window(a.window);
  const auto V = load_potential(c.potential_path, run);
  run.grid = {{"lo", a.window[0]}, {"hi", a.window[1]}, {"cells", a.cells}};
  run.extra = {{"family", kT1FamilyVersion}, {"kappa", a.kappa}};
  const auto eq = solve_equilibrium(V, a.window[0], a.window[1], a.cells);
  const auto scan = t1_ratio_scan(V, eq, t1_family(a.window[0], a.window[1], a.cells), 1e-9, c.threads);
  CsvWriter csv({"member", "w1_sq", "w2_sq", "sigma", "ratio", "w2_ratio", "skipped"});
  bool ok = std::isfinite(scan.sup_ratio);
  for (const auto& r : scan.records) {
    csv.row({r.name, cell(r.w1_sq), cell(r.w2_sq), cell(r.sigma), cell(r.ratio), cell(r.w2_ratio),
             cell(r.skipped)});
    if (!r.skipped && !std::isfinite(r.ratio)) ok = false;
    if (a.kappa > 0.0 && r.w2_sq > 2.0 / a.kappa * r.sigma * (1.0 + 1e-3) + 1e-6) ok = false;
  }
  emit(run, c.out + ".csv", csv);
  std::cout << "sup_ratio=" << format_number(scan.sup_ratio)
            << " fitted_B=" << format_number(1.05 * scan.sup_ratio) << '\n';
  return c.assert_mode && !ok ? kAssertFailed : kOk;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  double beta = 2.0;
  std::size_t n = 8;
  std::size_t count = 100;
  std::string sampler = "metropolis";
  std::size_t burn_in = 2000;
  std::size_t thinning = 20;
};

int cmd_sample(const Common& c, const SampleArgs& a, Run& run) {
  const auto V = load_potential(c.potential_path, run);
  run.extra = {{"beta", a.beta}, {"n", a.n}, {"count", a.count}, {"sampler", a.sampler}};
  std::vector<EmpiricalMeasure> draws;
  if (a.sampler == "tridiagonal") {
    if (!is_gaussian_quadratic(V))
      throw InvalidArgument("the tridiagonal sampler needs V = x^2/2");
    for (std::size_t r = 0; r < a.count; ++r) draws.push_back(beta_hermite_sample(a.beta, a.n, sub_seed(run.seed, r)));
  } else if (a.sampler == "metropolis") {
    ChainConfig cfg;
    cfg.V = V;
    cfg.beta = a.beta;
    cfg.n_particles = a.n;
    cfg.burn_in = a.burn_in;
    cfg.steps = a.burn_in + a.count * a.thinning;
    cfg.seed = run.seed;
    auto batch = metropolis_sample(cfg, a.count);
    run.extra["acceptance_rate"] = batch.acceptance_rate;
    run.extra["proposal_scale"] = batch.proposal_scale;
    draws = std::move(batch.configs);
  } else {
    throw InvalidArgument("--sampler must be metropolis or tridiagonal");
  }
  CsvWriter csv({"draw", "index", "x"});
  for (std::size_t r = 0; r < draws.size(); ++r)
    for (std::size_t i = 0; i < draws[r].size(); ++i) csv.row({cell(r), cell(i), cell(draws[r].points()[i])});
  emit(run, c.out + ".csv", csv);
  return kOk;
}

// ---------------------------------------------------------------------------

struct ConcentrateArgs {
  double beta = 2.0;
  std::vector<std::size_t> ns{8, 16, 32};
  std::vector<double> thetas{0.2, 0.3};
  std::size_t reps = 2000;
  double compact_M = kInfinity;
  double floor_v = 0.1;
  std::size_t cells = 3000;
};

int cmd_concentrate(const Common& c, const ConcentrateArgs& a, Run& run) {
  const auto V = load_potential(c.potential_path, run);
  ConcentrationConfig cfg;
  cfg.beta = a.beta;
  cfg.Ns = a.ns;
  cfg.thetas = a.thetas;
  cfg.reps = a.reps;
  cfg.seed = run.seed;
  cfg.threads = c.threads;
  cfg.floor_v = a.floor_v;
  cfg.cells = a.cells;
  cfg.compact_M = a.compact_M;
  const auto res = concentration_experiment(V, cfg);
  run.grid = {{"lo", res.limit.measure.lo()}, {"hi", res.limit.measure.hi()}, {"cells", a.cells}};
  run.extra = {{"beta", a.beta}, {"reps", a.reps}, {"sampler", res.sampler},
               {"compact_M", format_number(a.compact_M)}, {"floor_v", a.floor_v},
               {"fit", {{"slope", res.fit.slope}, {"intercept", res.fit.intercept},
                        {"r_squared", res.fit.r_squared}, {"points", res.fit.points}}}};

  CsvWriter tails({"N", "theta", "hits", "reps", "frequency", "ci_low", "ci_high", "restricted_hits",
                   "restricted_frequency", "below_floor", "fitted"});
  for (const auto& cl : res.cells)
    tails.row({cell(cl.N), cell(cl.theta), cell(cl.tail.hits), cell(cl.tail.total), cell(cl.tail.frequency),
               cell(cl.tail.ci_low), cell(cl.tail.ci_high), cell(cl.restricted.hits),
               cell(cl.restricted.frequency), cell(cl.below_floor), cell(cl.fitted)});
  emit(run, c.out + ".csv", tails);

  CsvWriter summary({"N", "median_w1", "complement_frequency", "complement_ci_high"});
  for (std::size_t i = 0; i < a.ns.size(); ++i)
    summary.row({cell(a.ns[i]), cell(res.median_w1[i]), cell(res.complement[i].frequency),
                 cell(res.complement[i].ci_high)});
  emit(run, c.out + ".summary.csv", summary);

  bool ok = true;
  for (std::size_t i = 1; i < res.median_w1.size(); ++i) ok = ok && res.median_w1[i] < res.median_w1[i - 1];
  for (std::size_t t = 0; t < a.thetas.size(); ++t)
    for (std::size_t i = 1; i < a.ns.size(); ++i) {
      const auto& prev = res.cells[(i - 1) * a.thetas.size() + t].tail;
      const auto& cur = res.cells[i * a.thetas.size() + t].tail;
      ok = ok && cur.hits < prev.hits;
    }
  return c.assert_mode && !ok ? kAssertFailed : kOk;
}

// ---------------------------------------------------------------------------

int cmd_demo_gap(const Common& c, const std::vector<std::size_t>& ns, Run& run) {
  run.extra = {{"n", ns}};
  const auto recs = entropy_gap_demo(ns);
  CsvWriter csv({"n", "ln_n", "relative_entropy", "sigma", "ratio"});
  bool ok = true;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const double ln_n = std::log(static_cast<double>(r.n));
    csv.row({cell(r.n), cell(ln_n), cell(r.relative_entropy), cell(r.sigma), cell(r.ratio)});
    ok = ok && std::fabs(r.relative_entropy - ln_n) <= 1e-9;
    if (i > 0) ok = ok && r.ratio > recs[i - 1].ratio;
  }
  emit(run, c.out + ".csv", csv);
  return c.assert_mode && !ok ? kAssertFailed : kOk;
}

void add_common(CLI::App* sub, Common& c, bool needs_potential) {
  if (needs_potential) sub->add_option("--potential", c.potential_path, "potential spec (JSON)")->required();
  sub->add_option("--out", c.out, "output prefix (default: the subcommand name)");
  sub->add_option("--seed", c.seed, "random seed (LOGPOT_SEED overrides)")->default_val(7);
  sub->add_option("--threads", c.threads, "worker cap, 0 = available parallelism")->default_val(0);
  sub->add_flag("--assert", c.assert_mode, "exit 3 when the run's checks fail");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic potential and free entropy experiments"};
  app.require_subcommand(1);

  Common common;
  EqsolveArgs eq_args;
  EntropyArgs ent_args;
  T1Args t1_args;
  SampleArgs sample_args;
  ConcentrateArgs conc_args;
  std::vector<std::size_t> gap_ns{4, 16, 64, 256};

  auto* eqsolve = app.add_subcommand("eqsolve", "solve for the equilibrium measure");
  add_common(eqsolve, common, true);
  eqsolve->add_option("--window", eq_args.window, "solve window lo hi")->expected(2);
  eqsolve->add_option("--cells", eq_args.cells, "grid cells")->check(CLI::PositiveNumber);
  eqsolve->add_option("--tol", eq_args.tol, "duality gap tolerance");
  eqsolve->add_option("--residual-tol", eq_args.residual_tol, "Euler-Lagrange tolerance");

  auto* entropy = app.add_subcommand("entropy", "free entropy of a measure");
  add_common(entropy, common, true);
  entropy->add_option("--window", ent_args.window, "grid window lo hi")->expected(2);
  entropy->add_option("--cells", ent_args.cells, "grid cells")->check(CLI::PositiveNumber);
  entropy->add_option("--measure", ent_args.measure_path, "grid measure (JSON)");
  entropy->add_option("--law", ent_args.law, "semicircle,c,r or uniform,a,b");

  auto* t1scan = app.add_subcommand("t1scan", "W1^2 / Sigma over the versioned family");
  add_common(t1scan, common, true);
  t1scan->add_option("--window", t1_args.window, "grid window lo hi")->expected(2);
  t1scan->add_option("--cells", t1_args.cells, "grid cells")->check(CLI::PositiveNumber);
  t1scan->add_option("--kappa", t1_args.kappa, "convexity constant for the W2 check");

  auto* sample = app.add_subcommand("sample", "draw beta-ensemble configurations");
  add_common(sample, common, true);
  sample->add_option("--beta", sample_args.beta)->check(CLI::PositiveNumber);
  sample->add_option("--n", sample_args.n, "particles")->check(CLI::PositiveNumber);
  sample->add_option("--count", sample_args.count, "configurations")->check(CLI::PositiveNumber);
  sample->add_option("--sampler", sample_args.sampler)->check(CLI::IsMember({"metropolis", "tridiagonal"}));
  sample->add_option("--burn-in", sample_args.burn_in);
  sample->add_option("--thinning", sample_args.thinning)->check(CLI::PositiveNumber);

  auto* concentrate = app.add_subcommand("concentrate", "tail of W1(empirical, limit)");
  add_common(concentrate, common, true);
  concentrate->add_option("--beta", conc_args.beta)->check(CLI::PositiveNumber);
  concentrate->add_option("--n", conc_args.ns, "particle counts")->delimiter(',');
  concentrate->add_option("--theta", conc_args.thetas, "thresholds")->delimiter(',');
  concentrate->add_option("--reps", conc_args.reps)->check(CLI::PositiveNumber);
  concentrate->add_option("--compact", conc_args.compact_M, "restrict to max |x_i| < M");
  concentrate->add_option("--floor-v", conc_args.floor_v, "validity floor constant v");
  concentrate->add_option("--cells", conc_args.cells, "grid cells for the limit")->check(CLI::PositiveNumber);

  auto* demo_gap = app.add_subcommand("demo-gap", "relative entropy vs free entropy on combs");
  add_common(demo_gap, common, false);
  demo_gap->add_option("--n", gap_ns, "comb sizes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  Run run;
  for (int i = 0; i < argc; ++i) run.command_line += (i ? " " : "") + std::string(argv[i]);
  try {
    run.seed = effective_seed(common.seed);
    run.threads = common.threads;
    int code = kOk;
    if (common.out.empty()) common.out = app.get_subcommands().front()->get_name();
    if (*eqsolve) {
      run.subcommand = "eqsolve";
      code = cmd_eqsolve(common, eq_args, run);
    } else if (*entropy) {
      run.subcommand = "entropy";
      code = cmd_entropy(common, ent_args, run);
    } else if (*t1scan) {
      run.subcommand = "t1scan";
      code = cmd_t1scan(common, t1_args, run);
    } else if (*sample) {
      run.subcommand = "sample";
      code = cmd_sample(common, sample_args, run);
    } else if (*concentrate) {
      run.subcommand = "concentrate";
      code = cmd_concentrate(common, conc_args, run);
    } else {
      run.subcommand = "demo-gap";
      code = cmd_demo_gap(common, gap_ns, run);
    }
    write_manifest(run, common.out);
    if (code == kAssertFailed) std::cerr << "assertion failed\n";
    return code;
  } catch (const SupportTouchesWindow& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSupportClipped;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

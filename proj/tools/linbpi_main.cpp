#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linbpi/bpi.hpp"
#include "linbpi/design.hpp"
#include "linbpi/harness.hpp"
#include "linbpi/instance_io.hpp"
#include "linbpi/oracles.hpp"

namespace {

using namespace linbpi;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::size_t env_workers() {
  const char* env = std::getenv("LINBPI_WORKERS");
  if (env == nullptr) return 1;
  long v = std::atol(env);
  return v > 0 ? std::size_t(v) : 1;
}

int cmd_design(const std::string& instance_path, double eps_g,
               const std::string& csv_path) {
  Instance inst = load_instance(instance_path);
  const FeatureMap& f = features_of(inst);
  Design des = g_optimal_design(f, eps_g);
  std::size_t support = 0;
  for (double w : des.w) support += w > 0.0;
  std::cout << "pairs: " << f.pairs() << " d: " << f.d << "\n";
  std::cout << "sigma: " << fmt(des.sigma) << " (certificate "
            << fmt((1.0 + eps_g) * double(f.d)) << ")\n";
  std::cout << "iterations: " << des.iterations << "\n";
  std::cout << "converged: " << (des.converged ? "yes" : "no") << "\n";
  std::cout << "support: " << support << "\n";
  for (std::size_t i = 0; i < des.w.size(); ++i)
    if (des.w[i] > 0.0)
      std::cout << "  s=" << i / f.A << " a=" << i % f.A << " w="
                << fmt(des.w[i]) << "\n";
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) {
      std::cerr << "cannot write '" << csv_path << "'\n";
      return 2;
    }
    csv << "pair,s,a,w\n";
    for (std::size_t i = 0; i < des.w.size(); ++i)
      csv << i << ',' << i / f.A << ',' << i % f.A << ',' << fmt(des.w[i])
          << '\n';
  }
  return des.converged ? 0 : 1;
}

int cmd_solve(const std::string& instance_path, double delta, double epsilon) {
  Instance inst = load_instance(instance_path);
  const FeatureMap& f = features_of(inst);
  if (const auto* m = std::get_if<DiscountedLinearMdp>(&inst)) {
    PlanningSolution sol = solve_discounted(*m);
    std::cout << "mode: discounted gamma: " << fmt(m->gamma) << " d: " << f.d
              << " S: " << f.S << " A: " << f.A << "\n";
    for (std::size_t s = 0; s < f.S; ++s)
      std::cout << "  s=" << s << " V*=" << fmt(sol.v[s])
                << " pi*=" << sol.policy.action[s] << "\n";
    std::cout << "gap: " << fmt(sol.gap) << "\n";
    double u = u_star_discounted(f.d, m->gamma, sol.gap, epsilon);
    std::cout << "u_star(epsilon=" << fmt(epsilon) << "): " << fmt(u) << "\n";
    std::cout << "predicted_stop_time(delta=" << fmt(delta)
              << "): " << predicted_stop_time(u, delta, f.d) << "\n";
  } else {
    const auto& e = std::get<EpisodicLinearMdp>(inst);
    EpisodicPlanningSolution sol = solve_episodic(e);
    std::cout << "mode: episodic H: " << e.H << " d: " << f.d << " S: " << f.S
              << " A: " << f.A << "\n";
    for (std::size_t s = 0; s < f.S; ++s)
      std::cout << "  s=" << s << " V*_0=" << fmt(sol.v[0][s])
                << " pi*_0=" << sol.policy.action[0][s] << "\n";
    std::cout << "gap: " << fmt(sol.gap) << "\n";
    double u = u_star_episodic(f.d, e.H, sol.gap, epsilon);
    std::cout << "u_star(epsilon=" << fmt(epsilon) << "): " << fmt(u) << "\n";
    std::cout << "predicted_stop_time(delta=" << fmt(delta)
              << "): " << predicted_stop_time_episodic(u, delta, f.d, e.H)
              << "\n";
  }
  return 0;
}

// Max deviation of the estimated transition law from a proper one: negative
// mass, mass above one, or row sums away from one.
double max_transition_violation(const EstimatedMdp& est, const FeatureMap& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    const double* phi = f.pair(i);
    double row_sum = 0.0;
    for (std::size_t sp = 0; sp < f.S; ++sp) {
      double p = 0.0;
      for (std::size_t j = 0; j < f.d; ++j) p += phi[j] * est.mu_hat(sp, j);
      row_sum += p;
      worst = std::max(worst, std::max(-p, p - 1.0));
    }
    worst = std::max(worst, std::abs(row_sum - 1.0));
  }
  return worst;
}

int cmd_run(const std::string& instance_path, double delta, double epsilon,
            std::size_t trials, std::uint64_t seed, std::size_t stride,
            double eps_g, std::size_t t_max, const std::string& out_path,
            const std::string& trace_path) {
  Instance inst = load_instance(instance_path);
  const FeatureMap& f = features_of(inst);

  std::ofstream out;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    out.open(out_path);
    if (!out) {
      std::cerr << "cannot write '" << out_path << "'\n";
      return 2;
    }
    os = &out;
  }
  *os << "seed,mode,d,S,A,gamma_or_H,delta,epsilon,gap,sigma_star,tau,"
         "correct,capped,wallclock_ms\n";

  std::string mode;
  double gamma_or_h = 0.0, gap = 0.0;
  if (const auto* m = std::get_if<DiscountedLinearMdp>(&inst)) {
    mode = "discounted";
    gamma_or_h = m->gamma;
    gap = solve_discounted(*m).gap;
  } else {
    const auto& e = std::get<EpisodicLinearMdp>(inst);
    mode = "episodic";
    gamma_or_h = double(e.H);
    gap = solve_episodic(e).gap;
  }

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) {
      std::cerr << "cannot write '" << trace_path << "'\n";
      return 2;
    }
    trace << "t,theta_err,max_transition_violation\n";
  }

  StoppingConfig cfg;
  cfg.delta = delta;
  cfg.epsilon = epsilon;
  cfg.check_stride = stride;
  cfg.t_max = t_max;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::uint64_t trial_seed = derive_seed(seed, 0, trial);
    Rng rng(trial_seed);
    TrialRecord rec;
    GssObserver obs;
    if (trace.is_open() && trial == 0) {
      obs = [&](const GssCheckpoint& cp) {
        if (cp.est == nullptr) return;
        const auto& m = std::get<DiscountedLinearMdp>(inst);
        double err = 0.0;
        for (std::size_t j = 0; j < f.d; ++j) {
          double dv = cp.est->theta_hat[j] - m.theta[j];
          err += dv * dv;
        }
        trace << cp.t << ',' << fmt(std::sqrt(err)) << ','
              << fmt(max_transition_violation(*cp.est, f)) << '\n';
      };
    }
    if (const auto* m = std::get_if<DiscountedLinearMdp>(&inst))
      rec = gss_run(*m, cfg, eps_g, rng, obs);
    else
      rec = gsse_run(std::get<EpisodicLinearMdp>(inst), cfg, eps_g, rng);
    rec.seed = trial_seed;
    *os << rec.seed << ',' << mode << ',' << f.d << ',' << f.S << ',' << f.A
        << ',' << fmt(gamma_or_h) << ',' << fmt(delta) << ',' << fmt(epsilon)
        << ',' << fmt(gap) << ',' << fmt(rec.sigma_design) << ',' << rec.tau
        << ',' << (rec.correct ? 1 : 0) << ',' << (rec.capped ? 1 : 0) << ','
        << fmt(rec.wallclock_ms) << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& plan_path, const std::string& out_prefix,
              std::size_t workers) {
  ExperimentPlan plan = load_plan(plan_path);
  PlanResult result = run_plan(plan, workers);
  std::vector<SummaryRow> summaries;
  summaries.reserve(result.cells.size());
  for (const auto& cell : result.cells) summaries.push_back(cell.summary);
  ReportFiles files = report(summaries, out_prefix, plan.emit_svg);
  std::cout << "wrote " << files.csv_path << " " << files.txt_path;
  if (!files.svg_path.empty()) std::cout << " " << files.svg_path;
  std::cout << "\n";

  int rc = 0;
  if (plan.checks.pac) {
    for (const auto& s : summaries) {
      std::size_t n = s.trials - s.errors;
      if (n == 0) continue;
      double bound =
          s.delta + 3.0 * std::sqrt(s.delta * (1.0 - s.delta) / double(n));
      bool ok = s.failure_rate <= bound;
      std::cout << "check pac " << s.instance << " delta=" << fmt(s.delta)
                << " rate=" << fmt(s.failure_rate) << " bound=" << fmt(bound)
                << (ok ? " PASS" : " FAIL") << "\n";
      if (!ok) rc = 1;
    }
  }
  if (plan.checks.slope) {
    auto slope = fitted_slope(summaries);
    bool ok = slope && *slope >= plan.checks.slope->first &&
              *slope <= plan.checks.slope->second;
    std::cout << "check slope "
              << (slope ? fmt(*slope) : std::string("n/a")) << " window=["
              << fmt(plan.checks.slope->first) << ','
              << fmt(plan.checks.slope->second) << ']'
              << (ok ? " PASS" : " FAIL") << "\n";
    if (!ok) rc = 1;
  }
  return rc;
}

int cmd_oracles(std::uint64_t seed) {
  std::vector<LemmaCheckStats> rows = lemma_battery(seed);
  std::size_t total_violations = 0;
  std::printf("%-28s %8s %10s %8s %14s\n", "lemma", "checked", "violations",
              "skipped", "worst_margin");
  for (const auto& r : rows) {
    std::printf("%-28s %8zu %10zu %8zu %14s\n", r.name.c_str(), r.checked,
                r.violations, r.skipped, fmt(r.worst_margin).c_str());
    total_violations += r.violations;
  }
  std::printf("total violations: %zu\n", total_violations);
  return total_violations == 0 ? 0 : 1;
}

int cmd_gen(const std::string& mode, std::size_t d, std::size_t S,
            std::size_t A, double gamma, std::size_t H, double min_gap,
            std::size_t max_attempts, std::uint64_t seed,
            const std::string& out_path) {
  GeneratorConfig cfg;
  cfg.d = d;
  cfg.S = S;
  cfg.A = A;
  cfg.gamma = gamma;
  cfg.H = H;
  cfg.min_gap = min_gap;
  cfg.max_attempts = max_attempts;
  cfg.episodic = mode == "episodic";
  if (!cfg.episodic && mode != "discounted") {
    std::cerr << "mode must be discounted or episodic\n";
    return 2;
  }
  Rng rng(seed);
  Instance inst = generate_instance(cfg, rng);
  save_instance(inst, out_path);
  double gap = cfg.episodic
                   ? solve_episodic(std::get<EpisodicLinearMdp>(inst)).gap
                   : solve_discounted(std::get<DiscountedLinearMdp>(inst)).gap;
  std::cout << "wrote " << out_path << " gap: " << fmt(gap) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linbpi: best-policy identification in linear MDPs"};
  app.require_subcommand(1);

  std::string instance_path, csv_path, out_path, trace_path, plan_path;
  std::string out_prefix = "bench";
  std::string mode = "discounted";
  double delta = 0.1, epsilon = 0.0, eps_g = 0.01, gamma = 0.9, min_gap = 0.0;
  std::size_t trials = 1, stride = 1, t_max = 0, workers = env_workers();
  std::size_t d = 2, S = 3, A = 2, H = 3, max_attempts = 1000;
  std::uint64_t seed = 1;

  auto* design = app.add_subcommand("design", "G-optimal design of an instance");
  design->add_option("--instance", instance_path)->required();
  design->add_option("--eps-g", eps_g);
  design->add_option("--csv", csv_path);

  auto* solve = app.add_subcommand("solve", "exact planning on an instance");
  solve->add_option("--instance", instance_path)->required();
  solve->add_option("--delta", delta);
  solve->add_option("--epsilon", epsilon);

  auto* run = app.add_subcommand("run", "GSS / GSS-E identification trials");
  run->add_option("--instance", instance_path)->required();
  run->add_option("--delta", delta);
  run->add_option("--epsilon", epsilon);
  run->add_option("--trials", trials);
  run->add_option("--seed", seed);
  run->add_option("--stride", stride);
  run->add_option("--eps-g", eps_g);
  run->add_option("--t-max", t_max);
  run->add_option("--out", out_path);
  run->add_option("--trace", trace_path);

  auto* bench = app.add_subcommand("bench", "run an experiment plan (JSON)");
  bench->add_option("--plan", plan_path)->required();
  bench->add_option("--out", out_prefix);
  bench->add_option("--workers", workers);

  auto* oracles = app.add_subcommand("oracles", "randomized lemma battery");
  oracles->add_option("--seed", seed);

  auto* gen = app.add_subcommand("gen", "generate a random instance file");
  gen->add_option("--mode", mode);
  gen->add_option("--d", d);
  gen->add_option("--S", S);
  gen->add_option("--A", A);
  gen->add_option("--gamma", gamma);
  gen->add_option("--H", H);
  gen->add_option("--min-gap", min_gap);
  gen->add_option("--max-attempts", max_attempts);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) return cmd_design(instance_path, eps_g, csv_path);
    if (solve->parsed()) return cmd_solve(instance_path, delta, epsilon);
    if (run->parsed())
      return cmd_run(instance_path, delta, epsilon, trials, seed, stride,
                     eps_g, t_max, out_path, trace_path);
    if (bench->parsed()) return cmd_bench(plan_path, out_prefix, workers);
    if (oracles->parsed()) return cmd_oracles(seed);
    if (gen->parsed())
      return cmd_gen(mode, d, S, A, gamma, H, min_gap, max_attempts, seed,
                     out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "linbpi/bpi.hpp"
#include "linbpi/harness.hpp"
#include "linbpi/mdp.hpp"
#include "linbpi/rng.hpp"

using namespace linbpi;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_prefix(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / "linbpi_tests";
  std::filesystem::create_directories(dir);
  return (dir / tag).string();
}

GeneratorConfig small_discounted_cfg() {
  GeneratorConfig cfg;
  cfg.d = 2;
  cfg.S = 3;
  cfg.A = 2;
  cfg.gamma = 0.5;
  cfg.min_gap = 0.3;
  cfg.max_attempts = 5000;
  return cfg;
}

ExperimentPlan one_cell_plan(std::uint64_t gen_seed, std::uint64_t master) {
  ExperimentPlan plan;
  PlanInstanceSpec spec;
  spec.name = "gen0";
  spec.generate = small_discounted_cfg();
  spec.generate_seed = gen_seed;
  plan.instances.push_back(spec);
  plan.deltas = {0.2};
  plan.epsilons = {0.1};
  plan.trials = 1;
  plan.master_seed = master;
  plan.check_stride = 25;
  plan.t_max = 4000;
  return plan;
}

// gap 0 by construction: two actions with identical features.
DiscountedLinearMdp degenerate_instance() {
  DiscountedLinearMdp m;
  m.features.d = 1;
  m.features.S = 1;
  m.features.A = 2;
  m.features.phi = {1.0, 1.0};
  m.theta = {0.5};
  m.mu = Mat(1, 1);
  m.mu(0, 0) = 1.0;
  m.gamma = 0.5;
  m.finalize();
  return m;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("parse_plan reads every field and fills defaults") {
  const char* full = R"({
    "name": "demo",
    "instances": [
      {"name": "a", "file": "foo.json"},
      {"name": "b", "generate": {"mode": "episodic", "d": 3, "S": 4, "A": 2,
                                  "H": 2, "min_gap": 0.2, "max_attempts": 99,
                                  "theta_lo": 0.1, "theta_hi": 0.8, "seed": 42}}
    ],
    "deltas": [0.1, 0.05],
    "epsilons": [0.0, 0.1],
    "trials": 7,
    "master_seed": 123,
    "check_stride": 50,
    "eps_g": 0.02,
    "t_max": 1000,
    "sweep": {"base": "a", "scales": [1.0, 0.5]},
    "checks": {"pac": true, "slope": [0.5, 1.5]},
    "svg": true
  })";
  ExperimentPlan p = parse_plan(full);
  CHECK(p.name == "demo");
  REQUIRE(p.instances.size() == 2);
  CHECK(p.instances[0].file == "foo.json");
  CHECK_FALSE(p.instances[0].generate.has_value());
  REQUIRE(p.instances[1].generate.has_value());
  const GeneratorConfig& g = *p.instances[1].generate;
  CHECK(g.episodic);
  CHECK(g.d == 3);
  CHECK(g.S == 4);
  CHECK(g.A == 2);
  CHECK(g.H == 2);
  CHECK(g.min_gap == doctest::Approx(0.2));
  CHECK(g.max_attempts == 99);
  CHECK(g.theta_lo == doctest::Approx(0.1));
  CHECK(g.theta_hi == doctest::Approx(0.8));
  CHECK(p.instances[1].generate_seed == 42);
  CHECK(p.deltas == std::vector<double>{0.1, 0.05});
  CHECK(p.epsilons == std::vector<double>{0.0, 0.1});
  CHECK(p.trials == 7);
  CHECK(p.master_seed == 123);
  CHECK(p.check_stride == 50);
  CHECK(p.eps_g == doctest::Approx(0.02));
  CHECK(p.t_max == 1000);
  REQUIRE(p.sweep.has_value());
  CHECK(p.sweep->base == "a");
  CHECK(p.sweep->scales == std::vector<double>{1.0, 0.5});
  CHECK(p.checks.pac);
  REQUIRE(p.checks.slope.has_value());
  CHECK(p.checks.slope->first == doctest::Approx(0.5));
  CHECK(p.checks.slope->second == doctest::Approx(1.5));
  CHECK(p.emit_svg);

  const char* minimal = R"({
    "instances": [{"name": "x", "file": "x.json"}],
    "deltas": [0.1], "epsilons": [0.0]
  })";
  ExperimentPlan q = parse_plan(minimal);
  CHECK(q.name == "plan");
  CHECK(q.trials == 1);
  CHECK(q.master_seed == 1);
  CHECK(q.check_stride == 1);
  CHECK(q.eps_g == doctest::Approx(0.01));
  CHECK(q.t_max == 0);
  CHECK_FALSE(q.sweep.has_value());
  CHECK_FALSE(q.checks.pac);
  CHECK_FALSE(q.checks.slope.has_value());
  CHECK_FALSE(q.emit_svg);
}

TEST_CASE("parse_plan rejects malformed input") {
  auto bad = [](const char* text) {
    CHECK_THROWS_AS(parse_plan(text), PlanError);
  };
  bad("this is not json");
  bad(R"({"deltas": [0.1], "epsilons": [0.1]})");  // no instances
  bad(R"({"instances": [], "deltas": [0.1], "epsilons": [0.1]})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [], "epsilons": [0.1]})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [0.1], "epsilons": [0.1], "trials": 0})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [1.5], "epsilons": [0.1]})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [0.1], "epsilons": [-0.2]})");
  bad(R"({"instances": [{"file": "f"}],
          "deltas": [0.1], "epsilons": [0.1]})");  // unnamed
  bad(R"({"instances": [{"name": "a", "file": "f",
                          "generate": {"d": 2}}],
          "deltas": [0.1], "epsilons": [0.1]})");  // both sources
  bad(R"({"instances": [{"name": "a"}],
          "deltas": [0.1], "epsilons": [0.1]})");  // neither source
  bad(R"({"instances": [{"name": "a", "file": "f"},
                         {"name": "a", "file": "g"}],
          "deltas": [0.1], "epsilons": [0.1]})");  // duplicate
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [0.1], "epsilons": [0.1],
          "sweep": {"base": "a", "scales": []}})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [0.1], "epsilons": [0.1],
          "checks": {"slope": [0.5]}})");
  bad(R"({"instances": [{"name": "a", "file": "f"}],
          "deltas": [0.1], "epsilons": [0.1], "check_stride": 0})");
  CHECK_THROWS_WITH_AS(
      parse_plan(R"({"instances": [{"name": "a", "file": "f"}],
                     "deltas": [0.1], "epsilons": [0.1], "trials": 0})"),
      "plan: trials must be >= 1", PlanError);
}

TEST_CASE("load_plan round-trips through a file and reports missing paths") {
  std::string path = tmp_prefix("roundtrip_plan") + ".json";
  const char* text = R"({
    "name": "rt",
    "instances": [{"name": "x", "file": "x.json"}],
    "deltas": [0.25], "epsilons": [0.05], "trials": 3, "master_seed": 9
  })";
  {
    std::ofstream out(path);
    out << text;
  }
  ExperimentPlan from_file = load_plan(path);
  ExperimentPlan from_text = parse_plan(text);
  CHECK(from_file.name == from_text.name);
  CHECK(from_file.deltas == from_text.deltas);
  CHECK(from_file.epsilons == from_text.epsilons);
  CHECK(from_file.trials == from_text.trials);
  CHECK(from_file.master_seed == from_text.master_seed);
  CHECK_THROWS_AS(load_plan(path + ".nope"), PlanError);
}

TEST_CASE("run_plan single cell reproduces a direct run") {
  const std::uint64_t gen_seed = 99, master = 555;
  ExperimentPlan plan = one_cell_plan(gen_seed, master);
  PlanResult res = run_plan(plan, 1);
  REQUIRE(res.cells.size() == 1);
  REQUIRE(res.cells[0].errors[0].empty());
  const TrialRecord& rec = res.cells[0].records[0];

  GeneratorConfig cfg = small_discounted_cfg();
  Rng gen(gen_seed);
  DiscountedLinearMdp m = generate_discounted(cfg, gen);
  StoppingConfig sc;
  sc.delta = 0.2;
  sc.epsilon = 0.1;
  sc.check_stride = 25;
  sc.t_max = 4000;
  Rng trial_rng(derive_seed(master, 0, 0));
  TrialRecord direct = gss_run(m, sc, plan.eps_g, trial_rng);

  CHECK(rec.seed == derive_seed(master, 0, 0));
  CHECK(rec.tau == direct.tau);
  CHECK(rec.capped == direct.capped);
  CHECK(rec.correct == direct.correct);
  CHECK(rec.sigma_design == direct.sigma_design);
  CHECK(rec.true_gap == direct.true_gap);
  const auto& pol = std::get<Policy>(rec.returned_policy);
  const auto& dpol = std::get<Policy>(direct.returned_policy);
  CHECK(pol == dpol);
}

TEST_CASE("worker count never changes results or report bytes") {
  ExperimentPlan plan;
  PlanInstanceSpec a;
  a.name = "disc";
  a.generate = small_discounted_cfg();
  a.generate_seed = 31;
  plan.instances.push_back(a);
  PlanInstanceSpec b;
  b.name = "epi";
  GeneratorConfig ecfg = small_discounted_cfg();
  ecfg.episodic = true;
  ecfg.H = 2;
  b.generate = ecfg;
  b.generate_seed = 7;
  plan.instances.push_back(b);
  plan.deltas = {0.2};
  plan.epsilons = {0.1};
  plan.trials = 3;
  plan.master_seed = 777;
  plan.check_stride = 25;
  plan.t_max = 2500;

  PlanResult r1 = run_plan(plan, 1);
  PlanResult r4 = run_plan(plan, 4);
  REQUIRE(r1.cells.size() == 2);
  REQUIRE(r4.cells.size() == 2);
  for (std::size_t c = 0; c < r1.cells.size(); ++c) {
    for (std::size_t i = 0; i < plan.trials; ++i) {
      CHECK(r1.cells[c].errors[i] == r4.cells[c].errors[i]);
      const TrialRecord& x = r1.cells[c].records[i];
      const TrialRecord& y = r4.cells[c].records[i];
      CHECK(x.seed == y.seed);
      CHECK(x.tau == y.tau);
      CHECK(x.correct == y.correct);
      CHECK(x.capped == y.capped);
      CHECK(x.sigma_design == y.sigma_design);
    }
    const SummaryRow& s1 = r1.cells[c].summary;
    const SummaryRow& s4 = r4.cells[c].summary;
    CHECK(s1.failures == s4.failures);
    CHECK(s1.capped == s4.capped);
    CHECK(s1.mean_tau == s4.mean_tau);
    CHECK(s1.median_tau == s4.median_tau);
    CHECK(s1.p95_tau == s4.p95_tau);
    CHECK(s1.gap == s4.gap);
    CHECK(s1.sigma_design == s4.sigma_design);
    CHECK(s1.u_star == s4.u_star);
    CHECK(s1.predicted == s4.predicted);
  }

  std::vector<SummaryRow> sum1, sum4;
  for (const auto& c : r1.cells) sum1.push_back(c.summary);
  for (const auto& c : r4.cells) sum4.push_back(c.summary);
  ReportFiles f1 = report(sum1, tmp_prefix("workers1"));
  ReportFiles f4 = report(sum4, tmp_prefix("workers4"));
  CHECK(read_file(f1.csv_path) == read_file(f4.csv_path));
  CHECK(read_file(f1.txt_path) == read_file(f4.txt_path));
}

TEST_CASE("cell grid runs instance-major, then delta, then epsilon") {
  ExperimentPlan plan = one_cell_plan(11, 400);
  plan.deltas = {0.3, 0.2, 0.1};
  plan.epsilons = {0.0, 0.05, 0.1};
  plan.trials = 2;
  plan.check_stride = 50;
  plan.t_max = 300;
  PlanResult res = run_plan(plan, 2);
  REQUIRE(res.cells.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    const SummaryRow& s = res.cells[i].summary;
    CHECK(s.delta == plan.deltas[i / 3]);
    CHECK(s.epsilon == plan.epsilons[i % 3]);
    CHECK(s.instance == "gen0");
    CHECK(s.trials == 2);
    CHECK(s.errors == 0);
    // t_max 300 is far below any plausible stopping time here
    CHECK(s.capped == 2);
    CHECK(s.mean_tau == 300.0);
    CHECK(s.median_tau == 300.0);
    CHECK(s.p95_tau == 300.0);
    CHECK(s.gap >= 0.3);
    CHECK(s.u_star > 0.0);
    CHECK(std::isfinite(s.u_star));
    CHECK(s.predicted > 0);
    for (std::size_t t = 0; t < 2; ++t)
      CHECK(res.cells[i].records[t].seed == derive_seed(400, i, t));
  }
}

TEST_CASE("summaries match a recomputation from the raw records") {
  ExperimentPlan plan = one_cell_plan(17, 2024);
  plan.trials = 5;
  plan.t_max = 1500;
  PlanResult res = run_plan(plan, 3);
  REQUIRE(res.cells.size() == 1);
  const CellResult& cell = res.cells[0];
  const SummaryRow& s = cell.summary;

  std::vector<double> taus;
  std::size_t failures = 0, capped = 0;
  for (std::size_t i = 0; i < plan.trials; ++i) {
    REQUIRE(cell.errors[i].empty());
    taus.push_back(double(cell.records[i].tau));
    if (!cell.records[i].correct) failures += 1;
    if (cell.records[i].capped) capped += 1;
  }
  std::sort(taus.begin(), taus.end());
  double mean = 0.0;
  for (double v : taus) mean += v;
  mean /= double(taus.size());
  CHECK(s.failures == failures);
  CHECK(s.capped == capped);
  CHECK(s.mean_tau == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.median_tau == taus[2]);
  CHECK(s.p95_tau == taus[4]);
  double p = double(failures) / 5.0;
  double half = 1.96 * std::sqrt(p * (1.0 - p) / 5.0);
  CHECK(s.failure_rate == doctest::Approx(p).epsilon(1e-15));
  CHECK(s.ci_lo == doctest::Approx(std::max(0.0, p - half)).epsilon(1e-12));
  CHECK(s.ci_hi == doctest::Approx(std::min(1.0, p + half)).epsilon(1e-12));
}

TEST_CASE("gap_sweep blends rewards and keeps instances valid") {
  GeneratorConfig cfg;
  cfg.d = 3;
  cfg.S = 4;
  cfg.A = 2;
  cfg.gamma = 0.6;
  cfg.min_gap = 0.2;
  cfg.max_attempts = 5000;
  Rng gen(5);
  DiscountedLinearMdp base = generate_discounted(cfg, gen);
  Instance base_inst = base;

  std::vector<double> scales = {1.0, 0.7, 0.4};
  auto family = gap_sweep(base_inst, scales);
  REQUIRE(family.size() == 3);

  const auto& exact = std::get<DiscountedLinearMdp>(family[0]);
  CHECK(exact.theta == base.theta);  // scale 1 is the identity

  double c = 0.0;
  for (double v : base.theta) c += v;
  c /= double(base.theta.size());
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const auto& m = std::get<DiscountedLinearMdp>(family[k]);
    for (std::size_t i = 0; i < base.theta.size(); ++i)
      CHECK(m.theta[i] ==
            doctest::Approx((1.0 - scales[k]) * c + scales[k] * base.theta[i])
                .epsilon(1e-15));
    CHECK(m.mu.a == base.mu.a);  // transitions untouched
    PlanningSolution sol = solve_discounted(m);
    CHECK(sol.gap > 0.0);
    CHECK(sol.gap == doctest::Approx(gap_of(sol)).epsilon(1e-12));
  }
  double g1 = solve_discounted(std::get<DiscountedLinearMdp>(family[0])).gap;
  double g4 = solve_discounted(std::get<DiscountedLinearMdp>(family[2])).gap;
  CHECK(g4 < g1 + 1e-12);

  std::vector<double> out_of_range = {1.2};
  CHECK_THROWS_AS(gap_sweep(base_inst, out_of_range), PlanError);
}

TEST_CASE("sweep cells are appended and tagged") {
  ExperimentPlan plan = one_cell_plan(11, 606);
  plan.instances[0].name = "base";
  plan.check_stride = 50;
  plan.t_max = 200;
  plan.sweep = SweepSpec{"base", {1.0, 0.5}};
  PlanResult res = run_plan(plan, 1);
  REQUIRE(res.cells.size() == 3);
  CHECK(res.cells[0].summary.instance == "base");
  CHECK_FALSE(res.cells[0].summary.from_sweep);
  CHECK(res.cells[1].summary.instance == "base@1");
  CHECK(res.cells[1].summary.from_sweep);
  CHECK(res.cells[1].summary.sweep_scale == 1.0);
  CHECK(res.cells[2].summary.instance == "base@0.5");
  CHECK(res.cells[2].summary.sweep_scale == 0.5);
  // scale 1 reproduces the base instance exactly
  CHECK(res.cells[1].summary.gap ==
        doctest::Approx(res.cells[0].summary.gap).epsilon(1e-12));
  CHECK(res.cells[2].summary.gap < res.cells[0].summary.gap + 1e-12);

  ExperimentPlan broken = plan;
  broken.sweep = SweepSpec{"missing", {1.0}};
  CHECK_THROWS_AS(run_plan(broken, 1), PlanError);
}

TEST_CASE("per-trial failures are captured without aborting the batch") {
  // gap 0 at epsilon 0 with t_max 0: the default cap needs a finite
  // predicted time, so every trial records an error instead of crashing
  // the batch.
  DiscountedLinearMdp degen = degenerate_instance();
  std::string path = tmp_prefix("degen_instance") + ".json";
  save_instance(Instance(degen), path);

  ExperimentPlan plan;
  PlanInstanceSpec spec;
  spec.name = "degen";
  spec.file = path;
  plan.instances.push_back(spec);
  plan.deltas = {0.2};
  plan.epsilons = {0.0};
  plan.trials = 2;
  plan.master_seed = 3;
  plan.t_max = 0;
  PlanResult res = run_plan(plan, 1);
  REQUIRE(res.cells.size() == 1);
  const CellResult& cell = res.cells[0];
  CHECK(cell.summary.errors == 2);
  for (const auto& e : cell.errors) CHECK_FALSE(e.empty());
  CHECK(cell.summary.mean_tau == 0.0);  // no completed trials

  // with an explicit cap the same instance runs to t_max and the
  // degenerate gap shows up as an infinite u_star instead
  plan.t_max = 120;
  plan.check_stride = 40;
  PlanResult capped = run_plan(plan, 1);
  const SummaryRow& s = capped.cells[0].summary;
  CHECK(s.errors == 0);
  CHECK(s.capped == 2);
  CHECK(std::isinf(s.u_star));
  CHECK(s.predicted == 0);
}

TEST_CASE("fitted_slope recovers exact power laws") {
  auto sweep_row = [](double gap, double eps, double mean) {
    SummaryRow r;
    r.from_sweep = true;
    r.gap = gap;
    r.epsilon = eps;
    r.mean_tau = mean;
    return r;
  };
  std::vector<SummaryRow> rows;
  for (double g : {0.9, 0.4, 0.15})
    rows.push_back(sweep_row(g, 0.1, 7.3 / ((g + 0.1) * (g + 0.1))));
  auto s = fitted_slope(rows);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.0).epsilon(1e-12));

  rows.clear();
  for (double g : {0.9, 0.4, 0.15})
    rows.push_back(sweep_row(g, 0.1, 2.0 * std::pow(g + 0.1, -2.0 * 1.37)));
  // a non-sweep decoy must not influence the fit
  SummaryRow decoy;
  decoy.from_sweep = false;
  decoy.gap = 0.5;
  decoy.epsilon = 0.1;
  decoy.mean_tau = 1e9;
  rows.push_back(decoy);
  s = fitted_slope(rows);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(1.37).epsilon(1e-12));

  std::vector<SummaryRow> lonely = {sweep_row(0.5, 0.1, 10.0)};
  CHECK_FALSE(fitted_slope(lonely).has_value());
  std::vector<SummaryRow> none = {decoy};
  CHECK_FALSE(fitted_slope(none).has_value());
}

TEST_CASE("report writes csv, txt, and svg only when warranted") {
  ReportFiles empty = report({}, tmp_prefix("empty_report"), true);
  CHECK(read_file(empty.csv_path) ==
        "instance,mode,d,S,A,gamma_or_H,delta,epsilon,trials,errors,capped,"
        "failures,failure_rate,ci_lo,ci_hi,mean_tau,median_tau,p95_tau,gap,"
        "sigma_design,u_star,predicted,sweep_scale\n");
  CHECK(read_file(empty.txt_path) == "cells: 0\n");
  CHECK(empty.svg_path.empty());

  std::vector<SummaryRow> rows;
  for (double g : {0.9, 0.4, 0.15}) {
    SummaryRow r;
    r.instance = "x";
    r.mode = "discounted";
    r.from_sweep = true;
    r.sweep_scale = g;
    r.gap = g;
    r.epsilon = 0.1;
    r.mean_tau = 5.0 / ((g + 0.1) * (g + 0.1));
    r.trials = 1;
    rows.push_back(r);
  }
  ReportFiles sweep = report(rows, tmp_prefix("sweep_report"), true);
  CHECK_FALSE(sweep.svg_path.empty());
  std::string svg = read_file(sweep.svg_path);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("slope") != std::string::npos);
  std::string txt = read_file(sweep.txt_path);
  CHECK(txt.find("slope(log mean_tau vs log (gap+eps)^-2): 1") !=
        std::string::npos);

  // without a sweep no svg is produced even when asked for
  rows[0].from_sweep = rows[1].from_sweep = rows[2].from_sweep = false;
  ReportFiles flat = report(rows, tmp_prefix("flat_report"), true);
  CHECK(flat.svg_path.empty());
}

TEST_CASE("csv bytes are pinned for hand-built rows") {
  SummaryRow a;
  a.instance = "alpha";
  a.mode = "discounted";
  a.d = 2;
  a.S = 3;
  a.A = 2;
  a.gamma_or_h = 0.9;
  a.delta = 0.1;
  a.epsilon = 0.05;
  a.trials = 20;
  a.errors = 0;
  a.capped = 1;
  a.failures = 2;
  a.failure_rate = 0.1;
  a.ci_lo = 0.0;
  a.ci_hi = 0.25;
  a.mean_tau = 120.5;
  a.median_tau = 100.0;
  a.p95_tau = 250.0;
  a.gap = 0.5;
  a.sigma_design = 2.02;
  a.u_star = 16.25;
  a.predicted = 4096;

  SummaryRow b;
  b.instance = "alpha@0.5";
  b.mode = "episodic";
  b.d = 4;
  b.S = 2;
  b.A = 2;
  b.gamma_or_h = 3.0;
  b.delta = 0.2;
  b.epsilon = 0.0;
  b.trials = 10;
  b.errors = 1;
  b.capped = 0;
  b.failures = 0;
  b.failure_rate = 0.0;
  b.ci_lo = 0.0;
  b.ci_hi = 0.0;
  b.mean_tau = 64.0;
  b.median_tau = 64.0;
  b.p95_tau = 64.0;
  b.gap = 0.25;
  b.sigma_design = 4.0;
  b.u_star = 1280.0;
  b.predicted = 250000;
  b.from_sweep = true;
  b.sweep_scale = 0.5;

  ReportFiles files = report({a, b}, tmp_prefix("golden_rows"));
  const std::string expected =
      "instance,mode,d,S,A,gamma_or_H,delta,epsilon,trials,errors,capped,"
      "failures,failure_rate,ci_lo,ci_hi,mean_tau,median_tau,p95_tau,gap,"
      "sigma_design,u_star,predicted,sweep_scale\n"
      "alpha,discounted,2,3,2,0.9,0.1,0.05,20,0,1,2,0.1,0,0.25,120.5,100,"
      "250,0.5,2.02,16.25,4096,\n"
      "alpha@0.5,episodic,4,2,2,3,0.2,0,10,1,0,0,0,0,0,64,64,64,0.25,4,"
      "1280,250000,0.5\n";
  CHECK(read_file(files.csv_path) == expected);
}

TEST_CASE("repeated runs of one plan emit identical csv bytes") {
  ExperimentPlan plan = one_cell_plan(23, 909);
  plan.trials = 2;
  plan.t_max = 2000;
  auto run_to_csv = [&](const char* tag) {
    PlanResult res = run_plan(plan, 2);
    std::vector<SummaryRow> rows;
    for (const auto& c : res.cells) rows.push_back(c.summary);
    return read_file(report(rows, tmp_prefix(tag)).csv_path);
  };
  std::string first = run_to_csv("stability_a");
  std::string second = run_to_csv("stability_b");
  CHECK(first == second);
  CHECK(first.find("gen0,discounted,2,3,2,0.5,0.2,0.1,2,0,") !=
        std::string::npos);
}

TEST_CASE("lemma battery runs clean") {
  auto rows = lemma_battery(1);
  REQUIRE_FALSE(rows.empty());
  bool saw_pinsker = false;
  for (const auto& r : rows) {
    CAPTURE(r.name);
    CHECK(r.checked > 0);
    CHECK(r.violations == 0);
    if (r.name == "kl_pinsker_variant") saw_pinsker = true;
    for (const auto& other : rows)
      if (&other != &r) CHECK(other.name != r.name);
  }
  CHECK(saw_pinsker);
}

}  // TEST_SUITE

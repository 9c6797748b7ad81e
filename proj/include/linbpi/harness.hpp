#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linbpi/bpi.hpp"
#include "linbpi/instance_io.hpp"
#include "linbpi/mdp.hpp"

namespace linbpi {

struct PlanError : std::runtime_error {
  explicit PlanError(const std::string& what) : std::runtime_error(what) {}
};

// One instance entry of a plan: either a file to load or a generator spec.
struct PlanInstanceSpec {
  std::string name;
  std::string file;
  std::optional<GeneratorConfig> generate;
  std::uint64_t generate_seed = 0;
};

// Optional theta sweep appended to the instance list as "<base>@<scale>".
struct SweepSpec {
  std::string base;
  std::vector<double> scales;
};

// Checks `bench` gates its exit code on.
struct CheckSpec {
  bool pac = false;  // failure rate <= delta + 3 sqrt(delta(1-delta)/trials)
  std::optional<std::pair<double, double>> slope;  // fitted slope window
};

struct ExperimentPlan {
  std::string name = "plan";
  std::vector<PlanInstanceSpec> instances;
  std::vector<double> deltas;
  std::vector<double> epsilons;
  std::size_t trials = 1;
  std::uint64_t master_seed = 1;
  std::size_t check_stride = 1;
  double eps_g = 0.01;
  std::size_t t_max = 0;  // 0: per-run default (4x predicted)
  std::optional<SweepSpec> sweep;
  CheckSpec checks;
  bool emit_svg = false;
};

ExperimentPlan parse_plan(const std::string& json_text);
ExperimentPlan load_plan(const std::string& path);

struct SummaryRow {
  std::string instance;
  std::string mode;  // "discounted" | "episodic"
  std::size_t d = 0, S = 0, A = 0;
  double gamma_or_h = 0.0;
  double delta = 0.0, epsilon = 0.0;
  std::size_t trials = 0;
  std::size_t errors = 0;  // trials that threw; excluded from the stats
  std::size_t capped = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // p +- 1.96 sqrt(p(1-p)/n), clamped
  double mean_tau = 0.0;
  double median_tau = 0.0;
  double p95_tau = 0.0;  // nearest-rank on sorted tau
  double gap = 0.0;      // exact gap of the instance
  double sigma_design = 0.0;
  double u_star = 0.0;
  std::size_t predicted = 0;
  bool from_sweep = false;
  double sweep_scale = 1.0;
};

// Records and errors are indexed by trial; errors[i] empty means trial i
// completed and records[i] is meaningful.
struct CellResult {
  SummaryRow summary;
  std::vector<TrialRecord> records;
  std::vector<std::string> errors;
};

struct PlanResult {
  std::vector<CellResult> cells;
};

// Runs every (instance, delta, epsilon) cell of the plan, trials-many runs
// each, on a pool of worker_count threads (clamped to >= 1). Per-trial seed
// is derive_seed(master, cell index, trial index), so results never depend
// on scheduling. Per-trial exceptions are captured in the cell, never
// aborting the batch.
PlanResult run_plan(const ExperimentPlan& plan, std::size_t worker_count);

// Blends theta toward the uniform-reward direction: for each scale s the
// output uses (1-s) mean(theta) 1 + s theta (per step, episodic), keeping
// every validity bound; transitions are untouched. s = 1 returns the input
// exactly.
std::vector<Instance> gap_sweep(const Instance& base,
                                std::span<const double> scales);

// Least-squares slope of log(mean tau) against log((gap+eps)^-2) over the
// sweep-tagged rows; empty when fewer than two usable points.
std::optional<double> fitted_slope(const std::vector<SummaryRow>& rows);

struct ReportFiles {
  std::string csv_path;
  std::string txt_path;
  std::string svg_path;  // empty unless requested and sweep rows exist
};

// Writes <prefix>.csv (deterministic: no wallclock anywhere), <prefix>.txt
// (per-cell table plus the fitted slope when a sweep ran), and optionally
// <prefix>.svg with the log-log scatter behind the slope.
ReportFiles report(const std::vector<SummaryRow>& summaries,
                   const std::string& out_prefix, bool emit_svg = false);

struct LemmaCheckStats {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;        // vacuous hypotheses / clipped plug-ins
  double worst_margin = 0.0;      // min over checks of rhs - lhs
};

// The randomized lemma suites: gap_bound, value_diff, pinsker variant,
// gap continuity and u difference (along GSS traces and under calibrated
// parameter perturbations), discounted and episodic. Zero violations is a
// build-breaking invariant; the CLI prints the table.
std::vector<LemmaCheckStats> lemma_battery(std::uint64_t seed);

}  // namespace linbpi

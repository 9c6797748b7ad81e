#include "linbpi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "linbpi/design.hpp"
#include "linbpi/oracles.hpp"

namespace linbpi {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) {
  throw PlanError("plan: " + msg);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---- plan parsing ----

GeneratorConfig parse_generator(const json& g) {
  GeneratorConfig cfg;
  std::string mode = g.value("mode", std::string("discounted"));
  if (mode == "episodic")
    cfg.episodic = true;
  else if (mode != "discounted")
    fail("generate.mode must be \"discounted\" or \"episodic\"");
  cfg.d = g.value("d", cfg.d);
  cfg.S = g.value("S", cfg.S);
  cfg.A = g.value("A", cfg.A);
  cfg.gamma = g.value("gamma", cfg.gamma);
  cfg.H = g.value("H", cfg.H);
  cfg.min_gap = g.value("min_gap", cfg.min_gap);
  cfg.theta_lo = g.value("theta_lo", cfg.theta_lo);
  cfg.theta_hi = g.value("theta_hi", cfg.theta_hi);
  cfg.max_attempts = g.value("max_attempts", cfg.max_attempts);
  return cfg;
}

std::vector<double> parse_grid(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->empty())
    fail(std::string("'") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) fail(std::string("'") + key + "' entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.instances.empty()) fail("needs at least one instance");
  if (plan.deltas.empty() || plan.epsilons.empty())
    fail("delta and epsilon grids must be non-empty");
  if (plan.trials < 1) fail("trials must be >= 1");
  if (plan.check_stride < 1) fail("check_stride must be >= 1");
  for (double dl : plan.deltas)
    if (!(dl > 0.0 && dl < 1.0)) fail("deltas must lie in (0, 1)");
  for (double ep : plan.epsilons)
    if (!(ep >= 0.0)) fail("epsilons must be >= 0");
  for (std::size_t i = 0; i < plan.instances.size(); ++i) {
    const auto& spec = plan.instances[i];
    if (spec.name.empty()) fail("every instance needs a name");
    if (spec.file.empty() == !spec.generate.has_value())
      fail("instance '" + spec.name + "' needs exactly one of file/generate");
    for (std::size_t k = 0; k < i; ++k)
      if (plan.instances[k].name == spec.name)
        fail("duplicate instance name '" + spec.name + "'");
  }
  if (plan.sweep && plan.sweep->scales.empty())
    fail("sweep.scales must be non-empty");
}

}  // namespace

ExperimentPlan parse_plan(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  ExperimentPlan plan;
  plan.name = j.value("name", plan.name);
  auto it = j.find("instances");
  if (it == j.end() || !it->is_array()) fail("'instances' must be an array");
  for (const auto& e : *it) {
    PlanInstanceSpec spec;
    spec.name = e.value("name", std::string());
    spec.file = e.value("file", std::string());
    if (e.contains("generate")) {
      spec.generate = parse_generator(e["generate"]);
      spec.generate_seed = e["generate"].value("seed", std::uint64_t{0});
    }
    plan.instances.push_back(std::move(spec));
  }
  plan.deltas = parse_grid(j, "deltas");
  plan.epsilons = parse_grid(j, "epsilons");
  plan.trials = j.value("trials", std::uint64_t{1});
  plan.master_seed = j.value("master_seed", std::uint64_t{1});
  plan.check_stride = j.value("check_stride", std::uint64_t{1});
  plan.eps_g = j.value("eps_g", plan.eps_g);
  plan.t_max = j.value("t_max", std::uint64_t{0});
  plan.emit_svg = j.value("svg", false);
  if (j.contains("sweep")) {
    SweepSpec sw;
    sw.base = j["sweep"].value("base", std::string());
    if (j["sweep"].contains("scales"))
      sw.scales = parse_grid(j["sweep"], "scales");
    plan.sweep = std::move(sw);
  }
  if (j.contains("checks")) {
    const json& c = j["checks"];
    plan.checks.pac = c.value("pac", false);
    if (c.contains("slope")) {
      const json& s = c["slope"];
      if (!s.is_array() || s.size() != 2)
        fail("checks.slope must be [lo, hi]");
      plan.checks.slope = {s[0].get<double>(), s[1].get<double>()};
    }
  }
  validate_plan(plan);
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_plan(text);
}

// ---- sweep ----

namespace {

void blend_theta(std::vector<double>& theta, double s) {
  double c = 0.0;
  for (double v : theta) c += v;
  c /= double(theta.size());
  for (double& v : theta) v = (1.0 - s) * c + s * v;
}

}  // namespace

std::vector<Instance> gap_sweep(const Instance& base,
                                std::span<const double> scales) {
  std::vector<Instance> out;
  out.reserve(scales.size());
  for (double s : scales) {
    if (!(s >= 0.0 && s <= 1.0))
      fail("sweep scales must lie in [0, 1], got " + fmt(s));
    Instance copy = base;
    if (auto* m = std::get_if<DiscountedLinearMdp>(&copy)) {
      blend_theta(m->theta, s);
      m->finalize();
    } else {
      auto& e = std::get<EpisodicLinearMdp>(copy);
      for (auto& th : e.theta) blend_theta(th, s);
      e.finalize();
    }
    out.push_back(std::move(copy));
  }
  return out;
}

// ---- run_plan ----

namespace {

struct ResolvedInstance {
  std::string name;
  Instance inst;
  bool from_sweep = false;
  double sweep_scale = 1.0;
};

std::vector<ResolvedInstance> resolve_instances(const ExperimentPlan& plan) {
  std::vector<ResolvedInstance> out;
  for (const auto& spec : plan.instances) {
    ResolvedInstance r;
    r.name = spec.name;
    if (!spec.file.empty()) {
      r.inst = load_instance(spec.file);
    } else {
      Rng g(spec.generate_seed);
      r.inst = generate_instance(*spec.generate, g);
    }
    out.push_back(std::move(r));
  }
  if (plan.sweep) {
    const std::string base_name = plan.sweep->base;
    Instance base;
    bool found = false;
    for (const auto& r : out)
      if (r.name == base_name) {
        base = r.inst;
        found = true;
        break;
      }
    if (!found) fail("sweep base '" + base_name + "' is not an instance name");
    auto family = gap_sweep(base, plan.sweep->scales);
    for (std::size_t i = 0; i < family.size(); ++i) {
      ResolvedInstance r;
      r.name = base_name + "@" + fmt(plan.sweep->scales[i]);
      r.inst = std::move(family[i]);
      r.from_sweep = true;
      r.sweep_scale = plan.sweep->scales[i];
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct InstanceInfo {
  std::string mode;
  std::size_t d = 0, S = 0, A = 0, H = 0;
  double gamma_or_h = 0.0;
  double gap = 0.0;
  double sigma = 0.0;
};

InstanceInfo info_of(const Instance& inst, double eps_g) {
  InstanceInfo out;
  const FeatureMap& f = features_of(inst);
  out.d = f.d;
  out.S = f.S;
  out.A = f.A;
  out.sigma = g_optimal_design(f, eps_g).sigma;
  if (const auto* m = std::get_if<DiscountedLinearMdp>(&inst)) {
    out.mode = "discounted";
    out.gamma_or_h = m->gamma;
    out.gap = solve_discounted(*m).gap;
  } else {
    const auto& e = std::get<EpisodicLinearMdp>(inst);
    out.mode = "episodic";
    out.H = e.H;
    out.gamma_or_h = double(e.H);
    out.gap = solve_episodic(e).gap;
  }
  return out;
}

void aggregate_cell(CellResult& cell, const ResolvedInstance& ri,
                    const InstanceInfo& ii, double delta, double epsilon,
                    const ExperimentPlan& plan) {
  SummaryRow& s = cell.summary;
  s.instance = ri.name;
  s.mode = ii.mode;
  s.d = ii.d;
  s.S = ii.S;
  s.A = ii.A;
  s.gamma_or_h = ii.gamma_or_h;
  s.delta = delta;
  s.epsilon = epsilon;
  s.trials = plan.trials;
  s.gap = ii.gap;
  s.sigma_design = ii.sigma;
  s.from_sweep = ri.from_sweep;
  s.sweep_scale = ri.sweep_scale;
  try {
    if (ii.mode == "discounted") {
      s.u_star = u_star_discounted(ii.d, ii.gamma_or_h, ii.gap, epsilon);
      s.predicted = predicted_stop_time(s.u_star, delta, ii.d);
    } else {
      s.u_star = u_star_episodic(ii.d, ii.H, ii.gap, epsilon);
      s.predicted = predicted_stop_time_episodic(s.u_star, delta, ii.d, ii.H);
    }
  } catch (const DegenerateGap&) {
    s.u_star = kInf;
    s.predicted = 0;
  }

  std::vector<double> taus;
  taus.reserve(plan.trials);
  for (std::size_t i = 0; i < plan.trials; ++i) {
    if (!cell.errors[i].empty()) {
      s.errors += 1;
      continue;
    }
    const TrialRecord& rec = cell.records[i];
    taus.push_back(double(rec.tau));
    if (!rec.correct) s.failures += 1;
    if (rec.capped) s.capped += 1;
  }
  std::size_t n = taus.size();
  if (n == 0) return;
  std::sort(taus.begin(), taus.end());
  double sum = 0.0;
  for (double v : taus) sum += v;
  s.mean_tau = sum / double(n);
  s.median_tau = n % 2 == 1 ? taus[n / 2]
                            : 0.5 * (taus[n / 2 - 1] + taus[n / 2]);
  s.p95_tau = taus[std::size_t(std::ceil(0.95 * double(n))) - 1];
  double p = double(s.failures) / double(n);
  s.failure_rate = p;
  double half = 1.96 * std::sqrt(p * (1.0 - p) / double(n));
  s.ci_lo = std::max(0.0, p - half);
  s.ci_hi = std::min(1.0, p + half);
}

}  // namespace

PlanResult run_plan(const ExperimentPlan& plan, std::size_t worker_count) {
  validate_plan(plan);
  std::vector<ResolvedInstance> resolved = resolve_instances(plan);
  const std::size_t D = plan.deltas.size();
  const std::size_t E = plan.epsilons.size();
  const std::size_t n_cells = resolved.size() * D * E;
  const std::size_t total = n_cells * plan.trials;

  PlanResult out;
  out.cells.resize(n_cells);
  for (auto& cell : out.cells) {
    cell.records.resize(plan.trials);
    cell.errors.resize(plan.trials);
  }

  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (;;) {
      std::size_t g = cursor.fetch_add(1);
      if (g >= total) return;
      std::size_t cell = g / plan.trials;
      std::size_t trial = g % plan.trials;
      std::size_t inst_i = cell / (D * E);
      std::size_t rem = cell % (D * E);
      StoppingConfig cfg;
      cfg.delta = plan.deltas[rem / E];
      cfg.epsilon = plan.epsilons[rem % E];
      cfg.check_stride = plan.check_stride;
      cfg.t_max = plan.t_max;
      std::uint64_t seed = derive_seed(plan.master_seed, cell, trial);
      try {
        Rng rng(seed);
        TrialRecord rec;
        if (const auto* m =
                std::get_if<DiscountedLinearMdp>(&resolved[inst_i].inst))
          rec = gss_run(*m, cfg, plan.eps_g, rng);
        else
          rec = gsse_run(std::get<EpisodicLinearMdp>(resolved[inst_i].inst),
                         cfg, plan.eps_g, rng);
        rec.seed = seed;
        out.cells[cell].records[trial] = std::move(rec);
      } catch (const std::exception& e) {
        out.cells[cell].errors[trial] = e.what();
      }
    }
  };

  std::size_t workers = std::max<std::size_t>(1, worker_count);
  workers = std::min(workers, std::max<std::size_t>(1, total));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<InstanceInfo> infos;
  infos.reserve(resolved.size());
  for (const auto& r : resolved) infos.push_back(info_of(r.inst, plan.eps_g));
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    std::size_t inst_i = cell / (D * E);
    std::size_t rem = cell % (D * E);
    aggregate_cell(out.cells[cell], resolved[inst_i], infos[inst_i],
                   plan.deltas[rem / E], plan.epsilons[rem % E], plan);
  }
  return out;
}

// ---- reporting ----

std::optional<double> fitted_slope(const std::vector<SummaryRow>& rows) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (!r.from_sweep) continue;
    double gp = r.gap + r.epsilon;
    if (!(gp > 0.0) || !std::isfinite(gp) || !(r.mean_tau > 0.0)) continue;
    xs.push_back(-2.0 * std::log(gp));  // log (gap+eps)^-2
    ys.push_back(std::log(r.mean_tau));
  }
  std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  return sxy / sxx;
}

namespace {

void write_svg(const std::vector<SummaryRow>& rows, double slope,
               const std::string& path) {
  std::vector<std::pair<double, double>> pts;  // log10 x, log10 y
  for (const auto& r : rows) {
    double gp = r.gap + r.epsilon;
    if (!r.from_sweep || !(gp > 0.0) || !(r.mean_tau > 0.0)) continue;
    pts.push_back({-2.0 * std::log10(gp), std::log10(r.mean_tau)});
  }
  if (pts.empty()) return;
  double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
  for (const auto& [x, y] : pts) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
  if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }
  double xpad = 0.06 * (xhi - xlo), ypad = 0.06 * (yhi - ylo);
  xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

  const double W = 640, Hh = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
  auto py = [&](double y) { return Hh - mb - (y - ylo) / (yhi - ylo) * (Hh - mt - mb); };

  std::ofstream svg(path);
  if (!svg) fail("cannot write '" + path + "'");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << Hh << "\" viewBox=\"0 0 " << W << ' ' << Hh
      << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << Hh
      << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << Hh - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << Hh - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << Hh - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 3; ++k) {
    double x = xlo + (xhi - xlo) * k / 3.0;
    double y = ylo + (yhi - ylo) * k / 3.0;
    svg << "<text x=\"" << fmt(px(x)) << "\" y=\"" << Hh - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(x)
        << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(py(y) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(y)
        << "</text>\n";
  }
  svg << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << Hh - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">log10 (gap+eps)^-2"
      << "</text>\n";
  svg << "<text x=\"14\" y=\"" << (mt + Hh - mb) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (mt + Hh - mb) / 2 << ")\">log10 mean tau</text>\n";
  // fitted line through the mean point; natural-log slope carries over
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) { mx += x; my += y; }
  mx /= double(pts.size());
  my /= double(pts.size());
  svg << "<line x1=\"" << fmt(px(xlo)) << "\" y1=\""
      << fmt(py(my + slope * (xlo - mx))) << "\" x2=\"" << fmt(px(xhi))
      << "\" y2=\"" << fmt(py(my + slope * (xhi - mx)))
      << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& [x, y] : pts)
    svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
        << "\" r=\"4\" fill=\"#1f6fb2\"/>\n";
  svg << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16
      << "\" font-size=\"12\" text-anchor=\"end\">slope " << fmt(slope)
      << "</text>\n";
  svg << "</svg>\n";
}

}  // namespace

ReportFiles report(const std::vector<SummaryRow>& summaries,
                   const std::string& out_prefix, bool emit_svg) {
  ReportFiles out;
  out.csv_path = out_prefix + ".csv";
  out.txt_path = out_prefix + ".txt";

  std::ofstream csv(out.csv_path);
  if (!csv) fail("cannot write '" + out.csv_path + "'");
  csv << "instance,mode,d,S,A,gamma_or_H,delta,epsilon,trials,errors,capped,"
         "failures,failure_rate,ci_lo,ci_hi,mean_tau,median_tau,p95_tau,gap,"
         "sigma_design,u_star,predicted,sweep_scale\n";
  for (const auto& r : summaries) {
    csv << r.instance << ',' << r.mode << ',' << r.d << ',' << r.S << ','
        << r.A << ',' << fmt(r.gamma_or_h) << ',' << fmt(r.delta) << ','
        << fmt(r.epsilon) << ',' << r.trials << ',' << r.errors << ','
        << r.capped << ',' << r.failures << ',' << fmt(r.failure_rate) << ','
        << fmt(r.ci_lo) << ',' << fmt(r.ci_hi) << ',' << fmt(r.mean_tau)
        << ',' << fmt(r.median_tau) << ',' << fmt(r.p95_tau) << ','
        << fmt(r.gap) << ',' << fmt(r.sigma_design) << ',' << fmt(r.u_star)
        << ',' << r.predicted << ','
        << (r.from_sweep ? fmt(r.sweep_scale) : "") << '\n';
  }
  csv.close();

  std::optional<double> slope = fitted_slope(summaries);
  bool any_sweep = false;
  for (const auto& r : summaries) any_sweep = any_sweep || r.from_sweep;

  std::ofstream txt(out.txt_path);
  if (!txt) fail("cannot write '" + out.txt_path + "'");
  txt << "cells: " << summaries.size() << "\n";
  for (const auto& r : summaries) {
    txt << "instance=" << r.instance << " mode=" << r.mode << " d=" << r.d
        << " S=" << r.S << " A=" << r.A << " gamma_or_H=" << fmt(r.gamma_or_h)
        << " delta=" << fmt(r.delta) << " epsilon=" << fmt(r.epsilon)
        << " trials=" << r.trials << " errors=" << r.errors
        << " capped=" << r.capped << " failures=" << r.failures
        << " rate=" << fmt(r.failure_rate) << " ci=[" << fmt(r.ci_lo) << ','
        << fmt(r.ci_hi) << "]"
        << " tau_mean=" << fmt(r.mean_tau)
        << " tau_median=" << fmt(r.median_tau)
        << " tau_p95=" << fmt(r.p95_tau) << " gap=" << fmt(r.gap)
        << " sigma=" << fmt(r.sigma_design) << " u_star=" << fmt(r.u_star)
        << " predicted=" << r.predicted << "\n";
  }
  if (any_sweep)
    txt << "slope(log mean_tau vs log (gap+eps)^-2): "
        << (slope ? fmt(*slope) : std::string("n/a")) << "\n";
  txt.close();

  if (emit_svg && slope) {
    out.svg_path = out_prefix + ".svg";
    write_svg(summaries, *slope, out.svg_path);
  }
  return out;
}

// ---- lemma battery ----

namespace {

void note(LemmaCheckStats& st, double margin, bool ok) {
  st.checked += 1;
  if (!ok) st.violations += 1;
  st.worst_margin = std::min(st.worst_margin, margin);
}

void seal(LemmaCheckStats& st) {
  if (st.checked == 0) st.worst_margin = 0.0;
}

GeneratorConfig small_cfg(Rng& rng, bool episodic) {
  GeneratorConfig cfg;
  cfg.d = 2 + rng.uniform_below(2);
  cfg.S = 3 + rng.uniform_below(2);
  cfg.A = 2 + rng.uniform_below(2);
  cfg.episodic = episodic;
  cfg.gamma = 0.5 + 0.2 * rng.uniform01();
  cfg.H = 2 + rng.uniform_below(2);
  return cfg;
}

// Convex blend of the model parameters toward a fresh draw: theta stays in
// the unit box, mu columns stay distributions over s', so the result is a
// valid model and (a.s.) absolutely continuous with the input.
void blend_params(std::vector<double>& theta, Mat& mu, double w, Rng& rng) {
  for (double& v : theta) v = (1.0 - w) * v + w * rng.uniform01();
  std::size_t S = mu.rows, d = mu.cols;
  std::vector<double> col(S);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (double& c : col) {
      c = rng.exponential();
      sum += c;
    }
    for (std::size_t sp = 0; sp < S; ++sp)
      mu(sp, j) = (1.0 - w) * mu(sp, j) + w * col[sp] / sum;
  }
}

DiscountedLinearMdp blended_alt(const DiscountedLinearMdp& m, double w,
                                Rng& rng) {
  DiscountedLinearMdp alt = m;
  blend_params(alt.theta, alt.mu, w, rng);
  alt.finalize();
  return alt;
}

EpisodicLinearMdp blended_alt(const EpisodicLinearMdp& m, double w, Rng& rng) {
  EpisodicLinearMdp alt = m;
  for (std::size_t h = 0; h < alt.H; ++h)
    blend_params(alt.theta[h], alt.mu[h], w, rng);
  alt.finalize();
  return alt;
}

Policy random_policy(const FeatureMap& f, Rng& rng) {
  Policy p;
  p.action.resize(f.S);
  for (auto& a : p.action) a = rng.uniform_below(f.A);
  return p;
}

EpisodicPolicy random_policy(const FeatureMap& f, std::size_t H, Rng& rng) {
  EpisodicPolicy p;
  p.action.assign(H, {});
  for (auto& row : p.action) {
    row.resize(f.S);
    for (auto& a : row) a = rng.uniform_below(f.A);
  }
  return p;
}

void battery_gap_bound(std::vector<LemmaCheckStats>& rows, Rng& rng) {
  const double eps_grid[3] = {0.0, 0.05, 0.1};
  for (int episodic = 0; episodic < 2; ++episodic) {
    LemmaCheckStats st;
    st.name = episodic ? "gap_bound (episodic)" : "gap_bound (discounted)";
    st.worst_margin = kInf;
    std::size_t attempts = 0;
    while (st.checked < 100 && attempts < 5000) {
      ++attempts;
      double eps = eps_grid[attempts % 3];
      GapBoundResult res;
      if (episodic) {
        EpisodicLinearMdp base = generate_episodic(small_cfg(rng, true), rng);
        EpisodicLinearMdp alt =
            blended_alt(base, 0.5 + 0.5 * rng.uniform01(), rng);
        res = gap_bound_check(MdpPair(base, alt), eps);
      } else {
        DiscountedLinearMdp base =
            generate_discounted(small_cfg(rng, false), rng);
        DiscountedLinearMdp alt =
            blended_alt(base, 0.5 + 0.5 * rng.uniform01(), rng);
        res = gap_bound_check(MdpPair(base, alt), eps);
      }
      if (!res.hypothesis) {
        st.skipped += 1;
        continue;
      }
      note(st, res.rhs - res.lhs, res.holds);
    }
    seal(st);
    rows.push_back(std::move(st));
  }
}

void battery_value_diff(std::vector<LemmaCheckStats>& rows, Rng& rng) {
  for (int episodic = 0; episodic < 2; ++episodic) {
    LemmaCheckStats st;
    st.name = episodic ? "value_diff (episodic)" : "value_diff (discounted)";
    st.worst_margin = kInf;
    for (std::size_t i = 0; i < 100; ++i) {
      double w = 0.05 + 0.95 * rng.uniform01();
      ValueDiffReport rep;
      if (episodic) {
        EpisodicLinearMdp base = generate_episodic(small_cfg(rng, true), rng);
        EpisodicLinearMdp alt = blended_alt(base, w, rng);
        MdpPair pair(base, alt);
        EpisodicPolicy pi = i % 2 == 0
                                ? solve_episodic(base).policy
                                : random_policy(base.features, base.H, rng);
        rep = value_diff_checks(pair, pi);
      } else {
        DiscountedLinearMdp base =
            generate_discounted(small_cfg(rng, false), rng);
        DiscountedLinearMdp alt = blended_alt(base, w, rng);
        MdpPair pair(base, alt);
        Policy pi = i % 2 == 0 ? solve_discounted(base).policy
                               : random_policy(base.features, rng);
        rep = value_diff_checks(pair, pi);
      }
      double margin = std::min(std::min(rep.same_vq, rep.same_qb),
                               std::min(rep.opt_vq, rep.opt_qb));
      note(st, margin, rep.holds());
    }
    seal(st);
    rows.push_back(std::move(st));
  }
}

void battery_pinsker(std::vector<LemmaCheckStats>& rows, Rng& rng) {
  LemmaCheckStats st;
  st.name = "kl_pinsker_variant";
  st.worst_margin = kInf;
  std::vector<double> alpha, beta, f;
  for (std::size_t i = 0; i < 10000; ++i) {
    std::size_t n = 1 + rng.uniform_below(10);
    alpha.resize(n);
    beta.resize(n);
    f.resize(n);
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      alpha[k] = rng.exponential();
      beta[k] = rng.exponential();
      sa += alpha[k];
      sb += beta[k];
      f[k] = rng.uniform(0.0, 10.0);
    }
    for (std::size_t k = 0; k < n; ++k) {
      alpha[k] /= sa;
      beta[k] /= sb;
    }
    auto [lhs, rhs] = kl_pinsker_variant_check(alpha, beta, f);
    note(st, lhs - rhs, lhs >= rhs - 1e-12);
  }
  seal(st);
  rows.push_back(std::move(st));
}

struct ContinuityStats {
  LemmaCheckStats gc;
  LemmaCheckStats ud;
};

void battery_continuity(std::vector<LemmaCheckStats>& rows, Rng& rng) {
  // discounted
  {
    ContinuityStats cs;
    cs.gc.name = "gap_continuity (discounted)";
    cs.ud.name = "u_diff (discounted)";
    cs.gc.worst_margin = cs.ud.worst_margin = kInf;

    GeneratorConfig cfg;
    cfg.d = 2;
    cfg.S = 3;
    cfg.A = 2;
    cfg.gamma = 0.5;
    cfg.min_gap = 0.2;
    cfg.max_attempts = 5000;
    DiscountedLinearMdp m = generate_discounted(cfg, rng);
    Design des = g_optimal_design(m.features, 0.01);
    const double eps = 0.05;

    EstimatedMdp exact{m.theta, m.mu, false};
    GapContinuityResult g0 = gap_continuity_check(m, exact);
    note(cs.gc, g0.rhs - g0.lhs, g0.holds && g0.lhs <= 1e-8);
    UDiffResult u0 = u_diff_check(m, exact, des.w, eps);
    note(cs.ud, u0.rhs - u0.lhs, u0.holds);

    StoppingConfig scfg;
    scfg.delta = 0.2;
    scfg.epsilon = eps;
    scfg.check_stride = 25;
    scfg.t_max = 1500;
    GssObserver obs = [&](const GssCheckpoint& cp) {
      if (cp.t < m.features.d || cp.est == nullptr) return;
      if (cp.plan->clipped) {
        cs.gc.skipped += 1;
        cs.ud.skipped += 1;
        return;
      }
      GapContinuityResult g = gap_continuity_check(m, *cp.est);
      if (g.clipped)
        cs.gc.skipped += 1;
      else
        note(cs.gc, g.rhs - g.lhs, g.holds);
      try {
        UDiffResult u = u_diff_check(m, *cp.est, cp.alloc->fractions(), eps);
        if (u.clipped)
          cs.ud.skipped += 1;
        else
          note(cs.ud, u.rhs - u.lhs, u.holds);
      } catch (const SingularMatrix&) {
        cs.ud.skipped += 1;
      }
    };
    Rng trng(rng.next_u64());
    gss_run(m, scfg, 0.01, trng, obs);

    for (std::size_t k = 0; k < 50; ++k) {
      double w = 1e-3 * std::pow(50.0, double(k) / 49.0);  // 1e-3 .. 5e-2
      DiscountedLinearMdp pert = blended_alt(m, w, rng);
      EstimatedMdp est{pert.theta, pert.mu, false};
      GapContinuityResult g = gap_continuity_check(m, est);
      if (g.clipped)
        cs.gc.skipped += 1;
      else
        note(cs.gc, g.rhs - g.lhs, g.holds);
      UDiffResult u = u_diff_check(m, est, des.w, eps);
      if (u.clipped)
        cs.ud.skipped += 1;
      else
        note(cs.ud, u.rhs - u.lhs, u.holds);
    }
    seal(cs.gc);
    seal(cs.ud);
    rows.push_back(std::move(cs.gc));
    rows.push_back(std::move(cs.ud));
  }

  // episodic
  {
    ContinuityStats cs;
    cs.gc.name = "gap_continuity (episodic)";
    cs.ud.name = "u_diff (episodic)";
    cs.gc.worst_margin = cs.ud.worst_margin = kInf;

    GeneratorConfig cfg;
    cfg.d = 2;
    cfg.S = 3;
    cfg.A = 2;
    cfg.episodic = true;
    cfg.H = 3;
    cfg.min_gap = 0.3;
    cfg.max_attempts = 5000;
    EpisodicLinearMdp m = generate_episodic(cfg, rng);
    Design des = g_optimal_design(m.features, 0.01);
    const double eps = 0.05;

    EstimatedEpisodicMdp exact{m.theta, m.mu, false};
    GapContinuityResult g0 = gap_continuity_check(m, exact);
    note(cs.gc, g0.rhs - g0.lhs, g0.holds && g0.lhs <= 1e-8);
    UDiffResult u0 = u_diff_check(m, exact, des.w, eps);
    note(cs.ud, u0.rhs - u0.lhs, u0.holds);

    StoppingConfig scfg;
    scfg.delta = 0.2;
    scfg.epsilon = eps;
    scfg.check_stride = 25;
    scfg.t_max = 1200;
    GssObserver obs = [&](const GssCheckpoint& cp) {
      if (cp.t < m.features.d || cp.est_episodic == nullptr) return;
      if (cp.plan_episodic->clipped) {
        cs.gc.skipped += 1;
        cs.ud.skipped += 1;
        return;
      }
      GapContinuityResult g = gap_continuity_check(m, *cp.est_episodic);
      if (g.clipped)
        cs.gc.skipped += 1;
      else
        note(cs.gc, g.rhs - g.lhs, g.holds);
      try {
        UDiffResult u =
            u_diff_check(m, *cp.est_episodic, cp.alloc->fractions(), eps);
        if (u.clipped)
          cs.ud.skipped += 1;
        else
          note(cs.ud, u.rhs - u.lhs, u.holds);
      } catch (const SingularMatrix&) {
        cs.ud.skipped += 1;
      }
    };
    Rng trng(rng.next_u64());
    gsse_run(m, scfg, 0.01, trng, obs);

    for (std::size_t k = 0; k < 50; ++k) {
      double w = 1e-3 * std::pow(50.0, double(k) / 49.0);
      EpisodicLinearMdp pert = blended_alt(m, w, rng);
      EstimatedEpisodicMdp est{pert.theta, pert.mu, false};
      GapContinuityResult g = gap_continuity_check(m, est);
      if (g.clipped)
        cs.gc.skipped += 1;
      else
        note(cs.gc, g.rhs - g.lhs, g.holds);
      UDiffResult u = u_diff_check(m, est, des.w, eps);
      if (u.clipped)
        cs.ud.skipped += 1;
      else
        note(cs.ud, u.rhs - u.lhs, u.holds);
    }
    seal(cs.gc);
    seal(cs.ud);
    rows.push_back(std::move(cs.gc));
    rows.push_back(std::move(cs.ud));
  }
}

}  // namespace

std::vector<LemmaCheckStats> lemma_battery(std::uint64_t seed) {
  std::vector<LemmaCheckStats> rows;
  Rng rng(seed);
  battery_gap_bound(rows, rng);
  battery_value_diff(rows, rng);
  battery_pinsker(rows, rng);
  battery_continuity(rows, rng);
  return rows;
}

}  // namespace linbpi

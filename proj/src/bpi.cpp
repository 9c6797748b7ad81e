#include "linbpi/bpi.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "linbpi/oracles.hpp"

namespace linbpi {

namespace {

constexpr double kSqrtE = 1.6487212707001282;  // e^(1/2)
constexpr double kE4 = 54.598150033144236;     // e^4

double require_positive_gap(double gap, double epsilon, const char* who) {
  double gp = gap + epsilon;
  if (!(gp > 0.0))
    throw DegenerateGap(std::string(who) + ": gap + epsilon must be positive");
  return gp;
}

// Z(t) from already-known sigma(omega_t); shared by stopping_statistic and
// the run loops so traces and the public operation agree bit for bit.
double z_discounted(double gap_hat, double epsilon, double gamma, double sigma,
                    std::size_t t) {
  double gp = gap_hat + epsilon;
  if (gp == 0.0) return 0.0;
  double om = 1.0 - gamma;
  double u_inv = 3.0 * om * om * om * om * gp * gp / (10.0 * sigma);
  return double(t) * u_inv;
}

double z_episodic(double gap_hat, double epsilon, std::size_t H, double sigma,
                  std::size_t t) {
  double gp = gap_hat + epsilon;
  if (gp == 0.0) return 0.0;
  double h3 = double(H) * double(H) * double(H);
  double u_inv = 3.0 * gp * gp / (10.0 * h3 * sigma);
  return double(t) * u_inv;
}

}  // namespace

double u_star_discounted(std::size_t d, double gamma, double gap,
                         double epsilon) {
  double gp = require_positive_gap(gap, epsilon, "u_star_discounted");
  double om = 1.0 - gamma;
  return 10.0 * double(d) / (3.0 * om * om * om * om * gp * gp);
}

double u_of_design_discounted(double sigma_omega, double gamma, double gap,
                              double epsilon) {
  double gp = require_positive_gap(gap, epsilon, "u_of_design_discounted");
  double om = 1.0 - gamma;
  return 10.0 * sigma_omega / (3.0 * om * om * om * om * gp * gp);
}

double u_star_episodic(std::size_t d, std::size_t H, double gap,
                       double epsilon) {
  double gp = require_positive_gap(gap, epsilon, "u_star_episodic");
  double h3 = double(H) * double(H) * double(H);
  return 10.0 * h3 * double(d) / (3.0 * gp * gp);
}

double u_of_design_episodic(double sigma_omega, std::size_t H, double gap,
                            double epsilon) {
  double gp = require_positive_gap(gap, epsilon, "u_of_design_episodic");
  double h3 = double(H) * double(H) * double(H);
  return 10.0 * h3 * sigma_omega / (3.0 * gp * gp);
}

double beta_threshold(double delta, double t, std::size_t d) {
  double log_conf = std::log(kSqrtE * kZeta2 * t * t / delta);
  double log_dim = std::log(8.0 * kE4 * double(d) * t * t);
  return (12.0 / 5.0) * (2.0 * log_conf + double(d) * log_dim);
}

double beta_threshold_episodic(double delta, double t, std::size_t d,
                               std::size_t H) {
  return double(H) * beta_threshold(delta / double(H), t, d);
}

double stopping_statistic(const PlanningSolution& est_plan,
                          const RealizedAllocation& alloc, const FeatureMap& f,
                          double gamma, double epsilon) {
  double sigma = sigma_of_design(f, alloc.fractions());
  return z_discounted(est_plan.gap, epsilon, gamma, sigma, alloc.t);
}

double stopping_statistic(const EpisodicPlanningSolution& est_plan,
                          const RealizedAllocation& alloc, const FeatureMap& f,
                          std::size_t H, double epsilon) {
  double sigma = sigma_of_design(f, alloc.fractions());
  return z_episodic(est_plan.gap, epsilon, H, sigma, alloc.t);
}

namespace {

// Threshold side of the stop prediction: 24 beta, or 24 H beta(delta/H).
bool predicted_stop_holds(double t, double u_star, double delta, std::size_t d,
                          std::size_t H) {
  double thr = H == 0 ? beta_threshold(delta, t, d)
                      : double(H) * beta_threshold(delta / double(H), t, d);
  return t > 24.0 * u_star * thr;
}

std::size_t predicted_stop_impl(double u_star, double delta, std::size_t d,
                                std::size_t H) {
  if (!(u_star >= 0.0) || std::isinf(u_star))
    throw DegenerateGap("predicted_stop_time: u_star must be finite");
  if (predicted_stop_holds(1.0, u_star, delta, d, H)) return 1;

  // Rewrite t > 24 u_star beta as t > a log t + b to bracket the crossing.
  double scale = 24.0 * u_star * (H == 0 ? 1.0 : double(H)) * (12.0 / 5.0);
  double delta_eff = H == 0 ? delta : delta / double(H);
  double a = scale * (4.0 + 2.0 * double(d));
  double b = scale * (2.0 * std::log(kSqrtE * kZeta2 / delta_eff) +
                      double(d) * std::log(8.0 * kE4 * double(d)));
  double start = log_bound_time(a, b);
  std::size_t hi = start <= 2.0 ? 2 : std::size_t(std::ceil(start));
  while (!predicted_stop_holds(double(hi), u_star, delta, d, H)) hi *= 2;

  std::size_t lo = 1;  // known false (checked above)
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (predicted_stop_holds(double(mid), u_star, delta, d, H))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

std::size_t predicted_stop_time(double u_star, double delta, std::size_t d) {
  return predicted_stop_impl(u_star, delta, d, 0);
}

std::size_t predicted_stop_time_episodic(double u_star, double delta,
                                         std::size_t d, std::size_t H) {
  return predicted_stop_impl(u_star, delta, d, H);
}

bool policy_is_eps_optimal(const DiscountedLinearMdp& m, const Policy& pi,
                           double epsilon, const std::vector<double>& v_star,
                           double tol) {
  std::vector<double> v_pi = evaluate_policy(m, pi);
  for (std::size_t s = 0; s < v_star.size(); ++s)
    if (v_pi[s] < v_star[s] - epsilon - tol) return false;
  return true;
}

bool policy_is_eps_optimal(const DiscountedLinearMdp& m, const Policy& pi,
                           double epsilon, double tol) {
  return policy_is_eps_optimal(m, pi, epsilon, solve_discounted(m).v, tol);
}

bool policy_is_eps_optimal(const EpisodicLinearMdp& m, const EpisodicPolicy& pi,
                           double epsilon,
                           const std::vector<double>& v_star_first,
                           double tol) {
  std::vector<std::vector<double>> v_pi = evaluate_policy(m, pi);
  for (std::size_t s = 0; s < v_star_first.size(); ++s)
    if (v_pi[0][s] < v_star_first[s] - epsilon - tol) return false;
  return true;
}

bool policy_is_eps_optimal(const EpisodicLinearMdp& m, const EpisodicPolicy& pi,
                           double epsilon, double tol) {
  return policy_is_eps_optimal(m, pi, epsilon, solve_episodic(m).v[0], tol);
}

namespace {

void validate_config(const StoppingConfig& cfg, const char* who) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw std::invalid_argument(std::string(who) +
                                ": delta must lie in (0, 1)");
  if (!(cfg.epsilon >= 0.0))
    throw std::invalid_argument(std::string(who) +
                                ": epsilon must be non-negative");
  if (cfg.check_stride == 0)
    throw std::invalid_argument(std::string(who) +
                                ": check_stride must be >= 1");
}

std::vector<double> cumulative_weights(const std::vector<double>& w) {
  std::vector<double> cum(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    cum[i] = acc;
  }
  return cum;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

}  // namespace

TrialRecord gss_run(const DiscountedLinearMdp& m, const StoppingConfig& cfg,
                    double eps_g, Rng& rng, const GssObserver& obs) {
  validate_config(cfg, "gss");
  auto t0 = std::chrono::steady_clock::now();
  const FeatureMap& f = m.features;

  PlanningSolution truth = solve_discounted(m);
  std::size_t t_max = cfg.t_max;
  if (t_max == 0) {
    double us = u_star_discounted(f.d, m.gamma, truth.gap, cfg.epsilon);
    t_max = 4 * predicted_stop_time(us, cfg.delta, f.d);
  }

  Design design = g_optimal_design(f, eps_g);
  std::vector<double> cum = cumulative_weights(design.w);

  TrialRecord rec;
  rec.sigma_design = design.sigma;
  rec.true_gap = truth.gap;

  LseState lse(f.d, f.S);
  RealizedAllocation alloc(f.pairs());
  EstimatedMdp est;
  PlanningSolution plan;
  std::vector<double> warm;
  bool stopped = false;
  std::size_t t = 0;

  while (t < t_max && !stopped) {
    std::size_t idx = rng.categorical_from_cumulative(cum);
    Transition tr = sample_transition(m, idx / f.A, idx % f.A, rng);
    lse.update(f.pair(idx), tr.reward, tr.next);
    alloc.record_sample(idx);
    ++t;
    if (t % cfg.check_stride != 0 && t != t_max) continue;

    est = estimate_mdp(lse, f);
    plan = plan_estimated_discounted(est, f, m.gamma, cfg.plan_tol, 0,
                                     warm.empty() ? nullptr : &warm);
    warm = plan.v;

    double beta = beta_threshold(cfg.delta, double(t), f.d);
    double sigma_t = std::numeric_limits<double>::quiet_NaN();
    double z = std::numeric_limits<double>::quiet_NaN();
    try {
      sigma_t = sigma_of_design(f, alloc.fractions());
      z = z_discounted(plan.gap, cfg.epsilon, m.gamma, sigma_t, t);
    } catch (const SingularDesign&) {
      // stopping check skipped until the samples span the feature space
    }
    if (cfg.record_trace) rec.z_trace.push_back({t, z, beta});
    if (obs) {
      GssCheckpoint cp;
      cp.t = t;
      cp.z = z;
      cp.beta = beta;
      cp.sigma_t = sigma_t;
      cp.gap_hat = plan.gap;
      cp.est = &est;
      cp.plan = &plan;
      cp.alloc = &alloc;
      obs(cp);
    }
    if (z > beta) stopped = true;  // NaN z never compares true
  }

  rec.tau = t;
  rec.capped = !stopped;
  rec.returned_policy = plan.policy;
  rec.correct = policy_is_eps_optimal(m, plan.policy, cfg.epsilon, truth.v);
  rec.wallclock_ms = elapsed_ms(t0);
  return rec;
}

TrialRecord gsse_run(const EpisodicLinearMdp& m, const StoppingConfig& cfg,
                     double eps_g, Rng& rng, const GssObserver& obs) {
  validate_config(cfg, "gsse");
  auto t0 = std::chrono::steady_clock::now();
  const FeatureMap& f = m.features;

  EpisodicPlanningSolution truth = solve_episodic(m);
  std::size_t t_max = cfg.t_max;
  if (t_max == 0) {
    double us = u_star_episodic(f.d, m.H, truth.gap, cfg.epsilon);
    t_max = 4 * predicted_stop_time_episodic(us, cfg.delta, f.d, m.H);
  }

  Design design = g_optimal_design(f, eps_g);
  std::vector<double> cum = cumulative_weights(design.w);

  TrialRecord rec;
  rec.sigma_design = design.sigma;
  rec.true_gap = truth.gap;

  EpisodicLseState lse(f.d, f.S, m.H);
  RealizedAllocation alloc(f.pairs());
  std::vector<Transition> round(m.H);
  EstimatedEpisodicMdp est;
  EpisodicPlanningSolution plan;
  bool stopped = false;
  std::size_t t = 0;

  while (t < t_max && !stopped) {
    std::size_t idx = rng.categorical_from_cumulative(cum);
    std::size_t s = idx / f.A, a = idx % f.A;
    for (std::size_t h = 0; h < m.H; ++h)
      round[h] = sample_transition(m, h, s, a, rng);
    lse.update(f.pair(idx), round);
    alloc.record_sample(idx);
    ++t;
    if (t % cfg.check_stride != 0 && t != t_max) continue;

    est = estimate_mdp(lse, f);
    plan = plan_estimated_episodic(est, f, m.H);

    double beta = beta_threshold_episodic(cfg.delta, double(t), f.d, m.H);
    double sigma_t = std::numeric_limits<double>::quiet_NaN();
    double z = std::numeric_limits<double>::quiet_NaN();
    try {
      sigma_t = sigma_of_design(f, alloc.fractions());
      z = z_episodic(plan.gap, cfg.epsilon, m.H, sigma_t, t);
    } catch (const SingularDesign&) {
    }
    if (cfg.record_trace) rec.z_trace.push_back({t, z, beta});
    if (obs) {
      GssCheckpoint cp;
      cp.t = t;
      cp.z = z;
      cp.beta = beta;
      cp.sigma_t = sigma_t;
      cp.gap_hat = plan.gap;
      cp.est_episodic = &est;
      cp.plan_episodic = &plan;
      cp.alloc = &alloc;
      obs(cp);
    }
    if (z > beta) stopped = true;
  }

  rec.tau = t;
  rec.capped = !stopped;
  rec.returned_policy = plan.policy;
  rec.correct =
      policy_is_eps_optimal(m, plan.policy, cfg.epsilon, truth.v[0]);
  rec.wallclock_ms = elapsed_ms(t0);
  return rec;
}

}  // namespace linbpi

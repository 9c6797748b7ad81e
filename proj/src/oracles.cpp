#include "linbpi/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "linbpi/bpi.hpp"
#include "linbpi/design.hpp"

namespace linbpi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shared_features(const FeatureMap& a, const FeatureMap& b) {
  if (a.S != b.S || a.A != b.A || a.d != b.d || a.phi != b.phi)
    throw InvalidInstance("mdp pair: models must share one feature map");
}

// The reward Bernoulli at mean r puts mass on 1 iff r > 0 and on 0 iff r < 1.
bool reward_continuous(double r_base, double r_alt) {
  if (r_base > 0.0 && !(r_alt > 0.0)) return false;
  if (r_base < 1.0 && !(r_alt < 1.0)) return false;
  return true;
}

bool tables_continuous(const std::vector<double>& r_base,
                       const std::vector<double>& r_alt, const Mat& p_base,
                       const Mat& p_alt) {
  for (std::size_t i = 0; i < r_base.size(); ++i) {
    if (!reward_continuous(r_base[i], r_alt[i])) return false;
    for (std::size_t sp = 0; sp < p_base.cols; ++sp)
      if (p_base(i, sp) > 0.0 && !(p_alt(i, sp) > 0.0)) return false;
  }
  return true;
}

double linf_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double linf_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i)
    m = std::max(m, std::abs(a.a[i] - b.a[i]));
  return m;
}

// x = theta_a - theta_b + c (mu_a - mu_b)^T v; v may be shorter-lived zeros.
std::vector<double> param_diff(const std::vector<double>& theta_a,
                               const std::vector<double>& theta_b,
                               const Mat& mu_a, const Mat& mu_b, double c,
                               const std::vector<double>* v) {
  std::size_t d = theta_a.size();
  std::vector<double> x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = theta_a[j] - theta_b[j];
  if (v != nullptr && c != 0.0) {
    for (std::size_t sp = 0; sp < mu_a.rows; ++sp) {
      double vs = c * (*v)[sp];
      if (vs == 0.0) continue;
      const double* ra = mu_a.row(sp);
      const double* rb = mu_b.row(sp);
      for (std::size_t j = 0; j < d; ++j) x[j] += vs * (ra[j] - rb[j]);
    }
  }
  return x;
}

double feature_abs_max(const FeatureMap& f, const std::vector<double>& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    const double* phi = f.pair(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < f.d; ++j) dot += phi[j] * x[j];
    m = std::max(m, std::abs(dot));
  }
  return m;
}

// |gap(a) - gap(b)| with the shared-infinity (single-action) case pinned to 0.
double gap_distance(double a, double b) {
  if (std::isinf(a) && std::isinf(b)) return 0.0;
  return std::abs(a - b);
}

}  // namespace

MdpPair::MdpPair(const DiscountedLinearMdp& base_in,
                 const DiscountedLinearMdp& alt_in)
    : base(&base_in), alt(&alt_in) {
  check_shared_features(base_in.features, alt_in.features);
  if (base_in.gamma != alt_in.gamma)
    throw InvalidInstance("mdp pair: discount factors differ");
  absolutely_continuous =
      tables_continuous(base_in.rewards, alt_in.rewards, base_in.transitions,
                        alt_in.transitions);
}

MdpPair::MdpPair(const EpisodicLinearMdp& base_in,
                 const EpisodicLinearMdp& alt_in)
    : ebase(&base_in), ealt(&alt_in) {
  check_shared_features(base_in.features, alt_in.features);
  if (base_in.H != alt_in.H)
    throw InvalidInstance("mdp pair: horizons differ");
  absolutely_continuous = true;
  for (std::size_t h = 0; h < base_in.H; ++h)
    if (!tables_continuous(base_in.rewards[h], alt_in.rewards[h],
                           base_in.transitions[h], alt_in.transitions[h])) {
      absolutely_continuous = false;
      break;
    }
}

double kl_bernoulli(double a, double b) {
  double kl = 0.0;
  if (a > 0.0) {
    if (!(b > 0.0)) return kInf;
    kl += a * std::log(a / b);
  }
  if (a < 1.0) {
    if (!(b < 1.0)) return kInf;
    kl += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  }
  return kl;
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (!(q[i] > 0.0)) return kInf;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

namespace {

double kl_tables(const std::vector<double>& r_base,
                 const std::vector<double>& r_alt, const Mat& p_base,
                 const Mat& p_alt, std::size_t idx, std::size_t S,
                 const char* where) {
  double kr = kl_bernoulli(r_base[idx], r_alt[idx]);
  double kp = kl_categorical(std::span<const double>(p_base.row(idx), S),
                             std::span<const double>(p_alt.row(idx), S));
  double kl = kr + kp;
  if (std::isinf(kl))
    throw AbsoluteContinuityViolated(
        std::string("kl_mdp: alternative lacks mass the base model has (") +
        where + ")");
  return kl;
}

}  // namespace

double kl_mdp(const MdpPair& pair, std::size_t s, std::size_t a) {
  if (pair.episodic())
    throw std::invalid_argument("kl_mdp: episodic pair needs a step index");
  const FeatureMap& f = pair.features();
  return kl_tables(pair.base->rewards, pair.alt->rewards,
                   pair.base->transitions, pair.alt->transitions, s * f.A + a,
                   f.S, "discounted pair");
}

double kl_mdp(const MdpPair& pair, std::size_t h, std::size_t s,
              std::size_t a) {
  if (!pair.episodic())
    throw std::invalid_argument("kl_mdp: step index given for a discounted pair");
  const FeatureMap& f = pair.features();
  return kl_tables(pair.ebase->rewards[h], pair.ealt->rewards[h],
                   pair.ebase->transitions[h], pair.ealt->transitions[h],
                   s * f.A + a, f.S, "episodic pair");
}

double kl_weighted(const MdpPair& pair, std::span<const double> w) {
  const FeatureMap& f = pair.features();
  double total = 0.0;
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    if (w[i] <= 0.0) continue;
    std::size_t s = i / f.A, a = i % f.A;
    if (pair.episodic()) {
      double per_round = 0.0;
      for (std::size_t h = 0; h < pair.ebase->H; ++h)
        per_round += kl_mdp(pair, h, s, a);
      total += w[i] * per_round;
    } else {
      total += w[i] * kl_mdp(pair, s, a);
    }
  }
  return total;
}

double relaxed_characteristic_inverse(const DiscountedLinearMdp& m,
                                      std::span<const double> w,
                                      double epsilon) {
  double sigma = sigma_of_design(m.features, w);
  double gp = solve_discounted(m).gap + epsilon;
  double om = 1.0 - m.gamma;
  return 3.0 * om * om * om * om * gp * gp / (10.0 * sigma);
}

double relaxed_characteristic_inverse(
    const EpisodicLinearMdp& m, const std::vector<std::vector<double>>& w_h,
    double epsilon) {
  if (w_h.size() != m.H)
    throw std::invalid_argument(
        "relaxed_characteristic_inverse: one design per step required");
  double sigma_sum = 0.0;
  for (const auto& w : w_h) sigma_sum += sigma_of_design(m.features, w);
  double gp = solve_episodic(m).gap + epsilon;
  double h2 = double(m.H) * double(m.H);
  return 3.0 * gp * gp / (10.0 * h2 * sigma_sum);
}

double relaxed_characteristic_inverse(const EpisodicLinearMdp& m,
                                      std::span<const double> w,
                                      double epsilon) {
  double sigma_sum = double(m.H) * sigma_of_design(m.features, w);
  double gp = solve_episodic(m).gap + epsilon;
  double h2 = double(m.H) * double(m.H);
  return 3.0 * gp * gp / (10.0 * h2 * sigma_sum);
}

OptimizationSolution optimization_closed_form(
    const std::vector<std::vector<double>>& phis,
    const std::vector<Mat>& lambdas, double delta) {
  if (phis.empty() || phis.size() != lambdas.size())
    throw std::invalid_argument(
        "optimization_closed_form: need matching, non-empty phi/Lambda lists");
  if (!(delta > 0.0))
    throw std::invalid_argument("optimization_closed_form: delta must be > 0");

  std::size_t n = phis.size();
  std::vector<std::vector<double>> lam_inv_phi(n);
  double qsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Cholesky chol(lambdas[i]);  // SingularMatrix on non-SPD input
    lam_inv_phi[i] = chol.solve(phis[i]);
    double q = 0.0;
    for (std::size_t j = 0; j < phis[i].size(); ++j)
      q += phis[i][j] * lam_inv_phi[i][j];
    qsum += q;
  }

  OptimizationSolution out;
  out.value = delta * delta / qsum;
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = lam_inv_phi[i];
    for (double& c : out.x[i]) c *= delta / qsum;
  }
  return out;
}

std::pair<double, double> kl_pinsker_variant_check(std::span<const double> alpha,
                                                   std::span<const double> beta,
                                                   std::span<const double> f) {
  if (alpha.size() != beta.size() || alpha.size() != f.size())
    throw std::invalid_argument(
        "kl_pinsker_variant_check: distributions and f must share a support");
  double lhs = kl_categorical(alpha, beta);
  if (std::isinf(lhs))
    throw AbsoluteContinuityViolated(
        "kl_pinsker_variant_check: alpha not dominated by beta");

  double fmax = 0.0, ea = 0.0, eb = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0)
      throw std::invalid_argument(
          "kl_pinsker_variant_check: f must be non-negative");
    fmax = std::max(fmax, f[i]);
    ea += alpha[i] * f[i];
    eb += beta[i] * f[i];
  }
  double gap = ea - eb;
  double rhs = fmax == 0.0 ? 0.0 : 6.0 / (5.0 * fmax * fmax) * gap * gap;
  return {lhs, rhs};
}

GapBoundResult gap_bound_check(const MdpPair& pair, double epsilon,
                               double tol) {
  GapBoundResult r;
  if (!pair.episodic()) {
    PlanningSolution bsol = solve_discounted(*pair.base);
    PlanningSolution asol = solve_discounted(*pair.alt);
    r.hypothesis =
        !policy_is_eps_optimal(*pair.alt, bsol.policy, epsilon, asol.v, tol);
    if (!r.hypothesis) return r;

    std::vector<double> v_pi_alt = evaluate_policy(*pair.alt, bsol.policy);
    r.lhs = bsol.gap + epsilon;
    r.rhs = linf_diff(bsol.v, v_pi_alt) + linf_diff(bsol.q, asol.q);
    r.holds = r.lhs <= r.rhs + tol;
    return r;
  }

  EpisodicPlanningSolution bsol = solve_episodic(*pair.ebase);
  EpisodicPlanningSolution asol = solve_episodic(*pair.ealt);
  r.hypothesis = !policy_is_eps_optimal(*pair.ealt, bsol.policy, epsilon,
                                        asol.v[0], tol);
  if (!r.hypothesis) return r;

  std::vector<std::vector<double>> v_pi_alt =
      evaluate_policy(*pair.ealt, bsol.policy);
  r.lhs = bsol.gap + epsilon;
  r.rhs = 0.0;
  for (std::size_t h = 0; h < pair.ebase->H; ++h) {
    double rhs_h =
        linf_diff(bsol.v[h], v_pi_alt[h]) + linf_diff(bsol.q[h], asol.q[h]);
    r.rhs = std::max(r.rhs, rhs_h);
  }
  r.holds = r.lhs <= r.rhs + tol;
  return r;
}

ValueDiffReport value_diff_checks(const MdpPair& pair, const Policy& pi) {
  if (pair.episodic())
    throw std::invalid_argument(
        "value_diff_checks: episodic pair needs an episodic policy");
  const DiscountedLinearMdp& m = *pair.base;
  const DiscountedLinearMdp& mp = *pair.alt;
  const FeatureMap& f = pair.features();
  double inv = 1.0 / (1.0 - m.gamma);
  ValueDiffReport rep;

  std::vector<double> v_m = evaluate_policy(m, pi);
  std::vector<double> v_mp = evaluate_policy(mp, pi);
  Mat q_m = policy_q_values(m, v_m);
  Mat q_mp = policy_q_values(mp, v_mp);
  rep.same_v = linf_diff(v_m, v_mp);
  rep.same_q = linf_diff(q_m, q_mp);
  rep.same_bound =
      inv * feature_abs_max(
                f, param_diff(m.theta, mp.theta, m.mu, mp.mu, m.gamma, &v_m));

  PlanningSolution sm = solve_discounted(m);
  PlanningSolution smp = solve_discounted(mp);
  rep.opt_v = linf_diff(sm.v, smp.v);
  rep.opt_q = linf_diff(sm.q, smp.q);
  rep.opt_bound =
      inv * feature_abs_max(
                f, param_diff(m.theta, mp.theta, m.mu, mp.mu, m.gamma, &sm.v));

  rep.same_vq = rep.same_q - rep.same_v;
  rep.same_qb = rep.same_bound - rep.same_q;
  rep.opt_vq = rep.opt_q - rep.opt_v;
  rep.opt_qb = rep.opt_bound - rep.opt_q;
  return rep;
}

namespace {

// Per-step feature bounds term[h] = max |phi^T (dtheta_h + dmu_h^T v_{h+1})|
// for a value table with H+1 rows (the last one all zeros) or H rows (the
// zero row implied).
std::vector<double> episodic_bound_terms(
    const FeatureMap& f, const EpisodicLinearMdp& m,
    const EpisodicLinearMdp& mp, const std::vector<std::vector<double>>& v) {
  std::size_t H = m.H;
  std::vector<double> term(H);
  for (std::size_t h = 0; h < H; ++h) {
    const std::vector<double>* vh1 = h + 1 < v.size() ? &v[h + 1] : nullptr;
    term[h] = feature_abs_max(
        f, param_diff(m.theta[h], mp.theta[h], m.mu[h], mp.mu[h], 1.0, vh1));
  }
  return term;
}

}  // namespace

ValueDiffReport value_diff_checks(const MdpPair& pair,
                                  const EpisodicPolicy& pi) {
  if (!pair.episodic())
    throw std::invalid_argument(
        "value_diff_checks: discounted pair given an episodic policy");
  const EpisodicLinearMdp& m = *pair.ebase;
  const EpisodicLinearMdp& mp = *pair.ealt;
  const FeatureMap& f = pair.features();
  std::size_t H = m.H;
  ValueDiffReport rep;
  rep.same_vq = rep.same_qb = rep.opt_vq = rep.opt_qb = kInf;

  std::vector<std::vector<double>> v_m = evaluate_policy(m, pi);
  std::vector<std::vector<double>> v_mp = evaluate_policy(mp, pi);
  std::vector<Mat> q_m = policy_q_values(m, v_m);
  std::vector<Mat> q_mp = policy_q_values(mp, v_mp);
  std::vector<double> term = episodic_bound_terms(f, m, mp, v_m);

  EpisodicPlanningSolution sm = solve_episodic(m);
  EpisodicPlanningSolution smp = solve_episodic(mp);
  std::vector<double> term_opt = episodic_bound_terms(f, m, mp, sm.v);

  double suffix = 0.0, suffix_opt = 0.0;
  for (std::size_t h0 = H; h0-- > 0;) {
    suffix += term[h0];
    suffix_opt += term_opt[h0];
    double sv = linf_diff(v_m[h0], v_mp[h0]);
    double sq = linf_diff(q_m[h0], q_mp[h0]);
    double ov = linf_diff(sm.v[h0], smp.v[h0]);
    double oq = linf_diff(sm.q[h0], smp.q[h0]);
    rep.same_vq = std::min(rep.same_vq, sq - sv);
    rep.same_qb = std::min(rep.same_qb, suffix - sq);
    rep.opt_vq = std::min(rep.opt_vq, oq - ov);
    rep.opt_qb = std::min(rep.opt_qb, suffix_opt - oq);
    if (h0 == 0) {
      rep.same_v = sv;
      rep.same_q = sq;
      rep.same_bound = suffix;
      rep.opt_v = ov;
      rep.opt_q = oq;
      rep.opt_bound = suffix_opt;
    }
  }
  return rep;
}

GapContinuityResult gap_continuity_check(const DiscountedLinearMdp& m,
                                         const EstimatedMdp& est,
                                         double plan_tol) {
  const FeatureMap& f = m.features;
  PlanningSolution mplan = solve_discounted(m);
  PlanningSolution eplan = plan_estimated_discounted(est, f, m.gamma, plan_tol);
  GapContinuityResult r;
  r.clipped = eplan.clipped;
  r.lhs = gap_distance(eplan.gap, mplan.gap);
  std::vector<double> x =
      param_diff(est.theta_hat, m.theta, est.mu_hat, m.mu, m.gamma, &eplan.v);
  r.rhs = 2.0 / (1.0 - m.gamma) * feature_abs_max(f, x);
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

GapContinuityResult gap_continuity_check(const EpisodicLinearMdp& m,
                                         const EstimatedEpisodicMdp& est) {
  const FeatureMap& f = m.features;
  EpisodicPlanningSolution mplan = solve_episodic(m);
  EpisodicPlanningSolution eplan = plan_estimated_episodic(est, f, m.H);
  GapContinuityResult r;
  r.clipped = eplan.clipped;
  r.lhs = gap_distance(eplan.gap, mplan.gap);
  double sum = 0.0;
  for (std::size_t h = 0; h < m.H; ++h) {
    std::vector<double> x = param_diff(est.theta_hat[h], m.theta[h],
                                       est.mu_hat[h], m.mu[h], 1.0,
                                       &eplan.v[h + 1]);
    sum += feature_abs_max(f, x);
  }
  r.rhs = 2.0 * sum;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

UDiffResult u_diff_check(const DiscountedLinearMdp& m, const EstimatedMdp& est,
                         std::span<const double> w, double epsilon,
                         double plan_tol) {
  const FeatureMap& f = m.features;
  double sigma = sigma_of_design(f, w);
  PlanningSolution mplan = solve_discounted(m);
  PlanningSolution eplan = plan_estimated_discounted(est, f, m.gamma, plan_tol);

  double om = 1.0 - m.gamma;
  double om4 = om * om * om * om;
  double gp = mplan.gap + epsilon;
  double gph = eplan.gap + epsilon;
  double ustar_inv = 3.0 * om4 * gp * gp / (10.0 * double(f.d));
  double u_inv = 3.0 * om4 * gph * gph / (10.0 * sigma);

  UDiffResult r;
  r.clipped = eplan.clipped;
  r.lhs = std::abs(ustar_inv - u_inv);
  std::vector<double> x =
      param_diff(est.theta_hat, m.theta, est.mu_hat, m.mu, m.gamma, &eplan.v);
  Mat lam = lambda_of_design(f, w);
  r.rhs = 6.0 * om * om * quad_form(lam, x.data()) +
          (1.25 - double(f.d) / sigma) * ustar_inv;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

UDiffResult u_diff_check(const EpisodicLinearMdp& m,
                         const EstimatedEpisodicMdp& est,
                         std::span<const double> w, double epsilon) {
  const FeatureMap& f = m.features;
  double sigma = sigma_of_design(f, w);
  EpisodicPlanningSolution mplan = solve_episodic(m);
  EpisodicPlanningSolution eplan = plan_estimated_episodic(est, f, m.H);

  double h3 = double(m.H) * double(m.H) * double(m.H);
  double gp = mplan.gap + epsilon;
  double gph = eplan.gap + epsilon;
  double ustar_inv = 3.0 * gp * gp / (10.0 * h3 * double(f.d));
  double u_inv = 3.0 * gph * gph / (10.0 * h3 * sigma);

  UDiffResult r;
  r.clipped = eplan.clipped;
  r.lhs = std::abs(ustar_inv - u_inv);
  Mat lam = lambda_of_design(f, w);
  double quad_sum = 0.0;
  for (std::size_t h = 0; h < m.H; ++h) {
    std::vector<double> x = param_diff(est.theta_hat[h], m.theta[h],
                                       est.mu_hat[h], m.mu[h], 1.0,
                                       &eplan.v[h + 1]);
    quad_sum += quad_form(lam, x.data());
  }
  r.rhs = 6.0 / (double(m.H) * double(m.H)) * quad_sum +
          (1.25 - double(f.d) / sigma) * ustar_inv;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

double log_bound_time(double a, double b) {
  if (a <= 0.0) return 2.0 * b;
  return 2.0 * a * std::log(2.0 * a) + 2.0 * b;
}

}  // namespace linbpi

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "linbpi/estimation.hpp"
#include "linbpi/linalg.hpp"
#include "linbpi/mdp.hpp"

namespace linbpi {

struct AbsoluteContinuityViolated : std::runtime_error {
  explicit AbsoluteContinuityViolated(const std::string& what)
      : std::runtime_error(what) {}
};

// Two models over one shared feature map (verified at construction, along
// with matching gamma / horizon). `absolutely_continuous` records the
// entrywise check that wherever base puts transition or reward mass, alt
// does too.
struct MdpPair {
  MdpPair(const DiscountedLinearMdp& base, const DiscountedLinearMdp& alt);
  MdpPair(const EpisodicLinearMdp& base, const EpisodicLinearMdp& alt);

  const DiscountedLinearMdp* base = nullptr;
  const DiscountedLinearMdp* alt = nullptr;
  const EpisodicLinearMdp* ebase = nullptr;
  const EpisodicLinearMdp* ealt = nullptr;
  bool absolutely_continuous = false;

  bool episodic() const { return ebase != nullptr; }
  const FeatureMap& features() const {
    return episodic() ? ebase->features : base->features;
  }
};

// kl(a, b) between Bernoulli means, natural log, 0 log 0 = 0; +inf when the
// supports disagree in the forbidden direction.
double kl_bernoulli(double a, double b);
double kl_categorical(std::span<const double> p, std::span<const double> q);

// KL between the two models' observation laws at one pair: Bernoulli reward
// term plus categorical next-state term. Throws AbsoluteContinuityViolated
// where the base puts mass the alternative lacks.
double kl_mdp(const MdpPair& pair, std::size_t s, std::size_t a);
double kl_mdp(const MdpPair& pair, std::size_t h, std::size_t s,
              std::size_t a);

// sum_{s,a} w[s,a] KL(s,a); the episodic form sums the per-step divergences
// inside each pair (one round of the generative model queries every step).
double kl_weighted(const MdpPair& pair, std::span<const double> w);

// Certified lower bound on the characteristic-time inverse:
// 3 (1-gamma)^4 (gap+eps)^2 / (10 sigma(w)), and the per-step episodic
// analogue 3 (gap+eps)^2 / (10 H^2 sum_h sigma(w_h)). Lower-bounds
// inf_{M'} sum w KL over qualifying alternatives; not the exact infimum.
double relaxed_characteristic_inverse(const DiscountedLinearMdp& m,
                                      std::span<const double> w,
                                      double epsilon);
double relaxed_characteristic_inverse(
    const EpisodicLinearMdp& m, const std::vector<std::vector<double>>& w_h,
    double epsilon);
// Same allocation for every step.
double relaxed_characteristic_inverse(const EpisodicLinearMdp& m,
                                      std::span<const double> w,
                                      double epsilon);

// inf { sum_i ||x_i||^2_{Lambda_i} : sum_i |phi_i^T x_i| >= delta } together
// with the KKT optimizer x_i = delta Lambda_i^-1 phi_i / sum_j q_j.
struct OptimizationSolution {
  double value = 0.0;
  std::vector<std::vector<double>> x;
};
OptimizationSolution optimization_closed_form(
    const std::vector<std::vector<double>>& phis,
    const std::vector<Mat>& lambdas, double delta);

// lhs KL(alpha || beta) and rhs (6 / (5 ||f||_inf^2)) (E_alpha f - E_beta f)^2
// for finite distributions; the caller asserts lhs >= rhs.
std::pair<double, double> kl_pinsker_variant_check(std::span<const double> alpha,
                                                   std::span<const double> beta,
                                                   std::span<const double> f);

// gap(base) + eps <= ||V*_base - V^{pi*_base}_alt||_inf
//                    + ||Q*_base - Q*_alt||_inf, provided pi*_base is not
// eps-optimal in alt (hypothesis checked with the exact solver); episodic:
// some step must satisfy the per-step analogue.
struct GapBoundResult {
  bool hypothesis = false;  // false: vacuous, nothing asserted
  bool holds = true;
  double lhs = 0.0;
  double rhs = 0.0;  // max over steps in the episodic case
};
GapBoundResult gap_bound_check(const MdpPair& pair, double epsilon,
                               double tol = 1e-9);

// The two value-difference chains ||V diff|| <= ||Q diff|| <= feature bound,
// for a supplied policy and for the optimal policies. Margins are
// rhs - lhs per inequality (episodic: worst case over the starting step);
// negative means violation.
struct ValueDiffReport {
  double same_vq = 0.0, same_qb = 0.0;
  double opt_vq = 0.0, opt_qb = 0.0;
  double same_v = 0.0, same_q = 0.0, same_bound = 0.0;
  double opt_v = 0.0, opt_q = 0.0, opt_bound = 0.0;
  bool holds(double tol = 1e-9) const {
    return same_vq >= -tol && same_qb >= -tol && opt_vq >= -tol &&
           opt_qb >= -tol;
  }
};
ValueDiffReport value_diff_checks(const MdpPair& pair, const Policy& pi);
ValueDiffReport value_diff_checks(const MdpPair& pair,
                                  const EpisodicPolicy& pi);

// |gap(M-hat) - gap(M)| against (2/(1-gamma)) max |phi^T x| with
// x = theta_hat - theta + gamma (mu_hat - mu)^T V-hat*; the episodic bound
// sums per-step maxima with the inner value one step later. `clipped`
// flags plug-in solutions outside the value box, where the bound's
// derivation does not apply and callers should skip the assertion.
struct GapContinuityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
  bool clipped = false;
};
GapContinuityResult gap_continuity_check(const DiscountedLinearMdp& m,
                                         const EstimatedMdp& est,
                                         double plan_tol = 1e-10);
GapContinuityResult gap_continuity_check(const EpisodicLinearMdp& m,
                                         const EstimatedEpisodicMdp& est);

// |U*(M)^-1 - U(M-hat, w)^-1| against
// B = 6 (1-gamma)^2 ||x||^2_{Lambda(w)} + (5/4 - d/sigma(w)) U*(M)^-1
// (episodic first term (6/H^2) sum_h ||x_h||^2), sigma(omega*) = d by the
// Kiefer-Wolfowitz optimum.
struct UDiffResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
  bool clipped = false;
};
UDiffResult u_diff_check(const DiscountedLinearMdp& m, const EstimatedMdp& est,
                         std::span<const double> w, double epsilon,
                         double plan_tol = 1e-10);
UDiffResult u_diff_check(const EpisodicLinearMdp& m,
                         const EstimatedEpisodicMdp& est,
                         std::span<const double> w, double epsilon);

// Sufficient time for t > a log t + b: 2a log(2a) + 2b (a = 0 drops the log
// term).
double log_bound_time(double a, double b);

}  // namespace linbpi

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "linbpi/linalg.hpp"
#include "linbpi/mdp.hpp"

namespace linbpi {

// Running ridge least-squares state against a generative stream. The
// regularized inverse (Gram + lambda I)^-1 is maintained by rank-one
// Sherman-Morrison updates (falling back to a fresh factorization if the
// update denominator degenerates); the raw Gram is kept alongside because the
// stopping rule needs t * Lambda(omega_t) = Phi^T Phi exactly. lambda = 1/d.
struct LseState {
  std::size_t d = 0, S = 0;
  double lambda = 0.0;
  Mat gram;                           // Phi^T Phi (no ridge)
  Mat gram_inv;                       // (Phi^T Phi + lambda I)^-1
  std::vector<double> reward_moment;  // Phi^T R
  Mat next_moment;                    // d x S, column s' = Phi^T 1{s'=.}
  std::size_t t = 0;

  LseState(std::size_t d_, std::size_t S_);
  void update(const double* phi, double reward, std::size_t next);
};

// GSS-E shares one allocation across steps: the same pair is queried once per
// step h each round, so the Gram is common and the moments are per step.
struct EpisodicLseState {
  std::size_t d = 0, S = 0, H = 0;
  double lambda = 0.0;
  Mat gram;
  Mat gram_inv;
  std::vector<std::vector<double>> reward_moment;  // H x d
  std::vector<Mat> next_moment;                    // H of d x S
  std::size_t t = 0;

  EpisodicLseState(std::size_t d_, std::size_t S_, std::size_t H_);
  void update(const double* phi, std::span<const Transition> per_step);
};

// Point estimates; deliberately unconstrained — the implied transition rows
// may be negative or not sum to one, which `improper` reports.
struct EstimatedMdp {
  std::vector<double> theta_hat;  // d
  Mat mu_hat;                     // S x d, row s'
  bool improper = false;
};

struct EstimatedEpisodicMdp {
  std::vector<std::vector<double>> theta_hat;  // H x d
  std::vector<Mat> mu_hat;                     // H of S x d
  bool improper = false;
};

// theta_hat = gram_inv * reward_moment, mu_hat(s') likewise per column; the
// improper flag checks phi^T mu_hat(s') in [0,1] and unit row sums (1e-9).
EstimatedMdp estimate_mdp(const LseState& st, const FeatureMap& f);
EstimatedEpisodicMdp estimate_mdp(const EpisodicLseState& st,
                                  const FeatureMap& f);

// Plug-in planning on a (possibly improper) estimated model: xi-iteration
// with per-sweep clipping of the internal value iterate to [0, (1-gamma)^-1]
// (episodic: [0, H-h] at step h, zero-indexed). Returned tables satisfy
// v[s] == max_a q(s,a) with the unclipped maximum; `clipped` reports an
// active clip at the fixed point; `converged` whether the sup-norm change
// fell below tol within the cap (the clipped operator on an improper model
// is not guaranteed contractive). iter_cap 0 picks the geometric-decay cap.
PlanningSolution plan_estimated_discounted(
    const EstimatedMdp& est, const FeatureMap& f, double gamma,
    double tol = 1e-10, std::size_t iter_cap = 0,
    const std::vector<double>* warm_start = nullptr);
EpisodicPlanningSolution plan_estimated_episodic(const EstimatedEpisodicMdp& est,
                                                 const FeatureMap& f,
                                                 std::size_t H);

}  // namespace linbpi

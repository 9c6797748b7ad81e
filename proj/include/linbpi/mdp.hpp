#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "linbpi/linalg.hpp"
#include "linbpi/rng.hpp"

namespace linbpi {

struct InvalidInstance : std::runtime_error {
  explicit InvalidInstance(const std::string& what)
      : std::runtime_error(what) {}
};

// phi : S x A -> R^d, flattened [(s*A + a)*d]. Shared by both MDP flavors and
// by everything downstream (designs, estimators).
struct FeatureMap {
  std::size_t S = 0, A = 0, d = 0;
  std::vector<double> phi;

  const double* at(std::size_t s, std::size_t a) const {
    return phi.data() + (s * A + a) * d;
  }
  const double* pair(std::size_t idx) const { return phi.data() + idx * d; }
  std::size_t pairs() const { return S * A; }
};

// Throws InvalidInstance naming the violated bound:
//   ||phi(s,a)||_2 <= 1,  span(phi) = R^d.
void validate_features(const FeatureMap& f);

struct DiscountedLinearMdp {
  FeatureMap features;
  double gamma = 0.9;
  std::vector<double> theta;  // d
  Mat mu;                     // S x d, row s' = mu(s')

  // caches built by finalize()
  std::vector<double> rewards;  // SA, clamped to [0,1] after tolerance check
  Mat transitions;              // SA x S
  Mat trans_cumulative;         // SA x S inclusive prefix sums

  // Validates every model bound (throws InvalidInstance naming it) and
  // materializes the reward/transition caches.
  void finalize();
};

struct EpisodicLinearMdp {
  FeatureMap features;
  std::size_t H = 1;
  std::vector<std::vector<double>> theta;  // H x d
  std::vector<Mat> mu;                     // H of (S x d)

  std::vector<std::vector<double>> rewards;  // H x SA
  std::vector<Mat> transitions;              // H of (SA x S)
  std::vector<Mat> trans_cumulative;

  void finalize();
};

using Instance = std::variant<DiscountedLinearMdp, EpisodicLinearMdp>;

struct Policy {
  std::vector<std::size_t> action;  // S
  bool operator==(const Policy&) const = default;
};

struct EpisodicPolicy {
  std::vector<std::vector<std::size_t>> action;  // H x S
  bool operator==(const EpisodicPolicy&) const = default;
};

struct PlanningSolution {
  std::vector<double> v;  // S; satisfies v[s] == max_a q(s,a) exactly
  Mat q;                  // S x A
  Policy policy;          // greedy, smallest index wins ties
  double gap = 0.0;       // min over s, a != policy(s) of v[s] - q(s,a)
  std::size_t iterations = 0;
  bool converged = false;
  bool clipped = false;  // plug-in planners: clip active at the fixed point
};

struct EpisodicPlanningSolution {
  std::vector<std::vector<double>> v;  // (H+1) x S, v[H] == 0
  std::vector<Mat> q;                  // H of (S x A)
  EpisodicPolicy policy;
  double gap = 0.0;  // min additionally over steps h
  bool clipped = false;
};

// Value iteration on the exact model, factored through mu (never materializes
// P*V). Stops when gamma * ||dV||_inf / (1-gamma) <= tol, capped at
// ceil(log((1-gamma)^-1 / tol) / log(1/gamma)) + 1 sweeps.
PlanningSolution solve_discounted(const DiscountedLinearMdp& m,
                                  double tol = 1e-10);
EpisodicPlanningSolution solve_episodic(const EpisodicLinearMdp& m);

// Exact policy evaluation: (I - gamma P_pi) v = r_pi via pivoted elimination.
std::vector<double> evaluate_policy(const DiscountedLinearMdp& m,
                                    const Policy& pi);
// Backward recursion; result[h][s] = V^pi_h(s), h in [0,H).
std::vector<std::vector<double>> evaluate_policy(const EpisodicLinearMdp& m,
                                                 const EpisodicPolicy& pi);
// Q^pi tables derived from the exact V^pi.
Mat policy_q_values(const DiscountedLinearMdp& m,
                    const std::vector<double>& v_pi);
std::vector<Mat> policy_q_values(const EpisodicLinearMdp& m,
                                 const std::vector<std::vector<double>>& v_pi);

// Minimal positive action gap: min over s and a != pi*(s) of V*(s) - Q*(s,a)
// (episodic: also min over h). +infinity when every state has one action.
double gap_of(const PlanningSolution& sol);
double gap_of(const EpisodicPlanningSolution& sol);

struct Transition {
  double reward = 0.0;   // Bernoulli draw in {0,1}
  std::size_t next = 0;  // s' ~ p(s,a,.)
};

// Generative-model access; draws the reward first, then the next state.
Transition sample_transition(const DiscountedLinearMdp& m, std::size_t s,
                             std::size_t a, Rng& rng);
Transition sample_transition(const EpisodicLinearMdp& m, std::size_t h,
                             std::size_t s, std::size_t a, Rng& rng);

struct GeneratorConfig {
  std::size_t d = 2, S = 3, A = 2;
  bool episodic = false;
  double gamma = 0.9;
  std::size_t H = 3;
  double min_gap = 0.0;
  double theta_lo = 0.0, theta_hi = 1.0;  // reward parameter box
  std::size_t max_attempts = 1000;
};

// Simplex construction: the first min(d, SA) pairs carry basis features (so
// the span invariant holds by construction), remaining pairs draw uniform
// simplex points; mu columns are Dirichlet(1) rows over S; theta uniform in
// the configured box. Rejection-samples until gap >= min_gap, throwing after
// max_attempts.
DiscountedLinearMdp generate_discounted(const GeneratorConfig& cfg, Rng& rng);
EpisodicLinearMdp generate_episodic(const GeneratorConfig& cfg, Rng& rng);
Instance generate_instance(const GeneratorConfig& cfg, Rng& rng);

}  // namespace linbpi

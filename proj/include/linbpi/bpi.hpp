#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "linbpi/design.hpp"
#include "linbpi/estimation.hpp"
#include "linbpi/mdp.hpp"
#include "linbpi/rng.hpp"

namespace linbpi {

// zeta(2) = pi^2/6, as it appears inside the stopping threshold.
inline constexpr double kZeta2 = 1.6449340668482264;

struct DegenerateGap : std::runtime_error {
  explicit DegenerateGap(const std::string& what) : std::runtime_error(what) {}
};

// Characteristic-time surrogates. All throw DegenerateGap when gap+epsilon
// vanishes (the surrogate diverges).
double u_star_discounted(std::size_t d, double gamma, double gap,
                         double epsilon);
double u_of_design_discounted(double sigma_omega, double gamma, double gap,
                              double epsilon);
// Same-allocation-per-step forms (sigma enters through one shared design).
double u_star_episodic(std::size_t d, std::size_t H, double gap,
                       double epsilon);
double u_of_design_episodic(double sigma_omega, std::size_t H, double gap,
                            double epsilon);

// beta(delta, t) = (12/5) (2 log(sqrt(e) zeta(2) t^2 / delta)
//                          + d log(8 e^4 d t^2)).
double beta_threshold(double delta, double t, std::size_t d);
// H parallel estimators: H * beta(delta/H, t).
double beta_threshold_episodic(double delta, double t, std::size_t d,
                               std::size_t H);

// Z(t) = t * U(M-hat_t, omega_t)^-1 with the plug-in gap from est_plan and
// sigma(omega_t) recomputed from the realized fractions. Returns 0 when the
// plug-in gap and epsilon both vanish (the round can then never stop).
// Propagates SingularDesign while Lambda(omega_t) is rank-deficient.
double stopping_statistic(const PlanningSolution& est_plan,
                          const RealizedAllocation& alloc, const FeatureMap& f,
                          double gamma, double epsilon);
double stopping_statistic(const EpisodicPlanningSolution& est_plan,
                          const RealizedAllocation& alloc, const FeatureMap& f,
                          std::size_t H, double epsilon);

struct StoppingConfig {
  double delta = 0.1;
  double epsilon = 0.0;
  std::size_t check_stride = 1;  // rounds between stopping checks
  std::size_t t_max = 0;         // 0: 4x predicted_stop_time from the true gap
  bool record_trace = false;
  double plan_tol = 1e-10;
};

struct ZSample {
  std::size_t t = 0;
  double z = 0.0;
  double beta = 0.0;  // the compared threshold (episodic: H beta(delta/H, t))
};

struct TrialRecord {
  std::uint64_t seed = 0;  // filled by the caller that derived the stream
  std::size_t tau = 0;
  bool capped = false;
  bool correct = false;
  std::variant<Policy, EpisodicPolicy> returned_policy;
  double sigma_design = 0.0;  // certificate value of the sampled design
  double true_gap = 0.0;
  std::vector<ZSample> z_trace;  // only when record_trace
  double wallclock_ms = 0.0;
};

// Everything a stopping check saw, for trace replay and oracle validation.
// Pointers are valid only during the callback; the episodic pair is null on
// discounted runs and vice versa.
struct GssCheckpoint {
  std::size_t t = 0;
  double z = 0.0;
  double beta = 0.0;
  double sigma_t = 0.0;  // NaN while Lambda(omega_t) is singular
  double gap_hat = 0.0;
  const EstimatedMdp* est = nullptr;
  const PlanningSolution* plan = nullptr;
  const EstimatedEpisodicMdp* est_episodic = nullptr;
  const EpisodicPlanningSolution* plan_episodic = nullptr;
  const RealizedAllocation* alloc = nullptr;
};
using GssObserver = std::function<void(const GssCheckpoint&)>;

// Deterministic upper prediction of tau: the smallest t with
// t > 24 u_star beta(delta, t) (episodic: 24 u_star H beta(delta/H, t)),
// bracketed by the logarithm bound and refined by bisection.
std::size_t predicted_stop_time(double u_star, double delta, std::size_t d);
std::size_t predicted_stop_time_episodic(double u_star, double delta,
                                         std::size_t d, std::size_t H);

// epsilon-optimality against the exact solver: discounted compares V^pi to
// V* at every state; episodic judges the value at the first step only.
bool policy_is_eps_optimal(const DiscountedLinearMdp& m, const Policy& pi,
                           double epsilon, const std::vector<double>& v_star,
                           double tol = 1e-9);
bool policy_is_eps_optimal(const DiscountedLinearMdp& m, const Policy& pi,
                           double epsilon, double tol = 1e-9);
bool policy_is_eps_optimal(const EpisodicLinearMdp& m,
                           const EpisodicPolicy& pi, double epsilon,
                           const std::vector<double>& v_star_first,
                           double tol = 1e-9);
bool policy_is_eps_optimal(const EpisodicLinearMdp& m,
                           const EpisodicPolicy& pi, double epsilon,
                           double tol = 1e-9);

// One full identification run: compute the design once, then sample pairs
// i.i.d. from it, feed the estimator, and every check_stride rounds replan
// and test Z(t) against the threshold. Returns the greedy policy of the
// model at stopping (or at the cap, flagged capped). `correct` is judged
// against the exact solver of m.
TrialRecord gss_run(const DiscountedLinearMdp& m, const StoppingConfig& cfg,
                    double eps_g, Rng& rng, const GssObserver& obs = {});
// Episodic variant: each round queries the sampled pair once per step, all
// steps sharing the Gram; stops on Z(t) > H beta(delta/H, t).
TrialRecord gsse_run(const EpisodicLinearMdp& m, const StoppingConfig& cfg,
                     double eps_g, Rng& rng, const GssObserver& obs = {});

}  // namespace linbpi

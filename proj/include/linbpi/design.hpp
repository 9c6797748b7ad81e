#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "linbpi/linalg.hpp"
#include "linbpi/mdp.hpp"

namespace linbpi {

struct SingularDesign : SingularMatrix {
  explicit SingularDesign(const std::string& what) : SingularMatrix(what) {}
};

// Weighted information matrix Lambda(w) = sum_i w[i] phi_i phi_i^T over the
// state-action pairs of f.
Mat lambda_of_design(const FeatureMap& f, std::span<const double> w);

// sigma(w) = max_i ||phi_i||^2 _ {Lambda(w)^-1}. Throws SingularDesign when
// Lambda(w) is rank-deficient or past the 1e12 condition guard.
double sigma_of_design(const FeatureMap& f, std::span<const double> w);

struct Design {
  std::vector<double> w;  // distribution over pairs (pruned + renormalized)
  double sigma = 0.0;     // recomputed from scratch on the returned w
  std::size_t iterations = 0;
  bool converged = false;  // certificate sigma <= (1+eps_g) * d reached
};

// Frank-Wolfe / Fedorov-Wynn iteration for the G-optimal design: uniform
// start, move mass onto the pair attaining sigma with the closed-form step
// (g/d - 1)/(g - 1), rank-one updates of the inverse and of all quadratic
// forms, a full refresh every few hundred steps to cap drift, support pruned
// below 1e-12 and renormalized at the end.
Design g_optimal_design(const FeatureMap& f, double eps_g = 0.01,
                        std::size_t max_iters = 100000);

// Sampling history against a fixed design: integer counts per pair.
struct RealizedAllocation {
  explicit RealizedAllocation(std::size_t pairs) : counts(pairs, 0) {}
  std::vector<std::size_t> counts;
  std::size_t t = 0;

  void record_sample(std::size_t pair_idx) {
    counts[pair_idx] += 1;
    t += 1;
  }
  std::vector<double> fractions() const {
    std::vector<double> w(counts.size(), 0.0);
    if (t == 0) return w;
    for (std::size_t i = 0; i < counts.size(); ++i)
      w[i] = double(counts[i]) / double(t);
    return w;
  }
};

// Smallest integer t with t >= 2 (1+eps_g) (1/rho^2 + 1/(3 rho)) d log(2d/delta):
// after that many design-weighted draws the realized information matrix is a
// (1 +/- rho) multiplicative approximation with probability 1 - delta.
std::size_t concentration_time(std::size_t d, double delta, double rho,
                               double eps_g);

}  // namespace linbpi

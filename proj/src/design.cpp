#include "linbpi/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linbpi/kernels.hpp"

namespace linbpi {

Mat lambda_of_design(const FeatureMap& f, std::span<const double> w) {
  if (w.size() != f.pairs())
    throw std::invalid_argument("lambda_of_design: weight count mismatch");
  Mat lam(f.d, f.d);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0)
      kern::ops().rank1_update(lam.a.data(), f.pair(i), w[i], f.d);
  return lam;
}

double sigma_of_design(const FeatureMap& f, std::span<const double> w) {
  const Mat lam = lambda_of_design(f, w);
  try {
    const Cholesky chol(lam);
    double best = 0.0;
    for (std::size_t i = 0; i < f.pairs(); ++i)
      best = std::max(best, chol.quad_form_inv(f.pair(i), f.d));
    return best;
  } catch (const SingularMatrix& e) {
    throw SingularDesign(std::string("sigma_of_design: Lambda(w) singular (") +
                         e.what() + ")");
  }
}

Design g_optimal_design(const FeatureMap& f, double eps_g,
                        std::size_t max_iters) {
  const std::size_t n = f.pairs(), d = f.d;
  const double dd = double(d);
  const double threshold = (1.0 + eps_g) * dd;
  constexpr std::size_t kRefreshEvery = 256;

  Design out;
  out.w.assign(n, 1.0 / double(n));

  Mat inv(d, d);
  std::vector<double> q(n, 0.0);  // q[i] = ||phi_i||^2 in inv metric
  auto refresh = [&] {
    inv = Cholesky(lambda_of_design(f, out.w)).inverse();
    for (std::size_t i = 0; i < n; ++i)
      q[i] = kern::ops().quad_form(inv.a.data(), f.pair(i), d);
  };
  refresh();

  std::vector<double> u(d, 0.0), proj(n, 0.0);
  std::size_t k = 0;
  for (; k < max_iters; ++k) {
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (q[i] > q[j]) j = i;
    const double g = q[j];
    if (g <= threshold) {
      out.converged = true;
      break;
    }
    // Closed-form line search for the D-/G-optimal update toward e_j.
    const double alpha = (g / dd - 1.0) / (g - 1.0);
    const double keep = 1.0 - alpha;
    kern::ops().scale(keep, out.w.data(), n);
    out.w[j] += alpha;

    // Sherman-Morrison on the inverse and on every quadratic form:
    //   Lambda' = keep * Lambda + alpha phi_j phi_j^T.
    kern::ops().matvec(inv.a.data(), f.pair(j), u.data(), d, d);
    const double beta = alpha / keep;
    const double c = beta / (1.0 + beta * g);
    kern::ops().rank1_update(inv.a.data(), u.data(), -c, d);
    kern::ops().scale(1.0 / keep, inv.a.data(), d * d);
    kern::ops().matvec(f.phi.data(), u.data(), proj.data(), n, d);
    for (std::size_t i = 0; i < n; ++i)
      q[i] = (q[i] - c * proj[i] * proj[i]) / keep;

    if ((k + 1) % kRefreshEvery == 0) refresh();
  }
  out.iterations = k;

  // Prune dust, renormalize, and certify from scratch.
  double total = 0.0;
  for (auto& wi : out.w) {
    if (wi < 1e-12) wi = 0.0;
    total += wi;
  }
  for (auto& wi : out.w) wi /= total;
  out.sigma = sigma_of_design(f, out.w);
  out.converged = out.sigma <= threshold * (1.0 + 1e-9);
  return out;
}

std::size_t concentration_time(std::size_t d, double delta, double rho,
                               double eps_g) {
  if (d == 0) throw std::invalid_argument("concentration_time: d == 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("concentration_time: delta outside (0,1)");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("concentration_time: rho outside (0,1)");
  if (eps_g < 0.0)
    throw std::invalid_argument("concentration_time: eps_g negative");
  const double bound = 2.0 * (1.0 + eps_g) *
                       (1.0 / (rho * rho) + 1.0 / (3.0 * rho)) * double(d) *
                       std::log(2.0 * double(d) / delta);
  return std::size_t(std::ceil(bound));
}

}  // namespace linbpi

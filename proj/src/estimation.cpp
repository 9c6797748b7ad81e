#include "linbpi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linbpi/kernels.hpp"

namespace linbpi {

namespace {

Mat ridge_identity_inverse(std::size_t d, double lambda) {
  Mat m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0 / lambda;
  return m;
}

Mat fresh_regularized_inverse(const Mat& gram, double lambda) {
  Mat a = gram;
  for (std::size_t i = 0; i < a.rows; ++i) a(i, i) += lambda;
  return Cholesky(a).inverse();
}

// Sherman-Morrison on inv <- (A + phi phi^T)^-1. Returns false on a
// degenerate denominator so the caller can refactorize.
bool rank1_inverse_update(Mat& inv, const double* phi, std::size_t d) {
  std::vector<double> u(d, 0.0);
  kern::ops().matvec(inv.a.data(), phi, u.data(), d, d);
  const double denom = 1.0 + kern::ops().dot(phi, u.data(), d);
  if (!(denom > 1e-12) || !std::isfinite(denom)) return false;
  kern::ops().rank1_update(inv.a.data(), u.data(), -1.0 / denom, d);
  return true;
}

}  // namespace

LseState::LseState(std::size_t d_, std::size_t S_)
    : d(d_), S(S_), lambda(1.0 / double(d_)), gram(d_, d_),
      gram_inv(ridge_identity_inverse(d_, 1.0 / double(d_))),
      reward_moment(d_, 0.0), next_moment(d_, S_) {}

void LseState::update(const double* phi, double reward, std::size_t next) {
  kern::ops().rank1_update(gram.a.data(), phi, 1.0, d);
  if (!rank1_inverse_update(gram_inv, phi, d))
    gram_inv = fresh_regularized_inverse(gram, lambda);
  kern::ops().axpy(reward, phi, reward_moment.data(), d);
  for (std::size_t j = 0; j < d; ++j) next_moment(j, next) += phi[j];
  ++t;
}

EpisodicLseState::EpisodicLseState(std::size_t d_, std::size_t S_,
                                   std::size_t H_)
    : d(d_), S(S_), H(H_), lambda(1.0 / double(d_)), gram(d_, d_),
      gram_inv(ridge_identity_inverse(d_, 1.0 / double(d_))),
      reward_moment(H_, std::vector<double>(d_, 0.0)),
      next_moment(H_, Mat(d_, S_)) {}

void EpisodicLseState::update(const double* phi,
                              std::span<const Transition> per_step) {
  kern::ops().rank1_update(gram.a.data(), phi, 1.0, d);
  if (!rank1_inverse_update(gram_inv, phi, d))
    gram_inv = fresh_regularized_inverse(gram, lambda);
  for (std::size_t h = 0; h < H; ++h) {
    kern::ops().axpy(per_step[h].reward, phi, reward_moment[h].data(), d);
    for (std::size_t j = 0; j < d; ++j)
      next_moment[h](j, per_step[h].next) += phi[j];
  }
  ++t;
}

namespace {

std::vector<double> apply_inverse(const Mat& inv,
                                  const std::vector<double>& b) {
  std::vector<double> x(inv.rows, 0.0);
  kern::ops().matvec(inv.a.data(), b.data(), x.data(), inv.rows, inv.cols);
  return x;
}

Mat mu_from_moments(const Mat& inv, const Mat& next_moment, std::size_t d,
                    std::size_t S) {
  Mat mu_hat(S, d);
  std::vector<double> col(d, 0.0), row(d, 0.0);
  for (std::size_t s2 = 0; s2 < S; ++s2) {
    for (std::size_t j = 0; j < d; ++j) col[j] = next_moment(j, s2);
    kern::ops().matvec(inv.a.data(), col.data(), row.data(), d, d);
    for (std::size_t j = 0; j < d; ++j) mu_hat(s2, j) = row[j];
  }
  return mu_hat;
}

bool rows_improper(const FeatureMap& f, const Mat& mu_hat) {
  constexpr double tol = 1e-9;
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    double sum = 0.0;
    for (std::size_t s2 = 0; s2 < f.S; ++s2) {
      const double p = kern::ops().dot(f.pair(i), mu_hat.row(s2), f.d);
      if (p < -tol || p > 1.0 + tol) return true;
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) return true;
  }
  return false;
}

}  // namespace

EstimatedMdp estimate_mdp(const LseState& st, const FeatureMap& f) {
  EstimatedMdp est;
  est.theta_hat = apply_inverse(st.gram_inv, st.reward_moment);
  est.mu_hat = mu_from_moments(st.gram_inv, st.next_moment, st.d, st.S);
  est.improper = rows_improper(f, est.mu_hat);
  return est;
}

EstimatedEpisodicMdp estimate_mdp(const EpisodicLseState& st,
                                  const FeatureMap& f) {
  EstimatedEpisodicMdp est;
  est.improper = false;
  for (std::size_t h = 0; h < st.H; ++h) {
    est.theta_hat.push_back(apply_inverse(st.gram_inv, st.reward_moment[h]));
    est.mu_hat.push_back(
        mu_from_moments(st.gram_inv, st.next_moment[h], st.d, st.S));
    est.improper = est.improper || rows_improper(f, est.mu_hat.back());
  }
  return est;
}

PlanningSolution plan_estimated_discounted(const EstimatedMdp& est,
                                           const FeatureMap& f, double gamma,
                                           double tol, std::size_t iter_cap,
                                           const std::vector<double>* warm_start) {
  const std::size_t S = f.S, A = f.A, d = f.d, n = S * A;
  const double vmax = 1.0 / (1.0 - gamma);
  Mat mu_t(d, S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < d; ++j) mu_t(j, s) = est.mu_hat(s, j);

  if (iter_cap == 0)
    iter_cap = std::size_t(std::ceil(std::log(1.0 / ((1.0 - gamma) * tol)) /
                                     std::log(1.0 / gamma))) +
               1;

  std::vector<double> v(S, 0.0);
  if (warm_start != nullptr && warm_start->size() == S) {
    v = *warm_start;
    for (auto& x : v) x = std::clamp(x, 0.0, vmax);
  }
  std::vector<double> w(d, 0.0), xi(d, 0.0), qf(n, 0.0);

  PlanningSolution sol;
  sol.q = Mat(S, A);
  bool converged = false, clipped = false;
  std::size_t it = 0;
  while (it < iter_cap) {
    ++it;
    kern::ops().matvec(mu_t.a.data(), v.data(), w.data(), d, S);
    for (std::size_t j = 0; j < d; ++j) xi[j] = est.theta_hat[j] + gamma * w[j];
    kern::ops().matvec(f.phi.data(), xi.data(), qf.data(), n, d);
    double delta = 0.0;
    bool clip_now = false;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) best = std::max(best, qf[s * A + a]);
      const double clipped_best = std::clamp(best, 0.0, vmax);
      if (std::abs(clipped_best - best) > 1e-12) clip_now = true;
      delta = std::max(delta, std::abs(clipped_best - v[s]));
      v[s] = clipped_best;
    }
    clipped = clip_now;
    if (delta < tol) {
      converged = true;
      break;
    }
  }
  // Final tables from the clipped fixed-point iterate; v is the unclipped
  // row maximum so the v == max_a q identity is exact.
  kern::ops().matvec(mu_t.a.data(), v.data(), w.data(), d, S);
  for (std::size_t j = 0; j < d; ++j) xi[j] = est.theta_hat[j] + gamma * w[j];
  kern::ops().matvec(f.phi.data(), xi.data(), qf.data(), n, d);
  sol.v.assign(S, 0.0);
  sol.policy.action.assign(S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < A; ++a) {
      sol.q(s, a) = qf[s * A + a];
      if (sol.q(s, a) > sol.q(s, best)) best = a;
    }
    sol.policy.action[s] = best;
    sol.v[s] = sol.q(s, best);
    if (sol.v[s] < -1e-12 || sol.v[s] > vmax + 1e-12) clipped = true;
  }
  sol.iterations = it;
  sol.converged = converged;
  sol.clipped = clipped;
  sol.gap = gap_of(sol);
  return sol;
}

EpisodicPlanningSolution plan_estimated_episodic(
    const EstimatedEpisodicMdp& est, const FeatureMap& f, std::size_t H) {
  const std::size_t S = f.S, A = f.A, d = f.d, n = S * A;
  EpisodicPlanningSolution sol;
  sol.v.assign(H + 1, std::vector<double>(S, 0.0));
  sol.q.assign(H, Mat(S, A));
  sol.policy.action.assign(H, std::vector<std::size_t>(S, 0));
  std::vector<double> v_clip(S, 0.0), w(d, 0.0), xi(d, 0.0), qf(n, 0.0);
  bool clipped = false;
  for (std::size_t h = H; h-- > 0;) {
    Mat mu_t(d, S);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t j = 0; j < d; ++j) mu_t(j, s) = est.mu_hat[h](s, j);
    kern::ops().matvec(mu_t.a.data(), v_clip.data(), w.data(), d, S);
    for (std::size_t j = 0; j < d; ++j) xi[j] = est.theta_hat[h][j] + w[j];
    kern::ops().matvec(f.phi.data(), xi.data(), qf.data(), n, d);
    const double vmax = double(H - h);
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 0; a < A; ++a) {
        sol.q[h](s, a) = qf[s * A + a];
        if (sol.q[h](s, a) > sol.q[h](s, best)) best = a;
      }
      sol.policy.action[h][s] = best;
      sol.v[h][s] = sol.q[h](s, best);
      const double cl = std::clamp(sol.v[h][s], 0.0, vmax);
      if (std::abs(cl - sol.v[h][s]) > 1e-12) clipped = true;
      v_clip[s] = cl;
    }
  }
  sol.clipped = clipped;
  sol.gap = gap_of(sol);
  return sol;
}

}  // namespace linbpi

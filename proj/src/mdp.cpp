#include "linbpi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linbpi/kernels.hpp"

namespace linbpi {

namespace {

constexpr double kRewardTol = 1e-9;
constexpr double kTransTol = 1e-10;
constexpr double kNormTol = 1e-9;

std::size_t feature_rank(const FeatureMap& f) {
  // Row-echelon rank of the SA x d feature matrix, pivot tolerance scaled to
  // the largest entry.
  Mat m(f.pairs(), f.d);
  m.a = f.phi;
  double scale = 0.0;
  for (double x : m.a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0;
  const double tol = 1e-10 * scale;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < f.d && rank < m.rows; ++col) {
    std::size_t p = rank;
    for (std::size_t i = rank + 1; i < m.rows; ++i)
      if (std::abs(m(i, col)) > std::abs(m(p, col))) p = i;
    if (std::abs(m(p, col)) <= tol) continue;
    if (p != rank)
      for (std::size_t j = 0; j < f.d; ++j) std::swap(m(p, j), m(rank, j));
    for (std::size_t i = rank + 1; i < m.rows; ++i) {
      const double fac = m(i, col) / m(rank, col);
      if (fac != 0.0)
        for (std::size_t j = col; j < f.d; ++j) m(i, j) -= fac * m(rank, j);
    }
    ++rank;
  }
  return rank;
}

void check_theta(const std::vector<double>& theta, std::size_t d,
                 const std::string& label) {
  if (theta.size() != d)
    throw InvalidInstance(label + ": expected length " + std::to_string(d) +
                          ", got " + std::to_string(theta.size()));
  const double n = norm2(theta);
  if (n > std::sqrt(double(d)) + kNormTol)
    throw InvalidInstance(label + ": bound ||theta||_2 <= sqrt(d) violated (" +
                          std::to_string(n) + " > " +
                          std::to_string(std::sqrt(double(d))) + ")");
}

void check_mu(const Mat& mu, std::size_t S, std::size_t d,
              const std::string& label) {
  if (mu.rows != S || mu.cols != d)
    throw InvalidInstance(label + ": expected shape " + std::to_string(S) +
                          "x" + std::to_string(d));
  std::vector<double> abs_sum(d, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < d; ++j) abs_sum[j] += std::abs(mu(s, j));
  const double n = norm2(abs_sum);
  if (n > std::sqrt(double(d)) + kNormTol)
    throw InvalidInstance(label +
                          ": bound ||sum_s' |mu(s')| ||_2 <= sqrt(d) violated "
                          "(" +
                          std::to_string(n) + " > " +
                          std::to_string(std::sqrt(double(d))) + ")");
}

// Rewards r = phi . theta must land in [0,1] (tolerance 1e-9); the cache is
// clamped so Bernoulli sampling sees exact probabilities.
std::vector<double> build_rewards(const FeatureMap& f,
                                  const std::vector<double>& theta,
                                  const std::string& label) {
  std::vector<double> r(f.pairs(), 0.0);
  kern::ops().matvec(f.phi.data(), theta.data(), r.data(), f.pairs(), f.d);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < -kRewardTol || r[i] > 1.0 + kRewardTol)
      throw InvalidInstance(
          label + ": bound r(s,a) in [0,1] violated at pair (" +
          std::to_string(i / f.A) + "," + std::to_string(i % f.A) + "): r = " +
          std::to_string(r[i]));
    r[i] = std::clamp(r[i], 0.0, 1.0);
  }
  return r;
}

// Transition rows p(s,a,.) = phi(s,a)^T mu(.): entries in [0,1] (tol 1e-10),
// each row summing to 1 (tol 1e-10). Cache rows are clamped nonnegative and
// paired with inclusive prefix sums for categorical sampling.
void build_transitions(const FeatureMap& f, const Mat& mu,
                       const std::string& label, Mat& p, Mat& cum) {
  const std::size_t S = f.S, n = f.pairs();
  p = Mat(n, S);
  cum = Mat(n, S);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      const double v = kern::ops().dot(f.pair(i), mu.row(s2), f.d);
      if (v < -kTransTol || v > 1.0 + kTransTol)
        throw InvalidInstance(
            label + ": bound p(s,a,s') in [0,1] violated at pair (" +
            std::to_string(i / f.A) + "," + std::to_string(i % f.A) +
            "), s' = " + std::to_string(s2) + ": p = " + std::to_string(v));
      p(i, s2) = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > kTransTol)
      throw InvalidInstance(
          label + ": transition row (" + std::to_string(i / f.A) + "," +
          std::to_string(i % f.A) + ") sums to " + std::to_string(sum) +
          " (bound |sum - 1| <= 1e-10)");
    double acc = 0.0;
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      p(i, s2) = std::clamp(p(i, s2), 0.0, 1.0);
      acc += p(i, s2);
      cum(i, s2) = acc;
    }
  }
}

std::size_t greedy_row(const double* q, std::size_t A) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < A; ++a)
    if (q[a] > q[best]) best = a;  // strict: smallest index wins ties
  return best;
}

}  // namespace

void validate_features(const FeatureMap& f) {
  if (f.S == 0 || f.A == 0 || f.d == 0)
    throw InvalidInstance("features: S, A, d must all be positive");
  if (f.phi.size() != f.pairs() * f.d)
    throw InvalidInstance("features: phi has " +
                          std::to_string(f.phi.size()) + " entries, expected " +
                          std::to_string(f.pairs() * f.d));
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    const double n2 = kern::ops().dot(f.pair(i), f.pair(i), f.d);
    if (n2 > 1.0 + 2.0 * kNormTol)
      throw InvalidInstance(
          "features: bound ||phi(s,a)||_2 <= 1 violated at pair (" +
          std::to_string(i / f.A) + "," + std::to_string(i % f.A) +
          "): norm = " + std::to_string(std::sqrt(n2)));
  }
  const std::size_t r = feature_rank(f);
  if (r < f.d)
    throw InvalidInstance("features: span R^d violated (rank " +
                          std::to_string(r) + " < d = " + std::to_string(f.d) +
                          ")");
}

void DiscountedLinearMdp::finalize() {
  validate_features(features);
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InvalidInstance("gamma must lie in (0,1), got " +
                          std::to_string(gamma));
  check_theta(theta, features.d, "theta");
  check_mu(mu, features.S, features.d, "mu");
  rewards = build_rewards(features, theta, "rewards");
  build_transitions(features, mu, "transitions", transitions,
                    trans_cumulative);
}

void EpisodicLinearMdp::finalize() {
  validate_features(features);
  if (H == 0) throw InvalidInstance("H must be positive");
  if (theta.size() != H || mu.size() != H)
    throw InvalidInstance("episodic parameters must have H entries");
  rewards.assign(H, {});
  transitions.assign(H, {});
  trans_cumulative.assign(H, {});
  for (std::size_t h = 0; h < H; ++h) {
    const std::string tag = "step " + std::to_string(h);
    check_theta(theta[h], features.d, tag + " theta");
    check_mu(mu[h], features.S, features.d, tag + " mu");
    rewards[h] = build_rewards(features, theta[h], tag + " rewards");
    build_transitions(features, mu[h], tag + " transitions", transitions[h],
                      trans_cumulative[h]);
  }
}

PlanningSolution solve_discounted(const DiscountedLinearMdp& m, double tol) {
  const std::size_t S = m.features.S, A = m.features.A, d = m.features.d;
  const std::size_t n = S * A;
  // mu^T as d x S for the factored backup Q = r + gamma * Phi (mu^T v).
  Mat mu_t(d, S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < d; ++j) mu_t(j, s) = m.mu(s, j);

  const std::size_t cap =
      std::size_t(std::ceil(std::log(1.0 / ((1.0 - m.gamma) * tol)) /
                            std::log(1.0 / m.gamma))) +
      1;

  std::vector<double> v(S, 0.0), v_next(S, 0.0), w(d, 0.0), qf(n, 0.0);
  PlanningSolution sol;
  sol.q = Mat(S, A);
  bool converged = false;
  std::size_t it = 0;
  while (it < cap) {
    ++it;
    kern::ops().matvec(mu_t.a.data(), v.data(), w.data(), d, S);
    kern::ops().matvec(m.features.phi.data(), w.data(), qf.data(), n, d);
    double delta = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        const double q = m.rewards[s * A + a] + m.gamma * qf[s * A + a];
        sol.q(s, a) = q;
        if (q > best) best = q;
      }
      delta = std::max(delta, std::abs(best - v[s]));
      v_next[s] = best;
    }
    v.swap(v_next);
    if (m.gamma * delta / (1.0 - m.gamma) <= tol) {
      converged = true;
      break;
    }
  }
  // One extra backup from the converged v so that v == rowmax(q) holds
  // exactly on the returned tables.
  kern::ops().matvec(mu_t.a.data(), v.data(), w.data(), d, S);
  kern::ops().matvec(m.features.phi.data(), w.data(), qf.data(), n, d);
  sol.v.assign(S, 0.0);
  sol.policy.action.assign(S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a)
      sol.q(s, a) = m.rewards[s * A + a] + m.gamma * qf[s * A + a];
    sol.policy.action[s] = greedy_row(sol.q.row(s), A);
    sol.v[s] = sol.q(s, sol.policy.action[s]);
  }
  sol.iterations = it;
  sol.converged = converged;
  sol.gap = gap_of(sol);
  return sol;
}

EpisodicPlanningSolution solve_episodic(const EpisodicLinearMdp& m) {
  const std::size_t S = m.features.S, A = m.features.A, d = m.features.d;
  const std::size_t n = S * A;
  EpisodicPlanningSolution sol;
  sol.v.assign(m.H + 1, std::vector<double>(S, 0.0));
  sol.q.assign(m.H, Mat(S, A));
  sol.policy.action.assign(m.H, std::vector<std::size_t>(S, 0));
  std::vector<double> w(d, 0.0), qf(n, 0.0);
  for (std::size_t h = m.H; h-- > 0;) {
    Mat mu_t(d, S);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t j = 0; j < d; ++j) mu_t(j, s) = m.mu[h](s, j);
    kern::ops().matvec(mu_t.a.data(), sol.v[h + 1].data(), w.data(), d, S);
    kern::ops().matvec(m.features.phi.data(), w.data(), qf.data(), n, d);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a)
        sol.q[h](s, a) = m.rewards[h][s * A + a] + qf[s * A + a];
      const std::size_t best = greedy_row(sol.q[h].row(s), A);
      sol.policy.action[h][s] = best;
      sol.v[h][s] = sol.q[h](s, best);
    }
  }
  sol.gap = gap_of(sol);
  return sol;
}

std::vector<double> evaluate_policy(const DiscountedLinearMdp& m,
                                    const Policy& pi) {
  const std::size_t S = m.features.S, A = m.features.A;
  Mat sys(S, S);
  std::vector<double> b(S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t row = s * A + pi.action[s];
    for (std::size_t s2 = 0; s2 < S; ++s2)
      sys(s, s2) = (s == s2 ? 1.0 : 0.0) - m.gamma * m.transitions(row, s2);
    b[s] = m.rewards[row];
  }
  return solve_linear(std::move(sys), std::move(b));
}

std::vector<std::vector<double>> evaluate_policy(const EpisodicLinearMdp& m,
                                                 const EpisodicPolicy& pi) {
  const std::size_t S = m.features.S, A = m.features.A;
  std::vector<std::vector<double>> v(m.H + 1, std::vector<double>(S, 0.0));
  for (std::size_t h = m.H; h-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t row = s * A + pi.action[h][s];
      v[h][s] = m.rewards[h][row] +
                kern::ops().dot(m.transitions[h].row(row), v[h + 1].data(), S);
    }
  }
  v.pop_back();
  return v;
}

Mat policy_q_values(const DiscountedLinearMdp& m,
                    const std::vector<double>& v_pi) {
  const std::size_t S = m.features.S, A = m.features.A;
  Mat q(S, A);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      q(s, a) = m.rewards[s * A + a] +
                m.gamma * kern::ops().dot(m.transitions.row(s * A + a),
                                          v_pi.data(), S);
  return q;
}

std::vector<Mat> policy_q_values(const EpisodicLinearMdp& m,
                                 const std::vector<std::vector<double>>& v_pi) {
  const std::size_t S = m.features.S, A = m.features.A;
  std::vector<Mat> q(m.H, Mat(S, A));
  for (std::size_t h = 0; h < m.H; ++h) {
    const std::vector<double> zero(S, 0.0);
    const std::vector<double>& next = (h + 1 < m.H) ? v_pi[h + 1] : zero;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        q[h](s, a) =
            m.rewards[h][s * A + a] +
            kern::ops().dot(m.transitions[h].row(s * A + a), next.data(), S);
  }
  return q;
}

double gap_of(const PlanningSolution& sol) {
  const std::size_t S = sol.q.rows, A = sol.q.cols;
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      if (a != sol.policy.action[s])
        g = std::min(g, sol.v[s] - sol.q(s, a));
  return g;
}

double gap_of(const EpisodicPlanningSolution& sol) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < sol.q.size(); ++h) {
    const std::size_t S = sol.q[h].rows, A = sol.q[h].cols;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a)
        if (a != sol.policy.action[h][s])
          g = std::min(g, sol.v[h][s] - sol.q[h](s, a));
  }
  return g;
}

namespace {
Transition sample_impl(const std::vector<double>& rewards, const Mat& cum,
                       std::size_t row, Rng& rng) {
  Transition t;
  t.reward = rng.bernoulli(rewards[row]) ? 1.0 : 0.0;
  t.next = rng.categorical_from_cumulative(
      std::span<const double>(cum.row(row), cum.cols));
  return t;
}
}  // namespace

Transition sample_transition(const DiscountedLinearMdp& m, std::size_t s,
                             std::size_t a, Rng& rng) {
  return sample_impl(m.rewards, m.trans_cumulative, s * m.features.A + a, rng);
}

Transition sample_transition(const EpisodicLinearMdp& m, std::size_t h,
                             std::size_t s, std::size_t a, Rng& rng) {
  return sample_impl(m.rewards[h], m.trans_cumulative[h],
                     s * m.features.A + a, rng);
}

namespace {

FeatureMap random_features(const GeneratorConfig& cfg, Rng& rng) {
  FeatureMap f;
  f.S = cfg.S;
  f.A = cfg.A;
  f.d = cfg.d;
  if (cfg.d > cfg.S * cfg.A)
    throw std::invalid_argument(
        "generator: d > S*A cannot span R^d with one feature per pair");
  f.phi.assign(f.pairs() * f.d, 0.0);
  for (std::size_t i = 0; i < f.pairs(); ++i) {
    double* row = f.phi.data() + i * f.d;
    if (i < f.d) {
      row[i] = 1.0;  // basis anchor: spanning by construction
    } else {
      double total = 0.0;
      for (std::size_t j = 0; j < f.d; ++j) {
        row[j] = rng.exponential();
        total += row[j];
      }
      for (std::size_t j = 0; j < f.d; ++j) row[j] /= total;
    }
  }
  return f;
}

Mat random_mu(std::size_t S, std::size_t d, Rng& rng) {
  // Each column is a Dirichlet(1) distribution over next states, so every
  // transition row (a convex combination of columns) is a distribution too.
  Mat mu(S, d);
  for (std::size_t j = 0; j < d; ++j) {
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      mu(s, j) = rng.exponential();
      total += mu(s, j);
    }
    for (std::size_t s = 0; s < S; ++s) mu(s, j) /= total;
  }
  return mu;
}

std::vector<double> random_theta(const GeneratorConfig& cfg, Rng& rng) {
  std::vector<double> t(cfg.d, 0.0);
  for (auto& x : t) x = rng.uniform(cfg.theta_lo, cfg.theta_hi);
  return t;
}

}  // namespace

DiscountedLinearMdp generate_discounted(const GeneratorConfig& cfg, Rng& rng) {
  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    DiscountedLinearMdp m;
    m.features = random_features(cfg, rng);
    m.gamma = cfg.gamma;
    m.theta = random_theta(cfg, rng);
    m.mu = random_mu(cfg.S, cfg.d, rng);
    m.finalize();
    if (gap_of(solve_discounted(m)) >= cfg.min_gap) return m;
  }
  throw std::runtime_error("generator: no discounted instance with gap >= " +
                           std::to_string(cfg.min_gap) + " after " +
                           std::to_string(cfg.max_attempts) + " attempts");
}

EpisodicLinearMdp generate_episodic(const GeneratorConfig& cfg, Rng& rng) {
  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    EpisodicLinearMdp m;
    m.features = random_features(cfg, rng);
    m.H = cfg.H;
    m.theta.clear();
    m.mu.clear();
    for (std::size_t h = 0; h < cfg.H; ++h) {
      m.theta.push_back(random_theta(cfg, rng));
      m.mu.push_back(random_mu(cfg.S, cfg.d, rng));
    }
    m.finalize();
    if (gap_of(solve_episodic(m)) >= cfg.min_gap) return m;
  }
  throw std::runtime_error("generator: no episodic instance with gap >= " +
                           std::to_string(cfg.min_gap) + " after " +
                           std::to_string(cfg.max_attempts) + " attempts");
}

Instance generate_instance(const GeneratorConfig& cfg, Rng& rng) {
  if (cfg.episodic) return generate_episodic(cfg, rng);
  return generate_discounted(cfg, rng);
}

}  // namespace linbpi

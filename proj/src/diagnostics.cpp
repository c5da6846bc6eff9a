#include "softac/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "softac/bellman.hpp"
#include "softac/envs.hpp"
#include "softac/rng.hpp"

namespace softac {

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

double gamma_pow_m(double gamma, int m_steps) {
  return m_steps == kInfiniteSteps ? 0.0 : std::pow(gamma, m_steps);
}

}  // namespace

VFunction mixture_value(const std::vector<VFunction>& values) {
  if (values.empty()) throw std::invalid_argument("mixture_value: empty list");
  VFunction out = VFunction::zeros(static_cast<int>(values.front().values.size()));
  for (const VFunction& v : values)
    for (std::size_t s = 0; s < out.values.size(); ++s) out.values[s] += v.values[s];
  for (double& x : out.values) x /= static_cast<double>(values.size());
  return out;
}

double delta_tz(double tau, double zeta, int num_actions, double gamma) {
  return std::abs(tau - zeta) * std::log(static_cast<double>(num_actions)) / (1.0 - gamma);
}

double pe_error(const QFunction& q_est, const QFunction& q_true) {
  if (q_est.values.size() != q_true.values.size())
    throw std::invalid_argument("pe_error: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < q_est.values.size(); ++i)
    m = std::max(m, std::abs(q_est.values[i] - q_true.values[i]));
  return m;
}

std::vector<double> per_state_regret(const RunTrace& trace, const Policy& pi_star,
                                     const std::vector<double>& pi_star_entropy, double tau,
                                     int K) {
  if (K < 0) K = trace.iterations();
  if (static_cast<int>(trace.policies.size()) < K || static_cast<int>(trace.q_est.size()) < K)
    throw std::invalid_argument("per_state_regret: trace lacks stored policies or q estimates");
  const int S = trace.num_states, A = trace.num_actions;
  std::vector<double> regret(S, 0.0);
  for (int t = 0; t < K; ++t) {
    const Policy& pi = trace.policies[t];
    const QFunction& q = trace.q_est[t];
    for (int s = 0; s < S; ++s) {
      double inner = 0.0;
      for (int a = 0; a < A; ++a) inner += (pi_star(s, a) - pi(s, a)) * q(s, a);
      regret[s] += inner + tau * (pi_star_entropy[s] - policy_entropy(pi, s));
    }
  }
  return regret;
}

CheckResult reduction_check(const RunTrace& trace, const VFunction& v_star, double gamma, int K) {
  if (K < 1 || K > trace.iterations())
    throw std::invalid_argument("reduction_check: K outside trace");
  if (static_cast<int>(trace.v_exact.size()) < K)
    throw std::invalid_argument("reduction_check: trace lacks exact value functions");

  const int S = trace.num_states;
  std::vector<double> mix(S, 0.0);
  for (int t = 0; t < K; ++t)
    for (int s = 0; s < S; ++s) mix[s] += trace.v_exact[t].values[s];
  double lhs = 0.0;
  for (int s = 0; s < S; ++s)
    lhs = std::max(lhs, std::abs(v_star(s) - mix[s] / K));

  std::vector<double> regret(S, 0.0);
  for (int t = 0; t < K; ++t)
    for (int s = 0; s < S; ++s) regret[s] += trace.regret_terms[t][s];
  double eps_sum = 0.0;
  for (int t = 0; t < K; ++t) eps_sum += trace.eps[t];

  CheckResult res;
  res.lhs = lhs;
  res.rhs = (inf_norm(regret) + 2.0 * eps_sum) / (K * (1.0 - gamma));
  res.holds = res.lhs <= res.rhs + 1e-9;
  return res;
}

RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                 double window_start, double window_end) {
  if (xs.size() != ys.size()) throw std::invalid_argument("rate_fit: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < window_start || xs[i] > window_end) continue;
    if (!(ys[i] > 0.0) || !(xs[i] > 0.0))
      throw std::invalid_argument("rate_fit: values must be positive on the window");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const std::size_t n = lx.size();
  if (n < 3) throw std::invalid_argument("rate_fit: window holds fewer than 3 points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: degenerate window");

  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.window_start = window_start;
  fit.window_end = window_end;
  return fit;
}

CheckResult generic_regret_experiment(const std::vector<std::vector<double>>& loss_vectors,
                                      double tau, const ActorSchedule& schedule) {
  if (loss_vectors.empty())
    throw std::invalid_argument("generic_regret_experiment: empty loss sequence");
  const int K = static_cast<int>(loss_vectors.size());
  const int A = static_cast<int>(loss_vectors.front().size());

  // Roll the proximal update forward, keeping the whole iterate sequence.
  std::vector<std::vector<double>> pis(K + 1, std::vector<double>(A, 1.0 / A));
  std::vector<double> etas(K), tau_ts(K), d_bounds(K);
  for (int t = 0; t < K; ++t) {
    const StepInfo info = schedule.at(t);
    etas[t] = info.eta;
    tau_ts[t] = info.tau_t;
    d_bounds[t] = inf_norm(loss_vectors[t]);
    // Closed form: pi_{t+1} proportional to [pi_t exp(-d_t)]^{1/(1+tau_t)}.
    std::vector<double> lw(A);
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      lw[a] = info.alpha_t * (std::log(pis[t][a]) - loss_vectors[t][a]);
      m = std::max(m, lw[a]);
    }
    double z = 0.0;
    for (int a = 0; a < A; ++a) z += std::exp(lw[a] - m);
    for (int a = 0; a < A; ++a) pis[t + 1][a] = std::exp(lw[a] - m) / z;
  }

  // Comparators: every simplex vertex plus the uniform point.
  std::vector<std::vector<double>> comparators;
  for (int a = 0; a < A; ++a) {
    std::vector<double> u(A, 0.0);
    u[a] = 1.0;
    comparators.push_back(std::move(u));
  }
  comparators.emplace_back(A, 1.0 / A);

  CheckResult worst;
  worst.holds = true;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (const auto& u : comparators) {
    const double h_u = entropy(u);
    double lhs = 0.0, rhs = 0.0;
    for (int t = 0; t < K; ++t) {
      double inner = 0.0;
      for (int a = 0; a < A; ++a) inner += (pis[t][a] - u[a]) * loss_vectors[t][a];
      lhs += inner / etas[t] + tau * (h_u - entropy(pis[t]));
      rhs += kl_divergence(u, pis[t]) / etas[t] - kl_divergence(u, pis[t + 1]) / etas[t] -
             tau * kl_divergence(u, pis[t + 1]);
      rhs += d_bounds[t] * d_bounds[t] / (2.0 * etas[t]);
    }
    if (lhs - rhs > worst_gap) {
      worst_gap = lhs - rhs;
      worst.lhs = lhs;
      worst.rhs = rhs;
    }
    if (!(lhs <= rhs + 1e-8)) worst.holds = false;
  }
  return worst;
}

std::vector<LemmaCheck> lemma_checks(std::uint64_t seed, int trials_per_lemma) {
  std::vector<LemmaCheck> report;

  {  // |H(Q) - H(P)| <= ||Q-P||_1 ln(A/C) + (ln(A-1)/2 + sqrt(2)) sqrt(C)
    LemmaCheck check{"entropy_difference", trials_per_lemma, 0, 0.0};
    RngStream rng(seed, 101);
    for (int trial = 0; trial < trials_per_lemma; ++trial) {
      const int A = 2 + static_cast<int>(rng.uniform_int(7));
      std::vector<double> p(A), r(A);
      double sp = 0.0, sr = 0.0;
      for (int a = 0; a < A; ++a) {
        p[a] = -std::log(1.0 - rng.uniform01());
        r[a] = -std::log(1.0 - rng.uniform01());
        sp += p[a];
        sr += r[a];
      }
      for (int a = 0; a < A; ++a) {
        p[a] /= sp;
        r[a] /= sr;
      }
      double l1 = 0.0;
      for (int a = 0; a < A; ++a) l1 += std::abs(r[a] - p[a]);
      // Blend toward p so the hypothesis ||Q - P||_1 <= 1/2 holds.
      const double lam = l1 > 0.0 ? std::min(1.0, 0.5 / l1) * rng.uniform01() : 0.0;
      std::vector<double> q(A);
      double tv1 = 0.0;
      for (int a = 0; a < A; ++a) {
        q[a] = (1.0 - lam) * p[a] + lam * r[a];
        tv1 += std::abs(q[a] - p[a]);
      }
      const double C = rng.uniform(1e-6, 0.5 - 1e-6);
      const double lhs = std::abs(entropy(q) - entropy(p));
      const double rhs = tv1 * std::log(A / C) +
                         (std::log(static_cast<double>(A - 1)) / 2.0 + std::sqrt(2.0)) *
                             std::sqrt(C);
      const double gap = lhs - rhs - 1e-9;
      check.max_violation = std::max(check.max_violation, lhs - rhs);
      if (gap > 0.0) ++check.violations;
    }
    report.push_back(check);
  }

  {  // sum_{i=1}^k gamma^{k-i}/sqrt(i+1) <= sqrt(2/k)/(1-gamma) + gamma^{k/2}/(1-gamma)
    LemmaCheck check{"sequence_sum", trials_per_lemma, 0, 0.0};
    RngStream rng(seed, 102);
    const double gammas[] = {0.5, 0.9, 0.99};
    const int K = 1000;
    for (int trial = 0; trial < trials_per_lemma; ++trial) {
      const double gamma = gammas[rng.uniform_int(3)];
      const int k = 1 + static_cast<int>(rng.uniform_int(K));
      double lhs = 0.0;
      for (int i = 1; i <= k; ++i) lhs += std::pow(gamma, k - i) / std::sqrt(i + 1.0);
      const double rhs =
          std::sqrt(2.0 / k) / (1.0 - gamma) + std::pow(gamma, k / 2.0) / (1.0 - gamma);
      double gap = lhs - rhs - 1e-9;
      check.max_violation = std::max(check.max_violation, lhs - rhs);
      if (gap > 0.0) ++check.violations;
      const double lg = std::log(1.0 / gamma);
      if (k >= 1.0 / (lg * lg)) {
        const double rhs2 = 4.0 / (std::sqrt(static_cast<double>(k)) * (1.0 - gamma));
        gap = lhs - rhs2 - 1e-9;
        check.max_violation = std::max(check.max_violation, lhs - rhs2);
        if (gap > 0.0) ++check.violations;
      }
    }
    report.push_back(check);
  }

  {  // ||(T_tau^pi)^m q - (T_zeta^pi)^m q||_inf <= |tau - zeta| ln(A)/(1 - gamma)
    LemmaCheck check{"bellman_difference", trials_per_lemma, 0, 0.0};
    RngStream rng(seed, 103);
    const int ms[] = {1, 2, 5};
    for (int trial = 0; trial < trials_per_lemma; ++trial) {
      const int S = 2 + static_cast<int>(rng.uniform_int(5));
      const int A = 2 + static_cast<int>(rng.uniform_int(4));
      const double gamma = rng.uniform(0.3, 0.95);
      const Mdp mdp = garnet(S, A, std::min(S, 3), gamma, rng.next_u64());
      Policy pi = Policy::uniform(S, A);
      for (int s = 0; s < S; ++s) {
        double z = 0.0;
        for (int a = 0; a < A; ++a) {
          pi.at(s, a) = 0.05 + rng.uniform01();
          z += pi(s, a);
        }
        for (int a = 0; a < A; ++a) pi.at(s, a) /= z;
      }
      QFunction q = QFunction::zeros(S, A);
      for (double& x : q.values) x = rng.uniform(-2.0, 2.0);
      const double tau = rng.uniform(0.0, 1.0);
      const double zeta = rng.uniform(0.0, 1.0);
      const int m = ms[rng.uniform_int(3)];
      QFunction qt = q, qz = q;
      for (int i = 0; i < m; ++i) {
        qt = soft_bellman_q(mdp, pi, tau, qt);
        qz = soft_bellman_q(mdp, pi, zeta, qz);
      }
      const double lhs = pe_error(qt, qz);
      const double rhs = delta_tz(tau, zeta, A, gamma);
      const double gap = lhs - rhs - 1e-9;
      check.max_violation = std::max(check.max_violation, lhs - rhs);
      if (gap > 0.0) ++check.violations;
    }
    report.push_back(check);
  }

  return report;
}

double npg_c_floor(double tau, int num_actions, double gamma) {
  const double x = tau * std::log(static_cast<double>(num_actions));
  if (x <= 0.0) throw std::invalid_argument("npg_c_floor: requires tau > 0 and A > 1");
  const double c1 = 8.0 * (1.0 + x) / (1.0 - gamma);
  const double c2 = 32.0 * x;
  const double c3 = 2.0 * (1.0 + x) * (1.0 + x) / ((1.0 - gamma) * (1.0 - gamma) * x);
  return std::max({c1, c2, c3});
}

double spma_c_floor(double tau, int num_actions, double gamma) {
  const double x = tau * std::log(static_cast<double>(num_actions));
  if (x <= 0.0) throw std::invalid_argument("spma_c_floor: requires tau > 0 and A > 1");
  const double c1 = 4.0 * (1.0 + x) / (1.0 - gamma);
  const double c2 = 32.0 * x;
  const double c3 = (1.0 + x) * (1.0 + x) / (2.0 * (1.0 - gamma) * (1.0 - gamma) * x);
  const double c4 = 2.0 * (1.0 + x) / (1.0 - gamma);
  return std::max({c1, c2, c3, c4});
}

double regret_bound_soft_npg(int K, double tau, int num_actions, double gamma, double c) {
  const double h = h_tau_bound(tau, num_actions, gamma);
  const double ln_a = std::log(static_cast<double>(num_actions));
  return h * h / (2.0 * tau) * (1.0 + std::log(static_cast<double>(K))) + (c + tau) * ln_a;
}

double regret_bound_soft_spma(int K, double tau, int num_actions, double gamma, double c) {
  const double h = h_tau_bound(tau, num_actions, gamma);
  const double ln_a = std::log(static_cast<double>(num_actions));
  return 3.0 * h * h / tau * (1.0 + std::log(static_cast<double>(K))) + (c + tau) * ln_a;
}

double regret_bound_npg_tau0(int K, int num_actions, double gamma) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  return std::sqrt(2.0 * ln_a) * std::sqrt(static_cast<double>(K)) / (1.0 - gamma);
}

double regret_bound_spma_tau0(int K, int num_actions, double gamma) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  return 7.0 * std::sqrt(ln_a) * std::sqrt(static_cast<double>(K)) /
             (std::sqrt(2.0) * (1.0 - gamma)) +
         2.0 * ln_a / (1.0 - gamma);
}

double constant_eta_npg_tau0(int K, int num_actions, double gamma) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  return std::sqrt(2.0) * (1.0 - gamma) * std::sqrt(ln_a) / std::sqrt(static_cast<double>(K));
}

double constant_eta_spma_tau0(int K, int num_actions, double gamma) {
  return std::min((1.0 - gamma) / 2.0, constant_eta_npg_tau0(K, num_actions, gamma));
}

namespace {

// Shared middle term of the soft sub-optimality bounds:
// 16 (1 + tau ln A) gamma^m / ((1-gamma)^4 K) *
//   [(1 + tau ln(AK)) sqrt(ln A) (sqrt(K) + 1/(1 - sqrt(gamma)))
//    + tau (ln A + 1) sqrt(K)].
double subopt_pe_term(int K, double tau, int num_actions, double gamma, int m_steps) {
  const double gm = gamma_pow_m(gamma, m_steps);
  if (gm == 0.0) return 0.0;
  const double ln_a = std::log(static_cast<double>(num_actions));
  const double one_minus = 1.0 - gamma;
  const double sqrt_k = std::sqrt(static_cast<double>(K));
  const double bracket =
      (1.0 + tau * std::log(static_cast<double>(num_actions) * K)) * std::sqrt(ln_a) *
          (sqrt_k + 1.0 / (1.0 - std::sqrt(gamma))) +
      tau * (ln_a + 1.0) * sqrt_k;
  return 16.0 * (1.0 + tau * ln_a) * gm / (std::pow(one_minus, 4) * K) * bracket;
}

}  // namespace

double subopt_bound_soft_npg(int K, double tau, double zeta, int num_actions, double gamma,
                             double c, int m_steps) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  const double one_minus = 1.0 - gamma;
  const double regret_part =
      1.0 / (K * one_minus) *
      ((1.0 + tau * ln_a) * (1.0 + tau * ln_a) / (2.0 * tau * one_minus * one_minus) *
           (1.0 + std::log(static_cast<double>(K))) +
       (c + tau) * ln_a);
  return regret_part + subopt_pe_term(K, tau, num_actions, gamma, m_steps) +
         2.0 * delta_tz(tau, zeta, num_actions, gamma) / one_minus;
}

double subopt_bound_soft_spma(int K, double tau, double zeta, int num_actions, double gamma,
                              double c, int m_steps) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  const double one_minus = 1.0 - gamma;
  const double regret_part =
      1.0 / (K * one_minus) *
      (3.0 * (1.0 + tau * ln_a) * (1.0 + tau * ln_a) / (2.0 * tau * one_minus * one_minus) *
           (1.0 + std::log(static_cast<double>(K))) +
       (c + tau) * ln_a);
  return regret_part + subopt_pe_term(K, tau, num_actions, gamma, m_steps) +
         2.0 * delta_tz(tau, zeta, num_actions, gamma) / one_minus;
}

double subopt_bound_npg_tau0(int K, int num_actions, double gamma, int m_steps) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  const double sqrt_k = std::sqrt(static_cast<double>(K));
  const double one_minus = 1.0 - gamma;
  return std::sqrt(2.0 * ln_a) / (sqrt_k * one_minus * one_minus) +
         4.0 * std::sqrt(ln_a) * gamma_pow_m(gamma, m_steps) / (sqrt_k * std::pow(one_minus, 4));
}

double subopt_bound_spma_tau0(int K, int num_actions, double gamma, int m_steps) {
  const double ln_a = std::log(static_cast<double>(num_actions));
  const double sqrt_k = std::sqrt(static_cast<double>(K));
  const double one_minus = 1.0 - gamma;
  return 1.0 / (K * one_minus) *
             (7.0 * std::sqrt(ln_a) * sqrt_k / (std::sqrt(2.0) * one_minus) +
              2.0 * ln_a / one_minus) +
         2.0 * std::sqrt(ln_a) * gamma_pow_m(gamma, m_steps) / (sqrt_k * std::pow(one_minus, 4));
}

}  // namespace softac

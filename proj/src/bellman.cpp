#include "softac/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace softac {

namespace {

double clamp_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Expected backup value at s': E_{a'~pi} q(s',a') + zeta H(pi(.|s')).
std::vector<double> state_backup(const Policy& policy, double zeta, const QFunction& q) {
  std::vector<double> w(policy.num_states, 0.0);
  for (int s = 0; s < policy.num_states; ++s) {
    double acc = 0.0;
    for (int a = 0; a < policy.num_actions; ++a) {
      const double p = policy(s, a);
      if (p > 0.0) acc += p * (q(s, a) - zeta * std::log(p));
    }
    w[s] = acc;
  }
  return w;
}

}  // namespace

QFunction soft_bellman_q(const Mdp& mdp, const Policy& policy, double zeta, const QFunction& q) {
  const int S = mdp.num_states, A = mdp.num_actions;
  const std::vector<double> w = state_backup(policy, zeta, q);
  QFunction out = QFunction::zeros(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      for (int sn = 0; sn < S; ++sn) ev += mdp.p(s, a, sn) * w[sn];
      out.at(s, a) = mdp.r(s, a) + mdp.discount * ev;
    }
  }
  return out;
}

QFunction m_step_evaluate(const Mdp& mdp, const Policy& policy, const CriticConfig& cfg,
                          const QFunction& q_prev) {
  if (cfg.m_steps == kInfiniteSteps) return exact_soft_values(mdp, policy, cfg.zeta).second;
  if (cfg.m_steps < 1) throw std::invalid_argument("m_step_evaluate: m_steps must be positive");
  QFunction q = q_prev;
  for (int i = 0; i < cfg.m_steps; ++i) q = soft_bellman_q(mdp, policy, cfg.zeta, q);
  if (cfg.clamp_enabled)
    for (double& v : q.values) v = clamp_to(v, 0.0, cfg.h_tau_bound);
  return q;
}

double lookahead_target(const Transition& tr, const Mdp& mdp, const Policy& policy,
                        const QFunction& q_target, double zeta, bool clamp, double h_tau) {
  double acc = 0.0;
  for (int a = 0; a < policy.num_actions; ++a) {
    const double p = policy(tr.next_state, a);
    if (p > 0.0) acc += p * (q_target(tr.next_state, a) - zeta * std::log(p));
  }
  double y = tr.reward + mdp.discount * acc;
  if (clamp) y = clamp_to(y, 0.0, h_tau);
  return y;
}

double lookahead_target_sampled(const Transition& tr, const Mdp& mdp, const Policy& policy,
                                const QFunction& q_target, double zeta, bool clamp, double h_tau,
                                RngStream& rng) {
  // Inverse-CDF draw of a' from pi(.|s').
  const double u = rng.uniform01();
  double cum = 0.0;
  int action = policy.num_actions - 1;
  for (int a = 0; a < policy.num_actions; ++a) {
    cum += policy(tr.next_state, a);
    if (u < cum) {
      action = a;
      break;
    }
  }
  const double p = policy(tr.next_state, action);
  const double inner = q_target(tr.next_state, action) - (p > 0.0 ? zeta * std::log(p) : 0.0);
  double y = tr.reward + mdp.discount * inner;
  if (clamp) y = clamp_to(y, 0.0, h_tau);
  return y;
}

QFunction sampled_critic_update(const std::vector<Transition>& batch, const Mdp& mdp,
                                const Policy& policy, const QFunction& q_target,
                                const CriticConfig& cfg, QFunction q_online, RngStream* rng) {
  if (batch.empty()) throw std::invalid_argument("sampled_critic_update: empty batch");
  if (cfg.mc_targets && rng == nullptr)
    throw std::invalid_argument("sampled_critic_update: mc_targets requires an rng");

  // Targets are constants of the optimization.
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = cfg.mc_targets
               ? lookahead_target_sampled(batch[i], mdp, policy, q_target, cfg.zeta,
                                          cfg.clamp_targets, cfg.h_tau_bound, *rng)
               : lookahead_target(batch[i], mdp, policy, q_target, cfg.zeta, cfg.clamp_targets,
                                  cfg.h_tau_bound);
  }

  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> grad(q_online.values.size());
  for (int step = 0; step < cfg.critic_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& tr = batch[i];
      grad[static_cast<std::size_t>(tr.state) * q_online.num_actions + tr.action] +=
          scale * (q_online(tr.state, tr.action) - y[i]);
    }
    for (std::size_t k = 0; k < grad.size(); ++k) q_online.values[k] -= cfg.critic_lr * grad[k];
  }
  return q_online;
}

QFunction polyak_update(const QFunction& q_target, const QFunction& q_online, double coef) {
  if (q_target.values.size() != q_online.values.size())
    throw std::invalid_argument("polyak_update: shape mismatch");
  QFunction out = q_target;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = (1.0 - coef) * q_target.values[k] + coef * q_online.values[k];
  return out;
}

}  // namespace softac

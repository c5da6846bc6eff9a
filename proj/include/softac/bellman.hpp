#pragma once

#include <vector>

#include "softac/mdp.hpp"
#include "softac/rng.hpp"

namespace softac {

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

// Sentinel for exact policy evaluation (fixed point by linear solve).
inline constexpr int kInfiniteSteps = -1;

struct CriticConfig {
  double zeta = 0.0;
  int m_steps = 1;  // kInfiniteSteps for the exact fixed point
  bool clamp_enabled = true;
  double h_tau_bound = 0.0;  // (1 + tau ln A) / (1 - gamma) of the run's actor tau
  bool clamp_targets = false;
  bool mc_targets = false;  // single-sample a' instead of the exact expectation
  double target_smoothing = 1.0;
  double critic_lr = 0.5;
  int critic_steps = 1;
};

// Soft Bellman operator on q-tables:
//   (T_zeta^pi q)(s,a) = r(s,a) + gamma E_{s'}[ E_{a'~pi} q(s',a') + zeta H(pi(.|s')) ].
// zeta = 0 gives the hard operator.
QFunction soft_bellman_q(const Mdp& mdp, const Policy& policy, double zeta, const QFunction& q);

// Applies the operator m times from q_prev and clamps the result onto
// [0, cfg.h_tau_bound] when enabled; m = kInfiniteSteps returns the exact
// fixed point q_zeta^pi instead.
QFunction m_step_evaluate(const Mdp& mdp, const Policy& policy, const CriticConfig& cfg,
                          const QFunction& q_prev);

// One-step look-ahead target,
//   y = r + gamma sum_{a'} pi(a'|s') [q_target(s',a') - zeta ln pi(a'|s')],
// as the exact expectation over a'. Zero-probability actions contribute zero.
double lookahead_target(const Transition& tr, const Mdp& mdp, const Policy& policy,
                        const QFunction& q_target, double zeta, bool clamp, double h_tau);

// Monte-Carlo variant of the target: a' is sampled from pi(.|s').
double lookahead_target_sampled(const Transition& tr, const Mdp& mdp, const Policy& policy,
                                const QFunction& q_target, double zeta, bool clamp, double h_tau,
                                RngStream& rng);

// cfg.critic_steps gradient steps of size cfg.critic_lr on the batch mean
// squared loss (q(s,a) - y)^2 with y held constant. Returns the updated table.
QFunction sampled_critic_update(const std::vector<Transition>& batch, const Mdp& mdp,
                                const Policy& policy, const QFunction& q_target,
                                const CriticConfig& cfg, QFunction q_online,
                                RngStream* rng = nullptr);

// (1 - coef) * q_target + coef * q_online, elementwise.
QFunction polyak_update(const QFunction& q_target, const QFunction& q_online, double coef);

}  // namespace softac

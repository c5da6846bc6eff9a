#pragma once

#include <cmath>
#include <vector>

#include "softac/mdp.hpp"

namespace softac {

// Softmax actor parameters theta; each row induces pi_theta(.|s).
struct TabularLogits {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> logits;

  static TabularLogits zeros(int num_states, int num_actions);
  static TabularLogits from_policy(const Policy& pi);  // requires full support

  double operator()(int s, int a) const {
    return logits[static_cast<std::size_t>(s) * num_actions + a];
  }
  double& at(int s, int a) { return logits[static_cast<std::size_t>(s) * num_actions + a]; }

  Policy policy() const;
};

enum class ObjectiveFamily { kNpgRkl, kSpmaRkl, kNpgFkl, kSpmaFkl };

struct ObjectiveSpec {
  ObjectiveFamily family = ObjectiveFamily::kNpgRkl;
  double eta = 1.0;
  double tau = 0.0;
  std::vector<double> state_weights;  // empirical state distribution, sums to 1
};

// Surrogate actor objective l_t(theta); inner action expectations are exact
// sums. Throws std::domain_error when an SPMA bracket 1 + eta (q - v) falls
// below the 1e-9 margin.
double evaluate_objective(const ObjectiveSpec& spec, const TabularLogits& theta,
                          const Policy& pi_t, const QFunction& q, const VFunction& v);

// Analytic d l_t / d theta. Rows of zero-weight states are zero; rows sum to
// zero (softmax gauge).
std::vector<double> objective_gradient(const ObjectiveSpec& spec, const TabularLogits& theta,
                                       const Policy& pi_t, const QFunction& q, const VFunction& v);

struct InnerLoopOptions {
  bool backtracking = true;
  double grad_tol = 0.0;  // > 0 stops early once ||grad||_inf falls below it
  int max_halvings = 60;
};

// n ascent steps theta <- theta + step * grad. With backtracking the step is
// halved until the objective does not decrease.
TabularLogits inner_loop_optimize(const ObjectiveSpec& spec, TabularLogits theta,
                                  const Policy& pi_t, const QFunction& q, const VFunction& v,
                                  int n, double step, const InnerLoopOptions& opts = {});

// Entropy-coefficient auto-tuner on J(alpha) = alpha (E[H(pi)] - target).
struct EntropyTuner {
  double log_alpha = 0.0;
  double target_entropy = 0.0;
  double tuner_lr = 1e-2;

  double alpha() const { return std::exp(log_alpha); }
};

// One gradient step on log alpha: decreases alpha when the weighted average
// policy entropy exceeds the target, increases it otherwise.
EntropyTuner entropy_tuner_step(const EntropyTuner& tuner, const Policy& pi,
                                const std::vector<double>& state_weights);

}  // namespace softac

#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "softac/mdp.hpp"

namespace softac {

// Raised when an SPMA step would make 1 + eta (q - v) fall below the 1e-9
// margin for an action the current policy supports.
struct StepTooLargeError : std::runtime_error {
  StepTooLargeError(int state, int action, double max_eta, const std::string& msg)
      : std::runtime_error(msg), state(state), action(action), max_admissible_eta(max_eta) {}
  int state;
  int action;
  double max_admissible_eta;
};

enum class ScheduleMode { kTheoryDecay, kConstant };

struct StepInfo {
  double eta = 0.0;
  double tau_t = 0.0;   // eta * tau
  double alpha_t = 1.0; // 1 / (1 + tau_t)
};

// Step-size schedule: theory_decay gives eta_t = 1 / (c + tau (t+1)),
// constant gives eta_t = eta_const.
struct ActorSchedule {
  ScheduleMode mode = ScheduleMode::kTheoryDecay;
  double c = 0.0;
  double tau = 0.0;
  double eta_const = 0.0;

  StepInfo at(int t) const;
};

// pi_{t+1/2}(a|s) proportional to pi_t(a|s) exp(eta q(s,a)), normalized per
// state in log space. Zero-probability actions stay at zero.
Policy npg_intermediate(const Policy& pi_t, const QFunction& q, double eta);

// pi_{t+1/2}(a|s) proportional to pi_t(a|s) [1 + eta (q(s,a) - v(s))]. Throws
// StepTooLargeError when the bracket drops below the 1e-9 margin on the
// support of pi_t.
Policy spma_intermediate(const Policy& pi_t, const QFunction& q, const VFunction& v, double eta);

// Closed-form reverse-KL proximal step: per-state power alpha_t = 1/(1+tau_t)
// then renormalize. tau_t = 0 is the identity.
Policy rkl_project(const Policy& pi_half, double tau_t);

// Forward-KL proximal step: per state, minimizes
//   KL(pi_half(.|s) || p) - tau_t H(p)
// over the simplex restricted to the support of pi_half, by gradient descent
// on softmax logits with backtracking. tau_t = 0 bypasses the solver.
Policy fkl_project(const Policy& pi_half, double tau_t, double tol, int max_iterations = 10000);

// Fused soft updates; each must reproduce project(intermediate(.)) exactly.
Policy soft_npg_step(const Policy& pi_t, const QFunction& q, double eta, double tau_t);
Policy soft_spma_step(const Policy& pi_t, const QFunction& q, const VFunction& v, double eta,
                      double tau_t);

// eta -> infinity limit of NPG-RKL: pi(a|s) proportional to exp(q(s,a)/tau).
Policy dsac_actor_exact(const QFunction& q, double tau);

// Minimizes f over the probability simplex via gradient descent on softmax
// logits with Armijo backtracking, starting from `init` (which pins the
// support). grad_f receives the current point and writes df/dp. Returns the
// minimizer; sets *residual_out (if non-null) to the final first-order
// residual max_a |df/dp_a - <p, df/dp>| over the support. Shared by
// fkl_project and the projection cross-checks.
std::vector<double> simplex_minimize(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& grad_f,
    const std::vector<double>& init, double tol, int max_iterations,
    double* residual_out = nullptr);

}  // namespace softac

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace softac {

// Finite discounted MDP <S, A, P, r, rho, gamma> with rewards in [0, 1].
// Tables are stored row-major: transition[(s * A + a) * S + s'], reward[s * A + a].
struct Mdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  std::vector<double> initial_dist;
  double discount = 0.0;

  double p(int s, int a, int sn) const {
    return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + sn];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * num_actions + a]; }

  // Throws std::invalid_argument on any violated invariant (row sums, reward
  // range, initial distribution, discount < 1).
  void validate() const;
};

// Row-stochastic S x A table pi(a|s).
struct Policy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;

  static Policy uniform(int num_states, int num_actions);

  double operator()(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * num_actions + a];
  }
  double& at(int s, int a) { return probs[static_cast<std::size_t>(s) * num_actions + a]; }

  void validate(double tol = 1e-10) const;
};

struct QFunction {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;

  static QFunction zeros(int num_states, int num_actions);

  double operator()(int s, int a) const {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }
  double& at(int s, int a) { return values[static_cast<std::size_t>(s) * num_actions + a]; }
};

struct VFunction {
  std::vector<double> values;

  static VFunction zeros(int num_states);

  double operator()(int s) const { return values[s]; }
  double& at(int s) { return values[s]; }
};

// Uniform bound on soft values: H_tau = (1 + tau ln A) / (1 - gamma).
double h_tau_bound(double tau, int num_actions, double gamma);

// Shannon entropy of pi(.|s), with 0 ln 0 := 0. Result lies in [0, ln A].
double policy_entropy(const Policy& policy, int state);

// Entropy of an arbitrary probability vector (same 0 ln 0 convention).
double entropy(const std::vector<double>& probs);

// Soft values of a fixed policy by dense linear solve:
//   v = r_pi + tau H_pi + gamma P_pi v,   q(s,a) = r(s,a) + gamma E_{s'} v(s').
// Exact up to the solver's residual, which is checked against
// 1e-9 * (1 + ||v||_inf).
std::pair<VFunction, QFunction> exact_soft_values(const Mdp& mdp, const Policy& policy,
                                                  double tau);

// a_tau^pi(s,a) = q(s,a) - v(s) - tau ln pi(a|s). Throws std::domain_error when
// tau > 0 and pi(a|s) = 0.
double soft_advantage(const QFunction& q, const VFunction& v, const Policy& policy, double tau,
                      int s, int a);

// Soft (tau > 0) or hard (tau = 0) value iteration to the optimal policy.
// Stops when the sup-norm change drops below tol * (1 - gamma); throws
// std::runtime_error if that does not happen within max_iterations.
// Ties in the tau = 0 argmax break toward the lowest action index.
std::pair<Policy, VFunction> optimal_soft_policy(const Mdp& mdp, double tau, double tol,
                                                 int max_iterations = 1000000);

// J(v) = sum_s rho(s) v(s).
double return_J(const Mdp& mdp, const VFunction& v);

// JSON document {"S":..,"A":..,"gamma":..,"P":[[[..]]],"r":[[..]],"rho":[..]}.
std::string mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const std::string& text);

}  // namespace softac

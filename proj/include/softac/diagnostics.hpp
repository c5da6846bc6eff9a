#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softac/mdp.hpp"
#include "softac/policy_update.hpp"

namespace softac {

// Per-run record of everything the tabular theory checks consume. Arrays are
// indexed by outer iteration t = 0..K-1; optional arrays are empty when the
// corresponding diagnostic was disabled.
struct RunTrace {
  std::string run_id;
  std::uint64_t seed = 0;
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.0;
  double tau = 0.0;
  double zeta = 0.0;
  double h_tau = 0.0;
  bool exact_reference = false;

  // Soft-optimal comparator (present when exact_reference is set).
  Policy pi_star;
  VFunction v_star;
  std::vector<double> h_star;  // H(pi_star(.|s)) per state

  std::vector<double> eta;
  std::vector<double> tau_t;
  std::vector<Policy> policies;
  std::vector<QFunction> q_est;
  std::vector<QFunction> q_exact;
  std::vector<VFunction> v_exact;
  std::vector<double> eps;
  std::vector<std::vector<double>> regret_terms;  // per-state increments
  std::vector<double> subopt_mixture;
  std::vector<double> subopt_last;
  std::vector<double> entropy_mean;
  std::vector<double> return_empirical;  // sampled mode only
  std::vector<double> greedy_return;     // exact J of the greedy policy (optional)
  std::vector<double> alpha;             // entropy coefficient when auto-tuned

  Policy final_policy;
  VFunction final_v;
  QFunction final_q;

  int iterations() const { return static_cast<int>(eta.size()); }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Entrywise mean of value functions. Throws on an empty list.
VFunction mixture_value(const std::vector<VFunction>& values);

// Actor/critic entropy mismatch floor |tau - zeta| ln(A) / (1 - gamma).
double delta_tz(double tau, double zeta, int num_actions, double gamma);

// sup-norm policy-evaluation error.
double pe_error(const QFunction& q_est, const QFunction& q_true);

// Regret(K)(s) = sum_t [<pi*(.|s) - pi_t(.|s), q_est^t(s,.)> +
//                       tau (H(pi*(.|s)) - H(pi_t(.|s)))]
// over the first K iterations. Requires stored policies and q estimates.
std::vector<double> per_state_regret(const RunTrace& trace, const Policy& pi_star,
                                     const std::vector<double>& pi_star_entropy, double tau,
                                     int K = -1);

// Sub-optimality reduction: checks
//   ||v* - v^{mix_K}||_inf <= ||Regret(K)||_inf / (K(1-gamma))
//                             + 2 sum_{t<K} eps_t / (K(1-gamma)) + 1e-9.
CheckResult reduction_check(const RunTrace& trace, const VFunction& v_star, double gamma, int K);

// Least squares of ln y on ln x restricted to window_start <= x <= window_end.
RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                 double window_start, double window_end);

// Runs the KL-proximal update pi_{t+1} = argmin <pi,d_t> + KL(pi||pi_t)
// + tau_t (ln A - H(pi)) on the given loss sequence and evaluates both sides
// of the telescoped regret inequality for every comparator among the simplex
// vertices and the uniform point. Returns the worst comparator's sides;
// holds means the inequality held for all of them (tolerance 1e-8).
CheckResult generic_regret_experiment(const std::vector<std::vector<double>>& loss_vectors,
                                      double tau, const ActorSchedule& schedule);

struct LemmaCheck {
  std::string name;
  int trials = 0;
  int violations = 0;
  double max_violation = 0.0;  // max of lhs - rhs over trials (<= 0 when clean)
};

// Randomized numeric checks of the entropy-difference, sequence-sum and
// Bellman-difference inequalities on hypothesis-satisfying inputs.
std::vector<LemmaCheck> lemma_checks(std::uint64_t seed, int trials_per_lemma = 1000);

// ---- Closed-form constants and bounds from the tabular analysis ----

// Smallest schedule constant c admitted by the soft NPG / soft SPMA
// sub-optimality statements (tau > 0).
double npg_c_floor(double tau, int num_actions, double gamma);
double spma_c_floor(double tau, int num_actions, double gamma);

// Regret bounds: soft variants use eta_t = 1/(c + tau (t+1)); the tau = 0
// variants use the K-dependent constant step below.
double regret_bound_soft_npg(int K, double tau, int num_actions, double gamma, double c);
double regret_bound_soft_spma(int K, double tau, int num_actions, double gamma, double c);
double regret_bound_npg_tau0(int K, int num_actions, double gamma);
double regret_bound_spma_tau0(int K, int num_actions, double gamma);

double constant_eta_npg_tau0(int K, int num_actions, double gamma);
double constant_eta_spma_tau0(int K, int num_actions, double gamma);

// Mixture sub-optimality bounds. m_steps = kInfiniteSteps treats gamma^m as 0.
double subopt_bound_soft_npg(int K, double tau, double zeta, int num_actions, double gamma,
                             double c, int m_steps);
double subopt_bound_soft_spma(int K, double tau, double zeta, int num_actions, double gamma,
                              double c, int m_steps);
double subopt_bound_npg_tau0(int K, int num_actions, double gamma, int m_steps);
double subopt_bound_spma_tau0(int K, int num_actions, double gamma, int m_steps);

}  // namespace softac

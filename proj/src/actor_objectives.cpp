#include "softac/actor_objectives.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace softac {

namespace {

constexpr double kSpmaMargin = 1e-9;

void softmax_row(const double* logits, int n, double* out) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, logits[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
}

double spma_log_bracket(double eta, double adv) {
  const double bracket = 1.0 + eta * adv;
  if (bracket < kSpmaMargin)
    throw std::domain_error("actor objective: 1 + eta (q - v) below margin");
  return std::log(std::max(bracket, kSpmaMargin));
}

// Normalized weights on actions for the FKL families, computed in log space
// so eta q up to ~1e7 cannot overflow.
void fkl_weights(const ObjectiveSpec& spec, const Policy& pi_t, const QFunction& q,
                 const VFunction& v, int s, std::vector<double>& w) {
  const int A = pi_t.num_actions;
  w.assign(A, 0.0);
  if (spec.family == ObjectiveFamily::kNpgFkl) {
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> lw(A, -std::numeric_limits<double>::infinity());
    for (int a = 0; a < A; ++a) {
      if (pi_t(s, a) <= 0.0) continue;
      lw[a] = std::log(pi_t(s, a)) + spec.eta * q(s, a);
      m = std::max(m, lw[a]);
    }
    double z = 0.0;
    for (int a = 0; a < A; ++a)
      if (pi_t(s, a) > 0.0) z += std::exp(lw[a] - m);
    for (int a = 0; a < A; ++a)
      if (pi_t(s, a) > 0.0) w[a] = std::exp(lw[a] - m) / z;
  } else {
    double z = 0.0;
    for (int a = 0; a < A; ++a) {
      if (pi_t(s, a) <= 0.0) continue;
      const double bracket = 1.0 + spec.eta * (q(s, a) - v(s));
      if (bracket < kSpmaMargin)
        throw std::domain_error("actor objective: 1 + eta (q - v) below margin");
      w[a] = pi_t(s, a) * bracket;
      z += w[a];
    }
    for (int a = 0; a < A; ++a) w[a] /= z;
  }
}

double log_or_throw(double p, const char* what) {
  if (p <= 0.0) throw std::domain_error(what);
  return std::log(p);
}

}  // namespace

TabularLogits TabularLogits::zeros(int num_states, int num_actions) {
  TabularLogits t;
  t.num_states = num_states;
  t.num_actions = num_actions;
  t.logits.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  return t;
}

TabularLogits TabularLogits::from_policy(const Policy& pi) {
  TabularLogits t = zeros(pi.num_states, pi.num_actions);
  for (int s = 0; s < pi.num_states; ++s)
    for (int a = 0; a < pi.num_actions; ++a)
      t.at(s, a) = log_or_throw(pi(s, a), "TabularLogits: policy must have full support");
  return t;
}

Policy TabularLogits::policy() const {
  Policy pi;
  pi.num_states = num_states;
  pi.num_actions = num_actions;
  pi.probs.assign(logits.size(), 0.0);
  for (int s = 0; s < num_states; ++s)
    softmax_row(&logits[static_cast<std::size_t>(s) * num_actions], num_actions,
                &pi.probs[static_cast<std::size_t>(s) * num_actions]);
  return pi;
}

double evaluate_objective(const ObjectiveSpec& spec, const TabularLogits& theta,
                          const Policy& pi_t, const QFunction& q, const VFunction& v) {
  const int S = theta.num_states, A = theta.num_actions;
  const double tau_t = spec.eta * spec.tau;
  const Policy pi_theta = theta.policy();
  std::vector<double> w;
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    const double ws = spec.state_weights[s];
    if (ws == 0.0) continue;
    double fs = 0.0;
    switch (spec.family) {
      case ObjectiveFamily::kNpgRkl:
        for (int a = 0; a < A; ++a) {
          const double p = pi_theta(s, a);
          const double lp = std::log(p);
          const double lt = log_or_throw(pi_t(s, a), "npg_rkl: pi_t must have full support");
          fs += p * (q(s, a) - spec.tau * lp) - (1.0 / spec.eta) * p * (lp - lt);
        }
        break;
      case ObjectiveFamily::kSpmaRkl:
        for (int a = 0; a < A; ++a) {
          const double p = pi_theta(s, a);
          const double lp = std::log(p);
          const double lt = log_or_throw(pi_t(s, a), "spma_rkl: pi_t must have full support");
          fs += p * (spma_log_bracket(spec.eta, q(s, a) - v(s)) - tau_t * lp) - p * (lp - lt);
        }
        break;
      case ObjectiveFamily::kNpgFkl:
      case ObjectiveFamily::kSpmaFkl:
        fkl_weights(spec, pi_t, q, v, s, w);
        for (int a = 0; a < A; ++a) {
          const double p = pi_theta(s, a);
          const double lp = std::log(p);
          fs += w[a] * lp - tau_t * p * lp;
        }
        break;
    }
    total += ws * fs;
  }
  return total;
}

std::vector<double> objective_gradient(const ObjectiveSpec& spec, const TabularLogits& theta,
                                       const Policy& pi_t, const QFunction& q,
                                       const VFunction& v) {
  const int S = theta.num_states, A = theta.num_actions;
  const double tau_t = spec.eta * spec.tau;
  const Policy pi_theta = theta.policy();
  std::vector<double> grad(theta.logits.size(), 0.0);
  std::vector<double> df(A), w;
  for (int s = 0; s < S; ++s) {
    const double ws = spec.state_weights[s];
    if (ws == 0.0) continue;
    switch (spec.family) {
      case ObjectiveFamily::kNpgRkl:
        for (int a = 0; a < A; ++a) {
          const double lp = std::log(pi_theta(s, a));
          const double lt = log_or_throw(pi_t(s, a), "npg_rkl: pi_t must have full support");
          df[a] = q(s, a) - spec.tau * (lp + 1.0) - (1.0 / spec.eta) * (lp - lt + 1.0);
        }
        break;
      case ObjectiveFamily::kSpmaRkl:
        for (int a = 0; a < A; ++a) {
          const double lp = std::log(pi_theta(s, a));
          const double lt = log_or_throw(pi_t(s, a), "spma_rkl: pi_t must have full support");
          df[a] = spma_log_bracket(spec.eta, q(s, a) - v(s)) - tau_t * (lp + 1.0) -
                  (lp - lt + 1.0);
        }
        break;
      case ObjectiveFamily::kNpgFkl:
      case ObjectiveFamily::kSpmaFkl:
        fkl_weights(spec, pi_t, q, v, s, w);
        for (int a = 0; a < A; ++a) {
          const double p = pi_theta(s, a);
          df[a] = w[a] / p - tau_t * (std::log(p) + 1.0);
        }
        break;
    }
    double lam = 0.0;
    for (int a = 0; a < A; ++a) lam += pi_theta(s, a) * df[a];
    for (int a = 0; a < A; ++a)
      grad[static_cast<std::size_t>(s) * A + a] = ws * pi_theta(s, a) * (df[a] - lam);
  }
  return grad;
}

TabularLogits inner_loop_optimize(const ObjectiveSpec& spec, TabularLogits theta,
                                  const Policy& pi_t, const QFunction& q, const VFunction& v,
                                  int n, double step, const InnerLoopOptions& opts) {
  if (n < 1) throw std::invalid_argument("inner_loop_optimize: n must be >= 1");
  double value = opts.backtracking ? evaluate_objective(spec, theta, pi_t, q, v) : 0.0;
  for (int j = 0; j < n; ++j) {
    const std::vector<double> grad = objective_gradient(spec, theta, pi_t, q, v);
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (opts.grad_tol > 0.0 && gmax < opts.grad_tol) break;

    if (!opts.backtracking) {
      for (std::size_t k = 0; k < grad.size(); ++k) theta.logits[k] += step * grad[k];
      continue;
    }
    double trial_step = step;
    TabularLogits trial = theta;
    for (int half = 0; half <= opts.max_halvings; ++half) {
      for (std::size_t k = 0; k < grad.size(); ++k)
        trial.logits[k] = theta.logits[k] + trial_step * grad[k];
      const double trial_value = evaluate_objective(spec, trial, pi_t, q, v);
      if (trial_value >= value) {
        theta = trial;
        value = trial_value;
        break;
      }
      trial_step *= 0.5;
    }
  }
  return theta;
}

EntropyTuner entropy_tuner_step(const EntropyTuner& tuner, const Policy& pi,
                                const std::vector<double>& state_weights) {
  double avg_entropy = 0.0;
  for (int s = 0; s < pi.num_states; ++s)
    avg_entropy += state_weights[s] * policy_entropy(pi, s);
  EntropyTuner out = tuner;
  out.log_alpha -= tuner.tuner_lr * tuner.alpha() * (avg_entropy - tuner.target_entropy);
  return out;
}

}  // namespace softac

#include "softac/policy_update.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace softac {

namespace {

constexpr double kSpmaMargin = 1e-9;

// Normalizes log-weights over the support in place: probs[i] > 0 marks the
// support, lw holds the log-weights for those entries.
void write_normalized(Policy& out, int s, const std::vector<int>& support,
                      const std::vector<double>& lw) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : lw) m = std::max(m, v);
  double z = 0.0;
  for (double v : lw) z += std::exp(v - m);
  for (std::size_t i = 0; i < support.size(); ++i)
    out.at(s, support[i]) = std::exp(lw[i] - m) / z;
}

std::vector<int> support_of(const Policy& pi, int s) {
  std::vector<int> idx;
  idx.reserve(pi.num_actions);
  for (int a = 0; a < pi.num_actions; ++a)
    if (pi(s, a) > 0.0) idx.push_back(a);
  return idx;
}

}  // namespace

StepInfo ActorSchedule::at(int t) const {
  StepInfo info;
  if (mode == ScheduleMode::kTheoryDecay) {
    if (c == 0.0 && tau == 0.0)
      throw std::invalid_argument("ActorSchedule: theory_decay requires c > 0 or tau > 0");
    info.eta = 1.0 / (c + tau * (t + 1));
  } else {
    if (eta_const <= 0.0)
      throw std::invalid_argument("ActorSchedule: constant mode requires eta_const > 0");
    info.eta = eta_const;
  }
  info.tau_t = info.eta * tau;
  info.alpha_t = 1.0 / (1.0 + info.tau_t);
  return info;
}

Policy npg_intermediate(const Policy& pi_t, const QFunction& q, double eta) {
  Policy out = pi_t;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<double> lw;
  for (int s = 0; s < pi_t.num_states; ++s) {
    const std::vector<int> support = support_of(pi_t, s);
    lw.clear();
    for (int a : support) lw.push_back(std::log(pi_t(s, a)) + eta * q(s, a));
    write_normalized(out, s, support, lw);
  }
  return out;
}

Policy spma_intermediate(const Policy& pi_t, const QFunction& q, const VFunction& v, double eta) {
  Policy out = pi_t;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<double> w;
  for (int s = 0; s < pi_t.num_states; ++s) {
    const std::vector<int> support = support_of(pi_t, s);
    w.clear();
    for (int a : support) {
      const double bracket = 1.0 + eta * (q(s, a) - v(s));
      if (bracket < kSpmaMargin) {
        // Largest eta that keeps every supported bracket at the margin.
        double max_eta = std::numeric_limits<double>::infinity();
        for (int s2 = 0; s2 < pi_t.num_states; ++s2)
          for (int a2 = 0; a2 < pi_t.num_actions; ++a2)
            if (pi_t(s2, a2) > 0.0 && q(s2, a2) - v(s2) < 0.0)
              max_eta = std::min(max_eta, (kSpmaMargin - 1.0) / (q(s2, a2) - v(s2)));
        throw StepTooLargeError(s, a, max_eta,
                                "spma_intermediate: 1 + eta (q - v) below margin at (s=" +
                                    std::to_string(s) + ", a=" + std::to_string(a) +
                                    "); max admissible eta = " + std::to_string(max_eta));
      }
      w.push_back(pi_t(s, a) * bracket);
    }
    double z = 0.0;
    for (double x : w) z += x;
    for (std::size_t i = 0; i < support.size(); ++i) out.at(s, support[i]) = w[i] / z;
  }
  return out;
}

Policy rkl_project(const Policy& pi_half, double tau_t) {
  if (tau_t == 0.0) return pi_half;
  const double alpha = 1.0 / (1.0 + tau_t);
  Policy out = pi_half;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<double> lw;
  for (int s = 0; s < pi_half.num_states; ++s) {
    const std::vector<int> support = support_of(pi_half, s);
    lw.clear();
    for (int a : support) lw.push_back(alpha * std::log(pi_half(s, a)));
    write_normalized(out, s, support, lw);
  }
  return out;
}

Policy fkl_project(const Policy& pi_half, double tau_t, double tol, int max_iterations) {
  if (tol <= 0.0) throw std::invalid_argument("fkl_project: tol must be positive");
  if (tau_t == 0.0) return pi_half;
  Policy out = pi_half;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  for (int s = 0; s < pi_half.num_states; ++s) {
    const std::vector<int> support = support_of(pi_half, s);
    std::vector<double> w(support.size()), init(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      w[i] = pi_half(s, support[i]);
      init[i] = w[i];
    }
    // KL(w || p) - tau_t H(p), dropping the sum w ln w constant.
    auto f = [&](const std::vector<double>& p) {
      double acc = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        acc -= w[i] * std::log(p[i]);
        if (p[i] > 0.0) acc += tau_t * p[i] * std::log(p[i]);
      }
      return acc;
    };
    auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
      for (std::size_t i = 0; i < p.size(); ++i)
        g[i] = -w[i] / p[i] + tau_t * (1.0 + std::log(p[i]));
    };
    const std::vector<double> sol = simplex_minimize(f, grad, init, tol, max_iterations);
    for (std::size_t i = 0; i < support.size(); ++i) out.at(s, support[i]) = sol[i];
  }
  return out;
}

Policy soft_npg_step(const Policy& pi_t, const QFunction& q, double eta, double tau_t) {
  const double alpha = 1.0 / (1.0 + tau_t);
  Policy out = pi_t;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<double> lw;
  for (int s = 0; s < pi_t.num_states; ++s) {
    const std::vector<int> support = support_of(pi_t, s);
    lw.clear();
    for (int a : support) lw.push_back(alpha * (std::log(pi_t(s, a)) + eta * q(s, a)));
    write_normalized(out, s, support, lw);
  }
  return out;
}

Policy soft_spma_step(const Policy& pi_t, const QFunction& q, const VFunction& v, double eta,
                      double tau_t) {
  const double alpha = 1.0 / (1.0 + tau_t);
  Policy out = pi_t;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<double> lw;
  for (int s = 0; s < pi_t.num_states; ++s) {
    const std::vector<int> support = support_of(pi_t, s);
    lw.clear();
    for (int a : support) {
      const double bracket = 1.0 + eta * (q(s, a) - v(s));
      if (bracket < kSpmaMargin) {
        double max_eta = std::numeric_limits<double>::infinity();
        for (int s2 = 0; s2 < pi_t.num_states; ++s2)
          for (int a2 = 0; a2 < pi_t.num_actions; ++a2)
            if (pi_t(s2, a2) > 0.0 && q(s2, a2) - v(s2) < 0.0)
              max_eta = std::min(max_eta, (kSpmaMargin - 1.0) / (q(s2, a2) - v(s2)));
        throw StepTooLargeError(s, a, max_eta,
                                "soft_spma_step: 1 + eta (q - v) below margin at (s=" +
                                    std::to_string(s) + ", a=" + std::to_string(a) +
                                    "); max admissible eta = " + std::to_string(max_eta));
      }
      lw.push_back(alpha * (std::log(pi_t(s, a)) + std::log(bracket)));
    }
    write_normalized(out, s, support, lw);
  }
  return out;
}

Policy dsac_actor_exact(const QFunction& q, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("dsac_actor_exact: tau must be positive");
  Policy out;
  out.num_states = q.num_states;
  out.num_actions = q.num_actions;
  out.probs.assign(q.values.size(), 0.0);
  for (int s = 0; s < q.num_states; ++s) {
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.num_actions; ++a) m = std::max(m, q(s, a) / tau);
    double z = 0.0;
    for (int a = 0; a < q.num_actions; ++a) z += std::exp(q(s, a) / tau - m);
    for (int a = 0; a < q.num_actions; ++a) out.at(s, a) = std::exp(q(s, a) / tau - m) / z;
  }
  return out;
}

std::vector<double> simplex_minimize(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& grad_f,
    const std::vector<double>& init, double tol, int max_iterations, double* residual_out) {
  const std::size_t n = init.size();
  std::vector<double> z(n), p(n), gp(n), gp_try(n), gz(n), z_try(n), p_try(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (init[i] <= 0.0)
      throw std::invalid_argument("simplex_minimize: init must be strictly positive");
    z[i] = std::log(init[i]);
  }

  auto to_simplex = [&](const std::vector<double>& logits, std::vector<double>& out) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logits) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::exp(logits[i] - m);
      sum += out[i];
    }
    for (double& v : out) v /= sum;
  };

  // First-order residual max_a |df/dp_a - <p, df/dp>|; fills the gradient.
  auto residual_of = [&](const std::vector<double>& point, std::vector<double>& g) {
    grad_f(point, g);
    double lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam += point[i] * g[i];
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(g[i] - lam));
    return r;
  };

  to_simplex(z, p);
  double fv = f(p);
  double residual = residual_of(p, gp);
  double step = 1.0;

  for (int it = 0; it < max_iterations && residual >= tol; ++it) {
    double lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam += p[i] * gp[i];
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gz[i] = p[i] * (gp[i] - lam);
      sq += gz[i] * gz[i];
    }

    // Armijo backtracking on f while the requested decrease is resolvable in
    // floating point; below that, accept only steps that strictly shrink the
    // (exactly computed) first-order residual.
    const double f_resolution = 1e-14 * (1.0 + std::abs(fv));
    bool accepted = false;
    for (int half = 0; half < 80; ++half) {
      for (std::size_t i = 0; i < n; ++i) z_try[i] = z[i] - step * gz[i];
      to_simplex(z_try, p_try);
      const double f_try = f(p_try);
      if (1e-4 * step * sq >= f_resolution && f_try <= fv - 1e-4 * step * sq) {
        z.swap(z_try);
        p.swap(p_try);
        fv = f_try;
        residual = residual_of(p, gp);
        step = std::min(step * 2.0, 1e4);
        accepted = true;
        break;
      }
      const double r_try = residual_of(p_try, gp_try);
      if (r_try < residual) {
        z.swap(z_try);
        p.swap(p_try);
        gp.swap(gp_try);
        fv = f_try;
        residual = r_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no observable progress in either measure
  }

  if (residual_out) *residual_out = residual;
  if (residual >= tol)
    throw std::runtime_error("simplex_minimize: no convergence within iteration cap");
  return p;
}

}  // namespace softac

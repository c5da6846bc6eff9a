#include "softac/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace softac {

namespace {

constexpr double kRowSumTol = 1e-12;

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void Mdp::validate() const {
  check(num_states > 0, "mdp: num_states must be positive");
  check(num_actions > 0, "mdp: num_actions must be positive");
  check(discount >= 0.0 && discount < 1.0, "mdp: discount must lie in [0, 1)");
  const std::size_t S = num_states, A = num_actions;
  check(transition.size() == S * A * S, "mdp: transition table has wrong size");
  check(reward.size() == S * A, "mdp: reward table has wrong size");
  check(initial_dist.size() == S, "mdp: initial distribution has wrong size");
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double row_sum = 0.0;
      for (std::size_t sn = 0; sn < S; ++sn) {
        const double pv = transition[(s * A + a) * S + sn];
        check(pv >= 0.0, "mdp: negative transition probability");
        row_sum += pv;
      }
      check(std::abs(row_sum - 1.0) <= kRowSumTol, "mdp: transition row does not sum to 1");
      const double rv = reward[s * A + a];
      check(rv >= 0.0 && rv <= 1.0, "mdp: reward outside [0, 1]");
    }
  }
  double rho_sum = 0.0;
  for (double v : initial_dist) {
    check(v >= 0.0, "mdp: negative initial probability");
    rho_sum += v;
  }
  check(std::abs(rho_sum - 1.0) <= kRowSumTol, "mdp: initial distribution does not sum to 1");
}

Policy Policy::uniform(int num_states, int num_actions) {
  Policy p;
  p.num_states = num_states;
  p.num_actions = num_actions;
  p.probs.assign(static_cast<std::size_t>(num_states) * num_actions, 1.0 / num_actions);
  return p;
}

void Policy::validate(double tol) const {
  check(num_states > 0 && num_actions > 0, "policy: empty shape");
  check(probs.size() == static_cast<std::size_t>(num_states) * num_actions,
        "policy: table has wrong size");
  for (int s = 0; s < num_states; ++s) {
    double row_sum = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      const double pv = (*this)(s, a);
      check(pv >= 0.0, "policy: negative probability");
      row_sum += pv;
    }
    check(std::abs(row_sum - 1.0) <= tol, "policy: row does not sum to 1");
  }
}

QFunction QFunction::zeros(int num_states, int num_actions) {
  QFunction q;
  q.num_states = num_states;
  q.num_actions = num_actions;
  q.values.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  return q;
}

VFunction VFunction::zeros(int num_states) {
  VFunction v;
  v.values.assign(num_states, 0.0);
  return v;
}

double h_tau_bound(double tau, int num_actions, double gamma) {
  return (1.0 + tau * std::log(static_cast<double>(num_actions))) / (1.0 - gamma);
}

double policy_entropy(const Policy& policy, int state) {
  double h = 0.0;
  for (int a = 0; a < policy.num_actions; ++a) {
    const double p = policy(state, a);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::pair<VFunction, QFunction> exact_soft_values(const Mdp& mdp, const Policy& policy,
                                                  double tau) {
  const int S = mdp.num_states, A = mdp.num_actions;
  const double gamma = mdp.discount;

  // Policy-averaged reward, entropy bonus and transition matrix.
  Eigen::VectorXd b(S);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
  for (int s = 0; s < S; ++s) {
    double rp = 0.0;
    for (int a = 0; a < A; ++a) rp += policy(s, a) * mdp.r(s, a);
    b(s) = rp + tau * policy_entropy(policy, s);
    for (int sn = 0; sn < S; ++sn) {
      double pp = 0.0;
      for (int a = 0; a < A; ++a) pp += policy(s, a) * mdp.p(s, a, sn);
      m(s, sn) -= gamma * pp;
    }
  }

  Eigen::VectorXd v = m.partialPivLu().solve(b);

  const double vmax = v.lpNorm<Eigen::Infinity>();
  const double residual = (m * v - b).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-9 * (1.0 + vmax)))
    throw std::runtime_error("exact_soft_values: linear solve residual too large");

  VFunction vf;
  vf.values.assign(v.data(), v.data() + S);
  QFunction qf = QFunction::zeros(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      for (int sn = 0; sn < S; ++sn) ev += mdp.p(s, a, sn) * v(sn);
      qf.at(s, a) = mdp.r(s, a) + gamma * ev;
    }
  }
  return {std::move(vf), std::move(qf)};
}

double soft_advantage(const QFunction& q, const VFunction& v, const Policy& policy, double tau,
                      int s, int a) {
  const double p = policy(s, a);
  if (tau > 0.0) {
    if (p <= 0.0) throw std::domain_error("soft_advantage: pi(a|s) = 0 with tau > 0");
    return q(s, a) - v(s) - tau * std::log(p);
  }
  return q(s, a) - v(s);
}

std::pair<Policy, VFunction> optimal_soft_policy(const Mdp& mdp, double tau, double tol,
                                                 int max_iterations) {
  if (tol <= 0.0) throw std::invalid_argument("optimal_soft_policy: tol must be positive");
  const int S = mdp.num_states, A = mdp.num_actions;
  const double gamma = mdp.discount;
  const double threshold = tol * (1.0 - gamma);

  std::vector<double> v(S, 0.0), q(static_cast<std::size_t>(S) * A, 0.0);
  bool converged = false;
  for (int it = 0; it < max_iterations && !converged; ++it) {
    double max_change = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double ev = 0.0;
        for (int sn = 0; sn < S; ++sn) ev += mdp.p(s, a, sn) * v[sn];
        q[static_cast<std::size_t>(s) * A + a] = mdp.r(s, a) + gamma * ev;
      }
    }
    for (int s = 0; s < S; ++s) {
      const double* qs = &q[static_cast<std::size_t>(s) * A];
      double next;
      if (tau > 0.0) {
        // Log-sum-exp backup, shifted by the max so small tau cannot overflow.
        const double qmax = *std::max_element(qs, qs + A);
        double acc = 0.0;
        for (int a = 0; a < A; ++a) acc += std::exp((qs[a] - qmax) / tau);
        next = qmax + tau * std::log(acc);
      } else {
        next = *std::max_element(qs, qs + A);
      }
      max_change = std::max(max_change, std::abs(next - v[s]));
      v[s] = next;
    }
    converged = max_change < threshold;
  }
  if (!converged)
    throw std::runtime_error("optimal_soft_policy: value iteration did not converge");

  // Final q from the converged v, then the induced optimal policy.
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      for (int sn = 0; sn < S; ++sn) ev += mdp.p(s, a, sn) * v[sn];
      q[static_cast<std::size_t>(s) * A + a] = mdp.r(s, a) + gamma * ev;
    }
  }
  Policy pi;
  pi.num_states = S;
  pi.num_actions = A;
  pi.probs.assign(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    const double* qs = &q[static_cast<std::size_t>(s) * A];
    if (tau > 0.0) {
      const double qmax = *std::max_element(qs, qs + A);
      double z = 0.0;
      for (int a = 0; a < A; ++a) z += std::exp((qs[a] - qmax) / tau);
      for (int a = 0; a < A; ++a) pi.at(s, a) = std::exp((qs[a] - qmax) / tau) / z;
    } else {
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (qs[a] > qs[best]) best = a;
      pi.at(s, best) = 1.0;
    }
  }
  VFunction vf;
  vf.values = std::move(v);
  return {std::move(pi), std::move(vf)};
}

double return_J(const Mdp& mdp, const VFunction& v) {
  double j = 0.0;
  for (int s = 0; s < mdp.num_states; ++s) j += mdp.initial_dist[s] * v(s);
  return j;
}

std::string mdp_to_json(const Mdp& mdp) {
  nlohmann::json doc;
  doc["S"] = mdp.num_states;
  doc["A"] = mdp.num_actions;
  doc["gamma"] = mdp.discount;
  nlohmann::json p = nlohmann::json::array();
  for (int s = 0; s < mdp.num_states; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < mdp.num_actions; ++a) {
      nlohmann::json dist = nlohmann::json::array();
      for (int sn = 0; sn < mdp.num_states; ++sn) dist.push_back(mdp.p(s, a, sn));
      row.push_back(std::move(dist));
    }
    p.push_back(std::move(row));
  }
  doc["P"] = std::move(p);
  nlohmann::json r = nlohmann::json::array();
  for (int s = 0; s < mdp.num_states; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < mdp.num_actions; ++a) row.push_back(mdp.r(s, a));
    r.push_back(std::move(row));
  }
  doc["r"] = std::move(r);
  doc["rho"] = mdp.initial_dist;
  return doc.dump();
}

Mdp mdp_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mdp_from_json: ") + e.what());
  }
  Mdp mdp;
  try {
    mdp.num_states = doc.at("S").get<int>();
    mdp.num_actions = doc.at("A").get<int>();
    mdp.discount = doc.at("gamma").get<double>();
    const auto& p = doc.at("P");
    const auto& r = doc.at("r");
    mdp.transition.reserve(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions *
                           mdp.num_states);
    mdp.reward.reserve(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        for (int sn = 0; sn < mdp.num_states; ++sn)
          mdp.transition.push_back(p.at(s).at(a).at(sn).get<double>());
        mdp.reward.push_back(r.at(s).at(a).get<double>());
      }
    }
    mdp.initial_dist = doc.at("rho").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mdp_from_json: malformed document: ") + e.what());
  }
  mdp.validate();
  return mdp;
}

}  // namespace softac

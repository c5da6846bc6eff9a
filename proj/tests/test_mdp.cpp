#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "softac/bellman.hpp"
#include "softac/envs.hpp"
#include "softac/mdp.hpp"
#include "softac/rng.hpp"

using namespace softac;

namespace {

// Single-state MDP with the given per-action rewards.
Mdp bandit(std::vector<double> rewards, double gamma) {
  Mdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = static_cast<int>(rewards.size());
  mdp.discount = gamma;
  mdp.reward = std::move(rewards);
  mdp.transition.assign(mdp.num_actions, 1.0);
  mdp.initial_dist = {1.0};
  mdp.validate();
  return mdp;
}

Policy random_policy(int S, int A, RngStream& rng) {
  Policy pi = Policy::uniform(S, A);
  for (int s = 0; s < S; ++s) {
    double z = 0.0;
    for (int a = 0; a < A; ++a) {
      pi.at(s, a) = 0.05 + rng.uniform01();
      z += pi(s, a);
    }
    for (int a = 0; a < A; ++a) pi.at(s, a) /= z;
  }
  return pi;
}

}  // namespace

TEST_CASE("policy_entropy basics") {
  Policy uniform = Policy::uniform(1, 4);
  CHECK(policy_entropy(uniform, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Policy det = Policy::uniform(1, 4);
  det.probs = {1.0, 0.0, 0.0, 0.0};
  CHECK(policy_entropy(det, 0) == doctest::Approx(0.0));

  Policy half = Policy::uniform(1, 4);
  half.probs = {0.5, 0.5, 0.0, 0.0};
  CHECK(policy_entropy(half, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("exact_soft_values geometric series and pure entropy") {
  // S=1, A=1, r=1, gamma=0.9, tau=0 -> v = q = 10.
  Mdp one = bandit({1.0}, 0.9);
  Policy pi = Policy::uniform(1, 1);
  auto [v, q] = exact_soft_values(one, pi, 0.0);
  CHECK(v(0) == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(q(0, 0) == doctest::Approx(10.0).epsilon(1e-10));

  // S=1, A=2, uniform, r=0, gamma=0.5, tau=1 -> v = 2 ln 2.
  Mdp two = bandit({0.0, 0.0}, 0.5);
  Policy uni = Policy::uniform(1, 2);
  auto [v2, q2] = exact_soft_values(two, uni, 1.0);
  CHECK(v2(0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("exact_soft_values matches long operator iteration on a garnet") {
  RngStream rng(7, 0);
  const Mdp mdp = garnet(4, 3, 2, 0.9, 11);
  const Policy pi = random_policy(4, 3, rng);
  const double tau = 0.1;
  auto [v, q] = exact_soft_values(mdp, pi, tau);

  QFunction it = QFunction::zeros(4, 3);
  for (int k = 0; k < 10000; ++k) it = soft_bellman_q(mdp, pi, tau, it);
  for (std::size_t i = 0; i < q.values.size(); ++i)
    CHECK(std::abs(q.values[i] - it.values[i]) <= 1e-8);
}

TEST_CASE("soft value identities") {
  RngStream rng(3, 0);
  const Mdp mdp = garnet(6, 4, 3, 0.85, 5);
  const Policy pi = random_policy(6, 4, rng);
  const double tau = 0.3;
  auto [v_soft, q_soft] = exact_soft_values(mdp, pi, tau);
  auto [v_hard, q_hard] = exact_soft_values(mdp, pi, 0.0);

  // v_tau = v_0 + tau * u where u solves u = H_pi + gamma P_pi u.
  auto [u, qu] = [&] {
    Mdp zero_r = mdp;
    std::fill(zero_r.reward.begin(), zero_r.reward.end(), 0.0);
    return exact_soft_values(zero_r, pi, 1.0);  // r = 0, tau = 1 -> u
  }();
  for (int s = 0; s < 6; ++s)
    CHECK(v_soft(s) == doctest::Approx(v_hard(s) + tau * u(s)).epsilon(1e-8));

  // v(s) = E_pi[q] + tau H(pi(.|s)).
  for (int s = 0; s < 6; ++s) {
    double ev = 0.0;
    for (int a = 0; a < 4; ++a) ev += pi(s, a) * q_soft(s, a);
    CHECK(std::abs(v_soft(s) - (ev + tau * policy_entropy(pi, s))) <= 1e-9);
  }

  // 0 <= v <= H_tau.
  const double h = h_tau_bound(tau, 4, 0.85);
  for (int s = 0; s < 6; ++s) {
    CHECK(v_soft(s) >= -1e-12);
    CHECK(v_soft(s) <= h + 1e-12);
  }
}

TEST_CASE("soft_advantage definition and domain error") {
  QFunction q = QFunction::zeros(1, 2);
  VFunction v = VFunction::zeros(1);
  Policy pi = Policy::uniform(1, 2);

  q.at(0, 0) = 1.5;
  v.at(0) = 1.5;
  CHECK(soft_advantage(q, v, pi, 0.0, 0, 0) == doctest::Approx(0.0));

  Policy det = Policy::uniform(1, 2);
  det.probs = {1.0, 0.0};
  q.at(0, 0) = 2.0;
  v.at(0) = 2.0;
  CHECK(soft_advantage(q, v, det, 1.0, 0, 0) == doctest::Approx(0.0));

  Policy quarter = Policy::uniform(1, 2);
  quarter.probs = {0.25, 0.75};
  q.at(0, 0) = 2.0;
  v.at(0) = 1.5;
  CHECK(soft_advantage(q, v, quarter, 0.5, 0, 0) ==
        doctest::Approx(2.0 - 1.5 - 0.5 * std::log(0.25)).epsilon(1e-12));

  CHECK_THROWS_AS(soft_advantage(q, v, det, 1.0, 0, 1), std::domain_error);
}

TEST_CASE("optimal_soft_policy single-step softmax and hard reduction") {
  // S=1, A=2, r=(1,0), gamma=0, tau=1 -> pi* = softmax(r).
  Mdp mdp = bandit({1.0, 0.0}, 0.0);
  auto [pi, v] = optimal_soft_policy(mdp, 1.0, 1e-12);
  const double e = std::exp(1.0);
  CHECK(pi(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-10));
  CHECK(pi(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-10));

  // tau = 0 reduces to standard value iteration with a deterministic policy.
  const Mdp g = garnet(5, 3, 2, 0.9, 3);
  auto [pi0, v0] = optimal_soft_policy(g, 0.0, 1e-10);
  for (int s = 0; s < 5; ++s) {
    int ones = 0;
    for (int a = 0; a < 3; ++a)
      if (pi0(s, a) == 1.0) ++ones;
    CHECK(ones == 1);
  }
  // Value dominance over the greedy policy's own evaluation.
  auto [v_eval, q_eval] = exact_soft_values(g, pi0, 0.0);
  for (int s = 0; s < 5; ++s) CHECK(std::abs(v0(s) - v_eval(s)) <= 1e-8);
}

TEST_CASE("optimal_soft_policy dominates random policies") {
  const Mdp g = garnet(6, 3, 3, 0.9, 17);
  const double tau = 0.05;
  auto [pi_star, v_star] = optimal_soft_policy(g, tau, 1e-12);
  const double j_star = return_J(g, v_star);
  RngStream rng(99, 0);
  for (int i = 0; i < 100; ++i) {
    const Policy pi = random_policy(6, 3, rng);
    auto [v, q] = exact_soft_values(g, pi, tau);
    CHECK(return_J(g, v) <= j_star + 1e-8);
    for (int s = 0; s < 6; ++s) CHECK(v(s) <= v_star(s) + 1e-8);
  }
}

TEST_CASE("return_J basics") {
  Mdp mdp = bandit({1.0}, 0.5);
  VFunction v = VFunction::zeros(1);
  v.at(0) = 3.5;
  CHECK(return_J(mdp, v) == doctest::Approx(3.5));

  Mdp two;
  two.num_states = 2;
  two.num_actions = 1;
  two.discount = 0.5;
  two.transition = {1.0, 0.0, 0.0, 1.0};
  two.reward = {0.0, 0.0};
  two.initial_dist = {0.25, 0.75};
  two.validate();
  VFunction v2 = VFunction::zeros(2);
  v2.values = {4.0, 8.0};
  CHECK(return_J(two, v2) == doctest::Approx(7.0));
}

TEST_CASE("mdp json round trip and validation") {
  const Mdp g = garnet(4, 2, 2, 0.8, 21);
  const Mdp back = mdp_from_json(mdp_to_json(g));
  CHECK(back.num_states == g.num_states);
  CHECK(back.num_actions == g.num_actions);
  CHECK(back.discount == doctest::Approx(g.discount));
  for (std::size_t i = 0; i < g.transition.size(); ++i)
    CHECK(back.transition[i] == doctest::Approx(g.transition[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < g.reward.size(); ++i)
    CHECK(back.reward[i] == doctest::Approx(g.reward[i]).epsilon(1e-12));

  CHECK_THROWS_AS(mdp_from_json("{\"S\": 1}"), std::invalid_argument);

  Mdp bad = g;
  bad.discount = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.reward[0] = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

#include <cmath>

#include "doctest.h"
#include "softac/bellman.hpp"
#include "softac/diagnostics.hpp"
#include "softac/envs.hpp"
#include "softac/rng.hpp"

using namespace softac;

namespace {

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

QFunction random_q(int S, int A, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  QFunction q = QFunction::zeros(S, A);
  for (double& v : q.values) v = rng.uniform(lo, hi);
  return q;
}

}  // namespace

TEST_CASE("soft_bellman_q trivial cases") {
  // gamma = 0: output equals the reward table.
  const Mdp g0 = garnet(3, 2, 2, 0.0, 5);
  RngStream rng(1, 0);
  const Policy pi = random_policy(3, 2, rng);
  const QFunction q = random_q(3, 2, rng);
  const QFunction out = soft_bellman_q(g0, pi, 0.7, q);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) CHECK(out(s, a) == doctest::Approx(g0.r(s, a)).epsilon(1e-14));

  // Pure entropy backup: S=1, uniform over 2, q=0, r=0, gamma=0.5, zeta=1.
  Mdp b;
  b.num_states = 1;
  b.num_actions = 2;
  b.discount = 0.5;
  b.transition = {1.0, 1.0};
  b.reward = {0.0, 0.0};
  b.initial_dist = {1.0};
  b.validate();
  const QFunction z = QFunction::zeros(1, 2);
  const QFunction bo = soft_bellman_q(b, Policy::uniform(1, 2), 1.0, z);
  CHECK(bo(0, 0) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("soft_bellman_q matches brute-force nested expectation") {
  RngStream rng(22, 0);
  const int S = 5, A = 3;
  const Mdp mdp = garnet(S, A, 3, 0.9, 31);
  const Policy pi = random_policy(S, A, rng);
  const QFunction q = random_q(S, A, rng);
  const double zeta = 0.25;
  const QFunction out = soft_bellman_q(mdp, pi, zeta, q);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double expect = mdp.r(s, a);
      for (int sn = 0; sn < S; ++sn) {
        double inner = 0.0;
        for (int an = 0; an < A; ++an) inner += pi(sn, an) * q(sn, an);
        expect += mdp.discount * mdp.p(s, a, sn) * (inner + zeta * policy_entropy(pi, sn));
      }
      CHECK(out(s, a) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("gamma contraction and monotonicity") {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int S = 2 + static_cast<int>(rng.uniform_int(4));
    const int A = 2 + static_cast<int>(rng.uniform_int(3));
    const double gamma = rng.uniform(0.2, 0.95);
    const Mdp mdp = garnet(S, A, std::min(S, 3), gamma, rng.next_u64());
    const Policy pi = random_policy(S, A, rng);
    const double zeta = rng.uniform(0.0, 1.0);
    const QFunction q1 = random_q(S, A, rng, -3.0, 3.0);
    const QFunction q2 = random_q(S, A, rng, -3.0, 3.0);
    const QFunction t1 = soft_bellman_q(mdp, pi, zeta, q1);
    const QFunction t2 = soft_bellman_q(mdp, pi, zeta, q2);
    CHECK(pe_error(t1, t2) <= gamma * pe_error(q1, q2) + 1e-12);

    // Monotonicity: q1 <= q2 entrywise implies T q1 <= T q2.
    QFunction qlo = q1, qhi = q1;
    for (std::size_t i = 0; i < qhi.values.size(); ++i) qhi.values[i] += rng.uniform01();
    const QFunction tlo = soft_bellman_q(mdp, pi, zeta, qlo);
    const QFunction thi = soft_bellman_q(mdp, pi, zeta, qhi);
    for (std::size_t i = 0; i < tlo.values.size(); ++i)
      CHECK(tlo.values[i] <= thi.values[i] + 1e-12);
  }
}

TEST_CASE("bellman difference bound over m applications") {
  RngStream rng(8, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 3, A = 4;
    const double gamma = rng.uniform(0.3, 0.95);
    const Mdp mdp = garnet(S, A, 2, gamma, rng.next_u64());
    const Policy pi = random_policy(S, A, rng);
    const QFunction q = random_q(S, A, rng, -2.0, 2.0);
    const double tau = rng.uniform(0.0, 1.0);
    const double zeta = rng.uniform(0.0, 1.0);
    for (int m : {1, 2, 5}) {
      QFunction qt = q, qz = q;
      for (int i = 0; i < m; ++i) {
        qt = soft_bellman_q(mdp, pi, tau, qt);
        qz = soft_bellman_q(mdp, pi, zeta, qz);
      }
      CHECK(pe_error(qt, qz) <= delta_tz(tau, zeta, A, gamma) + 1e-9);
    }
  }
}

TEST_CASE("m_step_evaluate") {
  const Mdp g0 = garnet(3, 2, 2, 0.0, 12);
  RngStream rng(4, 0);
  const Policy pi = random_policy(3, 2, rng);

  // m=1, gamma=0 with clamping: output equals clamp(r, 0, bound) = r.
  CriticConfig cfg;
  cfg.zeta = 0.3;
  cfg.m_steps = 1;
  cfg.clamp_enabled = true;
  cfg.h_tau_bound = 10.0;
  QFunction junk = random_q(3, 2, rng, -5.0, 5.0);
  const QFunction m1 = m_step_evaluate(g0, pi, cfg, junk);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) CHECK(m1(s, a) == doctest::Approx(g0.r(s, a)).epsilon(1e-14));

  // m = infinite equals the exact fixed point.
  const Mdp g = garnet(8, 3, 3, 0.9, 77);
  const Policy pi8 = random_policy(8, 3, rng);
  cfg.zeta = 0.2;
  cfg.m_steps = kInfiniteSteps;
  const QFunction fix = m_step_evaluate(g, pi8, cfg, QFunction::zeros(8, 3));
  const QFunction ref = exact_soft_values(g, pi8, 0.2).second;
  CHECK(pe_error(fix, ref) <= 1e-8);

  // m = 50 within the contraction-rate distance of the fixed point.
  cfg.m_steps = 50;
  cfg.clamp_enabled = false;
  const QFunction iter = m_step_evaluate(g, pi8, cfg, QFunction::zeros(8, 3));
  double fix_norm = 0.0;
  for (double v : ref.values) fix_norm = std::max(fix_norm, std::abs(v));
  CHECK(pe_error(iter, ref) <= std::pow(0.9, 50) * fix_norm + 1e-9);

  // Clamp idempotence: clamping an already clamped table changes nothing.
  cfg.m_steps = 1;
  cfg.clamp_enabled = true;
  cfg.h_tau_bound = 1.0;
  junk = random_q(8, 3, rng, -9.0, 9.0);
  const QFunction once = m_step_evaluate(g, pi8, cfg, junk);
  QFunction twice = once;
  for (double& v : twice.values) v = std::min(std::max(v, 0.0), cfg.h_tau_bound);
  CHECK(pe_error(once, twice) == 0.0);
}

TEST_CASE("lookahead_target") {
  const Mdp g0 = garnet(4, 3, 2, 0.0, 9);
  RngStream rng(13, 0);
  const Policy pi = random_policy(4, 3, rng);
  const QFunction q = random_q(4, 3, rng);

  // gamma = 0 -> target is just the reward.
  Transition tr{0, 1, 0.42, 2};
  CHECK(lookahead_target(tr, g0, pi, q, 0.5, false, 10.0) == doctest::Approx(0.42));

  // Deterministic policy, zeta = 0 -> r + gamma q(s', a*).
  const Mdp g = garnet(4, 3, 2, 0.8, 9);
  Policy det = Policy::uniform(4, 3);
  std::fill(det.probs.begin(), det.probs.end(), 0.0);
  for (int s = 0; s < 4; ++s) det.at(s, 1) = 1.0;
  CHECK(lookahead_target(tr, g, det, q, 0.0, false, 10.0) ==
        doctest::Approx(0.42 + 0.8 * q(2, 1)).epsilon(1e-12));

  // Uniform over 3 actions, zeta = 0.2, q(s',.) = (1,2,3).
  QFunction q3 = QFunction::zeros(4, 3);
  q3.at(2, 0) = 1.0;
  q3.at(2, 1) = 2.0;
  q3.at(2, 2) = 3.0;
  const Policy uni = Policy::uniform(4, 3);
  CHECK(lookahead_target(tr, g, uni, q3, 0.2, false, 10.0) ==
        doctest::Approx(0.42 + 0.8 * (2.0 + 0.2 * std::log(3.0))).epsilon(1e-12));
}

TEST_CASE("sampled_critic_update") {
  const Mdp g = garnet(4, 3, 2, 0.8, 10);
  RngStream rng(2, 0);
  const Policy pi = random_policy(4, 3, rng);
  const QFunction q_target = random_q(4, 3, rng);

  CriticConfig cfg;
  cfg.zeta = 0.0;
  cfg.h_tau_bound = 10.0;
  cfg.critic_lr = 0.5;
  cfg.critic_steps = 1;

  // One transition, lr = 1/2: a single step lands exactly on the target.
  std::vector<Transition> batch{{1, 2, 0.3, 0}};
  QFunction q0 = random_q(4, 3, rng);
  const QFunction q0_before = q0;
  const double y = lookahead_target(batch[0], g, pi, q_target, cfg.zeta, false, cfg.h_tau_bound);
  const QFunction q1 = sampled_critic_update(batch, g, pi, q_target, cfg, q0);
  CHECK(q1(1, 2) == doctest::Approx(y).epsilon(1e-12));

  // Entries absent from the batch stay untouched.
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 3; ++a)
      if (!(s == 1 && a == 2)) CHECK(q1(s, a) == q0_before(s, a));

  // k copies with different targets converge to the mean of the targets.
  std::vector<Transition> copies;
  for (int next : {0, 1, 2, 3}) copies.push_back(Transition{2, 0, 0.5, next});
  double mean_y = 0.0;
  for (const Transition& tr2 : copies)
    mean_y += lookahead_target(tr2, g, pi, q_target, cfg.zeta, false, cfg.h_tau_bound) / 4.0;
  cfg.critic_lr = 0.4;
  cfg.critic_steps = 2000;
  const QFunction qk = sampled_critic_update(copies, g, pi, q_target, cfg, QFunction::zeros(4, 3));
  CHECK(qk(2, 0) == doctest::Approx(mean_y).epsilon(1e-6));

  CHECK_THROWS(sampled_critic_update({}, g, pi, q_target, cfg, QFunction::zeros(4, 3)));
}

TEST_CASE("polyak_update") {
  QFunction a = QFunction::zeros(1, 2);
  QFunction b = QFunction::zeros(1, 2);
  b.values = {4.0, -2.0};
  CHECK(polyak_update(a, b, 1.0).values[0] == doctest::Approx(4.0));
  CHECK(polyak_update(a, b, 0.5).values[0] == doctest::Approx(2.0));
  CHECK(polyak_update(a, b, 0.5).values[1] == doctest::Approx(-1.0));
  const QFunction same = polyak_update(b, b, 0.3);
  for (std::size_t i = 0; i < b.values.size(); ++i)
    CHECK(same.values[i] == doctest::Approx(b.values[i]));
}

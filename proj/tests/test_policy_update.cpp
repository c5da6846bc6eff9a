#include <cmath>

#include "doctest.h"
#include "softac/envs.hpp"
#include "softac/policy_update.hpp"
#include "softac/rng.hpp"

using namespace softac;

namespace {

Policy row_policy(std::vector<double> probs) {
  Policy pi;
  pi.num_states = 1;
  pi.num_actions = static_cast<int>(probs.size());
  pi.probs = std::move(probs);
  return pi;
}

QFunction row_q(std::vector<double> values) {
  QFunction q;
  q.num_states = 1;
  q.num_actions = static_cast<int>(values.size());
  q.values = std::move(values);
  return q;
}

Policy random_policy(int S, int A, RngStream& rng) {
  Policy pi = Policy::uniform(S, A);
  for (int s = 0; s < S; ++s) {
    double z = 0.0;
    for (int a = 0; a < A; ++a) {
      pi.at(s, a) = 0.02 + rng.uniform01();
      z += pi(s, a);
    }
    for (int a = 0; a < A; ++a) pi.at(s, a) /= z;
  }
  return pi;
}

QFunction random_q(int S, int A, RngStream& rng, double lo = 0.0, double hi = 2.0) {
  QFunction q = QFunction::zeros(S, A);
  for (double& v : q.values) v = rng.uniform(lo, hi);
  return q;
}

double tv_distance(const Policy& a, const Policy& b, int s) {
  double d = 0.0;
  for (int i = 0; i < a.num_actions; ++i) d += std::abs(a(s, i) - b(s, i));
  return 0.5 * d;
}

// Numeric minimizer of KL(p || pi_half) - tau_t H(p) used as the oracle for
// the closed-form projection.
std::vector<double> rkl_objective_minimize(const std::vector<double>& pi_half, double tau_t) {
  auto f = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) acc += p[i] * std::log(p[i] / pi_half[i]) + tau_t * p[i] * std::log(p[i]);
    }
    return acc;
  };
  auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i)
      g[i] = std::log(p[i] / pi_half[i]) + 1.0 + tau_t * (std::log(p[i]) + 1.0);
  };
  std::vector<double> init(pi_half.size(), 1.0 / pi_half.size());
  return simplex_minimize(f, grad, init, 1e-8, 100000);
}

}  // namespace

TEST_CASE("schedule eta, tau_t, alpha_t") {
  ActorSchedule sched;
  sched.mode = ScheduleMode::kTheoryDecay;
  sched.c = 2.0;
  sched.tau = 1.0;
  const StepInfo s0 = sched.at(0);
  CHECK(s0.eta == doctest::Approx(1.0 / 3.0));
  CHECK(s0.tau_t == doctest::Approx(1.0 / 3.0));
  CHECK(s0.alpha_t == doctest::Approx(0.75));

  ActorSchedule cst;
  cst.mode = ScheduleMode::kConstant;
  cst.eta_const = 0.05;
  cst.tau = 0.0;
  for (int t : {0, 3, 100}) CHECK(cst.at(t).eta == doctest::Approx(0.05));

  ActorSchedule degenerate;
  degenerate.mode = ScheduleMode::kTheoryDecay;
  degenerate.c = 10.0;
  degenerate.tau = 0.0;
  for (int t : {0, 5, 50}) CHECK(degenerate.at(t).eta == doctest::Approx(0.1));

  ActorSchedule bad;
  bad.mode = ScheduleMode::kTheoryDecay;
  bad.c = 0.0;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.at(0), std::invalid_argument);
}

TEST_CASE("npg_intermediate") {
  // Constant q and eta = 0 both leave the policy unchanged.
  RngStream rng(31, 0);
  const Policy pi = random_policy(3, 4, rng);
  QFunction qc = QFunction::zeros(3, 4);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 4; ++a) qc.at(s, a) = 0.7;
  Policy same = npg_intermediate(pi, qc, 2.0);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 4; ++a) CHECK(same(s, a) == doctest::Approx(pi(s, a)).epsilon(1e-12));

  const QFunction qr = random_q(3, 4, rng);
  same = npg_intermediate(pi, qr, 0.0);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 4; ++a) CHECK(same(s, a) == doctest::Approx(pi(s, a)).epsilon(1e-12));

  // pi = (1/2, 1/2), q = (1, 0), eta = ln 3 -> (3/4, 1/4).
  const Policy half = row_policy({0.5, 0.5});
  const Policy out = npg_intermediate(half, row_q({1.0, 0.0}), std::log(3.0));
  CHECK(out(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.25).epsilon(1e-12));

  // Zero-probability actions stay at zero; rows sum to one.
  const Policy support = row_policy({0.6, 0.0, 0.4});
  const Policy out2 = npg_intermediate(support, row_q({5.0, 100.0, 1.0}), 1.0);
  CHECK(out2(0, 1) == 0.0);
  CHECK(out2(0, 0) + out2(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spma_intermediate") {
  const Policy half = row_policy({0.5, 0.5});
  VFunction v = VFunction::zeros(1);
  v.at(0) = 0.5;

  // eta = 0 -> unchanged.
  Policy same = spma_intermediate(half, row_q({1.0, 0.0}), v, 0.0);
  CHECK(same(0, 0) == doctest::Approx(0.5));

  // Weights 0.5 * 1.25 and 0.5 * 0.75 -> (0.625, 0.375).
  const Policy out = spma_intermediate(half, row_q({1.0, 0.0}), v, 0.5);
  CHECK(out(0, 0) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.375).epsilon(1e-12));

  // zeta > 0 style v: pre-normalization mass differs from 1 but the output
  // is still the normalized proportional policy.
  RngStream rng(5, 1);
  const Policy pi = random_policy(4, 3, rng);
  const QFunction q = random_q(4, 3, rng);
  VFunction vz = VFunction::zeros(4);
  for (int s = 0; s < 4; ++s) {
    double ev = 0.0;
    for (int a = 0; a < 3; ++a) ev += pi(s, a) * q(s, a);
    vz.at(s) = ev + 0.2 * policy_entropy(pi, s);  // zeta = 0.2
  }
  const double eta = 0.3;
  const Policy outz = spma_intermediate(pi, q, vz, eta);
  for (int s = 0; s < 4; ++s) {
    double mass = 0.0;
    for (int a = 0; a < 3; ++a) mass += pi(s, a) * (1.0 + eta * (q(s, a) - vz(s)));
    CHECK(mass == doctest::Approx(1.0 - eta * 0.2 * policy_entropy(pi, s)).epsilon(1e-10));
    double row = 0.0;
    for (int a = 0; a < 3; ++a) {
      row += outz(s, a);
      const double direct = pi(s, a) * (1.0 + eta * (q(s, a) - vz(s))) / mass;
      CHECK(outz(s, a) == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Step-too-large error carries the max admissible eta.
  VFunction vbig = VFunction::zeros(1);
  vbig.at(0) = 10.0;
  try {
    spma_intermediate(half, row_q({0.0, 0.0}), vbig, 1.0);
    FAIL("expected StepTooLargeError");
  } catch (const StepTooLargeError& e) {
    CHECK(e.max_admissible_eta == doctest::Approx((1.0 - 1e-9) / 10.0).epsilon(1e-6));
    const Policy ok = spma_intermediate(half, row_q({0.0, 0.0}), vbig,
                                        e.max_admissible_eta * 0.999);
    CHECK(ok(0, 0) == doctest::Approx(0.5));
  }
}

TEST_CASE("rkl_project closed form") {
  const Policy id = row_policy({0.3, 0.7});
  const Policy out0 = rkl_project(id, 0.0);
  CHECK(out0(0, 0) == 0.3);  // identity, bit-exact

  // (0.8, 0.2), tau_t = 1 (alpha = 1/2) -> (2/3, 1/3).
  const Policy out = rkl_project(row_policy({0.8, 0.2}), 1.0);
  CHECK(out(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // tau_t -> infinity: uniform over the support.
  const Policy outinf = rkl_project(row_policy({0.8, 0.0, 0.2}), 1e12);
  CHECK(outinf(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(outinf(0, 1) == 0.0);
  CHECK(outinf(0, 2) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("rkl_project equals numeric simplex minimization") {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int A = 2 + static_cast<int>(rng.uniform_int(4));
    std::vector<double> pi_half(A);
    double z = 0.0;
    for (double& p : pi_half) {
      p = 0.02 + rng.uniform01();
      z += p;
    }
    for (double& p : pi_half) p /= z;
    const double tau_t = rng.uniform(0.01, 3.0);

    Policy ph = row_policy(pi_half);
    const Policy closed = rkl_project(ph, tau_t);
    const std::vector<double> numeric = rkl_objective_minimize(pi_half, tau_t);
    for (int a = 0; a < A; ++a) CHECK(std::abs(closed(0, a) - numeric[a]) <= 1e-6);
  }
}

TEST_CASE("fkl_project") {
  // tau_t = 0 -> identity (bypasses the solver).
  const Policy id = row_policy({0.9, 0.1});
  const Policy out0 = fkl_project(id, 0.0, 1e-8);
  CHECK(out0(0, 0) == 0.9);

  // Uniform input stays uniform for any tau_t.
  const Policy uni = row_policy({0.25, 0.25, 0.25, 0.25});
  const Policy outu = fkl_project(uni, 0.7, 1e-9, 100000);
  for (int a = 0; a < 4; ++a) CHECK(outu(0, a) == doctest::Approx(0.25).epsilon(1e-8));

  // Two-action grid-search oracle at resolution 1e-4.
  const double tau_t = 0.5;
  const std::vector<double> w = {0.9, 0.1};
  auto objective = [&](double p0) {
    const double p1 = 1.0 - p0;
    return -w[0] * std::log(p0) - w[1] * std::log(p1) +
           tau_t * (p0 * std::log(p0) + p1 * std::log(p1));
  };
  double best_p0 = 0.5, best_f = objective(0.5);
  for (int i = 1; i < 10000; ++i) {
    const double p0 = i * 1e-4;
    const double f = objective(p0);
    if (f < best_f) {
      best_f = f;
      best_p0 = p0;
    }
  }
  const Policy out = fkl_project(row_policy(w), tau_t, 1e-9, 100000);
  CHECK(std::abs(out(0, 0) - best_p0) <= 2e-4);
  CHECK(std::abs(out(0, 1) - (1.0 - best_p0)) <= 2e-4);
}

TEST_CASE("soft_npg_step fused form") {
  // tau_t = 0 equals the intermediate policy.
  RngStream rng(9, 0);
  const Policy pi = random_policy(4, 3, rng);
  const QFunction q = random_q(4, 3, rng);
  const Policy fused0 = soft_npg_step(pi, q, 0.7, 0.0);
  const Policy inter = npg_intermediate(pi, q, 0.7);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 3; ++a) CHECK(fused0(s, a) == doctest::Approx(inter(s, a)).epsilon(1e-13));

  // Constant q with tau_t = 1 reduces to the rkl example.
  const Policy p82 = row_policy({0.8, 0.2});
  const Policy fused = soft_npg_step(p82, row_q({0.7, 0.7}), 1.0, 1.0);
  CHECK(fused(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // Composition identity on random inputs at 1e-12.
  for (int trial = 0; trial < 20; ++trial) {
    const Policy pit = random_policy(3, 4, rng);
    const QFunction qt = random_q(3, 4, rng, 0.0, 5.0);
    const double eta = rng.uniform(0.01, 2.0);
    const double tau_t = rng.uniform(0.0, 2.0);
    const Policy a = soft_npg_step(pit, qt, eta, tau_t);
    const Policy b = rkl_project(npg_intermediate(pit, qt, eta), tau_t);
    for (std::size_t i = 0; i < a.probs.size(); ++i)
      CHECK(std::abs(a.probs[i] - b.probs[i]) <= 1e-12);
  }
}

TEST_CASE("soft_spma_step fused form") {
  RngStream rng(10, 0);
  // tau_t = 0 equals spma_intermediate.
  const Policy pi = random_policy(3, 3, rng);
  const QFunction q = random_q(3, 3, rng);
  VFunction v = VFunction::zeros(3);
  for (int s = 0; s < 3; ++s) {
    double ev = 0.0;
    for (int a = 0; a < 3; ++a) ev += pi(s, a) * q(s, a);
    v.at(s) = ev;
  }
  const Policy fused0 = soft_spma_step(pi, q, v, 0.4, 0.0);
  const Policy inter = spma_intermediate(pi, q, v, 0.4);
  for (std::size_t i = 0; i < fused0.probs.size(); ++i)
    CHECK(std::abs(fused0.probs[i] - inter.probs[i]) <= 1e-12);

  // eta = 0 -> rkl_project of pi_t.
  const Policy fe0 = soft_spma_step(pi, q, v, 0.0, 0.8);
  const Policy re0 = rkl_project(pi, 0.8);
  for (std::size_t i = 0; i < fe0.probs.size(); ++i)
    CHECK(std::abs(fe0.probs[i] - re0.probs[i]) <= 1e-12);

  // Composition identity on random inputs.
  for (int trial = 0; trial < 20; ++trial) {
    const Policy pit = random_policy(4, 3, rng);
    const QFunction qt = random_q(4, 3, rng, 0.0, 2.0);
    VFunction vt = VFunction::zeros(4);
    for (int s = 0; s < 4; ++s) {
      double ev = 0.0;
      for (int a = 0; a < 3; ++a) ev += pit(s, a) * qt(s, a);
      vt.at(s) = ev + 0.1 * policy_entropy(pit, s);
    }
    const double eta = rng.uniform(0.01, 0.4);
    const double tau_t = rng.uniform(0.0, 2.0);
    const Policy a = soft_spma_step(pit, qt, vt, eta, tau_t);
    const Policy b = rkl_project(spma_intermediate(pit, qt, vt, eta), tau_t);
    for (std::size_t i = 0; i < a.probs.size(); ++i)
      CHECK(std::abs(a.probs[i] - b.probs[i]) <= 1e-12);
  }
}

TEST_CASE("dsac_actor_exact") {
  const Policy out = dsac_actor_exact(row_q({1.0, 0.0}), 1.0);
  const double e = std::exp(1.0);
  CHECK(out(0, 0) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));

  // tau -> infinity gives the uniform policy.
  const Policy flat = dsac_actor_exact(row_q({3.0, -1.0, 0.5}), 1e12);
  for (int a = 0; a < 3; ++a) CHECK(flat(0, a) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // Large-eta limit: the fused soft update never materializes the
  // intermediate policy, so eta q up to 1e7 stays in log space.
  RngStream rng(12, 0);
  const double eta = 1e6;
  for (int trial = 0; trial < 10; ++trial) {
    const Policy pi = random_policy(3, 4, rng);
    const QFunction q = random_q(3, 4, rng, 0.0, 10.0);
    const double tau = rng.uniform(0.2, 1.5);
    const Policy limit = soft_npg_step(pi, q, eta, eta * tau);
    const Policy exact = dsac_actor_exact(q, tau);
    for (int s = 0; s < 3; ++s) CHECK(tv_distance(limit, exact, s) <= 1e-4);
  }

  // Composed route npg_intermediate -> rkl_project: the intermediate policy
  // is stored as plain probabilities, so eta * (q - max q) must stay above
  // the double underflow threshold (~ -700) for the limit to survive.
  for (int trial = 0; trial < 10; ++trial) {
    const Policy pi = random_policy(3, 4, rng);
    QFunction q = random_q(3, 4, rng, 0.0, 5e-4);
    const double offset = rng.uniform(0.0, 10.0);
    for (double& x : q.values) x += offset;  // shift invariance of both routes
    const double tau = rng.uniform(0.2, 1.0);
    const Policy limit = rkl_project(npg_intermediate(pi, q, eta), eta * tau);
    const Policy exact = dsac_actor_exact(q, tau);
    for (int s = 0; s < 3; ++s) CHECK(tv_distance(limit, exact, s) <= 1e-4);
  }
}

TEST_CASE("mirror-descent view of npg_intermediate") {
  // argmin over the simplex of -eta <q, p> + KL(p || pi) equals the
  // multiplicative-exponential update.
  RngStream rng(55, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int A = 2 + static_cast<int>(rng.uniform_int(4));
    std::vector<double> pi(A), q(A);
    double z = 0.0;
    for (int a = 0; a < A; ++a) {
      pi[a] = 0.05 + rng.uniform01();
      z += pi[a];
      q[a] = rng.uniform(0.0, 2.0);
    }
    for (double& p : pi) p /= z;
    const double eta = rng.uniform(0.1, 1.5);

    auto f = [&](const std::vector<double>& p) {
      double acc = 0.0;
      for (int a = 0; a < A; ++a) {
        acc -= eta * q[a] * p[a];
        if (p[a] > 0.0) acc += p[a] * std::log(p[a] / pi[a]);
      }
      return acc;
    };
    auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
      for (int a = 0; a < A; ++a) g[a] = -eta * q[a] + std::log(p[a] / pi[a]) + 1.0;
    };
    std::vector<double> init(A, 1.0 / A);
    const std::vector<double> numeric = simplex_minimize(f, grad, init, 1e-8, 100000);

    Policy pit = row_policy(pi);
    QFunction qt = row_q(q);
    const Policy closed = npg_intermediate(pit, qt, eta);
    for (int a = 0; a < A; ++a) CHECK(std::abs(closed(0, a) - numeric[a]) <= 1e-6);
  }
}

TEST_CASE("policy updates: support preservation and permutation equivariance") {
  RngStream rng(14, 0);
  const int S = 3, A = 4;
  Policy pi = random_policy(S, A, rng);
  pi.at(1, 2) = 0.0;  // puncture the support
  double z = 0.0;
  for (int a = 0; a < A; ++a) z += pi(1, a);
  for (int a = 0; a < A; ++a) pi.at(1, a) /= z;
  const QFunction q = random_q(S, A, rng, 0.0, 1.0);
  VFunction v = VFunction::zeros(S);
  for (int s = 0; s < S; ++s) {
    double ev = 0.0;
    for (int a = 0; a < A; ++a) ev += pi(s, a) * q(s, a);
    v.at(s) = ev;
  }

  const Policy updates[] = {
      npg_intermediate(pi, q, 0.7),
      spma_intermediate(pi, q, v, 0.3),
      rkl_project(pi, 0.5),
      fkl_project(pi, 0.5, 1e-10),
      soft_npg_step(pi, q, 0.7, 0.5),
      soft_spma_step(pi, q, v, 0.3, 0.5),
  };
  for (const Policy& out : updates) {
    CHECK(out(1, 2) == 0.0);
    out.validate(1e-10);
  }

  // Permuting action labels commutes with the update.
  const std::vector<int> perm = {2, 0, 3, 1};
  Policy pi_p = pi;
  QFunction q_p = q;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      pi_p.at(s, perm[a]) = pi(s, a);
      q_p.at(s, perm[a]) = q(s, a);
    }
  const Policy direct = soft_npg_step(pi, q, 0.7, 0.5);
  const Policy permuted = soft_npg_step(pi_p, q_p, 0.7, 0.5);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      CHECK(permuted(s, perm[a]) == doctest::Approx(direct(s, a)).epsilon(1e-12));
}

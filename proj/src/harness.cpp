#include "softac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "softac/envs.hpp"
#include "softac/replay.hpp"
#include "softac/rng.hpp"

namespace softac {

namespace {

constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

struct LoopState {
  Mdp mdp;
  int S = 0;
  int A = 0;
  double tau = 0.0;   // fixed actor tau (ignored when auto)
  bool tau_auto = false;
  double h_tau = 0.0;
  ActorSchedule schedule;
  EntropyTuner tuner;
  RunTrace trace;
};

LoopState init_loop(const RunConfig& cfg) {
  LoopState st;
  st.mdp = build_env(cfg.env, cfg.seed);
  st.S = st.mdp.num_states;
  st.A = st.mdp.num_actions;
  st.tau_auto = cfg.tau_auto;
  st.tau = cfg.tau;
  st.tuner.tuner_lr = cfg.tuner_lr;
  st.tuner.log_alpha = std::log(cfg.init_alpha);
  st.tuner.target_entropy =
      cfg.target_entropy_scale * std::log(static_cast<double>(st.A));
  st.schedule = cfg.schedule;
  st.schedule.tau = cfg.tau_auto ? 0.0 : cfg.tau;

  st.trace.run_id = cfg.derived_run_id();
  st.trace.seed = cfg.seed;
  st.trace.num_states = st.S;
  st.trace.num_actions = st.A;
  st.trace.gamma = st.mdp.discount;
  st.trace.tau = cfg.tau_auto ? kBlank : cfg.tau;
  st.trace.zeta = cfg.zeta_coupled ? kBlank : cfg.zeta;
  st.h_tau = h_tau_bound(cfg.tau_auto ? st.tuner.alpha() : cfg.tau, st.A, st.mdp.discount);
  st.trace.h_tau = st.h_tau;
  // Theory diagnostics need a fixed-tau comparator.
  st.trace.exact_reference = cfg.exact_reference && !cfg.tau_auto;
  if (st.trace.exact_reference) {
    auto [pi_star, v_star] = optimal_soft_policy(st.mdp, cfg.tau, cfg.solve_tol);
    st.trace.pi_star = std::move(pi_star);
    st.trace.v_star = std::move(v_star);
    st.trace.h_star.resize(st.S);
    for (int s = 0; s < st.S; ++s) st.trace.h_star[s] = policy_entropy(st.trace.pi_star, s);
  }
  return st;
}

ObjectiveFamily objective_family(AlgorithmFamily family) {
  switch (family) {
    case AlgorithmFamily::kNpgRkl: return ObjectiveFamily::kNpgRkl;
    case AlgorithmFamily::kSpmaRkl: return ObjectiveFamily::kSpmaRkl;
    case AlgorithmFamily::kNpgFkl: return ObjectiveFamily::kNpgFkl;
    case AlgorithmFamily::kSpmaFkl: return ObjectiveFamily::kSpmaFkl;
    case AlgorithmFamily::kDsac:
      throw std::invalid_argument("dsac has no surrogate objective; it uses the exact form");
  }
  throw std::invalid_argument("unknown family");
}

// v_zeta^t(s) = <pi_t(.|s), q(s,.)> + zeta H(pi_t(.|s)).
VFunction critic_v(const Policy& pi, const QFunction& q, double zeta) {
  VFunction v = VFunction::zeros(pi.num_states);
  for (int s = 0; s < pi.num_states; ++s) {
    double acc = 0.0;
    for (int a = 0; a < pi.num_actions; ++a) acc += pi(s, a) * q(s, a);
    v.at(s) = acc + zeta * policy_entropy(pi, s);
  }
  return v;
}

Policy closed_form_update(const RunConfig& cfg, const Policy& pi, const QFunction& q,
                          const VFunction& v, const StepInfo& step, double tau_cur) {
  switch (cfg.family) {
    case AlgorithmFamily::kNpgRkl:
      return soft_npg_step(pi, q, step.eta, step.tau_t);
    case AlgorithmFamily::kSpmaRkl:
      return soft_spma_step(pi, q, v, step.eta, step.tau_t);
    case AlgorithmFamily::kNpgFkl:
      return fkl_project(npg_intermediate(pi, q, step.eta), step.tau_t, cfg.fkl_tol,
                         cfg.fkl_max_iterations);
    case AlgorithmFamily::kSpmaFkl:
      return fkl_project(spma_intermediate(pi, q, v, step.eta), step.tau_t, cfg.fkl_tol,
                         cfg.fkl_max_iterations);
    case AlgorithmFamily::kDsac:
      return dsac_actor_exact(q, tau_cur);
  }
  throw std::invalid_argument("unknown family");
}

// Exact-tau diagnostics for iteration t; returns v_tau^{pi_t}.
void record_exact_diagnostics(LoopState& st, const RunConfig& cfg, const Policy& pi,
                              const QFunction& q_est, VFunction& mix_sum, int t) {
  RunTrace& tr = st.trace;
  auto [v_ex, q_ex] = exact_soft_values(st.mdp, pi, st.tau);
  tr.eps.push_back(pe_error(q_est, q_ex));
  std::vector<double> terms(st.S, 0.0);
  for (int s = 0; s < st.S; ++s) {
    double inner = 0.0;
    for (int a = 0; a < st.A; ++a) inner += (tr.pi_star(s, a) - pi(s, a)) * q_est(s, a);
    terms[s] = inner + st.tau * (tr.h_star[s] - policy_entropy(pi, s));
  }
  tr.regret_terms.push_back(std::move(terms));
  for (int s = 0; s < st.S; ++s) mix_sum.at(s) += v_ex(s);
  double sub_mix = 0.0, sub_last = 0.0;
  for (int s = 0; s < st.S; ++s) {
    sub_mix = std::max(sub_mix, std::abs(tr.v_star(s) - mix_sum(s) / (t + 1)));
    sub_last = std::max(sub_last, std::abs(tr.v_star(s) - v_ex(s)));
  }
  tr.subopt_mixture.push_back(sub_mix);
  tr.subopt_last.push_back(sub_last);
  if (cfg.store_q) tr.q_exact.push_back(q_ex);
  tr.v_exact.push_back(std::move(v_ex));
}

void record_common(LoopState& st, const RunConfig& cfg, const Policy& pi, const QFunction& q_est,
                   const StepInfo& step) {
  RunTrace& tr = st.trace;
  tr.eta.push_back(cfg.family == AlgorithmFamily::kDsac ? 0.0 : step.eta);
  tr.tau_t.push_back(st.tau_auto ? st.tuner.alpha() : step.tau_t);
  double h_mean = 0.0;
  for (int s = 0; s < st.S; ++s) h_mean += policy_entropy(pi, s);
  tr.entropy_mean.push_back(h_mean / st.S);
  if (cfg.store_policies) tr.policies.push_back(pi);
  if (cfg.store_q) tr.q_est.push_back(q_est);
}

void record_greedy(LoopState& st, const Policy& pi) {
  const Policy greedy = greedy_policy(pi);
  const auto [v, q] = exact_soft_values(st.mdp, greedy, 0.0);
  st.trace.greedy_return.push_back(return_J(st.mdp, v));
}

void finalize(LoopState& st, const RunConfig& cfg, const Policy& pi) {
  st.trace.final_policy = pi;
  if (st.trace.exact_reference) {
    auto [v, q] = exact_soft_values(st.mdp, pi, st.tau);
    st.trace.final_v = std::move(v);
    st.trace.final_q = std::move(q);
  }
}

[[noreturn]] void rethrow_with_iteration(const char* where, int t) {
  try {
    throw;
  } catch (const StepTooLargeError& e) {
    throw StepTooLargeError(e.state, e.action, e.max_admissible_eta,
                            std::string(where) + ": iteration " + std::to_string(t) + ": " +
                                e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(where) + ": iteration " + std::to_string(t) + ": " +
                             e.what());
  }
}

int sample_action(const Policy& pi, int state, RngStream& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  for (int a = 0; a < pi.num_actions; ++a) {
    cum += pi(state, a);
    if (u < cum) return a;
  }
  return pi.num_actions - 1;
}

}  // namespace

Policy greedy_policy(const Policy& pi) {
  Policy out = pi;
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  for (int s = 0; s < pi.num_states; ++s) {
    int best = 0;
    for (int a = 1; a < pi.num_actions; ++a)
      if (pi(s, a) > pi(s, best)) best = a;
    out.at(s, best) = 1.0;
  }
  return out;
}

RunTrace run_exact(const RunConfig& cfg) {
  if (cfg.mode != RunMode::kExact) throw std::invalid_argument("run_exact: config mode mismatch");
  LoopState st = init_loop(cfg);

  Policy pi = Policy::uniform(st.S, st.A);
  TabularLogits theta = TabularLogits::zeros(st.S, st.A);
  const std::vector<double> full_weights(st.S, 1.0 / st.S);
  VFunction mix_sum = VFunction::zeros(st.S);

  double zeta0 = cfg.zeta_coupled ? st.tuner.alpha() : cfg.zeta;
  QFunction q_prev = exact_soft_values(st.mdp, pi, zeta0).second;

  for (int t = 0; t < cfg.iterations; ++t) {
    try {
      const double tau_cur = st.tau_auto ? st.tuner.alpha() : st.tau;
      const double zeta_cur = cfg.zeta_coupled ? tau_cur : cfg.zeta;

      CriticConfig cc;
      cc.zeta = zeta_cur;
      cc.m_steps = cfg.m_steps;
      cc.clamp_enabled = cfg.clamp_output;
      cc.h_tau_bound = st.h_tau;
      const QFunction q_t = (t == 0) ? q_prev : m_step_evaluate(st.mdp, pi, cc, q_prev);
      const VFunction v_t = critic_v(pi, q_t, zeta_cur);

      const StepInfo step = st.schedule.at(t);
      record_common(st, cfg, pi, q_t, step);
      if (st.trace.exact_reference) record_exact_diagnostics(st, cfg, pi, q_t, mix_sum, t);

      Policy pi_next;
      if (cfg.actor_impl == ActorImpl::kClosedForm || cfg.family == AlgorithmFamily::kDsac) {
        pi_next = closed_form_update(cfg, pi, q_t, v_t, step, tau_cur);
      } else {
        ObjectiveSpec spec;
        spec.family = objective_family(cfg.family);
        spec.eta = step.eta;
        spec.tau = tau_cur;
        spec.state_weights = full_weights;
        InnerLoopOptions opts;
        opts.backtracking = cfg.backtracking;
        opts.grad_tol = cfg.inner_grad_tol;
        theta = inner_loop_optimize(spec, theta, pi, q_t, v_t, cfg.inner_steps,
                                    cfg.inner_step_size, opts);
        pi_next = theta.policy();
      }

      if (st.tau_auto) {
        st.tuner = entropy_tuner_step(st.tuner, pi_next, full_weights);
        st.trace.alpha.push_back(st.tuner.alpha());
      }
      if (cfg.greedy_eval) record_greedy(st, pi_next);

      q_prev = q_t;
      pi = std::move(pi_next);
    } catch (...) {
      rethrow_with_iteration("run_exact", t);
    }
  }
  finalize(st, cfg, pi);
  return st.trace;
}

RunTrace run_sampled(const RunConfig& cfg) {
  if (cfg.mode != RunMode::kSampled)
    throw std::invalid_argument("run_sampled: config mode mismatch");
  LoopState st = init_loop(cfg);

  Policy pi = Policy::uniform(st.S, st.A);
  TabularLogits theta = TabularLogits::zeros(st.S, st.A);
  QFunction q_online = QFunction::zeros(st.S, st.A);
  QFunction q_target = QFunction::zeros(st.S, st.A);
  VFunction mix_sum = VFunction::zeros(st.S);

  ReplayBuffer buffer(cfg.buffer_capacity);
  RngStream env_rng(cfg.seed, 1);
  RngStream sample_rng(cfg.seed, 2);
  RngStream mc_rng(cfg.seed, 3);
  RngStream action_rng(cfg.seed, 4);
  EnvSession session(st.mdp, cfg.max_episode_len, env_rng);

  for (int i = 0; i < cfg.prefill_steps; ++i)
    buffer.push(session.step(sample_action(pi, session.current_state(), action_rng)));

  double last_return = 0.0;
  for (int t = 0; t < cfg.iterations; ++t) {
    try {
      const double tau_cur = st.tau_auto ? st.tuner.alpha() : st.tau;
      const double zeta_cur = cfg.zeta_coupled ? tau_cur : cfg.zeta;

      for (int i = 0; i < cfg.env_steps_per_iter; ++i)
        buffer.push(session.step(sample_action(pi, session.current_state(), action_rng)));
      const double mean_return = session.collect_mean_episode_return();
      if (!std::isnan(mean_return)) last_return = mean_return;
      st.trace.return_empirical.push_back(last_return);

      CriticConfig cc;
      cc.zeta = zeta_cur;
      cc.clamp_enabled = false;
      cc.clamp_targets = cfg.clamp_targets;
      cc.mc_targets = cfg.mc_targets;
      cc.h_tau_bound = st.h_tau;
      cc.critic_lr = cfg.critic_lr;
      cc.critic_steps = 1;
      for (int step_i = 0; step_i < cfg.critic_steps; ++step_i) {
        const std::vector<Transition> batch = buffer.sample(cfg.batch_size, sample_rng);
        q_online = sampled_critic_update(batch, st.mdp, pi, q_target, cc, std::move(q_online),
                                         &mc_rng);
        q_target = polyak_update(q_target, q_online, cfg.target_smoothing);
      }

      // Batch state weights for the actor and tuner.
      const std::vector<Transition> actor_batch = buffer.sample(cfg.batch_size, sample_rng);
      std::vector<double> weights(st.S, 0.0);
      for (const Transition& tr : actor_batch) weights[tr.state] += 1.0 / actor_batch.size();

      const VFunction v_t = critic_v(pi, q_online, zeta_cur);
      const StepInfo step = st.schedule.at(t);
      record_common(st, cfg, pi, q_online, step);
      if (st.trace.exact_reference) record_exact_diagnostics(st, cfg, pi, q_online, mix_sum, t);

      Policy pi_next;
      if (cfg.family == AlgorithmFamily::kDsac) {
        pi_next = dsac_actor_exact(q_online, tau_cur);
      } else {
        ObjectiveSpec spec;
        spec.family = objective_family(cfg.family);
        spec.eta = step.eta;
        spec.tau = tau_cur;
        spec.state_weights = weights;
        InnerLoopOptions opts;
        opts.backtracking = cfg.backtracking;
        opts.grad_tol = cfg.inner_grad_tol;
        theta = inner_loop_optimize(spec, theta, pi, q_online, v_t, cfg.inner_steps,
                                    cfg.inner_step_size, opts);
        pi_next = theta.policy();
      }

      if (st.tau_auto) {
        st.tuner = entropy_tuner_step(st.tuner, pi_next, weights);
        st.trace.alpha.push_back(st.tuner.alpha());
      }
      if (cfg.greedy_eval) record_greedy(st, pi_next);

      pi = std::move(pi_next);
    } catch (...) {
      rethrow_with_iteration("run_sampled", t);
    }
  }
  finalize(st, cfg, pi);
  return st.trace;
}

RunTrace run(const RunConfig& cfg) {
  return cfg.mode == RunMode::kExact ? run_exact(cfg) : run_sampled(cfg);
}

namespace {

void append_field(std::ostringstream& os, double v) {
  os << ',';
  if (!std::isnan(v)) os << v;
}

}  // namespace

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream os;
  os.precision(12);
  os << "run_id,t,eta_t,tau_t,eps_t,regret_inf_norm_cum,subopt_mixture,subopt_last,"
        "entropy_mean,return_empirical,alpha\n";
  const int K = trace.iterations();
  std::vector<double> cum(trace.num_states, 0.0);
  for (int t = 0; t < K; ++t) {
    os << trace.run_id << ',' << t;
    append_field(os, trace.eta[t]);
    append_field(os, trace.tau_t[t]);
    append_field(os, t < static_cast<int>(trace.eps.size()) ? trace.eps[t] : kBlank);
    double reg = kBlank;
    if (t < static_cast<int>(trace.regret_terms.size())) {
      for (int s = 0; s < trace.num_states; ++s) cum[s] += trace.regret_terms[t][s];
      reg = 0.0;
      for (double x : cum) reg = std::max(reg, std::abs(x));
    }
    append_field(os, reg);
    append_field(os, t < static_cast<int>(trace.subopt_mixture.size()) ? trace.subopt_mixture[t]
                                                                       : kBlank);
    append_field(os, t < static_cast<int>(trace.subopt_last.size()) ? trace.subopt_last[t]
                                                                    : kBlank);
    append_field(os, trace.entropy_mean[t]);
    append_field(os, t < static_cast<int>(trace.return_empirical.size())
                         ? trace.return_empirical[t]
                         : kBlank);
    append_field(os, t < static_cast<int>(trace.alpha.size()) ? trace.alpha[t] : kBlank);
    os << '\n';
  }
  return os.str();
}

std::string trace_summary_json(const RunTrace& trace) {
  nlohmann::json doc;
  doc["run_id"] = trace.run_id;
  doc["seed"] = trace.seed;
  doc["iterations"] = trace.iterations();
  doc["num_states"] = trace.num_states;
  doc["num_actions"] = trace.num_actions;
  doc["gamma"] = trace.gamma;
  if (!std::isnan(trace.tau)) doc["tau"] = trace.tau;
  if (!std::isnan(trace.zeta)) doc["zeta"] = trace.zeta;
  if (!trace.subopt_mixture.empty()) {
    doc["final_subopt_mixture"] = trace.subopt_mixture.back();
    doc["final_subopt_last"] = trace.subopt_last.back();
  }
  if (!trace.eps.empty()) doc["final_eps"] = trace.eps.back();
  if (!trace.greedy_return.empty()) doc["final_greedy_return"] = trace.greedy_return.back();
  if (!trace.return_empirical.empty())
    doc["final_return_empirical"] = trace.return_empirical.back();
  if (!trace.alpha.empty()) doc["final_alpha"] = trace.alpha.back();
  if (!trace.entropy_mean.empty()) doc["final_entropy_mean"] = trace.entropy_mean.back();
  return doc.dump(2);
}

}  // namespace softac

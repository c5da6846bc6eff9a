#pragma once

#include <string>

#include "softac/config.hpp"
#include "softac/diagnostics.hpp"

namespace softac {

// Exact-tabular training loop: the critic is the m-step (or exact) Bellman
// evaluation, the actor is the configured family's tabular update at eta_t.
// Deterministic given (config, seed).
RunTrace run_exact(const RunConfig& cfg);

// Sampled off-policy loop: N environment steps per iteration into the replay
// buffer, sampled squared-loss critic with a polyak-averaged target, actor by
// inner gradient steps on the family objective over batch state weights
// (dsac uses its exact softmax form), optional entropy auto-tuning.
RunTrace run_sampled(const RunConfig& cfg);

// Dispatch on cfg.mode.
RunTrace run(const RunConfig& cfg);

// Deterministic argmax policy (ties break toward the lowest action index).
Policy greedy_policy(const Policy& pi);

// One row per outer iteration:
// run_id,t,eta_t,tau_t,eps_t,regret_inf_norm_cum,subopt_mixture,subopt_last,
// entropy_mean,return_empirical,alpha. Unavailable fields are left blank.
std::string trace_to_csv(const RunTrace& trace);

// Final-state summary (iterations, sub-optimality, greedy return, ...).
std::string trace_summary_json(const RunTrace& trace);

}  // namespace softac

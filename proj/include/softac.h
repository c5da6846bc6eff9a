/* C API for the softac library: tabular off-policy actor-critic training,
 * soft-MDP solving and theory verification behind opaque handles.
 *
 * All functions return SOFTAC_OK on success; on failure they return an error
 * code and leave a message retrievable via softac_last_error() (thread-local).
 * Strings returned through out-parameters are owned by the library and must
 * be released with softac_string_free(). Handles are released with their
 * matching *_free() function.
 */
#ifndef SOFTAC_H
#define SOFTAC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum softac_status {
  SOFTAC_OK = 0,
  SOFTAC_ERR_INVALID_ARGUMENT = 1,
  SOFTAC_ERR_PARSE = 2,
  SOFTAC_ERR_NO_CONVERGENCE = 3,
  SOFTAC_ERR_STEP_TOO_LARGE = 4,
  SOFTAC_ERR_IO = 5,
  SOFTAC_ERR_INTERNAL = 6
} softac_status;

typedef struct softac_mdp softac_mdp;
typedef struct softac_run_result softac_run_result;
typedef struct softac_report softac_report;

/* Last error message of the calling thread ("" when none). */
const char* softac_last_error(void);

void softac_string_free(char* s);

/* ---- MDPs ---- */

/* Builds an MDP from a JSON document
 * {"S":..,"A":..,"gamma":..,"P":[[[..]]],"r":[[..]],"rho":[..]}. */
softac_status softac_mdp_from_json(const char* json_text, softac_mdp** out);

/* Builds the environment described by the [env] section of a run config. */
softac_status softac_mdp_from_config(const char* config_toml, uint64_t seed, softac_mdp** out);

softac_status softac_mdp_to_json(const softac_mdp* mdp, char** json_out);

int softac_mdp_num_states(const softac_mdp* mdp);
int softac_mdp_num_actions(const softac_mdp* mdp);
double softac_mdp_discount(const softac_mdp* mdp);

void softac_mdp_free(softac_mdp* mdp);

/* ---- Solving ---- */

/* Optimal entropy-regularized policy by (soft) value iteration. The result
 * JSON carries the policy table, optimal values and J. */
softac_status softac_solve(const softac_mdp* mdp, double tau, double tol, int max_iterations,
                           char** result_json_out);

/* ---- Training ---- */

/* Runs the config's training loop (exact or sampled mode). seed_override < 0
 * keeps the config's seed. */
softac_status softac_run(const char* config_toml, int64_t seed_override,
                         softac_run_result** out);

/* Per-iteration CSV (schema documented in the README). Owned by the result
 * handle; do not free. */
const char* softac_result_csv(const softac_run_result* result);
const char* softac_result_summary_json(const softac_run_result* result);
const char* softac_result_run_id(const softac_run_result* result);

void softac_result_free(softac_run_result* result);

/* ---- Theory verification ---- */

/* Runs the verification grid; config_toml may be NULL for the full default
 * grid. jobs is the number of parallel workers. */
softac_status softac_verify_theory(const char* config_toml, int jobs, softac_report** out);

const char* softac_report_json(const softac_report* report);
const char* softac_report_rates_csv(const softac_report* report);
int softac_report_num_checks(const softac_report* report);
int softac_report_num_failed(const softac_report* report);

void softac_report_free(softac_report* report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SOFTAC_H */

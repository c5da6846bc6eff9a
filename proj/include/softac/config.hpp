#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "softac/actor_objectives.hpp"
#include "softac/bellman.hpp"
#include "softac/mdp.hpp"
#include "softac/policy_update.hpp"

namespace softac {

// Minimal TOML reader covering what run configs need: [section] headers,
// scalar values (string, integer, float, boolean) and single-line arrays of
// scalars. Keys are flattened to "section.key". Unknown keys are rejected by
// the consumers below, so typos cannot silently alter an experiment.
struct TomlValue {
  enum class Kind { kString, kInt, kFloat, kBool, kArray };
  Kind kind = Kind::kString;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
};

class TomlDoc {
 public:
  static TomlDoc parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const TomlValue& raw(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_array(const std::string& key) const;
  std::vector<std::int64_t> get_int_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  // Throws if any key was never read through the getters above.
  void check_all_consumed() const;

 private:
  std::map<std::string, TomlValue> values_;
  mutable std::set<std::string> consumed_;
};

enum class AlgorithmFamily { kNpgRkl, kSpmaRkl, kNpgFkl, kSpmaFkl, kDsac };
enum class RunMode { kExact, kSampled };
enum class ActorImpl { kClosedForm, kInnerLoop };

struct EnvSpec {
  std::string name;  // garnet | chain | gridworld | json
  // garnet
  int num_states = 10;
  int num_actions = 5;
  int branching = 3;
  double gamma = 0.9;
  std::uint64_t env_seed = 0;
  bool env_seed_from_run = true;
  // chain
  int length = 5;
  double slip = 0.1;
  // gridworld
  int width = 5;
  int height = 5;
  int goal_row = 0;
  int goal_col = 0;
  std::vector<std::int64_t> obstacles;  // flat (row, col) pairs
  double step_reward = 0.0;
  double goal_reward = 1.0;
  // json
  std::string path;
};

struct RunConfig {
  EnvSpec env;

  AlgorithmFamily family = AlgorithmFamily::kNpgRkl;
  RunMode mode = RunMode::kExact;
  bool tau_auto = false;
  double tau = 0.1;
  bool zeta_coupled = false;  // zeta tracks the auto-tuned tau
  double zeta = 0.0;
  int iterations = 100;  // K
  std::uint64_t seed = 0;
  std::string run_id;  // derived when empty

  ActorSchedule schedule;

  int m_steps = 1;  // kInfiniteSteps for exact evaluation
  bool clamp_output = true;
  bool clamp_targets = false;
  bool mc_targets = false;

  ActorImpl actor_impl = ActorImpl::kClosedForm;
  int inner_steps = 10;  // n
  double inner_step_size = 1.0;
  bool backtracking = true;
  double inner_grad_tol = 0.0;
  double fkl_tol = 1e-9;
  int fkl_max_iterations = 100000;

  // sampled mode
  int env_steps_per_iter = 50;  // N
  int prefill_steps = 0;
  int batch_size = 64;
  int buffer_capacity = 100000;
  int max_episode_len = 100;
  double critic_lr = 0.5;
  int critic_steps = 1;
  double target_smoothing = 0.05;

  // entropy tuner (tau = "auto")
  double target_entropy_scale = 0.5;
  double tuner_lr = 1e-2;
  double init_alpha = 0.2;

  // diagnostics
  bool store_policies = true;
  bool store_q = true;
  bool exact_reference = true;
  bool greedy_eval = false;
  double solve_tol = 1e-10;

  std::string derived_run_id() const;
};

// Parses and validates a run config; throws std::invalid_argument on unknown
// keys, bad values, or mode/field mismatches.
RunConfig parse_run_config(const std::string& toml_text);

// Parses just the [env] section (shared by the full config parser and the
// env-only entry points).
EnvSpec parse_env_spec(const TomlDoc& doc);

// Builds the environment named by the spec. `run_seed` seeds generators that
// have no explicit env seed.
Mdp build_env(const EnvSpec& spec, std::uint64_t run_seed);

// Grid selection for verify-theory.
struct VerifyConfig {
  std::vector<std::string> suites;  // default: all
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double c_npg = -1.0;   // -1 means "use the corollary floor"
  double c_spma = -1.0;  // -1 means "use the corollary floor"
};

VerifyConfig parse_verify_config(const std::string& toml_text);

const char* family_name(AlgorithmFamily family);

}  // namespace softac

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "softac/bellman.hpp"
#include "softac/mdp.hpp"
#include "softac/rng.hpp"

namespace softac {

// Random MDP with fixed branching factor: each (s,a) reaches `branching`
// distinct next states with Dirichlet(1,...,1) weights, rewards are i.i.d.
// uniform on [0,1], rho is uniform. Deterministic given the seed.
Mdp garnet(int num_states, int num_actions, int branching, double gamma, std::uint64_t seed);

// Chain of `length` states with actions {left, right}; the intended move
// succeeds with probability 1 - slip, otherwise it is reversed. The last
// state loops onto itself with reward 1; all other rewards are 0.
Mdp chain_mdp(int length, double slip, double gamma = 0.99);

struct Cell {
  int row = 0;
  int col = 0;
};

// Deterministic 4-action grid. Moving into a wall or obstacle keeps the
// position; the goal cell is absorbing. Rewards are rescaled affinely into
// [0,1]. Prints a warning to stderr when the goal is unreachable.
Mdp gridworld(int width, int height, Cell goal, const std::vector<Cell>& obstacles,
              double step_reward, double goal_reward, double gamma = 0.99);

// Samples s' ~ P(.|s,a) by inverse CDF; reward is r(s,a).
std::pair<int, double> env_step(const Mdp& mdp, int state, int action, RngStream& rng);

// Stateful stepper used by the sampled training loop: tracks the current
// state, restarts from rho when an absorbing state is reached or the episode
// hits its step limit, and accumulates per-episode returns.
class EnvSession {
 public:
  EnvSession(const Mdp& mdp, int max_episode_len, RngStream rng);

  // Advances one step under `action`; returns the recorded transition.
  Transition step(int action);

  int current_state() const { return state_; }
  bool episode_just_ended() const { return episode_ended_; }
  // Mean total (undiscounted) reward of episodes completed since the last
  // call; NaN when none finished in between.
  double collect_mean_episode_return();
  int completed_episodes() const { return completed_episodes_; }

 private:
  void reset();
  bool absorbing(int s) const;

  const Mdp& mdp_;
  int max_episode_len_;
  RngStream rng_;
  int state_ = 0;
  int steps_in_episode_ = 0;
  double episode_return_ = 0.0;
  bool episode_ended_ = false;
  double finished_return_sum_ = 0.0;
  int finished_episodes_ = 0;
  int completed_episodes_ = 0;
};

}  // namespace softac

#include "softac/envs.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace softac {

Mdp garnet(int num_states, int num_actions, int branching, double gamma, std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("garnet: state and action counts must be positive");
  if (branching < 1 || branching > num_states)
    throw std::invalid_argument("garnet: branching must lie in [1, num_states]");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("garnet: gamma must be in [0, 1)");

  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = gamma;
  mdp.transition.assign(
      static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  mdp.initial_dist.assign(num_states, 1.0 / num_states);

  RngStream rng(seed, /*stream_id=*/0x6761726eULL);  // one stream per generator call
  std::vector<int> pool(num_states);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      // Partial Fisher-Yates for `branching` distinct successors.
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < branching; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(num_states - i));
        std::swap(pool[i], pool[j]);
      }
      // Dirichlet(1,...,1) weights from normalized exponentials.
      double sum = 0.0;
      std::vector<double> w(branching);
      for (int i = 0; i < branching; ++i) {
        w[i] = -std::log(1.0 - rng.uniform01());
        sum += w[i];
      }
      for (int i = 0; i < branching; ++i)
        mdp.transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + pool[i]] =
            w[i] / sum;
      mdp.reward[static_cast<std::size_t>(s) * num_actions + a] = rng.uniform01();
    }
  }
  mdp.validate();
  return mdp;
}

Mdp chain_mdp(int length, double slip, double gamma) {
  if (length < 2) throw std::invalid_argument("chain_mdp: length must be >= 2");
  if (slip < 0.0 || slip > 0.5) throw std::invalid_argument("chain_mdp: slip must be in [0, 0.5]");

  const int S = length, A = 2;  // 0 = left, 1 = right
  Mdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.discount = gamma;
  mdp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
  mdp.initial_dist.assign(S, 0.0);
  mdp.initial_dist[0] = 1.0;

  auto set_p = [&](int s, int a, int sn, double p) {
    mdp.transition[(static_cast<std::size_t>(s) * A + a) * S + sn] += p;
  };
  const int terminal = S - 1;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (s == terminal) {
        set_p(s, a, s, 1.0);
        mdp.reward[static_cast<std::size_t>(s) * A + a] = 1.0;
        continue;
      }
      const int left = std::max(s - 1, 0);
      const int right = std::min(s + 1, terminal);
      const int intended = (a == 1) ? right : left;
      const int reversed = (a == 1) ? left : right;
      set_p(s, a, intended, 1.0 - slip);
      set_p(s, a, reversed, slip);
    }
  }
  mdp.validate();
  return mdp;
}

Mdp gridworld(int width, int height, Cell goal, const std::vector<Cell>& obstacles,
              double step_reward, double goal_reward, double gamma) {
  if (width < 1 || height < 1) throw std::invalid_argument("gridworld: empty grid");
  auto blocked = [&](int r, int c) {
    for (const Cell& o : obstacles)
      if (o.row == r && o.col == c) return true;
    return false;
  };
  if (goal.row < 0 || goal.row >= height || goal.col < 0 || goal.col >= width)
    throw std::invalid_argument("gridworld: goal outside the grid");
  if (blocked(goal.row, goal.col))
    throw std::invalid_argument("gridworld: goal coincides with an obstacle");

  const int S = width * height, A = 4;
  auto idx = [&](int r, int c) { return r * width + c; };
  const int goal_idx = idx(goal.row, goal.col);

  // Affine rescale of {step_reward, goal_reward} into [0, 1].
  const double lo = std::min(step_reward, goal_reward);
  const double hi = std::max(step_reward, goal_reward);
  auto rescale = [&](double r) { return hi > lo ? (r - lo) / (hi - lo) : 0.0; };

  Mdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.discount = gamma;
  mdp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
  mdp.initial_dist.assign(S, 0.0);

  static constexpr int kDr[4] = {-1, 1, 0, 0};  // up, down, left, right
  static constexpr int kDc[4] = {0, 0, -1, 1};
  int free_cells = 0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int s = idx(r, c);
      for (int a = 0; a < A; ++a) {
        int sn;
        double rew;
        if (s == goal_idx) {
          sn = s;
          rew = rescale(goal_reward);
        } else if (blocked(r, c)) {
          sn = s;  // unreachable filler state
          rew = rescale(step_reward);
        } else {
          int nr = r + kDr[a], nc = c + kDc[a];
          if (nr < 0 || nr >= height || nc < 0 || nc >= width || blocked(nr, nc)) {
            nr = r;
            nc = c;
          }
          sn = idx(nr, nc);
          rew = rescale(step_reward);
        }
        mdp.transition[(static_cast<std::size_t>(s) * A + a) * S + sn] = 1.0;
        mdp.reward[static_cast<std::size_t>(s) * A + a] = rew;
      }
      if (!blocked(r, c) && s != goal_idx) ++free_cells;
    }
  }
  // Start uniformly over free non-goal cells.
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (!blocked(r, c) && idx(r, c) != goal_idx)
        mdp.initial_dist[idx(r, c)] = 1.0 / free_cells;

  // BFS reachability from any start cell to the goal.
  std::vector<char> seen(S, 0);
  std::queue<int> frontier;
  frontier.push(goal_idx);
  seen[goal_idx] = 1;
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop();
    const int r = s / width, c = s % width;
    for (int a = 0; a < A; ++a) {
      const int nr = r + kDr[a], nc = c + kDc[a];
      if (nr < 0 || nr >= height || nc < 0 || nc >= width || blocked(nr, nc)) continue;
      if (!seen[idx(nr, nc)]) {
        seen[idx(nr, nc)] = 1;
        frontier.push(idx(nr, nc));
      }
    }
  }
  for (int s = 0; s < S; ++s) {
    if (mdp.initial_dist[s] > 0.0 && !seen[s]) {
      std::cerr << "gridworld: warning: goal unreachable from some start cells\n";
      break;
    }
  }
  mdp.validate();
  return mdp;
}

std::pair<int, double> env_step(const Mdp& mdp, int state, int action, RngStream& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  int next = mdp.num_states - 1;
  for (int sn = 0; sn < mdp.num_states; ++sn) {
    cum += mdp.p(state, action, sn);
    if (u < cum) {
      next = sn;
      break;
    }
  }
  return {next, mdp.r(state, action)};
}

EnvSession::EnvSession(const Mdp& mdp, int max_episode_len, RngStream rng)
    : mdp_(mdp), max_episode_len_(max_episode_len), rng_(rng) {
  reset();
}

bool EnvSession::absorbing(int s) const {
  for (int a = 0; a < mdp_.num_actions; ++a)
    if (mdp_.p(s, a, s) < 1.0) return false;
  return true;
}

void EnvSession::reset() {
  const double u = rng_.uniform01();
  double cum = 0.0;
  state_ = mdp_.num_states - 1;
  for (int s = 0; s < mdp_.num_states; ++s) {
    cum += mdp_.initial_dist[s];
    if (u < cum) {
      state_ = s;
      break;
    }
  }
  steps_in_episode_ = 0;
  episode_return_ = 0.0;
}

Transition EnvSession::step(int action) {
  const auto [next, reward] = env_step(mdp_, state_, action, rng_);
  Transition tr{state_, action, reward, next};
  episode_return_ += reward;
  ++steps_in_episode_;
  state_ = next;
  episode_ended_ = absorbing(state_) || steps_in_episode_ >= max_episode_len_;
  if (episode_ended_) {
    finished_return_sum_ += episode_return_;
    ++finished_episodes_;
    ++completed_episodes_;
    reset();
  }
  return tr;
}

double EnvSession::collect_mean_episode_return() {
  if (finished_episodes_ == 0) return std::numeric_limits<double>::quiet_NaN();
  const double mean = finished_return_sum_ / finished_episodes_;
  finished_return_sum_ = 0.0;
  finished_episodes_ = 0;
  return mean;
}

}  // namespace softac

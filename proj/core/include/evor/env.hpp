#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evor/errors.hpp"
#include "evor/rng.hpp"

namespace evor {

// Box action space, optionally restricted to a finite set of embedded actions
// (one-hot vectors for the tabular environments).
struct ActionSpace {
  int dim = 0;
  Eigen::VectorXd low;
  Eigen::VectorXd high;
  std::vector<Eigen::VectorXd> embeddings;

  static ActionSpace box(int dim, double lo, double hi);
  static ActionSpace one_hot(int n);

  bool discrete() const { return !embeddings.empty(); }
  int size() const { return static_cast<int>(embeddings.size()); }

  Eigen::VectorXd clip(const Eigen::VectorXd& a) const;
  // Nearest embedding in Euclidean distance; ties go to the lowest index.
  int nearest(const Eigen::VectorXd& a) const;
  Eigen::VectorXd snap(const Eigen::VectorXd& a) const;
  // Exact embedding index, or -1.
  int index_of(const Eigen::VectorXd& a) const;
  bool contains(const Eigen::VectorXd& a) const;
};

// Environment state. Tabular environments use `id`; continuous ones `pos`.
// `step` counts actions taken so far in the episode (0-based).
struct State {
  int id = -1;
  Eigen::VectorXd pos;
  int step = 0;
};

struct StepResult {
  State next;
  double reward = 0.0;
  bool terminal = false;  // the action just taken was the episode's last (step H-1)
};

// Reference (data-generating) policy: a per-state mixture of the environment's
// behaviour components, index 0 near-optimal and index 1 a detour mode.
struct RefPolicySpec {
  std::vector<double> weights{0.5, 0.5};

  void validate(int n_components) const;
};

// Finite-horizon deterministic MDP with rewards in [0, 1].
class Mdp {
 public:
  virtual ~Mdp() = default;

  virtual std::string id() const = 0;
  virtual int horizon() const = 0;
  virtual double default_gamma() const = 0;
  virtual const ActionSpace& action_space() const = 0;
  virtual int obs_dim() const = 0;

  virtual State reset(Rng& rng) const = 0;
  // Pure function of (state, action). Throws InputDomainError for states or
  // actions outside their spaces, or when the episode already ended.
  virtual StepResult step(const State& s, const Eigen::VectorXd& action) const = 0;
  // Feature vector fed to the networks; the last entry is step / H.
  virtual Eigen::VectorXd observe(const State& s) const = 0;
  virtual bool episode_success(const State& final_state, double undiscounted_return) const = 0;

  virtual int num_ref_components() const { return 2; }
  virtual Eigen::VectorXd sample_ref_action(const State& s, const RefPolicySpec& spec,
                                            Rng& rng) const = 0;

  int act_dim() const { return action_space().dim; }
};

// Tabular MDP; the oracles operate on these tables.
class FiniteMdp : public Mdp {
 public:
  virtual int num_states() const = 0;
  int num_actions() const { return action_space().size(); }
  virtual int initial_state() const = 0;
  virtual int next_state(int s, int a) const = 0;
  virtual double reward(int s, int a) const = 0;
  // pi_ref(. | s) under `spec`, summing to one.
  virtual std::vector<double> ref_probs(int s, const RefPolicySpec& spec) const = 0;
  virtual std::string state_name(int s) const { return "s" + std::to_string(s); }

  State reset(Rng& rng) const override;
  StepResult step(const State& s, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd observe(const State& s) const override;
  int obs_dim() const override { return num_states() + 1; }
  Eigen::VectorXd sample_ref_action(const State& s, const RefPolicySpec& spec,
                                    Rng& rng) const override;
};

// chain2: s0 -> s1 -> s2 regardless of action; r(., a0) = 1, r(., a1) = 0; H = 2.
class Chain2 final : public FiniteMdp {
 public:
  Chain2();
  std::string id() const override { return "chain2"; }
  int horizon() const override { return 2; }
  double default_gamma() const override { return 1.0; }
  const ActionSpace& action_space() const override { return actions_; }
  int num_states() const override { return 3; }
  int initial_state() const override { return 0; }
  int next_state(int s, int a) const override;
  double reward(int s, int a) const override;
  std::vector<double> ref_probs(int s, const RefPolicySpec& spec) const override;
  bool episode_success(const State& final_state, double undiscounted_return) const override;

 private:
  ActionSpace actions_;
};

// gridworld5: 5x5 maze, unit moves (up, down, left, right) blocked by walls and
// borders, reward 1 on entering the absorbing goal and 0 otherwise; H = 10.
class Gridworld5 final : public FiniteMdp {
 public:
  static constexpr int kSize = 5;
  enum Move { up = 0, down = 1, left = 2, right = 3 };

  Gridworld5();
  std::string id() const override { return "gridworld5"; }
  int horizon() const override { return 10; }
  double default_gamma() const override { return 0.99; }
  const ActionSpace& action_space() const override { return actions_; }
  int num_states() const override { return static_cast<int>(cells_.size()); }
  int initial_state() const override { return start_; }
  int next_state(int s, int a) const override { return next_[s][a]; }
  double reward(int s, int a) const override;
  std::vector<double> ref_probs(int s, const RefPolicySpec& spec) const override;
  bool episode_success(const State& final_state, double undiscounted_return) const override;
  std::string state_name(int s) const override;

  int goal() const { return goal_; }
  int distance_to_goal(int s) const { return dist_[s]; }
  static const std::vector<std::string>& layout();

 private:
  ActionSpace actions_;
  std::vector<std::pair<int, int>> cells_;  // free cells (row, col)
  std::vector<std::vector<int>> next_;
  std::vector<int> dist_;
  int start_ = 0;
  int goal_ = 0;
};

// bimodal-bandit: one step, action in [-3, 3], reward 1 inside one of two
// disjoint intervals of unequal width.
class BimodalBandit final : public Mdp {
 public:
  static constexpr double kWideLo = -2.5, kWideHi = -1.5;
  static constexpr double kNarrowLo = 1.75, kNarrowHi = 2.25;

  BimodalBandit();
  std::string id() const override { return "bimodal-bandit"; }
  int horizon() const override { return 1; }
  double default_gamma() const override { return 0.99; }
  const ActionSpace& action_space() const override { return actions_; }
  int obs_dim() const override { return 2; }
  State reset(Rng& rng) const override;
  StepResult step(const State& s, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd observe(const State& s) const override;
  bool episode_success(const State& final_state, double undiscounted_return) const override;
  Eigen::VectorXd sample_ref_action(const State& s, const RefPolicySpec& spec,
                                    Rng& rng) const override;
  static double reward_at(double a);

 private:
  ActionSpace actions_;
};

// pointmass-maze: position in [0,1]^2, velocity action in [-1,1]^2 scaled by
// 0.1 per step, a wall slab blocks the direct route; reward 1 on first entry
// into the goal disc, which is absorbing. H = 50.
class PointmassMaze final : public Mdp {
 public:
  static constexpr double kStepScale = 0.1;
  static constexpr double kGoalX = 0.85, kGoalY = 0.85, kGoalRadius = 0.1;

  PointmassMaze();
  std::string id() const override { return "pointmass-maze"; }
  int horizon() const override { return 50; }
  double default_gamma() const override { return 0.99; }
  const ActionSpace& action_space() const override { return actions_; }
  int obs_dim() const override { return 3; }
  State reset(Rng& rng) const override;
  StepResult step(const State& s, const Eigen::VectorXd& action) const override;
  Eigen::VectorXd observe(const State& s) const override;
  bool episode_success(const State& final_state, double undiscounted_return) const override;
  Eigen::VectorXd sample_ref_action(const State& s, const RefPolicySpec& spec,
                                    Rng& rng) const override;

  static bool in_wall(double x, double y);
  static bool in_goal(const Eigen::VectorXd& p);

 private:
  ActionSpace actions_;
};

std::unique_ptr<Mdp> make_env(const std::string& id);
std::vector<std::string> env_ids();

// Downcast for oracle entry points; throws UnsupportedError for continuous envs.
const FiniteMdp& as_finite(const Mdp& env);

}  // namespace evor

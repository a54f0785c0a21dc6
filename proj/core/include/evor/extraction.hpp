#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "evor/critic.hpp"
#include "evor/env.hpp"
#include "evor/policy.hpp"

namespace evor {

enum class Selection { softmax, argmax };

struct ExtractionConfig {
  int n_candidates = 32;  // N_pi
  int n_rtg = 50;         // N
  double tau_r = 1.0;
  double tau_q = 1e-3;
  Selection selection = Selection::softmax;

  void validate() const;
};

// softmax(scores / tau) with max-shift; all-equal scores give uniform weights.
Eigen::VectorXd softmax_probs(const Eigen::VectorXd& scores, double tau);
// Inverse-CDF draw from softmax_probs using one uniform variate.
int softmax_select(const Eigen::VectorXd& scores, double tau, Rng& rng);
// Ties resolve to the lowest index.
int argmax_select(const Eigen::VectorXd& scores);

struct Decision {
  Eigen::VectorXd action;      // selected candidate (chunk * act_dim)
  int index = 0;
  Eigen::MatrixXf candidates;  // one column per candidate
  Eigen::VectorXd scores;      // Q* estimate per candidate
};

// Draw N_pi candidates from the base policy, score each with the sampled
// LogSumExp Q* (all N_pi x N critic rollouts in one batch) and pick one.
Decision extract_action(const BasePolicy& policy, const RewardToGoCritic& critic,
                        const Eigen::VectorXd& obs, const ExtractionConfig& cfg, Rng& rng);

// An actor maps a state to an act_dim x k block of actions executed in order.
using Actor = std::function<Eigen::MatrixXd(const Mdp&, const State&, Rng&)>;

Actor base_policy_actor(const BasePolicy& policy);
Actor evor_actor(const BasePolicy& policy, const RewardToGoCritic& critic, ExtractionConfig cfg);

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;    // population std across episodes
  double success_rate = 0.0;
  double success_std = 0.0;
  std::vector<double> returns;
  std::vector<std::uint8_t> successes;
};

// Episode i runs on an rng stream derived from (seed, i).
EvalResult evaluate_policy(const Mdp& env, const Actor& actor, int n_episodes, std::uint64_t seed);

}  // namespace evor

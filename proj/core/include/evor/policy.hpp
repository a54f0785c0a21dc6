#pragma once

#include <vector>

#include <Eigen/Core>

#include "evor/env.hpp"
#include "evor/flow.hpp"
#include "evor/nn/adam.hpp"

namespace evor {

struct PolicyConfig {
  std::vector<int> hidden{64, 64};
  nn::Activation activation = nn::Activation::gelu;
  bool layer_norm = false;
  bool sinusoidal_time = false;
  int euler_steps = 10;
  int chunk = 1;  // actions per sample; QC-k uses k
  nn::AdamConfig adam;
};

// Flow-matching behaviour-cloned policy. Samples have chunk * act_dim rows,
// time-major (a_h first).
class BasePolicy {
 public:
  BasePolicy() = default;
  BasePolicy(int obs_dim, ActionSpace actions, PolicyConfig cfg, Rng& rng);
  // Wraps an existing flow model (e.g. loaded from a checkpoint).
  BasePolicy(ConditionalFlowModel flow, ActionSpace actions, PolicyConfig cfg);

  // One Adam step on the flow-matching loss; returns the pre-step loss.
  float bc_update(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions, Rng& rng);

  // Raw Euler samples, one column per observation column.
  Eigen::MatrixXf sample_raw(const Eigen::MatrixXf& obs, Rng& rng) const;
  // Clipped to the action box and, for discrete spaces, snapped per step.
  Eigen::MatrixXf sample_actions(const Eigen::MatrixXf& obs, Rng& rng) const;
  Eigen::VectorXd sample_action(const Eigen::VectorXd& obs, Rng& rng) const;
  Eigen::MatrixXf postprocess(Eigen::MatrixXf raw) const;

  const ConditionalFlowModel& flow() const { return flow_; }
  ConditionalFlowModel& flow() { return flow_; }
  const ActionSpace& action_space() const { return actions_; }
  const PolicyConfig& config() const { return cfg_; }
  int obs_dim() const { return flow_.spec().cond_dim; }
  int act_dim() const { return actions_.dim; }
  int chunk() const { return cfg_.chunk; }
  long steps_taken() const { return adam_.step; }

 private:
  ConditionalFlowModel flow_;
  ActionSpace actions_;
  PolicyConfig cfg_;
  nn::AdamState<float> adam_;
};

}  // namespace evor

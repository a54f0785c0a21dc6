#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "evor/flow.hpp"
#include "evor/nn/adam.hpp"
#include "evor/policy.hpp"

namespace evor {

// Where z1 (the flow-matching endpoint) comes from.
enum class RtgSource { dataset, target_model };
// How the next-state target velocity is queried:
//   direct:  r + gamma * s_bar(z_t | x', a', t)
//   shifted: r + gamma * s_bar((z_t - t r) / gamma | x', a', t)
// The shifted form queries the next-state flow at the interpolation point its
// own endpoint z1' = (z1 - r) / gamma produces.
enum class TdTarget { shifted, direct };
// Next action a' for the bootstrap: the dataset's own next action, or draws
// from the base policy.
enum class BootstrapAction { dataset, policy };

std::string to_string(RtgSource v);
std::string to_string(TdTarget v);
std::string to_string(BootstrapAction v);
RtgSource rtg_source_from_string(const std::string& s);
TdTarget td_target_from_string(const std::string& s);
BootstrapAction bootstrap_action_from_string(const std::string& s);

struct CriticConfig {
  std::vector<int> hidden{64, 64};
  nn::Activation activation = nn::Activation::gelu;
  bool layer_norm = true;
  bool sinusoidal_time = false;
  double gamma = 0.99;
  double polyak = 5e-3;
  int euler_steps = 10;
  RtgSource rtg_source = RtgSource::dataset;
  TdTarget td_target = TdTarget::shifted;
  BootstrapAction bootstrap_action = BootstrapAction::dataset;
  int next_action_samples = 1;  // policy bootstrap only
  double return_scale = 1.0;    // returns are modelled as z * return_scale
  nn::AdamConfig adam;
};

// Minibatch of transitions, one column each.
struct TdBatch {
  Eigen::MatrixXf obs, action, next_obs, next_action;
  Eigen::VectorXf reward, rtg;
  std::vector<std::uint8_t> terminal;
  std::vector<int> index;  // dataset row, for diagnostics

  Eigen::Index size() const { return obs.cols(); }
};

// Distributional critic: a 1-D conditional flow over rewards-to-go given
// (x, a), with a Polyak-averaged target copy.
class RewardToGoCritic {
 public:
  RewardToGoCritic() = default;
  RewardToGoCritic(int obs_dim, int act_dim, CriticConfig cfg, Rng& rng);
  RewardToGoCritic(ConditionalFlowModel online, ConditionalFlowModel target, int obs_dim,
                   CriticConfig cfg);

  // One flow-TD Adam step followed by a Polyak target update. Returns the
  // pre-step loss. `policy` is needed only for policy bootstrap actions.
  float td_update(const TdBatch& batch, const BasePolicy* policy, Rng& rng);

  // Velocity targets for the batch given prior draws; exposed for tests.
  Eigen::VectorXf td_targets(const TdBatch& batch, const Eigen::VectorXf& zt,
                             const Eigen::VectorXf& t, const BasePolicy* policy, Rng& rng) const;

  // n reward-to-go samples per column: returns n x B in return units.
  Eigen::MatrixXf sample_rtg(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions, int n,
                             Rng& rng) const;
  Eigen::MatrixXf sample_rtg_from(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions,
                                  const Eigen::MatrixXf& z0) const;

  const ConditionalFlowModel& online() const { return online_; }
  ConditionalFlowModel& online() { return online_; }
  const ConditionalFlowModel& target() const { return target_; }
  ConditionalFlowModel& target() { return target_; }
  const CriticConfig& config() const { return cfg_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return online_.spec().cond_dim - obs_dim_; }

 private:
  Eigen::MatrixXf condition(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions) const;

  ConditionalFlowModel online_, target_;
  int obs_dim_ = 0;
  CriticConfig cfg_;
  nn::AdamState<float> adam_;
};

// tau * ln((1/n) sum exp(z_i / tau)), max-shifted.
double log_mean_exp(const double* z, Eigen::Index n, double tau);
double log_mean_exp(const Eigen::VectorXd& z, double tau);

// Sample-averaged LogSumExp estimate of the optimal regularized Q.
struct QStarEstimator {
  const RewardToGoCritic* critic = nullptr;
  double tau_r = 1.0;
  int n_samples = 50;

  void validate() const;
  // One estimate per (obs, action) column.
  Eigen::VectorXd q_star(const Eigen::MatrixXf& obs, const Eigen::MatrixXf& actions, Rng& rng) const;
};

}  // namespace evor
